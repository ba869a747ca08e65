#include "fpmlab/io.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace fpmlab::io {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw config_error(msg);
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
    std::ofstream f(path, mode);
    require(f.good(), "cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
    std::ifstream f(path, mode);
    require(f.good(), "cannot open for reading: " + path);
    return f;
}

template <class T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& f, const std::string& path) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(bool(f), "truncated file: " + path);
    return v;
}

// SHA-256, FIPS 180-4
struct Sha256 {
    std::uint32_t h[8] = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                          0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    std::uint64_t total = 0;
    std::array<std::uint8_t, 64> buf{};
    std::size_t fill = 0;

    static std::uint32_t rotr(std::uint32_t x, int r) {
        return (x >> r) | (x << (32 - r));
    }

    void block(const std::uint8_t* p) {
        static const std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = std::uint32_t(p[4 * i]) << 24 | std::uint32_t(p[4 * i + 1]) << 16 |
                   std::uint32_t(p[4 * i + 2]) << 8 | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 =
                rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 =
                rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5],
                      g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + S1 + ch + K[i] + w[i];
            const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = S0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    void update(const void* data, std::size_t len) {
        const std::uint8_t* p = static_cast<const std::uint8_t*>(data);
        total += len;
        while (len > 0) {
            const std::size_t take = std::min(len, buf.size() - fill);
            std::memcpy(buf.data() + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == buf.size()) {
                block(buf.data());
                fill = 0;
            }
        }
    }

    std::string hex() {
        const std::uint64_t bits = total * 8;
        const std::uint8_t one = 0x80;
        update(&one, 1);
        const std::uint8_t zero = 0;
        while (fill != 56) update(&zero, 1);
        std::uint8_t len[8];
        for (int i = 0; i < 8; ++i) len[i] = std::uint8_t(bits >> (56 - 8 * i));
        update(len, 8);
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
        return std::string(out, 64);
    }
};

std::string format_double(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.17g", v);
    return b;
}

} // namespace

void write_field(const std::string& path, const Field& f) {
    require(f.grid.n > 0 && f.a.size() == f.grid.size(), "malformed field");
    auto out = open_out(path, std::ios::binary);
    put(out, std::int32_t(2));
    put(out, std::int32_t(f.grid.n));
    put(out, f.grid.L);
    out.write(reinterpret_cast<const char*>(f.a.data()),
              std::streamsize(f.a.size() * sizeof(double)));
    require(out.good(), "write failed: " + path);
}

Field read_field(const std::string& path) {
    auto in = open_in(path, std::ios::binary);
    const auto d = get<std::int32_t>(in, path);
    require(d == 2, "field file is not 2-dimensional: " + path);
    const auto n = get<std::int32_t>(in, path);
    require(n > 0 && n <= 1 << 16, "bad grid size in " + path);
    const auto L = get<double>(in, path);
    require(L > 0.0, "bad box size in " + path);
    Field f(Grid{n, L});
    in.read(reinterpret_cast<char*>(f.a.data()),
            std::streamsize(f.a.size() * sizeof(double)));
    require(bool(in), "truncated field data: " + path);
    return f;
}

void write_positions(const std::string& path, const Positions& p) {
    require(p.x.size() == p.y.size(), "malformed positions");
    auto out = open_out(path, std::ios::binary);
    put(out, std::int64_t(p.x.size()));
    put(out, std::int32_t(2));
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        put(out, p.x[i]);
        put(out, p.y[i]);
    }
    require(out.good(), "write failed: " + path);
}

Positions read_positions(const std::string& path) {
    auto in = open_in(path, std::ios::binary);
    const auto n = get<std::int64_t>(in, path);
    require(n >= 0 && n <= (std::int64_t(1) << 32), "bad particle count in " + path);
    const auto d = get<std::int32_t>(in, path);
    require(d == 2, "positions file is not 2-dimensional: " + path);
    Positions p;
    p.x.resize(std::size_t(n));
    p.y.resize(std::size_t(n));
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        p.x[i] = get<double>(in, path);
        p.y[i] = get<double>(in, path);
    }
    return p;
}

void write_csv(const std::string& path, const CsvTable& t) {
    require(!t.header.empty(), "CSV needs a header");
    auto out = open_out(path, std::ios::out);
    for (std::size_t c = 0; c < t.header.size(); ++c)
        out << (c ? "," : "") << t.header[c];
    out << "\n";
    for (const auto& row : t.rows) {
        require(row.size() == t.header.size(), "CSV row width mismatch");
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << format_double(row[c]);
        out << "\n";
    }
    require(out.good(), "write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
    auto in = open_in(path, std::ios::in);
    CsvTable t;
    std::string line;
    require(bool(std::getline(in, line)), "empty CSV: " + path);
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream rs(line);
        std::vector<double> row;
        while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
        require(row.size() == t.header.size(), "CSV row width mismatch in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string sha256_hex(const void* data, std::size_t len) {
    Sha256 s;
    s.update(data, len);
    return s.hex();
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string sha256_file(const std::string& path) {
    auto in = open_in(path, std::ios::binary);
    Sha256 s;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        s.update(buf, std::size_t(in.gcount()));
    return s.hex();
}

void write_manifest(const std::string& path, const std::string& config_text,
                    const std::vector<std::string>& output_files) {
    auto out = open_out(path, std::ios::out);
    char stamp[64] = "unknown";
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    if (gmtime_r(&now, &tm))
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
    out << "manifest-version: 1\n";
    out << "timestamp: " << stamp << "\n"; // the only nonreproducible line
    out << "config-sha256: " << sha256_hex(config_text) << "\n";
    out << "config-dialect: json\n";
    out << "config: |\n";
    std::stringstream cs(config_text);
    std::string line;
    while (std::getline(cs, line)) out << "  " << line << "\n";
    out << "outputs:\n";
    for (const auto& f : output_files) {
        std::string name = f;
        const auto slash = name.find_last_of('/');
        if (slash != std::string::npos) name = name.substr(slash + 1);
        out << "  " << name << " sha256=" << sha256_file(f) << "\n";
    }
    require(out.good(), "write failed: " + path);
}

} // namespace fpmlab::io
