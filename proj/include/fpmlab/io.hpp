#pragma once

#include "fpmlab/grid.hpp"
#include "fpmlab/particles.hpp"

#include <string>
#include <vector>

namespace fpmlab::io {

// binary density snapshot: int32 d (=2), int32 n, double L, n*n doubles
// row-major; native little-endian byte order
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

// binary ensemble dump: int64 N, int32 d (=2), then positions row-major
// (x_i, y_i per particle)
void write_positions(const std::string& path, const Positions& p);
Positions read_positions(const std::string& path);

// numeric CSV with a header row; %.17g cells round-trip doubles exactly
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& t);
CsvTable read_csv(const std::string& path);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::string& path);

// structured text record: the verbatim config, its content hash, a content
// hash per output file, and a timestamp (the single nonreproducible line)
void write_manifest(const std::string& path, const std::string& config_text,
                    const std::vector<std::string>& output_files);

} // namespace fpmlab::io
