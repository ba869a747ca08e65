#pragma once
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpmlab {

// Periodic box [-L, L)^2, n nodes per axis, row-major storage a[i*n + j]
// with x = -L + i*h, y = -L + j*h, h = 2L/n.
struct Grid {
    int n = 0;
    double L = 0.0;

    double h() const { return 2.0 * L / n; }
    std::size_t size() const { return std::size_t(n) * n; }
    double coord(int i) const { return -L + i * h(); }
    // minimum-image coordinate of node index i
    double mi_coord(int i) const { return (i < n / 2 ? i : i - n) * h(); }
    // wavenumber of mode index i (2*pi/(2L) spacing)
    double wavenumber(int i) const {
        const double k0 = 6.283185307179586476925286766559 / (2.0 * L);
        return (i < n / 2 ? i : i - n) * k0;
    }
    bool operator==(const Grid&) const = default;
};

struct Field {
    Grid grid;
    std::vector<double> a;

    Field() = default;
    explicit Field(Grid g) : grid(g), a(g.size(), 0.0) {}
    double& at(int i, int j) { return a[std::size_t(i) * grid.n + j]; }
    double at(int i, int j) const { return a[std::size_t(i) * grid.n + j]; }
    double* data() { return a.data(); }
    const double* data() const { return a.data(); }
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct simulation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct acceptance_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fpmlab
