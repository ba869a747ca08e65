#pragma once

#include "fpmlab/grid.hpp"

#include <functional>

namespace fpmlab {

struct Gradient {
    Field x, y;
};

// Fourier multiplier |k|^{-2s}, zero mode gauged to 0
Field inv_frac_laplacian(const Field& u, double s);
// Fourier multiplier |k|^{2s}
Field frac_laplacian(const Field& u, double s);
// grad (-Delta)^{-s} applied to f(rho): multiplier i k |k|^{-2s}
Gradient pressure_gradient(const Field& rho_f, double s);
// spectral first derivatives
Gradient gradient(const Field& u);

// periodic convolution scaled by cell volume (discrete version of the
// continuum integral for smooth integrands)
Field convolve(const Field& u, const Field& v);

double mass(const Field& u); // h^2 sum
double norm_lp(const Field& u, double p);
double norm_linf(const Field& u);
double min_value(const Field& u);
// homogeneous Sobolev seminorm (sum |k|^{2 order} |u_hat|^2)^{1/2}, Plancherel
double h_seminorm(const Field& u, double order);

enum class Inequality { GN1, GN2, HLS, HLS2 };

struct ProbeSpec {
    Inequality which = Inequality::HLS;
    double s = 0.5;
    double p = 2.0;
    double q = 2.0;
    double r = 2.0;
};

struct ProbeReport {
    double lhs = 0.0;
    double rhs = 0.0;   // right-hand side without the unknown constant
    double ratio = 0.0; // lhs / rhs
    double theta = 0.0; // interpolation exponent where applicable
};

// v participates only in HLS2; pass nullptr otherwise
ProbeReport inequality_probe(const Field& u, const Field* v, const ProbeSpec& spec);

// Singular-integral cross-check of the Dirichlet form |grad (-Lap)^{-s/2} g|_2^2
// (the H^{1-s} seminorm squared): (c/2) double sum of (g(x)-g(y))^2 against the
// periodized kernel, with cell-averaged weights away from the diagonal, product
// quadrature on the exact field near it, and a divergence-theorem cell integral
// on the diagonal. g is the closed-form field sampled on the grid. Meant for
// coarse verification grids; cost grows like n^2 cells x quadrature nodes.
double dirichlet_form_quadrature(const std::function<double(double, double)>& g,
                                 const Grid& grid, double s);

} // namespace fpmlab
