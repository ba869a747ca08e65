#pragma once

// Reference computations for the test suites, kept independent of the library
// code paths they check: gamma via a Lanczos fit, fractional-Laplacian values
// via the pointwise singular integral with an analytic origin-cell model,
// simple composite quadrature instead of the library's Gauss rules.

#include "fpmlab/grid.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Lanczos approximation (g = 7, 9 terms), relative error below 1e-13 on the
// arguments used here
inline double lanczos_gamma(double x) {
    static const double c[9] = {0.99999999999980993,  676.5203681218851,
                                -1259.1392167224028,  771.32342877765313,
                                -176.61502916214059,  12.507343278686905,
                                -0.13857109526572012, 9.9843695780195716e-6,
                                1.5056327351493116e-7};
    if (x < 0.5) return kPi / (std::sin(kPi * x) * lanczos_gamma(1.0 - x));
    x -= 1.0;
    double a = c[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
    return std::sqrt(2.0 * kPi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

// composite Simpson on [a, b], panels even
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int panels) {
    const double w = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += f(a + i * w) * (i & 1 ? 4.0 : 2.0);
    return acc * w / 3.0;
}

// int_{[-h/2,h/2]^2} |z|^alpha dz for alpha > -2. Divergence theorem applied
// to z|z|^alpha turns the cell integral into a face integral, finite through
// the singularity: (alpha+2) I = 4 (h/2) int_{-h/2}^{h/2} (h^2/4 + t^2)^{alpha/2} dt.
inline double cell_int_pow(double h, double alpha) {
    const double hh = 0.5 * h;
    const double face = simpson(
        [&](double t) { return std::pow(hh * hh + t * t, 0.5 * alpha); }, -hh, hh, 512);
    return 4.0 * hh * face / (alpha + 2.0);
}

// 2-d composite Simpson of f over [x0-hh,x0+hh] x [y0-hh,y0+hh]
inline double simpson2d(const std::function<double(double, double)>& f, double x0,
                        double y0, double hh, int panels) {
    auto line = [&](double y) {
        return simpson([&](double x) { return f(x, y); }, x0 - hh, x0 + hh, panels);
    };
    return simpson(line, y0 - hh, y0 + hh, panels);
}

// (-Delta)^s u at a probe point by the free-space singular integral
//     c_{2,s} int (u(x) - u(y)) |x - y|^{-2-2s} dy,
// c_{2,s} = 4^s s Gamma(1+s) / (pi Gamma(1-s)). The plane is covered by the
// grid's cell lattice translated to the probe: a second-order Taylor model on
// the origin cell (odd terms cancel, the Hessian term reduces to the cell
// integral of |z|^{-2s}), dense Simpson panels on the near ring where the
// kernel varies fastest, coarser panels outward, midpoint far out, and an
// analytic tail beyond the covered square assuming u vanishes there.
struct FracLapOracle {
    std::function<double(double, double)> u;     // closed form
    std::function<double(double, double)> lap_u; // its Laplacian, closed form
    double s = 0.5;

    double constant() const {
        return std::pow(4.0, s) * s * lanczos_gamma(1.0 + s) /
               (kPi * lanczos_gamma(1.0 - s));
    }

    double tail_integral(double R) const {
        // int over the complement of the centered square of half-width R of
        // |z|^{-2-2s} dz in polar form; the angular measure outside the square
        // at radius r in (R, R sqrt 2) is 8 acos(R/r)
        const double corner = simpson(
            [&](double r) { return 8.0 * std::acos(R / r) * std::pow(r, -1.0 - 2.0 * s); },
            R, R * std::sqrt(2.0), 2048);
        const double beyond = 2.0 * kPi * std::pow(R * std::sqrt(2.0), -2.0 * s) / (2.0 * s);
        return corner + beyond;
    }

    double eval(const fpmlab::Grid& g, double x0, double y0) const {
        const double h = g.h();
        const double hh = 0.5 * h;
        const double u0 = u(x0, y0);
        const int half = g.n / 2 - 1;
        double acc = -(lap_u(x0, y0) / 4.0) * cell_int_pow(h, -2.0 * s);
        for (int a = -half; a <= half; ++a) {
            for (int b = -half; b <= half; ++b) {
                if (a == 0 && b == 0) continue;
                const double zx = a * h, zy = b * h;
                const int ring = std::max(std::abs(a), std::abs(b));
                auto integrand = [&](double yx, double yy) {
                    const double dx = yx - x0, dy = yy - y0;
                    const double r2 = dx * dx + dy * dy;
                    return (u0 - u(yx, yy)) * std::pow(r2, -1.0 - s);
                };
                if (ring <= 3) {
                    acc += simpson2d(integrand, x0 + zx, y0 + zy, hh, 16);
                } else if (ring <= 8) {
                    acc += simpson2d(integrand, x0 + zx, y0 + zy, hh, 4);
                } else {
                    acc += integrand(x0 + zx, y0 + zy) * h * h;
                }
            }
        }
        acc += u0 * tail_integral((half + 0.5) * h);
        return constant() * acc;
    }
};

// free-space Riesz potential int c_{2,-s} |x-y|^{2s-2} u(y) dy at a probe, by
// the same cell decomposition; kernel integrable so no principal value. The
// origin cell uses the two-term model u(x) int K + (lap u / 4) int |z|^2 K.
struct RieszPotentialOracle {
    std::function<double(double, double)> u;
    std::function<double(double, double)> lap_u;
    double s = 0.5;

    double constant() const {
        return lanczos_gamma(1.0 - s) /
               (std::pow(4.0, s) * kPi * lanczos_gamma(s));
    }

    double eval(const fpmlab::Grid& g, double x0, double y0) const {
        const double h = g.h();
        const double hh = 0.5 * h;
        const int half = g.n / 2 - 1;
        double acc = u(x0, y0) * cell_int_pow(h, 2.0 * s - 2.0) +
                     0.25 * lap_u(x0, y0) * cell_int_pow(h, 2.0 * s);
        for (int a = -half; a <= half; ++a) {
            for (int b = -half; b <= half; ++b) {
                if (a == 0 && b == 0) continue;
                const double zx = a * h, zy = b * h;
                const int ring = std::max(std::abs(a), std::abs(b));
                auto integrand = [&](double yx, double yy) {
                    const double dx = yx - x0, dy = yy - y0;
                    const double r2 = dx * dx + dy * dy;
                    return u(yx, yy) * std::pow(r2, s - 1.0);
                };
                if (ring <= 3) {
                    acc += simpson2d(integrand, x0 + zx, y0 + zy, hh, 16);
                } else if (ring <= 8) {
                    acc += simpson2d(integrand, x0 + zx, y0 + zy, hh, 4);
                } else {
                    acc += integrand(x0 + zx, y0 + zy) * h * h;
                }
            }
        }
        // no tail: u is negligible beyond the covered square
        return constant() * acc;
    }
};

// Wilson-Hilferty chi-square quantile at the 99th percentile
inline double chi2_quantile99(double df) {
    const double z = 2.3263478740408408;
    const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    return df * t * t * t;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace oracle
