#pragma once

#include "fpmlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace fpmlab {

struct ProblemParams {
    int d = 2;
    double s = 0.5;
    double sigma = 0.1;
    double beta = 0.25;
    double zeta = 0.25;
    long n_particles = 1024;

    // derived exponents, always recomputed
    double a() const { return std::min(1.0, d - 2.0 * s); }
    double m_moment() const { return 2.0 * d / (d - 2.0 * s); }

    void validate() const; // throws config_error on inadmissible tuples
};

enum class RieszKind { Minus, Plus, OneMinus };

// Minus:    c_{d,-s}  = Gamma(d/2-s) / (4^s pi^{d/2} Gamma(s))
// Plus:     c_{d,s}   = 4^s Gamma(d/2+s) / (pi^{d/2} |Gamma(-s)|)
// OneMinus: c_{d,1-s} (Plus formula at order 1-s)
double riesz_constant(int d, double s, RieszKind kind);

// exact kernel value c_{d,-s} r^{2s-d}
double riesz_kernel(int d, double s, double r);

// radial bump profile exp(-1/(1-r^2)) on r<1, zero outside (unnormalized)
double bump_profile(double r);
// normalization constant C_d with integral_{R^d} C_d exp(-1/(1-|x|^2)) dx = 1
double bump_norm_const(int d);

// scaled mollifier W_h(x) = h^{-d} W_1(x/h), W_1 = C_d bump_profile
struct Mollifier {
    int d;
    double width;
    double norm_const;

    Mollifier(int dim, double w);
    double radial(double r) const; // value at |x| = r
    double value2d(double x, double y) const;
};

// radial ramp: 1 on [0, 1/zeta], slope -zeta down to 0 at 2/zeta
struct Cutoff {
    double zeta;
    double operator()(double r) const {
        double v = 2.0 - zeta * r;
        return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
};

// smooth radial plateau: 1 on [0,1], 0 on [2,inf), C^inf transition
double plateau(double r);
double plateau_deriv(double r);
// CDF of the unit-width 1-d mollifier, G(-1)=0, G(1)=1
double bump_cdf(double t);

// nodal samples of W_width on the grid in min-image layout, renormalized so
// the grid sum times h^d is exactly 1
Field grid_mollifier(const Grid& g, double width);

// average of |x|^{2s-d} over the origin cell [-h/2,h/2]^2, via the divergence
// theorem reduction to a face integral (finite despite the singularity)
double origin_cell_average(double s, double h);

enum class KernelBase { Torus, Freespace };

struct RegularizedKernel {
    Field kz;  // K_zeta nodal values, min-image layout
    Field dkx; // spectral gradient of kz
    Field dky;
    double zeta = 0.0;
    bool wrap_truncated = false; // cutoff support 2/zeta exceeds half the box
    bool mollified = false;      // W_zeta convolution applied (zeta >= spacing)
};

RegularizedKernel build_regularized_kernel(const ProblemParams& p, const Grid& g,
                                           KernelBase base = KernelBase::Torus);

struct NonlinearityTable {
    double sigma = 0.0;
    double u_max = 0.0;
    double du = 0.0;
    std::vector<double> f;   // f_sigma at nodes i*du
    std::vector<double> fp;  // f_sigma'
    std::vector<double> fpp; // f_sigma''
    // entropy density solving h'' = f_sigma'/u, normalized so h(0) = h(1) = 0
    // (u log u for linear f); built from T(v) = int_0^v (f_sigma'(w) - fp0)/w dw
    double fp0 = 0.0;
    double t1 = 0.0;            // T(1)
    std::vector<double> ent_s;  // T at nodes
    std::vector<double> ent_sp; // T' at nodes

    double eval(double u) const;   // f_sigma(u), cubic Hermite between nodes
    double deriv(double u) const;  // f_sigma'(u)
    double deriv2(double u) const; // f_sigma''(u)
    double entropy(double u) const;
};

// f_sigma(u) = int_0^u (Gamma_sigma * (f' 1_{[0,inf)}))(w) XiTilde(sigma w) dw
NonlinearityTable build_nonlinearity(const std::function<double(double)>& f_prime,
                                     double sigma, double u_max, int table_size = 4096);

// closed-form power law f(u) = u^m, m >= 1
struct PowerLaw {
    double m = 1.0;
    double operator()(double u) const { return u <= 0.0 ? 0.0 : std::pow(u, m); }
    double deriv(double u) const {
        if (m == 1.0) return 1.0;
        return u <= 0.0 ? 0.0 : m * std::pow(u, m - 1.0);
    }
};

struct InitialDatum {
    Field rho0;       // raw datum sampled on the grid
    Field rho0_sigma; // kappa_sigma (W_sigma * rho0) Xi(sigma x)
    double kappa_sigma = 1.0;
    double mass = 0.0; // grid mass, identical for both fields by construction
};

InitialDatum regularize_initial(const Field& rho0, double sigma);
InitialDatum regularize_initial(const std::function<double(double, double)>& rho0,
                                double sigma, const Grid& g);

} // namespace fpmlab
