#include "fpmlab/kernels.hpp"

#include "fpmlab/fft.hpp"
#include "fpmlab/quad.hpp"
#include "fpmlab/simd.hpp"

#include <algorithm>
#include <cmath>

namespace fpmlab {

void ProblemParams::validate() const {
    if (d < 1) throw config_error("params: dimension must be >= 1");
    if (!(s > 0.0 && s < 1.0)) throw config_error("params: order s must lie in (0,1)");
    if (d == 1 && s >= 0.5) throw config_error("params: d=1 requires s < 1/2");
    if (!(d - 2.0 * s > 0.0)) throw config_error("params: d - 2s must be positive");
    if (sigma < 0.0) throw config_error("params: sigma must be >= 0");
    if (beta <= 0.0) throw config_error("params: beta must be positive");
    if (zeta <= 0.0) throw config_error("params: zeta must be positive");
    if (n_particles < 2) throw config_error("params: need at least two particles");
}

double riesz_constant(int d, double s, RieszKind kind) {
    if (d < 1) throw config_error("riesz_constant: dimension must be >= 1");
    if (!(s > 0.0 && s < 1.0))
        throw config_error("riesz_constant: order must lie strictly in (0,1)");
    const double pid2 = std::pow(M_PI, 0.5 * d);
    switch (kind) {
    case RieszKind::Minus:
        if (0.5 * d - s <= 0.0)
            throw config_error("riesz_constant: kind=minus requires s < d/2");
        return std::tgamma(0.5 * d - s) / (std::pow(4.0, s) * pid2 * std::tgamma(s));
    case RieszKind::Plus:
        // |Gamma(-s)| = Gamma(1-s)/s by the reflection of the recurrence
        return std::pow(4.0, s) * std::tgamma(0.5 * d + s) * s /
               (pid2 * std::tgamma(1.0 - s));
    case RieszKind::OneMinus: {
        const double t = 1.0 - s;
        return std::pow(4.0, t) * std::tgamma(0.5 * d + t) * t /
               (pid2 * std::tgamma(1.0 - t));
    }
    }
    throw config_error("riesz_constant: unknown kind");
}

double riesz_kernel(int d, double s, double r) {
    return riesz_constant(d, s, RieszKind::Minus) * std::pow(r, 2.0 * s - d);
}

double bump_profile(double r) {
    if (r >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r * r));
}

double bump_norm_const(int d) {
    static const double cache[3] = {
        1.0 / (2.0 * quad::gl96().integrate([](double r) { return bump_profile(r); }, 0.0, 1.0)),
        1.0 / (2.0 * M_PI *
               quad::gl96().integrate([](double r) { return r * bump_profile(r); }, 0.0, 1.0)),
        1.0 / (4.0 * M_PI *
               quad::gl96().integrate([](double r) { return r * r * bump_profile(r); }, 0.0, 1.0)),
    };
    if (d < 1 || d > 3) throw config_error("bump_norm_const: d in {1,2,3}");
    return cache[d - 1];
}

Mollifier::Mollifier(int dim, double w) : d(dim), width(w), norm_const(bump_norm_const(dim)) {
    if (w <= 0.0) throw config_error("mollifier width must be positive");
}

double Mollifier::radial(double r) const {
    return norm_const / std::pow(width, d) * bump_profile(r / width);
}

double Mollifier::value2d(double x, double y) const {
    return radial(std::hypot(x, y));
}

namespace {

// CDF of the unit-width normalized 1-d bump, tabulated once; cubic Hermite
// between nodes with the analytic density as slope
struct BumpCdfTable {
    static constexpr int N = 2048;
    double v[N + 1];
    double c1; // 1-d normalization, rescaled so v[N] is exactly 1

    BumpCdfTable() {
        const double raw = bump_norm_const(1);
        auto f = [&](double x) { return raw * bump_profile(std::abs(x)); };
        v[0] = 0.0;
        const auto& g = quad::gl8();
        for (int i = 1; i <= N; ++i)
            v[i] = v[i - 1] + g.integrate(f, -1.0 + 2.0 * (i - 1.0) / N, -1.0 + 2.0 * i / N);
        c1 = raw / v[N];
        for (int i = 0; i <= N; ++i) v[i] /= v[N];
    }

    double pdf(double t) const { return c1 * bump_profile(std::abs(t)); }

    double eval(double t) const {
        if (t <= -1.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double step = 2.0 / N;
        double u = (t + 1.0) / step;
        int i = std::min(int(u), N - 1);
        double fr = u - i;
        double y0 = v[i], y1 = v[i + 1];
        double m0 = pdf(-1.0 + step * i) * step, m1 = pdf(-1.0 + step * (i + 1)) * step;
        double f2 = fr * fr, f3 = f2 * fr;
        return (2 * f3 - 3 * f2 + 1) * y0 + (f3 - 2 * f2 + fr) * m0 +
               (-2 * f3 + 3 * f2) * y1 + (f3 - f2) * m1;
    }
};

const BumpCdfTable& bump_cdf_table() {
    static const BumpCdfTable t;
    return t;
}

} // namespace

double bump_cdf(double t) { return bump_cdf_table().eval(t); }

// plateau(r) = CDF_{width 1/2}(3/2 - r): equals 1 up to r=1, 0 from r=2
double plateau(double r) { return bump_cdf_table().eval(3.0 - 2.0 * std::abs(r)); }

double plateau_deriv(double r) {
    double t = 3.0 - 2.0 * std::abs(r);
    double g = -2.0 * bump_cdf_table().pdf(t);
    return r < 0.0 ? -g : g;
}

Field grid_mollifier(const Grid& g, double width) {
    if (width <= 0.0) throw config_error("grid_mollifier: width must be positive");
    Field W(g);
    for (int i = 0; i < g.n; ++i) {
        double x = g.mi_coord(i);
        for (int j = 0; j < g.n; ++j) {
            double y = g.mi_coord(j);
            W.at(i, j) = bump_profile(std::hypot(x, y) / width);
        }
    }
    // discrete renormalization: the raw nodal quadrature of the bump misses
    // the 1e-10 mass gate until width >> spacing, and downstream convolutions
    // need exact discrete mass 1
    double tot = simd::reduce_sum(W.data(), W.a.size()) * g.h() * g.h();
    if (tot <= 0.0) throw config_error("grid_mollifier: empty support on this grid");
    for (auto& x : W.a) x /= tot;
    return W;
}

double origin_cell_average(double s, double h) {
    // divergence theorem on [-h/2,h/2]^2: int |x|^a dx =
    // (1/(a+2)) * sum_faces (h/2) * int_face (y^2 + (h/2)^2)^{a/2} dy
    const double a = 2.0 * s - 2.0;
    const double r0 = 0.5 * h;
    double face = quad::gl48().integrate(
        [&](double y) { return std::pow(y * y + r0 * r0, 0.5 * a); }, -r0, r0);
    return (4.0 * r0 * face) / ((a + 2.0) * h * h);
}

RegularizedKernel build_regularized_kernel(const ProblemParams& p, const Grid& g,
                                           KernelBase base) {
    p.validate();
    if (p.d != 2) throw config_error("kernel fields are two-dimensional");
    const int n = g.n;
    const double h = g.h();

    Field kb(g);
    if (base == KernelBase::Torus) {
        // grid kernel consistent with the spectral inverse: ifft(|k|^{-2s})/h^2
        std::vector<cplx> m(g.size());
        for (int i = 0; i < n; ++i) {
            double kx = g.wavenumber(i);
            for (int j = 0; j < n; ++j) {
                double ky = g.wavenumber(j);
                double k2 = kx * kx + ky * ky;
                m[std::size_t(i) * n + j] = k2 > 0.0 ? std::pow(k2, -p.s) : 0.0;
            }
        }
        kb = ifft2_real(g, m);
        for (auto& x : kb.a) x /= h * h;
    } else {
        const double c = riesz_constant(2, p.s, RieszKind::Minus);
        for (int i = 0; i < n; ++i) {
            double x = g.mi_coord(i);
            for (int j = 0; j < n; ++j) {
                double y = g.mi_coord(j);
                double r = std::hypot(x, y);
                kb.at(i, j) = r > 0.0 ? c * std::pow(r, 2.0 * p.s - 2.0)
                                      : c * origin_cell_average(p.s, h);
            }
        }
    }

    RegularizedKernel out;
    out.zeta = p.zeta;
    out.wrap_truncated = 2.0 / p.zeta > g.L;
    out.kz = Field(g);
    Cutoff om{p.zeta};
    for (int i = 0; i < n; ++i) {
        double x = g.mi_coord(i);
        for (int j = 0; j < n; ++j) {
            double y = g.mi_coord(j);
            out.kz.at(i, j) = kb.at(i, j) * om(std::hypot(x, y));
        }
    }

    out.mollified = p.zeta >= h;
    if (out.mollified) {
        Field W = grid_mollifier(g, p.zeta);
        auto prod = fft2(out.kz);
        auto wh = fft2(W);
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= wh[i] * (h * h);
        out.kz = ifft2_real(g, prod);
    }

    auto kh = fft2(out.kz);
    std::vector<cplx> gx(g.size()), gy(g.size());
    for (int i = 0; i < n; ++i) {
        double kx = g.wavenumber(i);
        for (int j = 0; j < n; ++j) {
            double ky = g.wavenumber(j);
            std::size_t idx = std::size_t(i) * n + j;
            gx[idx] = cplx(0.0, kx) * kh[idx];
            gy[idx] = cplx(0.0, ky) * kh[idx];
        }
    }
    out.dkx = ifft2_real(g, gx);
    out.dky = ifft2_real(g, gy);
    return out;
}

namespace {

// Gamma_sigma * (f' 1_{[0,inf)}) evaluated at w: the indicator clips the
// quadrature interval at t = w/sigma, below which the integrand is smooth
double molly_conv(const std::function<double(double)>& fp, double sigma, double w) {
    double tmax = std::min(1.0, w / sigma);
    if (tmax <= -1.0) return 0.0;
    const auto& tb = bump_cdf_table();
    return quad::gl48().integrate(
        [&](double t) { return tb.pdf(t) * fp(w - sigma * t); }, -1.0, tmax);
}

double molly_conv_deriv(const std::function<double(double)>& fp, double sigma, double w) {
    double tmax = std::min(1.0, w / sigma);
    if (tmax <= -1.0) return 0.0;
    const auto& tb = bump_cdf_table();
    auto dgamma = [&](double t) {
        double r2 = t * t;
        if (r2 >= 1.0) return 0.0;
        double om = 1.0 - r2;
        return tb.c1 * std::exp(-1.0 / om) * (-2.0 * t / (om * om));
    };
    return quad::gl48().integrate(
               [&](double t) { return dgamma(t) * fp(w - sigma * t); }, -1.0, tmax) /
           sigma;
}

// cubic Hermite on a uniform table with stored slopes; linear extension
// beyond the last node, slope-through-origin below u=0
double hermite_uniform(const std::vector<double>& y, const std::vector<double>& dy,
                       double du, double u) {
    const std::size_t m = y.size() - 1;
    if (u >= m * du) return y[m] + dy[m] * (u - m * du);
    double p = u / du;
    std::size_t i = std::min(std::size_t(p), m - 1);
    double fr = p - i;
    double f2 = fr * fr, f3 = f2 * fr;
    return (2 * f3 - 3 * f2 + 1) * y[i] + (f3 - 2 * f2 + fr) * dy[i] * du +
           (-2 * f3 + 3 * f2) * y[i + 1] + (f3 - f2) * dy[i + 1] * du;
}

} // namespace

double NonlinearityTable::eval(double u) const {
    if (u <= 0.0) return fp0 * u;
    return hermite_uniform(f, fp, du, u);
}

double NonlinearityTable::deriv(double u) const {
    if (u <= 0.0) return fp0;
    if (u >= u_max) return fp.back();
    return hermite_uniform(fp, fpp, du, u);
}

double NonlinearityTable::deriv2(double u) const {
    if (u <= 0.0) return fpp.empty() ? 0.0 : fpp.front();
    double p = u / du;
    std::size_t i = std::min(std::size_t(p), fpp.size() - 2);
    double fr = p - i;
    return fpp[i] * (1.0 - fr) + fpp[i + 1] * fr;
}

double NonlinearityTable::entropy(double u) const {
    if (u <= 0.0) return 0.0;
    double T = hermite_uniform(ent_s, ent_sp, du, u);
    // the raw double integral of f'/w has h(1) = -f(1); the affine-in-u
    // correction pins h(0) = h(1) = 0 (u log u for linear f) and leaves the
    // entropy balance untouched since mass is conserved
    return fp0 * u * std::log(u) + u * T - eval(u) - t1 * u + eval(1.0) * u;
}

NonlinearityTable build_nonlinearity(const std::function<double(double)>& f_prime,
                                     double sigma, double u_max, int table_size) {
    if (sigma <= 0.0) throw config_error("build_nonlinearity: sigma must be positive");
    if (u_max <= 0.0) throw config_error("build_nonlinearity: u_max must be positive");
    if (table_size < 16) throw config_error("build_nonlinearity: table too small");

    // resolve the sigma-wide boundary layer at w=0
    long nodes = std::max<long>(table_size, long(std::ceil(u_max / (sigma / 8.0))) + 1);
    nodes = std::min<long>(nodes, 1L << 20);

    NonlinearityTable t;
    t.sigma = sigma;
    t.u_max = u_max;
    t.du = u_max / double(nodes - 1);
    t.f.resize(nodes);
    t.fp.resize(nodes);
    t.fpp.resize(nodes);

    auto fp_raw = [&](double w) { return molly_conv(f_prime, sigma, w) * plateau(sigma * w); };
    auto fpp_raw = [&](double w) {
        return molly_conv_deriv(f_prime, sigma, w) * plateau(sigma * w) +
               molly_conv(f_prime, sigma, w) * sigma * plateau_deriv(sigma * w);
    };

    const auto& g8 = quad::gl8();
    t.f[0] = 0.0;
    for (long i = 0; i < nodes; ++i) {
        double u = i * t.du;
        t.fp[i] = fp_raw(u);
        t.fpp[i] = fpp_raw(u);
        if (i > 0) t.f[i] = t.f[i - 1] + g8.integrate(fp_raw, (i - 1) * t.du, u);
    }

    for (long i = 0; i < nodes; ++i)
        if (t.fp[i] < -1e-14)
            throw config_error("build_nonlinearity: smoothed nonlinearity lost monotonicity");

    // entropy support table T(v) = int_0^v (f'(w) - fp0)/w dw (integrand
    // smooth at 0); see NonlinearityTable::entropy for the assembled density
    t.fp0 = t.fp[0];
    const double fpp0 = t.fpp[0];
    auto ent_integrand = [&](double w) {
        if (w < 1e-9 * sigma) return fpp0;
        return (fp_raw(w) - t.fp0) / w;
    };
    t.ent_s.resize(nodes);
    t.ent_sp.resize(nodes);
    t.ent_s[0] = 0.0;
    for (long i = 0; i < nodes; ++i) {
        t.ent_sp[i] = ent_integrand(i * t.du);
        if (i > 0)
            t.ent_s[i] = t.ent_s[i - 1] + g8.integrate(ent_integrand, (i - 1) * t.du, i * t.du);
    }
    t.t1 = 0.0;
    for (int i = 0; i < 64; ++i)
        t.t1 += g8.integrate(ent_integrand, i / 64.0, (i + 1) / 64.0);
    return t;
}

InitialDatum regularize_initial(const Field& rho0, double sigma) {
    if (sigma <= 0.0) throw config_error("regularize_initial: sigma must be positive");
    const Grid& g = rho0.grid;
    const double h = g.h();

    Field W = grid_mollifier(g, sigma);
    auto rh = fft2(rho0);
    auto wh = fft2(W);
    for (std::size_t i = 0; i < rh.size(); ++i) rh[i] *= wh[i] * (h * h);
    Field cut = ifft2_real(g, rh);

    for (int i = 0; i < g.n; ++i) {
        double x = g.coord(i);
        for (int j = 0; j < g.n; ++j)
            cut.at(i, j) *= plateau(sigma * std::hypot(x, g.coord(j)));
    }

    double m0 = simd::reduce_sum(rho0.data(), rho0.a.size()) * h * h;
    double mc = simd::reduce_sum(cut.data(), cut.a.size()) * h * h;
    if (!(mc > 1e-300) || !std::isfinite(mc))
        throw simulation_error("regularize_initial: datum vanishes under the cutoff");

    InitialDatum out;
    out.rho0 = rho0;
    out.kappa_sigma = m0 / mc;
    out.mass = m0;
    out.rho0_sigma = cut;
    for (auto& x : out.rho0_sigma.a) x *= out.kappa_sigma;
    return out;
}

InitialDatum regularize_initial(const std::function<double(double, double)>& rho0,
                                double sigma, const Grid& g) {
    Field r(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) r.at(i, j) = rho0(g.coord(i), g.coord(j));
    return regularize_initial(r, sigma);
}

} // namespace fpmlab
