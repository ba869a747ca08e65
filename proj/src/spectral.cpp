#include "fpmlab/spectral.hpp"

#include "fpmlab/fft.hpp"
#include "fpmlab/kernels.hpp"
#include "fpmlab/quad.hpp"
#include "fpmlab/simd.hpp"

#include <cmath>
#include <vector>

namespace fpmlab {

namespace {

// apply a real radial symbol m(kx, ky) in Fourier space
template <class Symbol>
Field apply_symbol(const Field& u, Symbol&& m) {
    const Grid& g = u.grid;
    auto uh = fft2(u);
    std::vector<double> sym(g.size());
    for (int i = 0; i < g.n; ++i) {
        double kx = g.wavenumber(i);
        for (int j = 0; j < g.n; ++j)
            sym[std::size_t(i) * g.n + j] = m(kx, g.wavenumber(j));
    }
    simd::multiplier_apply(uh.data(), sym.data(), uh.size());
    return ifft2_real(g, uh);
}

} // namespace

Field inv_frac_laplacian(const Field& u, double s) {
    return apply_symbol(u, [s](double kx, double ky) {
        double k2 = kx * kx + ky * ky;
        return k2 > 0.0 ? std::pow(k2, -s) : 0.0;
    });
}

Field frac_laplacian(const Field& u, double s) {
    return apply_symbol(u, [s](double kx, double ky) {
        double k2 = kx * kx + ky * ky;
        return k2 > 0.0 ? std::pow(k2, s) : 0.0;
    });
}

Gradient pressure_gradient(const Field& rho_f, double s) {
    const Grid& g = rho_f.grid;
    auto uh = fft2(rho_f);
    std::vector<cplx> gx(g.size()), gy(g.size());
    for (int i = 0; i < g.n; ++i) {
        double kx = g.wavenumber(i);
        for (int j = 0; j < g.n; ++j) {
            double ky = g.wavenumber(j);
            std::size_t idx = std::size_t(i) * g.n + j;
            double k2 = kx * kx + ky * ky;
            double m = k2 > 0.0 ? std::pow(k2, -s) : 0.0;
            gx[idx] = cplx(0.0, kx * m) * uh[idx];
            gy[idx] = cplx(0.0, ky * m) * uh[idx];
        }
    }
    return {ifft2_real(g, gx), ifft2_real(g, gy)};
}

Gradient gradient(const Field& u) { return pressure_gradient(u, 0.0); }

Field convolve(const Field& u, const Field& v) {
    if (!(u.grid == v.grid)) throw config_error("convolve: grid mismatch");
    const int n = u.grid.n;
    const double cell = u.grid.h() * u.grid.h();
    auto uh = fft2(u);
    auto vh = fft2(v);
    // both factors are sampled at the node coordinates, so their transforms
    // each carry a half-period phase; one survives the product and must be
    // removed for the result to line up with the same nodes
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double sign = ((i + j) & 1) ? -1.0 : 1.0;
            uh[std::size_t(i) * n + j] *= vh[std::size_t(i) * n + j] * cell * sign;
        }
    return ifft2_real(u.grid, uh);
}

double mass(const Field& u) {
    return simd::reduce_sum(u.data(), u.a.size()) * u.grid.h() * u.grid.h();
}

double norm_lp(const Field& u, double p) {
    if (!(p >= 1.0)) throw config_error("norm_lp: p must be >= 1");
    if (std::isinf(p)) return norm_linf(u);
    std::vector<double> pw(u.a.size());
    if (p == 1.0) {
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = std::abs(u.a[i]);
    } else if (p == 2.0) {
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = u.a[i] * u.a[i];
    } else {
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = std::pow(std::abs(u.a[i]), p);
    }
    double cell = u.grid.h() * u.grid.h();
    return std::pow(simd::reduce_sum(pw.data(), pw.size()) * cell, 1.0 / p);
}

double norm_linf(const Field& u) { return simd::reduce_max_abs(u.data(), u.a.size()); }

double min_value(const Field& u) { return simd::reduce_min(u.data(), u.a.size()); }

double h_seminorm(const Field& u, double order) {
    const Grid& g = u.grid;
    auto uh = fft2(u);
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double kx = g.wavenumber(i);
        for (int j = 0; j < g.n; ++j) {
            double ky = g.wavenumber(j);
            double k2 = kx * kx + ky * ky;
            if (k2 <= 0.0) continue;
            acc += std::pow(k2, order) * std::norm(uh[std::size_t(i) * g.n + j]);
        }
    }
    double cell = g.h() * g.h();
    return std::sqrt(acc * cell / g.size());
}

namespace {

double vector_norm_lp(const Gradient& v, double p) {
    Field mag(v.x.grid);
    for (std::size_t i = 0; i < mag.a.size(); ++i)
        mag.a[i] = std::hypot(v.x.a[i], v.y.a[i]);
    return norm_lp(mag, p);
}

double hessian_norm_lp(const Field& u, double p) {
    Gradient g1 = gradient(u);
    Gradient gxx = gradient(g1.x);
    Gradient gyy = gradient(g1.y);
    Field mag(u.grid);
    for (std::size_t i = 0; i < mag.a.size(); ++i) {
        double a = gxx.x.a[i], b = gxx.y.a[i], c = gyy.x.a[i], d = gyy.y.a[i];
        mag.a[i] = std::sqrt(a * a + b * b + c * c + d * d);
    }
    return norm_lp(mag, p);
}

} // namespace

ProbeReport inequality_probe(const Field& u, const Field* v, const ProbeSpec& spec) {
    const int d = 2;
    ProbeReport rep;
    switch (spec.which) {
    case Inequality::GN1: {
        if (!(spec.s > 0.0 && spec.s <= 1.0))
            throw config_error("probe GN1: s must lie in (0,1]");
        if (!(spec.p > 1.0)) throw config_error("probe GN1: p must exceed 1");
        rep.lhs = norm_lp(frac_laplacian(u, spec.s), spec.p);
        if (spec.s <= 0.5) {
            rep.rhs = std::pow(norm_lp(u, spec.p), 1.0 - 2.0 * spec.s) *
                      std::pow(vector_norm_lp(gradient(u), spec.p), 2.0 * spec.s);
        } else {
            rep.rhs = std::pow(norm_lp(u, spec.p), 1.0 - spec.s) *
                      std::pow(hessian_norm_lp(u, spec.p), spec.s);
        }
        break;
    }
    case Inequality::GN2: {
        if (!(spec.s > 0.0 && spec.s <= 0.5))
            throw config_error("probe GN2: s must lie in (0,1/2]");
        if (!(spec.q >= spec.p && spec.p > 1.0))
            throw config_error("probe GN2: need 1 < p <= q");
        if (spec.p < d / (2.0 * spec.s) &&
            spec.q > d * spec.p / (d - 2.0 * spec.s * spec.p) + 1e-12)
            throw config_error("probe GN2: q above the Sobolev endpoint");
        double theta = 1.0 + d / spec.p - d / spec.q - 2.0 * spec.s;
        if (theta < -1e-12 || theta > 1.0 + 1e-12)
            throw config_error("probe GN2: exponent theta outside [0,1]");
        rep.theta = theta;
        Gradient gr = gradient(u);
        Gradient lhsv{inv_frac_laplacian(gr.x, spec.s), inv_frac_laplacian(gr.y, spec.s)};
        rep.lhs = vector_norm_lp(lhsv, spec.q);
        rep.rhs = std::pow(norm_lp(u, spec.p), 1.0 - theta) *
                  std::pow(vector_norm_lp(gr, spec.p), theta);
        break;
    }
    case Inequality::HLS: {
        if (!(spec.s > 0.0 && spec.s < 1.0))
            throw config_error("probe HLS: s must lie in (0,1)");
        double qinv = 1.0 / spec.p - 2.0 * spec.s / d;
        if (!(spec.p > 1.0) || qinv <= 0.0)
            throw config_error("probe HLS: need 1 < p and 1/p - 2s/d > 0");
        rep.theta = 1.0 / qinv;
        rep.lhs = norm_lp(inv_frac_laplacian(u, spec.s), 1.0 / qinv);
        rep.rhs = norm_lp(u, spec.p);
        break;
    }
    case Inequality::HLS2: {
        if (!v) throw config_error("probe HLS2: needs a second field");
        if (!(spec.s > 0.5 && spec.s < 1.0))
            throw config_error("probe HLS2: s must lie in (1/2,1)");
        double bal = 1.0 / spec.q + 1.0 / spec.r - 1.0 / spec.p - (2.0 * spec.s - 1.0) / d;
        if (std::abs(bal) > 1e-12)
            throw config_error("probe HLS2: exponents violate the scaling relation");
        Gradient gv = pressure_gradient(*v, spec.s);
        Field prod(u.grid);
        for (std::size_t i = 0; i < prod.a.size(); ++i)
            prod.a[i] = u.a[i] * std::hypot(gv.x.a[i], gv.y.a[i]);
        rep.lhs = norm_lp(prod, spec.p);
        rep.rhs = norm_lp(u, spec.q) * norm_lp(*v, spec.r);
        break;
    }
    }
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

double dirichlet_form_quadrature(const std::function<double(double, double)>& g,
                                 const Grid& grid, double s) {
    if (!(s > 0.0 && s < 1.0)) throw config_error("dirichlet form: s must lie in (0,1)");
    const double sp = 1.0 - s; // seminorm order
    const int n = grid.n;
    const double h = grid.h();
    const double L = grid.L;
    const double c = riesz_constant(2, sp, RieszKind::Plus);
    constexpr int kImages = 3;   // periodization radius
    constexpr int kNear = 3;     // exact-field quadrature inside this offset
    const quad::GaussLegendre q10(10);

    // periodized |z|^{-2-2sp} with an integral tail for the far images
    auto kper = [&](double zx, double zy) {
        double out = 0.0;
        for (int ix = -kImages; ix <= kImages; ++ix)
            for (int iy = -kImages; iy <= kImages; ++iy) {
                const double dx = zx + 2.0 * L * ix;
                const double dy = zy + 2.0 * L * iy;
                out += std::pow(dx * dx + dy * dy, -(1.0 + sp));
            }
        const double R = 2.0 * L * (kImages + 0.5);
        out += (1.0 / (4.0 * L * L)) * 2.0 * 3.14159265358979323846 *
               std::pow(R, -2.0 * sp) / (2.0 * sp);
        return out;
    };

    Field gs(grid);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gs.at(i, j) = g(grid.coord(i), grid.coord(j));

    double tot = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == 0 && b == 0) continue;
            const double za = grid.mi_coord(a);
            const double zb = grid.mi_coord(b);
            if (std::abs(za) <= kNear * h && std::abs(zb) <= kNear * h) {
                double acc = 0.0;
                for (int ii = 0; ii < 10; ++ii)
                    for (int jj = 0; jj < 10; ++jj) {
                        const double zx = za + q10.x[ii] * (h / 2.0);
                        const double zy = zb + q10.x[jj] * (h / 2.0);
                        const double wq =
                            q10.w[ii] * q10.w[jj] * (h / 2.0) * (h / 2.0);
                        double dsum = 0.0;
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j) {
                                const double x = grid.coord(i);
                                const double y = grid.coord(j);
                                const double dgg = gs.at(i, j) - g(x + zx, y + zy);
                                dsum += dgg * dgg;
                            }
                        acc += wq * kper(zx, zy) * dsum;
                    }
                tot += acc * h * h;
            } else {
                double cellint = 0.0;
                for (int ii = 0; ii < 10; ++ii)
                    for (int jj = 0; jj < 10; ++jj)
                        cellint += q10.w[ii] * q10.w[jj] * (h / 2.0) * (h / 2.0) *
                                   kper(za + q10.x[ii] * (h / 2.0),
                                        zb + q10.x[jj] * (h / 2.0));
                double dsum = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double dgg =
                            gs.at(i, j) - gs.at((i + a) % n, (j + b) % n);
                        dsum += dgg * dgg;
                    }
                tot += cellint * dsum * h * h;
            }
        }
    }

    // diagonal cell: (g(x+z)-g(x))^2 ~ |grad g|^2 |z|^2 / d averaged over angle,
    // with the cell integral of |z|^{-2sp} by the divergence theorem
    Gradient gr = gradient(gs);
    double g2 = 0.0;
    for (std::size_t i = 0; i < gr.x.a.size(); ++i)
        g2 += gr.x.a[i] * gr.x.a[i] + gr.y.a[i] * gr.y.a[i];
    const double alpha = -2.0 * sp; // |z|^{2 - d - 2(1-s)} with d = 2
    const double r0 = h / 2.0;
    double iface = 0.0;
    for (std::size_t k = 0; k < quad::gl48().x.size(); ++k) {
        const double y = quad::gl48().x[k] * r0;
        iface += quad::gl48().w[k] * r0 * std::pow(r0 * r0 + y * y, alpha / 2.0);
    }
    const double cellint_diag = (1.0 / (alpha + 2.0)) * 4.0 * r0 * iface;
    tot += h * h * g2 * 0.5 * cellint_diag;

    return 0.5 * c * tot;
}

} // namespace fpmlab
