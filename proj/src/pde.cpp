#include "fpmlab/pde.hpp"

#include "fpmlab/fft.hpp"
#include "fpmlab/simd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace fpmlab {

namespace {

constexpr double kFluxCq = 8.0; // velocity-kink smoothing scale (in units of dv)

std::vector<cplx> scaled_fft(const Field& f) {
    auto h = fft2(f);
    const double cell = f.grid.h() * f.grid.h();
    for (auto& x : h) x *= cell;
    return h;
}

} // namespace

PdeSystem make_macro_system(const Grid& g, const ProblemParams& p,
                            const std::function<double(double)>& f_prime) {
    p.validate();
    PdeSystem sys;
    sys.grid = g;
    sys.params = p;
    sys.kind = PdeKind::Macro;
    sys.table = build_nonlinearity(f_prime, p.sigma, 2.0 / p.sigma + 1.0);
    return sys;
}

PdeSystem make_macro_system(const Grid& g, const ProblemParams& p, double m_pow) {
    if (!(m_pow >= 1.0))
        throw config_error("power-law nonlinearity needs m >= 1 (f' must stay bounded)");
    PowerLaw f{m_pow};
    return make_macro_system(g, p, [f](double u) { return f.deriv(u); });
}

PdeSystem make_intermediate_system(const Grid& g, const ProblemParams& p,
                                   const std::function<double(double)>& f_prime,
                                   KernelBase base) {
    PdeSystem sys = make_macro_system(g, p, f_prime);
    sys.kind = PdeKind::Intermediate;
    RegularizedKernel K = build_regularized_kernel(p, g, base);
    sys.kernel_wrap_truncated = K.wrap_truncated;
    sys.kz_hat = scaled_fft(K.kz);
    sys.wb_hat = scaled_fft(grid_mollifier(g, p.beta));
    return sys;
}

PdeSystem make_intermediate_system(const Grid& g, const ProblemParams& p, KernelBase base,
                                   double m_pow) {
    if (!(m_pow >= 1.0))
        throw config_error("power-law nonlinearity needs m >= 1 (f' must stay bounded)");
    PowerLaw f{m_pow};
    return make_intermediate_system(g, p, [f](double u) { return f.deriv(u); }, base);
}

PdeSystem make_limit_system(const Grid& g, const ProblemParams& p, double m_pow) {
    ProblemParams q = p;
    q.sigma = 0.0;
    if (q.d < 1) q.d = 2;
    PdeSystem sys;
    sys.grid = g;
    sys.params = q;
    sys.kind = PdeKind::Limit;
    PowerLaw f{m_pow};
    sys.f_raw = [f](double u) { return f(u); };
    return sys;
}

Gradient neg_grad_kernel_conv(const PdeSystem& sys, const Field& fld) {
    const Grid& g = sys.grid;
    auto fh = fft2(fld);
    std::vector<cplx> gx(fh.size()), gy(fh.size());
    for (int i = 0; i < g.n; ++i) {
        double kx = g.wavenumber(i);
        for (int j = 0; j < g.n; ++j) {
            double ky = g.wavenumber(j);
            std::size_t idx = std::size_t(i) * g.n + j;
            cplx m = sys.kz_hat[idx] * fh[idx];
            gx[idx] = cplx(0.0, -kx) * m;
            gy[idx] = cplx(0.0, -ky) * m;
        }
    }
    return {ifft2_real(g, gx), ifft2_real(g, gy)};
}

Gradient velocity(const PdeSystem& sys, const Field& rho) {
    const Grid& g = sys.grid;
    Field frho(g);
    if (sys.kind == PdeKind::Intermediate) {
        auto rh = fft2(rho);
        for (std::size_t i = 0; i < rh.size(); ++i) rh[i] *= sys.wb_hat[i];
        Field conv = ifft2_real(g, rh);
        for (std::size_t i = 0; i < frho.a.size(); ++i) frho.a[i] = sys.f_of(conv.a[i]);
        return neg_grad_kernel_conv(sys, frho);
    }
    for (std::size_t i = 0; i < frho.a.size(); ++i) frho.a[i] = sys.f_of(rho.a[i]);
    Gradient gp = pressure_gradient(frho, sys.params.s);
    for (auto& x : gp.x.a) x = -x;
    for (auto& x : gp.y.a) x = -x;
    return gp;
}

namespace {

// roll a row-major n x n array by one cell along an axis
void roll_minus(const std::vector<double>& src, std::vector<double>& dst, int n, int ax) {
    if (ax == 0) {
        std::memcpy(dst.data(), src.data() + n, sizeof(double) * std::size_t(n) * (n - 1));
        std::memcpy(dst.data() + std::size_t(n) * (n - 1), src.data(), sizeof(double) * n);
    } else {
        for (int i = 0; i < n; ++i) {
            const double* r = src.data() + std::size_t(i) * n;
            double* w = dst.data() + std::size_t(i) * n;
            std::memcpy(w, r + 1, sizeof(double) * (n - 1));
            w[n - 1] = r[0];
        }
    }
}

void roll_plus(const std::vector<double>& src, std::vector<double>& dst, int n, int ax) {
    if (ax == 0) {
        std::memcpy(dst.data() + n, src.data(), sizeof(double) * std::size_t(n) * (n - 1));
        std::memcpy(dst.data(), src.data() + std::size_t(n) * (n - 1), sizeof(double) * n);
    } else {
        for (int i = 0; i < n; ++i) {
            const double* r = src.data() + std::size_t(i) * n;
            double* w = dst.data() + std::size_t(i) * n;
            std::memcpy(w + 1, r, sizeof(double) * (n - 1));
            w[0] = r[n - 1];
        }
    }
}

void sweep_axis(Field& rho, const Field& v, int ax, double dt) {
    const int n = rho.grid.n;
    const double h = rho.grid.h();
    const std::size_t m = rho.a.size();
    std::vector<double> vR(m), rR(m), vf(m), dv(m), flux(m), fluxL(m);
    roll_minus(v.a, vR, n, ax);
    roll_minus(rho.a, rR, n, ax);
    for (std::size_t i = 0; i < m; ++i) {
        vf[i] = 0.5 * (v.a[i] + vR[i]);
        dv[i] = vR[i] - v.a[i];
    }
    double qmax = std::hypot(simd::reduce_max_abs(vf.data(), m),
                             kFluxCq * simd::reduce_max_abs(dv.data(), m));
    if (dt * qmax > 0.5 * h) {
        std::ostringstream os;
        os << "CFL violation: dt " << dt << " exceeds admissible " << 0.5 * h / qmax;
        throw simulation_error(os.str());
    }
    simd::flux_kernel(vf.data(), dv.data(), rho.a.data(), rR.data(), flux.data(), m, kFluxCq);
    roll_plus(flux, fluxL, n, ax);
    const double lam = dt / h;
    for (std::size_t i = 0; i < m; ++i) rho.a[i] -= lam * (flux[i] - fluxL[i]);
}

} // namespace

PdeState step_with_velocity(const PdeSystem& sys, const PdeState& st, const Gradient& v,
                            double dt) {
    PdeState out = st;
    sweep_axis(out.rho, v.x, 0, dt);
    sweep_axis(out.rho, v.y, 1, dt);

    if (sys.params.sigma > 0.0) {
        const Grid& g = sys.grid;
        if (sys.cached_dt != dt) {
            // exact semigroup of the five-point Laplacian: its kernel is a
            // stochastic matrix, so the stage preserves nonnegativity and mass
            // exactly (the continuum symbol rings when sqrt(2 sigma dt) < h)
            const double h = g.h();
            sys.diff_factor.resize(g.size());
            for (int i = 0; i < g.n; ++i) {
                double lx = (2.0 - 2.0 * std::cos(g.wavenumber(i) * h)) / (h * h);
                for (int j = 0; j < g.n; ++j) {
                    double ly = (2.0 - 2.0 * std::cos(g.wavenumber(j) * h)) / (h * h);
                    sys.diff_factor[std::size_t(i) * g.n + j] =
                        std::exp(-sys.params.sigma * (lx + ly) * dt);
                }
            }
            sys.cached_dt = dt;
        }
        auto rh = fft2(out.rho);
        simd::multiplier_apply(rh.data(), sys.diff_factor.data(), rh.size());
        out.rho = ifft2_real(g, rh);
    }
    out.t = st.t + dt;
    return out;
}

PdeState step(const PdeSystem& sys, const PdeState& st, double dt) {
    return step_with_velocity(sys, st, velocity(sys, st.rho), dt);
}

DiagnosticsRecord diagnostics(const PdeSystem& sys, const PdeState& st) {
    const Grid& g = sys.grid;
    const double cell = g.h() * g.h();
    DiagnosticsRecord r;
    r.t = st.t;
    r.mass = mass(st.rho);
    r.linf = norm_linf(st.rho);
    r.l2 = norm_lp(st.rho, 2.0);

    if (sys.kind != PdeKind::Limit) {
        std::vector<double> ent(st.rho.a.size());
        for (std::size_t i = 0; i < ent.size(); ++i)
            ent[i] = sys.table.entropy(st.rho.a[i]);
        r.entropy = simd::reduce_sum(ent.data(), ent.size()) * cell;

        Field sq(g);
        for (std::size_t i = 0; i < sq.a.size(); ++i)
            sq.a[i] = std::sqrt(std::max(0.0, st.rho.a[i]));
        Gradient gs = gradient(sq);
        std::vector<double> dv(sq.a.size());
        for (std::size_t i = 0; i < dv.size(); ++i)
            dv[i] = sys.table.deriv(st.rho.a[i]) *
                    (gs.x.a[i] * gs.x.a[i] + gs.y.a[i] * gs.y.a[i]);
        r.dissipation_visc =
            4.0 * sys.params.sigma * simd::reduce_sum(dv.data(), dv.size()) * cell;

        Field frho(g);
        for (std::size_t i = 0; i < frho.a.size(); ++i) frho.a[i] = sys.f_of(st.rho.a[i]);
        double semi = h_seminorm(frho, 1.0 - sys.params.s);
        r.dissipation_frac = semi * semi;
    }

    std::vector<double> mom(st.rho.a.size());
    const double mexp = sys.params.m_moment();
    for (int i = 0; i < g.n; ++i) {
        double x = g.coord(i);
        for (int j = 0; j < g.n; ++j) {
            double rr = std::hypot(x, g.coord(j));
            mom[std::size_t(i) * g.n + j] = st.rho.at(i, j) * std::pow(rr, mexp);
        }
    }
    r.moment_m = simd::reduce_sum(mom.data(), mom.size()) * cell;
    return r;
}

EntropyAudit run_entropy_audit(const PdeSystem& sys, const Field& rho0, double horizon,
                               double dt,
                               const std::function<void(const PdeState&)>& on_state) {
    PdeState st{rho0, 0.0, sys.kind};
    EntropyAudit audit;
    DiagnosticsRecord d0 = diagnostics(sys, st);
    audit.trace.push_back(d0);
    audit.min_rho = min_value(rho0);
    audit.linf_max = d0.linf;
    audit.moment_max = d0.moment_m;
    if (on_state) on_state(st);

    const long nst = std::lround(horizon / dt);
    double diss_int = 0.0;
    for (long k = 0; k < nst; ++k) {
        const DiagnosticsRecord& prev = audit.trace.back();
        st = step(sys, st, dt);
        DiagnosticsRecord d = diagnostics(sys, st);
        d.energy_l2_rate = (d.l2 * d.l2 - prev.l2 * prev.l2) / dt;
        diss_int += 0.5 * dt *
                    (prev.dissipation_visc + prev.dissipation_frac + d.dissipation_visc +
                     d.dissipation_frac);
        if (d.l2 > prev.l2 + 1e-10) audit.l2_monotone = false;
        audit.min_rho = std::min(audit.min_rho, min_value(st.rho));
        audit.linf_max = std::max(audit.linf_max, d.linf);
        audit.moment_max = std::max(audit.moment_max, d.moment_m);
        audit.trace.push_back(d);
        if (on_state) on_state(st);
    }

    audit.entropy_slack = audit.trace.back().entropy + diss_int - d0.entropy;
    double m0 = d0.mass, worst = 0.0;
    for (const auto& d : audit.trace) worst = std::max(worst, std::abs(d.mass - m0));
    audit.mass_drift_rel = m0 != 0.0 ? worst / std::abs(m0) : worst;
    return audit;
}

std::vector<Field> weak_probe_battery(const Grid& g) {
    std::vector<Field> phis;
    auto add = [&](auto&& fn) {
        Field f(g);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) f.at(i, j) = fn(g.coord(i), g.coord(j));
        phis.push_back(std::move(f));
    };
    const double w = M_PI / g.L;
    add([&](double x, double y) { return std::cos(w * x) * std::cos(w * y); });
    add([&](double x, double) { return std::sin(w * x); });
    add([&](double x, double y) { return std::sin(w * y) * std::cos(2.0 * w * x); });
    add([&](double x, double y) { return std::exp(-(x * x + y * y) / 4.0); });
    return phis;
}

SigmaContinuationReport sigma_continuation(const Field& rho0,
                                           const std::vector<double>& sigmas,
                                           double horizon, double dt, double s,
                                           double m_pow) {
    if (sigmas.size() < 2) throw config_error("sigma_continuation: need >= 2 sigmas");
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i)
        if (!(sigmas[i] > sigmas[i + 1] && sigmas[i + 1] > 0.0))
            throw config_error("sigma_continuation: sigmas must be strictly decreasing");
    if (m_pow != 1.0)
        throw config_error("sigma_continuation: only the linear nonlinearity is wired");

    const Grid& g = rho0.grid;
    SigmaContinuationReport rep;
    rep.sigmas = sigmas;

    std::vector<PdeSystem> systems;
    std::vector<PdeState> states;
    for (double sg : sigmas) {
        ProblemParams p;
        p.d = 2;
        p.s = s;
        p.sigma = sg;
        InitialDatum init = regularize_initial(rho0, sg);
        rep.kappas.push_back(init.kappa_sigma);
        rep.masses.push_back(mass(init.rho0_sigma));
        systems.push_back(make_macro_system(g, p));
        states.push_back({init.rho0_sigma, 0.0, PdeKind::Macro});
    }

    auto phis = weak_probe_battery(g);
    rep.weak_gaps.assign(sigmas.size() - 1, std::vector<double>(phis.size(), 0.0));
    const double cell = g.h() * g.h();

    auto update_weak = [&]() {
        for (std::size_t i = 0; i + 1 < states.size(); ++i) {
            for (std::size_t k = 0; k < phis.size(); ++k) {
                double acc = 0.0;
                for (std::size_t m = 0; m < phis[k].a.size(); ++m)
                    acc += (states[i].rho.a[m] - states[i + 1].rho.a[m]) * phis[k].a[m];
                rep.weak_gaps[i][k] =
                    std::max(rep.weak_gaps[i][k], std::abs(acc * cell));
            }
        }
    };

    update_weak();
    const long nst = std::lround(horizon / dt);
    for (long k = 0; k < nst; ++k) {
        for (std::size_t i = 0; i < states.size(); ++i)
            states[i] = step(systems[i], states[i], dt);
        update_weak();
    }

    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        Field diff(g);
        for (std::size_t m = 0; m < diff.a.size(); ++m)
            diff.a[m] = states[i].rho.a[m] - states[i + 1].rho.a[m];
        rep.l1_gaps.push_back(norm_lp(diff, 1.0));
    }
    for (auto& st : states) rep.finals.push_back(std::move(st.rho));
    return rep;
}

} // namespace fpmlab
