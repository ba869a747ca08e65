#include "fpmlab/chaos.hpp"

#include "fpmlab/rng.hpp"
#include "fpmlab/simd.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace fpmlab {

namespace {

constexpr long kRefCloudSize = 16384;
constexpr std::uint64_t kRefCloudSeed = 31415;  // reference draws from rho_ref
constexpr std::uint64_t kDirectionSeed = 4242;  // fixed slicing directions
constexpr int kDirections = 64;
constexpr int kPairBins = 16;

double max_pair_dist(const std::vector<double>& ax, const std::vector<double>& ay,
                     const std::vector<double>& bx, const std::vector<double>& by) {
    double m = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i)
        m = std::max(m, std::hypot(ax[i] - bx[i], ay[i] - by[i]));
    return m;
}

Drift gather_drift(const Gradient& v, const std::vector<double>& px,
                   const std::vector<double>& py) {
    return Drift{gather_bilinear(v.x, px, py), gather_bilinear(v.y, px, py)};
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    const double n = double(v.size());
    for (double x : v) r.mean += x;
    r.mean /= n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

// W1 between two sorted weighted samples: integral of |F_a - F_b|
double w1_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    const double wa = 1.0 / double(a.size());
    const double wb = 1.0 / double(b.size());
    std::size_t i = 0, j = 0;
    double fa = 0.0, fb = 0.0, acc = 0.0;
    double last = std::min(a.front(), b.front());
    while (i < a.size() || j < b.size()) {
        double x = std::numeric_limits<double>::infinity();
        if (i < a.size()) x = a[i];
        if (j < b.size()) x = std::min(x, b[j]);
        acc += std::abs(fa - fb) * (x - last);
        last = x;
        while (i < a.size() && a[i] == x) { fa += wa; ++i; }
        while (j < b.size() && b[j] == x) { fb += wb; ++j; }
    }
    return acc;
}

// piecewise-linear CDF of a marginal over node-centered cells; coordinates are
// shifted by h/2 so cells align with [coord(i), coord(i)+h) and the seam cell
// wraps cleanly
struct MarginalCdf {
    double L = 0.0, h = 0.0;
    int n = 0;
    std::vector<double> cum; // cum[i] = mass of cells 0..i, normalized

    double shift(double x) const {
        double y = x + 0.5 * h;
        if (y >= L) y -= 2.0 * L;
        return y;
    }
    double operator()(double x) const {
        const double t = (shift(x) + L) / h;
        int c = int(std::floor(t));
        c = std::min(std::max(c, 0), n - 1);
        const double frac = t - c;
        const double lo = c > 0 ? cum[c - 1] : 0.0;
        return lo + frac * (cum[c] - lo);
    }
};

MarginalCdf marginal_cdf(const Field& rho, int axis) {
    const Grid& g = rho.grid;
    MarginalCdf m;
    m.L = g.L;
    m.h = g.h();
    m.n = g.n;
    m.cum.assign(g.n, 0.0);
    double total = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double v = std::max(axis == 0 ? rho.at(i, j) : rho.at(j, i), 0.0);
            m.cum[i] += v;
            total += v;
        }
    if (!(total > 0.0)) throw simulation_error("reference density has no mass");
    double run = 0.0;
    for (int i = 0; i < g.n; ++i) {
        run += m.cum[i] / total;
        m.cum[i] = run;
    }
    return m;
}

double ks_stat(std::vector<double> sample, const MarginalCdf& ref) {
    for (double& x : sample) x = ref.shift(x);
    std::sort(sample.begin(), sample.end());
    const double n = double(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        // evaluate in unshifted coordinates: undo the shift the CDF applies
        const double f = ref((sample[i] - 0.5 * ref.h < -ref.L)
                                 ? sample[i] - 0.5 * ref.h + 2.0 * ref.L
                                 : sample[i] - 0.5 * ref.h);
        d = std::max(d, std::max(std::abs((double(i) + 1.0) / n - f),
                                 std::abs(f - double(i) / n)));
    }
    return d;
}

std::vector<std::pair<double, double>> slicing_directions() {
    std::vector<std::pair<double, double>> dirs(kDirections);
    for (int j = 0; j < kDirections; ++j) {
        const double th = 6.283185307179586476925286766559 *
                          uniform_quad(kDirectionSeed, 0, std::uint32_t(j), 0, 0).u[0];
        dirs[j] = {std::cos(th), std::sin(th)};
    }
    return dirs;
}

double sliced_w1_clouds(const Positions& a, const Positions& b) {
    const auto dirs = slicing_directions();
    std::vector<double> pa(a.x.size()), pb(b.x.size());
    double acc = 0.0;
    for (const auto& [cx, cy] : dirs) {
        for (std::size_t i = 0; i < a.x.size(); ++i) pa[i] = cx * a.x[i] + cy * a.y[i];
        for (std::size_t i = 0; i < b.x.size(); ++i) pb[i] = cx * b.x[i] + cy * b.y[i];
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        acc += w1_sorted(pa, pb);
    }
    return acc / double(kDirections);
}

double pair_defect_stat(const Positions& pts, double L) {
    const long n = long(pts.x.size());
    if (n < 2) throw config_error("pair statistics need at least two particles");
    const int B = kPairBins;
    const double bw = 2.0 * L / B;
    std::vector<double> c(std::size_t(B) * B, 0.0);
    for (long i = 0; i < n; ++i) {
        int bx = int(std::floor((pts.x[std::size_t(i)] + L) / bw));
        int by = int(std::floor((pts.y[std::size_t(i)] + L) / bw));
        bx = std::min(std::max(bx, 0), B - 1);
        by = std::min(std::max(by, 0), B - 1);
        c[std::size_t(bx) * B + by] += 1.0;
    }
    // pair histogram over distinct pairs vs product of the empirical
    // 1-marginals; c_a c_b - delta_ab c_a counts the ordered distinct pairs
    const double no = double(n) * double(n - 1);
    const double nn = double(n) * double(n);
    double defect = 0.0;
    for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = 0; b < c.size(); ++b) {
            const double pairs = c[a] * c[b] - (a == b ? c[a] : 0.0);
            defect += std::abs(pairs / no - c[a] * c[b] / nn);
        }
    return defect;
}

} // namespace

double Schedule::beta_of_n(long n) const {
    return std::pow(eps * std::log(double(n)), -1.0 / double(3 * d + 7));
}

double Schedule::zeta_of_n(long n) const {
    return std::pow(c1 * std::pow(double(n), 0.25), -1.0 / (2.0 * s + 1.0));
}

Schedule make_schedule(std::vector<long> n_values, double eps, double c1, double s,
                       int d) {
    if (n_values.empty()) throw config_error("schedule needs at least one N");
    for (long n : n_values)
        if (n < 2) throw config_error("schedule N values must be >= 2");
    if (!(eps > 0.0) || !(c1 > 0.0))
        throw config_error("schedule constants eps, c1 must be positive");
    if (!(s > 0.0 && s < 1.0) || d < 1) throw config_error("schedule needs 0<s<1, d>=1");
    Schedule sc;
    sc.n_values = std::move(n_values);
    sc.eps = eps;
    sc.c1 = c1;
    sc.s = s;
    sc.d = d;
    return sc;
}

Schedule schedule_from_anchor(std::vector<long> n_values, long n_anchor,
                              double beta_anchor, double zeta_anchor, double s, int d) {
    if (n_anchor < 2 || !(beta_anchor > 0.0) || !(zeta_anchor > 0.0))
        throw config_error("schedule anchor needs N >= 2 and positive beta, zeta");
    const double eps =
        std::pow(beta_anchor, -double(3 * d + 7)) / std::log(double(n_anchor));
    const double c1 =
        std::pow(zeta_anchor, -(2.0 * s + 1.0)) / std::pow(double(n_anchor), 0.25);
    return make_schedule(std::move(n_values), eps, c1, s, d);
}

void validate_schedule_point(const Schedule& sched, long n, double beta, double zeta) {
    if (n < 2) throw config_error("schedule point needs N >= 2");
    const double beta_bound = sched.eps * std::log(double(n));
    const double zeta_bound = sched.c1 * std::pow(double(n), 0.25);
    const double bpow = std::pow(beta, -double(3 * sched.d + 7));
    const double zpow = std::pow(zeta, -(2.0 * sched.s + 1.0));
    const double slack = 1.0 + 1e-9;
    if (!(bpow <= beta_bound * slack)) {
        std::ostringstream os;
        os << "schedule violation: beta=" << beta << " gives beta^-(3d+7)=" << bpow
           << " > eps log N = " << beta_bound;
        throw config_error(os.str());
    }
    if (!(zpow <= zeta_bound * slack)) {
        std::ostringstream os;
        os << "schedule violation: zeta=" << zeta << " gives zeta^-(2s+1)=" << zpow
           << " > c1 N^{1/4} = " << zeta_bound;
        throw config_error(os.str());
    }
}

ErrorFunctionals measure_errors(const ChaosConfig& cfg) {
    if (cfg.replicas < 4)
        throw config_error("replica averaging needs at least 4 replicas");
    if (!(cfg.horizon > 0.0) || !(cfg.dt > 0.0))
        throw config_error("measure_errors needs positive horizon and dt");
    if (!(cfg.rho0_sigma.grid == cfg.grid))
        throw config_error("datum grid does not match the configured grid");
    cfg.params.validate();
    const long steps = std::lround(cfg.horizon / cfg.dt);
    if (steps < 1 || std::abs(double(steps) * cfg.dt - cfg.horizon) >
                         1e-9 * std::max(1.0, cfg.horizon))
        throw config_error("horizon must be an integer number of dt steps");

    // deterministic lockstep PDE trajectories, shared by every replica
    const bool needs_inter = cfg.coupling != CouplingMode::ForcedEqualDrifts;
    PdeSystem msys = make_macro_system(cfg.grid, cfg.params);
    PdeSystem isys;
    if (needs_inter) isys = make_intermediate_system(cfg.grid, cfg.params);

    std::vector<Gradient> iv(needs_inter ? steps : 0), mv(steps);
    {
        PdeState sb{cfg.rho0_sigma, 0.0, PdeKind::Intermediate};
        PdeState sh{cfg.rho0_sigma, 0.0, PdeKind::Macro};
        for (long k = 0; k < steps; ++k) {
            mv[std::size_t(k)] = velocity(msys, sh.rho);
            sh = step_with_velocity(msys, sh, mv[std::size_t(k)], cfg.dt);
            if (needs_inter) {
                iv[std::size_t(k)] = velocity(isys, sb.rho);
                sb = step_with_velocity(isys, sb, iv[std::size_t(k)], cfg.dt);
            }
        }
    }

    const int R = cfg.replicas;
    const std::size_t ns = std::size_t(steps);
    const std::size_t nr = std::size_t(R);
    std::vector<std::vector<double>> s1(nr), s2(nr), st(nr);
    std::vector<Positions> finals(nr);
    std::vector<std::exception_ptr> errors(nr);

    auto run_replica = [&](int r) {
        CoupledEnsemble e = make_ensemble(cfg.rho0_sigma, cfg.params.n_particles,
                                          RngSpec{cfg.seed, std::uint32_t(r)});
        const DriftMode mode{cfg.variant, cfg.grid};
        auto& a1 = s1[std::size_t(r)];
        auto& a2 = s2[std::size_t(r)];
        auto& at = st[std::size_t(r)];
        a1.assign(ns, 0.0);
        a2.assign(ns, 0.0);
        at.assign(ns, 0.0);
        double r1 = 0.0, r2 = 0.0, rt = 0.0;
        for (long k = 0; k < steps; ++k) {
            Drift dm, db, dh;
            switch (cfg.coupling) {
            case CouplingMode::Standard:
                dm = drift_micro(isys, e, mode);
                db = gather_drift(iv[std::size_t(k)], e.inter_x, e.inter_y);
                dh = gather_drift(mv[std::size_t(k)], e.macro_x, e.macro_y);
                break;
            case CouplingMode::ForcedEqualDrifts:
                dm = gather_drift(mv[std::size_t(k)], e.micro_x, e.micro_y);
                db = dm;
                dh = dm;
                break;
            case CouplingMode::DensityOnly:
                // micro cloned onto the intermediate drift: isolates E2
                db = gather_drift(iv[std::size_t(k)], e.inter_x, e.inter_y);
                dm = gather_drift(iv[std::size_t(k)], e.micro_x, e.micro_y);
                dh = gather_drift(mv[std::size_t(k)], e.macro_x, e.macro_y);
                break;
            }
            em_step(e, dm, db, dh, cfg.dt, cfg.params.sigma);
            r1 = std::max(r1, max_pair_dist(e.micro_x, e.micro_y, e.inter_x, e.inter_y));
            r2 = std::max(r2, max_pair_dist(e.inter_x, e.inter_y, e.macro_x, e.macro_y));
            rt = std::max(rt, max_pair_dist(e.micro_x, e.micro_y, e.macro_x, e.macro_y));
            a1[std::size_t(k)] = r1;
            a2[std::size_t(k)] = r2;
            at[std::size_t(k)] = rt;
        }
        finals[std::size_t(r)] = Positions{e.micro_x, e.micro_y};
    };

    const int workers = std::max(1, std::min(cfg.threads, R));
    if (workers == 1) {
        for (int r = 0; r < R; ++r) {
            try {
                run_replica(r);
            } catch (...) {
                errors[std::size_t(r)] = std::current_exception();
            }
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int r = w; r < R; r += workers) {
                    try {
                        run_replica(r);
                    } catch (...) {
                        errors[std::size_t(r)] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (int r = 0; r < R; ++r)
        if (errors[std::size_t(r)]) std::rethrow_exception(errors[std::size_t(r)]);

    // deterministic fold in replica order
    ErrorFunctionals out;
    out.replicas = R;
    out.times.resize(ns);
    out.e1.assign(ns, 0.0);
    out.e2.assign(ns, 0.0);
    out.e_total.assign(ns, 0.0);
    for (std::size_t k = 0; k < ns; ++k) out.times[k] = double(k + 1) * cfg.dt;
    for (int r = 0; r < R; ++r)
        for (std::size_t k = 0; k < ns; ++k) {
            out.e1[k] += s1[std::size_t(r)][k];
            out.e2[k] += s2[std::size_t(r)][k];
            out.e_total[k] += st[std::size_t(r)][k];
        }
    for (std::size_t k = 0; k < ns; ++k) {
        out.e1[k] /= R;
        out.e2[k] /= R;
        out.e_total[k] /= R;
    }
    out.e1_rep.resize(std::size_t(R));
    out.e2_rep.resize(std::size_t(R));
    out.e_total_rep.resize(std::size_t(R));
    for (int r = 0; r < R; ++r) {
        out.e1_rep[std::size_t(r)] = s1[std::size_t(r)].back();
        out.e2_rep[std::size_t(r)] = s2[std::size_t(r)].back();
        out.e_total_rep[std::size_t(r)] = st[std::size_t(r)].back();
    }
    const MeanSe m1 = mean_se(out.e1_rep), m2 = mean_se(out.e2_rep),
                 mt = mean_se(out.e_total_rep);
    out.e1_mean = m1.mean;
    out.e1_se = m1.se;
    out.e2_mean = m2.mean;
    out.e2_se = m2.se;
    out.e_total_mean = mt.mean;
    out.e_total_se = mt.se;
    out.final_micro = std::move(finals);
    return out;
}

ChaosMetrics chaos_metrics(const Positions& pts, const Field& rho_ref, int k) {
    if (pts.x.empty() || pts.x.size() != pts.y.size())
        throw config_error("chaos metrics need nonempty matching coordinate arrays");
    if (k < 1 || k > 2)
        throw config_error("marginal order k > 2 unsupported (and k must be >= 1)");
    ChaosMetrics m;
    if (k == 1) {
        Positions ref =
            sample_initial(rho_ref, kRefCloudSize, RngSpec{kRefCloudSeed, 0});
        m.sliced_w1 = sliced_w1_clouds(pts, ref);
        m.ks_x = ks_stat(pts.x, marginal_cdf(rho_ref, 0));
        m.ks_y = ks_stat(pts.y, marginal_cdf(rho_ref, 1));
    } else {
        m.pair_defect = pair_defect_stat(pts, rho_ref.grid.L);
    }
    return m;
}

double iid_w1_floor(const Field& rho_ref, long n, int reps, std::uint64_t seed) {
    if (reps < 1) throw config_error("floor estimate needs reps >= 1");
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
        Positions p = sample_initial(rho_ref, n, RngSpec{seed, std::uint32_t(r)});
        acc += chaos_metrics(p, rho_ref, 1).sliced_w1;
    }
    return acc / reps;
}

double iid_defect_floor(const Field& rho_ref, long n, int reps, std::uint64_t seed) {
    if (reps < 1) throw config_error("floor estimate needs reps >= 1");
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
        Positions p = sample_initial(rho_ref, n, RngSpec{seed, std::uint32_t(r)});
        acc += chaos_metrics(p, rho_ref, 2).pair_defect;
    }
    return acc / reps;
}

RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw config_error("rate_fit needs matching arrays");
    const std::size_t n = xs.size();
    if (n < 3) throw config_error("rate_fit needs at least 3 points");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw config_error("rate_fit needs strictly positive values");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw config_error("rate_fit needs at least two distinct x");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (f.intercept + f.slope * lx[i]);
        rss += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    // 95% two-sided slope interval
    static const double tcrit[] = {12.706, 4.303, 3.182, 2.776, 2.571,
                                   2.447,  2.365, 2.306, 2.262, 2.228};
    const std::size_t df = n - 2;
    const double t = df <= 10 ? tcrit[df - 1] : 2.0;
    f.slope_halfwidth = df > 0 ? t * std::sqrt(rss / double(df) / sxx) : 0.0;
    return f;
}

} // namespace fpmlab
