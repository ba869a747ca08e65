#include "fpmlab/particles.hpp"

#include "fpmlab/fft.hpp"
#include "fpmlab/simd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fpmlab {

namespace {

// step tag for the initial draws, outside the range of dynamic step indices
constexpr std::uint32_t kSampleStep = 0xFFFFFFFFu;

inline int wrap_index(int i, int n) {
    if (i >= n) i -= n;
    if (i < 0) i += n;
    return i;
}

void check_inside_box(const std::vector<double>& px, const std::vector<double>& py,
                      double L, const char* stage) {
    const double mx = std::max(simd::reduce_max_abs(px.data(), px.size()),
                               simd::reduce_max_abs(py.data(), py.size()));
    if (!(mx <= L)) {
        std::size_t bad = 0;
        for (std::size_t i = 0; i < px.size(); ++i)
            if (std::abs(px[i]) > L || std::abs(py[i]) > L) { bad = i; break; }
        std::ostringstream os;
        os << stage << ": particle " << bad << " escaped the box (|x| > " << L
           << "); enlarge the box or shorten the horizon";
        throw simulation_error(os.str());
    }
}

// add (sign) * W_beta(. - (x,y)) / nprt to the field, exact nodal values
void deposit_one(Field& f, double x, double y, double beta, double sign_over_n,
                 std::vector<double>& tbuf, std::vector<double>& wbuf,
                 std::vector<double>& dy2, std::vector<int>& col) {
    const Grid& g = f.grid;
    const int n = g.n;
    const double h = g.h();
    const double inv_b2 = 1.0 / (beta * beta);
    const double scale = sign_over_n * bump_norm_const(2) * inv_b2;
    const int nb = int(std::ceil(beta / h));
    const int m = 2 * nb + 2;
    tbuf.resize(m);
    wbuf.resize(m);
    dy2.resize(m);
    col.resize(m);

    const double ax = (x + g.L) / h;
    const double ay = (y + g.L) / h;
    const int i0 = int(std::floor(ax));
    const int j0 = int(std::floor(ay));
    const double fx = (ax - i0) * h; // offset of the particle inside its cell
    const double fy = (ay - j0) * h;

    for (int k = 0; k < m; ++k) {
        const double dy = (k - nb) * h - fy;
        dy2[k] = dy * dy;
        col[k] = wrap_index(wrap_index(j0 + k - nb, n), n);
    }
    for (int oi = -nb; oi <= nb + 1; ++oi) {
        const double dx = oi * h - fx;
        const double dx2 = dx * dx;
        for (int k = 0; k < m; ++k) tbuf[k] = (dx2 + dy2[k]) * inv_b2;
        simd::bump_eval(tbuf.data(), wbuf.data(), std::size_t(m));
        double* row = f.a.data() + std::size_t(wrap_index(wrap_index(i0 + oi, n), n)) * n;
        for (int k = 0; k < m; ++k) row[col[k]] += scale * wbuf[k];
    }
}

double bilerp(const Field& f, double x, double y) {
    const Grid& g = f.grid;
    const int n = g.n;
    const double ax = (x + g.L) / g.h();
    const double ay = (y + g.L) / g.h();
    const int i0 = int(std::floor(ax));
    const int j0 = int(std::floor(ay));
    const double fx = ax - i0;
    const double fy = ay - j0;
    const int i0w = wrap_index(wrap_index(i0, n), n);
    const int j0w = wrap_index(wrap_index(j0, n), n);
    const int i1 = wrap_index(i0w + 1, n);
    const int j1 = wrap_index(j0w + 1, n);
    return (1.0 - fx) * ((1.0 - fy) * f.at(i0w, j0w) + fy * f.at(i0w, j1)) +
           fx * ((1.0 - fy) * f.at(i1, j0w) + fy * f.at(i1, j1));
}

Drift gather_field(const Gradient& v, const std::vector<double>& px,
                   const std::vector<double>& py) {
    Drift d;
    d.x.resize(px.size());
    d.y.resize(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        d.x[i] = bilerp(v.x, px[i], py[i]);
        d.y[i] = bilerp(v.y, px[i], py[i]);
    }
    return d;
}

} // namespace

Positions sample_initial(const Field& datum, long n, const RngSpec& rng) {
    const Grid& g = datum.grid;
    const std::size_t cells = datum.a.size();

    // serpentine sweep: row i left to right, then right to left, so that
    // consecutive cells in the CDF ordering are spatial neighbors
    std::vector<double> cum(cells);
    double total = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const int jj = (i % 2 == 0) ? j : g.n - 1 - j;
            total += std::max(datum.at(i, jj), 0.0);
            cum[std::size_t(i) * g.n + j] = total;
        }
    }
    if (!(total > 0.0)) throw simulation_error("sampling datum has no mass");

    Positions p;
    p.x.resize(std::size_t(n));
    p.y.resize(std::size_t(n));
    const double h = g.h();
    for (long k = 0; k < n; ++k) {
        const UniformQuad u =
            uniform_quad(rng.seed, rng.replica, std::uint32_t(k), kSampleStep, 0);
        const double target = std::min(u.u[0] * total, total);
        const std::size_t ord =
            std::size_t(std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
        const int i = int(ord / g.n);
        const int jraw = int(ord % g.n);
        const int j = (i % 2 == 0) ? jraw : g.n - 1 - jraw;
        // node-centered cell; boundary cells wrap around the torus seam
        double x = g.coord(i) + (u.u[1] - 0.5) * h;
        double y = g.coord(j) + (u.u[2] - 0.5) * h;
        if (x < -g.L) x += 2.0 * g.L;
        if (y < -g.L) y += 2.0 * g.L;
        p.x[std::size_t(k)] = x;
        p.y[std::size_t(k)] = y;
    }
    return p;
}

CoupledEnsemble make_ensemble(const Field& datum, long n, const RngSpec& rng) {
    if (n < 1) throw config_error("ensemble needs at least one particle");
    CoupledEnsemble e;
    e.n = n;
    e.rng = rng;
    e.box_half = datum.grid.L;
    Positions p = sample_initial(datum, n, rng);
    e.micro_x = p.x;
    e.micro_y = p.y;
    e.inter_x = p.x;
    e.inter_y = p.y;
    e.macro_x = p.x;
    e.macro_y = p.y;
    return e;
}

Field deposit_kde(const Grid& g, const std::vector<double>& px,
                  const std::vector<double>& py, double beta) {
    if (px.size() != py.size() || px.empty())
        throw config_error("deposit needs matching nonempty coordinate arrays");
    if (!(beta >= 2.0 * g.h())) {
        std::ostringstream os;
        os << "KDE bandwidth beta=" << beta << " under-resolved: needs beta >= 2h = "
           << 2.0 * g.h();
        throw config_error(os.str());
    }
    check_inside_box(px, py, g.L, "deposit");
    Field f(g);
    std::vector<double> tbuf, wbuf, dy2;
    std::vector<int> col;
    const double inv_n = 1.0 / double(px.size());
    for (std::size_t p = 0; p < px.size(); ++p)
        deposit_one(f, px[p], py[p], beta, inv_n, tbuf, wbuf, dy2, col);
    return f;
}

Drift drift_micro(const PdeSystem& sys, const std::vector<double>& px,
                  const std::vector<double>& py, const DriftMode& mode) {
    if (sys.kind != PdeKind::Intermediate)
        throw config_error("micro drift needs an intermediate system (K_zeta, beta)");
    if (!(mode.grid == sys.grid))
        throw config_error("drift mode grid does not match the system grid");
    const Grid& g = sys.grid;
    Field kde = deposit_kde(g, px, py, sys.params.beta);

    if (mode.variant == DriftVariant::SharedField) {
        Field fk(g);
        for (std::size_t i = 0; i < fk.a.size(); ++i) fk.a[i] = sys.table.eval(kde.a[i]);
        return gather_field(neg_grad_kernel_conv(sys, fk), px, py);
    }

    // oracle path: per particle, remove its own deposit and redo the
    // nonlinearity and the convolution
    Drift d;
    d.x.resize(px.size());
    d.y.resize(px.size());
    std::vector<double> tbuf, wbuf, dy2;
    std::vector<int> col;
    const double inv_n = 1.0 / double(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        Field own = kde;
        deposit_one(own, px[i], py[i], sys.params.beta, -inv_n, tbuf, wbuf, dy2, col);
        Field fk(g);
        for (std::size_t k = 0; k < fk.a.size(); ++k) fk.a[k] = sys.table.eval(own.a[k]);
        Gradient v = neg_grad_kernel_conv(sys, fk);
        d.x[i] = bilerp(v.x, px[i], py[i]);
        d.y[i] = bilerp(v.y, px[i], py[i]);
    }
    return d;
}

Drift drift_micro(const PdeSystem& sys, const CoupledEnsemble& e, const DriftMode& mode) {
    return drift_micro(sys, e.micro_x, e.micro_y, mode);
}

Drift drift_from_density(const PdeSystem& sys, const PdeState& state,
                         double ensemble_time, double dt,
                         const std::vector<double>& px, const std::vector<double>& py) {
    if (!(state.rho.grid == sys.grid))
        throw config_error("density grid does not match the system grid");
    if (std::abs(state.t - ensemble_time) > 0.5 * dt) {
        std::ostringstream os;
        os << "stale density: field at t=" << state.t << " vs ensemble t="
           << ensemble_time << " (tolerance dt/2 = " << 0.5 * dt << ")";
        throw simulation_error(os.str());
    }
    return gather_field(velocity(sys, state.rho), px, py);
}

void em_step(CoupledEnsemble& e, const Drift& micro, const Drift& inter,
             const Drift& macro, double dt, double sigma) {
    if (!(dt > 0.0)) throw config_error("em_step needs dt > 0");
    const std::size_t n = std::size_t(e.n);
    if (micro.x.size() != n || inter.x.size() != n || macro.x.size() != n)
        throw config_error("drift arrays do not match the ensemble size");

    std::vector<double> gx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const GaussianPair gp =
            gaussian_pair(e.rng.seed, e.rng.replica, std::uint32_t(i), e.step, 0);
        gx[i] = gp.g0;
        gy[i] = gp.g1;
    }
    const double amp = std::sqrt(2.0 * sigma * dt);
    simd::em_update(e.micro_x.data(), micro.x.data(), gx.data(), n, dt, amp);
    simd::em_update(e.micro_y.data(), micro.y.data(), gy.data(), n, dt, amp);
    simd::em_update(e.inter_x.data(), inter.x.data(), gx.data(), n, dt, amp);
    simd::em_update(e.inter_y.data(), inter.y.data(), gy.data(), n, dt, amp);
    simd::em_update(e.macro_x.data(), macro.x.data(), gx.data(), n, dt, amp);
    simd::em_update(e.macro_y.data(), macro.y.data(), gy.data(), n, dt, amp);
    e.step += 1;
    e.t += dt;

    check_inside_box(e.micro_x, e.micro_y, e.box_half, "em_step (micro)");
    check_inside_box(e.inter_x, e.inter_y, e.box_half, "em_step (intermediate)");
    check_inside_box(e.macro_x, e.macro_y, e.box_half, "em_step (macro)");
}

std::vector<double> gather_bilinear(const Field& f, const std::vector<double>& px,
                                    const std::vector<double>& py) {
    std::vector<double> out(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) out[i] = bilerp(f, px[i], py[i]);
    return out;
}

} // namespace fpmlab
