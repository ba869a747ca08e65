#pragma once

#include "fpmlab/fft.hpp"
#include "fpmlab/grid.hpp"
#include "fpmlab/kernels.hpp"
#include "fpmlab/spectral.hpp"

#include <functional>
#include <vector>

namespace fpmlab {

enum class PdeKind { Macro, Intermediate, Limit };

struct PdeState {
    Field rho;
    double t = 0.0;
    PdeKind which = PdeKind::Macro;
};

// immutable per-run context: params, smoothed nonlinearity, and (for the
// intermediate equation) the regularized kernel and interaction mollifier
struct PdeSystem {
    Grid grid;
    ProblemParams params;
    PdeKind kind = PdeKind::Macro;
    NonlinearityTable table;              // empty for Limit runs
    std::function<double(double)> f_raw;  // used by Limit runs only
    std::vector<cplx> kz_hat;             // fft(K_zeta) * h^2 (Intermediate)
    std::vector<cplx> wb_hat;             // fft(W_beta) * h^2 (Intermediate)
    bool kernel_wrap_truncated = false;

    double f_of(double u) const {
        return kind == PdeKind::Limit ? f_raw(u) : table.eval(u);
    }

    // mutable single-thread diffusion-factor cache keyed by dt
    mutable double cached_dt = -1.0;
    mutable std::vector<double> diff_factor;
};

PdeSystem make_macro_system(const Grid& g, const ProblemParams& p, double m_pow = 1.0);
PdeSystem make_macro_system(const Grid& g, const ProblemParams& p,
                            const std::function<double(double)>& f_prime);
PdeSystem make_intermediate_system(const Grid& g, const ProblemParams& p,
                                   KernelBase base = KernelBase::Torus,
                                   double m_pow = 1.0);
PdeSystem make_intermediate_system(const Grid& g, const ProblemParams& p,
                                   const std::function<double(double)>& f_prime,
                                   KernelBase base = KernelBase::Torus);
PdeSystem make_limit_system(const Grid& g, const ProblemParams& p, double m_pow);

// transport velocity of the configured equation
Gradient velocity(const PdeSystem& sys, const Field& rho);

// -grad K_zeta * fld, the interaction stage shared by the intermediate
// equation and the particle drifts (requires kz_hat, i.e. an intermediate
// system)
Gradient neg_grad_kernel_conv(const PdeSystem& sys, const Field& fld);

// one step: dimension-split conservative flux transport, then exact spectral
// diffusion; throws simulation_error carrying the admissible dt on CFL failure
PdeState step(const PdeSystem& sys, const PdeState& st, double dt);
PdeState step_with_velocity(const PdeSystem& sys, const PdeState& st,
                            const Gradient& v, double dt);

struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;
    double linf = 0.0;
    double l2 = 0.0;
    double entropy = 0.0;
    double dissipation_visc = 0.0; // 4 sigma int f'(rho) |grad sqrt(rho)|^2
    double dissipation_frac = 0.0; // homogeneous H^{1-s} seminorm^2 of f(rho)
    double moment_m = 0.0;
    double energy_l2_rate = 0.0; // filled by the audit loop
};

DiagnosticsRecord diagnostics(const PdeSystem& sys, const PdeState& st);

struct EntropyAudit {
    std::vector<DiagnosticsRecord> trace;
    double entropy_slack = 0.0; // H(T) + int dissipation dt - H(0)
    double mass_drift_rel = 0.0;
    double min_rho = 0.0;
    double linf_max = 0.0;
    bool l2_monotone = true; // per-step, 1e-10 slack
    double moment_max = 0.0;
};

EntropyAudit run_entropy_audit(const PdeSystem& sys, const Field& rho0, double horizon,
                               double dt,
                               const std::function<void(const PdeState&)>& on_state = {});

struct SigmaContinuationReport {
    std::vector<double> sigmas;
    std::vector<double> kappas;
    std::vector<double> masses;
    std::vector<Field> finals;
    std::vector<double> l1_gaps; // ||rho_i(T) - rho_{i+1}(T)||_1, consecutive
    // sup_t |int (rho_i - rho_{i+1}) phi| per consecutive pair and probe
    std::vector<std::vector<double>> weak_gaps;
};

SigmaContinuationReport sigma_continuation(const Field& rho0,
                                           const std::vector<double>& sigmas,
                                           double horizon, double dt, double s,
                                           double m_pow);

// fixed battery of bounded test functions for the weak-convergence probes
std::vector<Field> weak_probe_battery(const Grid& g);

} // namespace fpmlab
