#pragma once

#include "fpmlab/particles.hpp"
#include "fpmlab/pde.hpp"

#include <cstdint>
#include <vector>

namespace fpmlab {

// Running sup-in-time of the max-over-particles distances between the coupled
// systems, averaged over replicas. The series is sampled at `times`; the
// horizon means carry Monte-Carlo standard errors, and the per-replica horizon
// values are kept so callers can form paired differences across a common-
// random-number N sweep.
struct ErrorFunctionals {
    std::vector<double> times;
    std::vector<double> e1;      // mean over replicas of sup_t max_i |X - Xbar|
    std::vector<double> e2;      // same for |Xbar - Xhat|
    std::vector<double> e_total; // same for |X - Xhat|
    int replicas = 0;
    std::vector<double> e1_rep, e2_rep, e_total_rep; // horizon values, replica order
    double e1_mean = 0.0, e1_se = 0.0;
    double e2_mean = 0.0, e2_se = 0.0;
    double e_total_mean = 0.0, e_total_se = 0.0;
    std::vector<Positions> final_micro; // micro positions at the horizon, per replica
};

// beta(N) = (eps log N)^{-1/(3d+7)}, zeta(N) = (c1 N^{1/4})^{-1/(2s+1)}:
// both theorem constraints hold with equality by construction
struct Schedule {
    std::vector<long> n_values;
    double eps = 0.0;
    double c1 = 0.0;
    double s = 0.5;
    int d = 2;

    double beta_of_n(long n) const;
    double zeta_of_n(long n) const;
};

Schedule make_schedule(std::vector<long> n_values, double eps, double c1, double s,
                       int d);

// anchor form: pick (beta, zeta) at one N, solve for (eps, c1)
Schedule schedule_from_anchor(std::vector<long> n_values, long n_anchor,
                              double beta_anchor, double zeta_anchor, double s, int d);

// a (beta, zeta) pair violating either schedule constraint is an error
void validate_schedule_point(const Schedule& sched, long n, double beta, double zeta);

enum class CouplingMode {
    Standard,          // the three drifts of the coupled systems
    ForcedEqualDrifts, // all three driven by the macro field: exact-zero gaps
    // micro cloned onto the intermediate drift, so only the density-equation
    // gap E2 is exercised; reaches beta below the deposit resolution bound
    DensityOnly,
};

struct ChaosConfig {
    Grid grid;
    ProblemParams params; // d, s, sigma, beta, zeta, n_particles
    Field rho0_sigma;     // regularized datum: PDE initial state and sampling law
    double horizon = 0.25;
    double dt = 2e-3;
    std::uint64_t seed = 0;
    int replicas = 8;
    int threads = 1;
    DriftVariant variant = DriftVariant::SharedField;
    CouplingMode coupling = CouplingMode::Standard;
};

// `replicas` independent coupled simulations; both PDE states advance in
// lockstep once (they are deterministic and shared by every replica), the
// particle systems consume the per-step velocity fields. Aggregation is a
// deterministic fold in replica order at any thread count.
ErrorFunctionals measure_errors(const ChaosConfig& cfg);

struct ChaosMetrics {
    double sliced_w1 = 0.0;   // k=1: 64 fixed directions, sorted quantiles
    double ks_x = 0.0;        // k=1: per-axis Kolmogorov-Smirnov
    double ks_y = 0.0;
    double pair_defect = 0.0; // k=2: L1 factorization defect, 16 bins per axis
};

// distances between the empirical measure of the positions and rho_ref
// (normalized internally); k is the marginal order, k > 2 unsupported
ChaosMetrics chaos_metrics(const Positions& pts, const Field& rho_ref, int k);

// Monte-Carlo floors: the same statistics on fresh iid draws from rho_ref
double iid_w1_floor(const Field& rho_ref, long n, int reps, std::uint64_t seed);
double iid_defect_floor(const Field& rho_ref, long n, int reps, std::uint64_t seed);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_halfwidth = 0.0; // 95% two-sided
};

// least squares on (log x, log y); needs >= 3 strictly positive points
RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace fpmlab
