#pragma once

#include "fpmlab/grid.hpp"
#include "fpmlab/pde.hpp"
#include "fpmlab/rng.hpp"

#include <cstdint>
#include <vector>

namespace fpmlab {

// Counter-based stream identity. Every Gaussian increment and sampler draw is
// a pure function of (seed, replica, particle, step, slot): trajectories are
// bit-reproducible at any thread count and iteration order.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint32_t replica = 0;
};

// The three coupled systems. All share the initial draws and the per-step
// Gaussian increments; only the drifts differ. Coordinates are plain d=2
// positions in [-L, L).
struct CoupledEnsemble {
    long n = 0;
    std::vector<double> micro_x, micro_y;
    std::vector<double> inter_x, inter_y;
    std::vector<double> macro_x, macro_y;
    RngSpec rng;
    std::uint32_t step = 0;
    double t = 0.0;
    double box_half = 0.0;
};

enum class DriftVariant {
    // rebuild the field without particle i for every i; the O(N)-transform
    // oracle, practical for N <= 512
    ExactPerParticle,
    // one deposit including all particles; carries the O(1/(N beta^d))
    // self-interaction bias, which is measured against the oracle
    SharedField,
};

struct DriftMode {
    DriftVariant variant = DriftVariant::SharedField;
    Grid grid; // deposit / convolution grid
};

struct Positions {
    std::vector<double> x, y;
};

struct Drift {
    std::vector<double> x, y;
};

// N iid draws from the datum (normalized internally): inverse CDF along a
// serpentine sweep of the cells plus uniform jitter inside the node-centered
// cell. Draw k is keyed by (rng, particle k) alone, so the first N draws of a
// larger ensemble coincide with those of a smaller one: common random numbers
// across an N sweep. Throws on a datum without mass.
Positions sample_initial(const Field& datum, long n, const RngSpec& rng);

// sample once, copy into all three systems
CoupledEnsemble make_ensemble(const Field& datum, long n, const RngSpec& rng);

// KDE field (1/N) sum_j W_beta(. - X_j) by exact evaluation of W_beta at the
// grid nodes. Requires beta >= 2h (the deposit is under-resolved below that)
// and all positions inside the box.
Field deposit_kde(const Grid& g, const std::vector<double>& px,
                  const std::vector<double>& py, double beta);

// microscopic drift: -grad K_zeta * f_sigma(KDE), gathered at the particle
// positions. sys must be an intermediate system (it carries K_zeta, beta and
// the smoothed nonlinearity). The composition order is deposit, then f_sigma
// nodewise, then the spectral convolution, then the bilinear gather.
Drift drift_micro(const PdeSystem& sys, const std::vector<double>& px,
                  const std::vector<double>& py, const DriftMode& mode);
Drift drift_micro(const PdeSystem& sys, const CoupledEnsemble& e,
                  const DriftMode& mode);

// drift of the density-coupled systems: velocity(sys, rho) once on the grid,
// gathered bilinearly. Errors: grid mismatch; stale density (time tag differs
// from the ensemble time by more than dt/2).
Drift drift_from_density(const PdeSystem& sys, const PdeState& state,
                         double ensemble_time, double dt,
                         const std::vector<double>& px,
                         const std::vector<double>& py);

// Euler-Maruyama update x += v dt + sqrt(2 sigma dt) G with the identical
// Gaussian pair applied to particle i of all three systems; advances t and
// the step counter. A particle leaving the box is a hard error: the box must
// be sized so escapes cannot happen over the horizon.
void em_step(CoupledEnsemble& e, const Drift& micro, const Drift& inter,
             const Drift& macro, double dt, double sigma);

// bilinear interpolation of a nodal field at arbitrary points (periodic)
std::vector<double> gather_bilinear(const Field& f, const std::vector<double>& px,
                                    const std::vector<double>& py);

} // namespace fpmlab
