#pragma once

#include "fpmlab/grid.hpp"
#include "fpmlab/kernels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fpmlab {

// Per-subcommand sweep settings; unset lists fall back to the built-in
// defaults of the matching experiment.
struct SweepSpec {
    std::vector<double> betas;
    double zeta_fixed = 0.05;
    std::vector<double> zetas;
    double beta_fixed = 0.25;
    std::vector<long> n_values;
    long anchor_n = 256;
    double anchor_beta = 0.5;
    double anchor_zeta = 0.3;
    std::vector<double> sigmas;
};

struct ExperimentConfig {
    Grid grid{128, 8.0};
    ProblemParams params; // d=2, s=0.5, sigma=0.1, beta, zeta, n_particles
    double m_pow = 1.0;   // f(u) = u^m
    std::string f_table_path;

    std::string initial_kind = "gaussian"; // gaussian | double-bump | plateau
    double initial_width = 1.0;            // gaussian std dev / bump scale
    double initial_radius = 2.0;           // plateau inner radius
    double initial_ramp = 0.5;             // plateau ramp width
    double initial_sep = 3.0;              // double-bump center distance

    double horizon = 0.5;
    double dt = 2e-3;
    std::uint64_t seed = 1234;
    int replicas = 8;
    std::string equation = "macro"; // solve-pde: macro | intermediate
    std::vector<double> snapshot_times;
    std::string out_dir; // default output directory; the --out flag wins
    SweepSpec sweep;

    std::string text; // verbatim config (for the manifest)
};

// built-in default scenario
ExperimentConfig default_config();

// parse + validate a JSON config; messages name the violated invariant
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// canonical JSON rendering of the effective config
std::string render_config(const ExperimentConfig& cfg);

// the named closed-form initial data, normalized to unit mass on the grid
Field build_initial(const ExperimentConfig& cfg);

} // namespace fpmlab
