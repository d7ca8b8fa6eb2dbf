#pragma once

/// Experiment driver behind the command-line tool: run configuration with
/// full defaulting and strict validation, orchestration of the benchmark and
/// convergence studies, and artifact output (diagnostics CSV, snapshots,
/// checkpoints, metadata, optional gnuplot scripts). Every command writes a
/// metadata.json from which the run can be reproduced exactly.

#include <cstdint>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/harmonics.hpp"
#include "sphereflow/pde_ops.hpp"
#include "sphereflow/timestepping.hpp"

namespace sphereflow {

// Process exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;  // invalid configuration or inputs
inline constexpr int kExitBlowUp = 3;  // integration blew up (checkpoint written)
inline constexpr int kExitIo = 4;      // artifact write failure

// Node source: either a generator recipe or a points file (file wins when
// nonempty).
struct PointsConfig {
    PointKind kind = PointKind::fibonacci;
    int n = 400;
    std::uint64_t seed = 0;
    std::string file;
};

// none: no forcing. benchmark: gamma(t) times the degree-3 zonal
// divergence-free harmonic. manufactured: the forcing whose exact solution
// is amplitude(t) times the configured harmonic; "decay" uses the
// viscosity-matched exponential, "zero" the identically vanishing amplitude.
struct ForcingConfig {
    std::string kind = "benchmark"; // zero | benchmark | manufactured
    HarmonicIndex harmonic{1, 2};
    std::string amplitude = "decay"; // decay | zero (manufactured only)
};

struct InitialConfig {
    std::string kind = "zero"; // zero | harmonic
    HarmonicIndex harmonic{1, 2};
};

// Full description of one time-integration experiment. Defaults are the
// reduced-scale benchmark: 400 fibonacci nodes, the smoothest kernel family,
// nu = 1e-4, omega = 1, imex with tau = 1e-2 up to T = 60.
struct RunConfig {
    PointsConfig points;
    std::string kernel = "wendland4:eps=2";
    PhysicalParams params;
    SchemeConfig scheme{SchemeKind::imex_rk3, 1e-2, 60.0};
    ForcingConfig forcing;
    InitialConfig initial;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::vector<double> snapshot_times;
    int sample_every = 10;
    std::string system_mode = "automatic"; // automatic | dense | sparse
};

// Reads a config (or a metadata.json produced by a previous run) with full
// defaulting: absent keys keep their defaults, unknown keys are rejected.
// Throws FormatError on missing files, bad JSON, or unknown keys.
RunConfig load_run_config(const std::string& path);

// Serializes the fully resolved config plus the command name; the file loads
// back through load_run_config for exact reproduction.
void save_run_config(const std::string& path, const RunConfig& config,
                     const std::string& command);

// Throws std::domain_error on invalid values (nu/tau/T positive, known
// kinds, harmonic in table range, parseable kernel spec, existing points
// file, positive sizes).
void validate(const RunConfig& config);

// Builders shared by the commands (config must be validated).
PointSet build_points(const PointsConfig& config);
ForcingSpec build_forcing(const RunConfig& config);
SolverState build_state(const RunConfig& config);

// Least-squares slope of log(error) against log(h): the fitted convergence
// order of error ~ C h^p. Requires at least two points with positive
// entries; throws std::domain_error otherwise.
double fitted_order(const std::vector<double>& h, const std::vector<double>& error);

// Refinement study configuration shared by the interpolation and Helmholtz
// commands: interpolate (or Ritz-project) one harmonic target over a ladder
// of node counts and tabulate probe-grid errors against the fill distance.
struct ConvergenceConfig {
    std::string kernel = "wendland2:eps=2";
    char family = 'y'; // y: divergence-free target, z: curl-free target
    HarmonicIndex harmonic{3, 1};
    std::vector<int> sizes = {100, 200, 400, 800};
    PointKind points = PointKind::fibonacci;
    std::uint64_t seed = 0;
    int probe_count = 4000;
    std::string output_dir = "out";
    bool gnuplot = false;
};

// Manufactured-solution verification: a spatial refinement study at fixed
// small tau and a temporal refinement study at fixed n against a fine-step
// reference. The embedded run config supplies kernel, physics, scheme and
// the manufactured harmonic; its point count is the temporal-study size.
struct ManufacturedConfig {
    RunConfig base;
    std::vector<int> spatial_sizes = {100, 200, 400, 800};
    std::vector<double> temporal_taus = {1e-2, 5e-3, 2.5e-3};
    double reference_tau = 2.5e-3 / 8.0;
    int probe_count = 2000;

    ManufacturedConfig() {
        base.params.nu = 0.05;
        base.scheme = SchemeConfig{SchemeKind::imex_rk3, 1e-3, 0.5};
        base.forcing.kind = "manufactured";
        base.output_dir = "out_manufactured";
        base.sample_every = 100;
    }
};

// Same loading contract as load_run_config for the study configs (both also
// accept the metadata.json their commands write).
ConvergenceConfig load_convergence_config(const std::string& path);
ManufacturedConfig load_manufactured_config(const std::string& path);

void validate(const ConvergenceConfig& config);
void validate(const ManufacturedConfig& config);

// Generates (or loads) a node set, writes it in the text format, and prints
// a one-line summary with the fill-distance estimate and Riesz energy.
int cmd_pointgen(const PointsConfig& config, const std::string& out_path);

// Writes <output_dir>/interp_convergence.csv with one row per node count
// (n, h, max_error, l2_error over the probe grid) plus metadata.json with
// the fitted orders; a single-size ladder is flagged and carries no order.
int cmd_interp_convergence(const ConvergenceConfig& config);

// Same table for the Helmholtz Ritz projection of the target ('y' family
// only); writes helmholtz_convergence.csv.
int cmd_helmholtz_convergence(const ConvergenceConfig& config);

// Full time integration: writes metadata.json, diagnostics.csv, snapshots
// at the configured times, and a final checkpoint. A blow-up leaves the
// last finite state in checkpoint_blowup.json and returns kExitBlowUp.
int cmd_nse_run(const RunConfig& config, bool gnuplot);

// Spatial and temporal verification tables (spatial.csv, temporal.csv) for
// the manufactured solution, with fitted orders in metadata.json.
int cmd_nse_manufactured(const ManufacturedConfig& config, bool gnuplot);

// Continues a checkpointed run to its configured final time (or an override
// > 0), writing fresh artifacts into output_dir. The run context (forcing,
// sampling, snapshots) comes from the metadata.json written by the original
// run, found next to the checkpoint unless an explicit path is given.
int cmd_resume(const std::string& checkpoint_path, const std::string& config_path,
               const std::string& output_dir, double final_time_override,
               bool gnuplot);

} // namespace sphereflow
