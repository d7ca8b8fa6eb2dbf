#include "sphereflow/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sphereflow/errors.hpp"
#include "sphereflow/fields.hpp"
#include "sphereflow/interpolation.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

namespace {

using nlohmann::json;

// ============================================================================
// JSON plumbing: strict keys, permissive defaults
// ============================================================================

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("config: " + path + ": " + e.what());
    }
    if (!j.is_object())
        throw FormatError("config: " + path + ": top level must be a JSON object");
    return j;
}

// Absent keys fall back to the caller's default; unknown keys are hard
// errors so that typos cannot silently run the default experiment.
void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw FormatError("config: unknown key \"" + it.key() + "\" in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const char* key, const T& fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: key \"") + key + "\": " + e.what());
    }
}

const json& sub_object(const json& obj, const char* key, const std::string& where) {
    const json& sub = obj.at(key);
    if (!sub.is_object())
        throw FormatError("config: \"" + std::string(key) + "\" in " + where +
                          " must be an object");
    return sub;
}

// The index constructor enforces degree/order consistency; surface its
// complaint as a config error.
HarmonicIndex read_harmonic(const json& obj, const HarmonicIndex& fallback) {
    int l = get_or(obj, "degree", fallback.l);
    int k = get_or(obj, "order_index", fallback.k);
    try {
        return HarmonicIndex(l, k);
    } catch (const std::domain_error& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
}

// Metadata files wrap the config as {"command": ..., "config": {...}} plus
// command-specific summary keys; loading descends into "config" so every
// metadata.json doubles as a config for an exact rerun.
const json& unwrap_config(const json& j) {
    if (!j.contains("config")) return j;
    if (!j.at("config").is_object())
        throw FormatError("config: \"config\" wrapper must be an object");
    return j.at("config");
}

SystemMode parse_system_mode(const std::string& name) {
    if (name == "automatic") return SystemMode::automatic;
    if (name == "dense") return SystemMode::dense;
    if (name == "sparse") return SystemMode::sparse;
    throw std::domain_error("unknown system mode: " + name);
}

// ============================================================================
// Config serialization (shared by save_run_config and the metadata writers)
// ============================================================================

json run_config_json(const RunConfig& rc) {
    json c;
    c["points"] = json{{"kind", point_kind_name(rc.points.kind)},
                       {"n", rc.points.n},
                       {"seed", rc.points.seed},
                       {"file", rc.points.file}};
    c["kernel"] = rc.kernel;
    c["nu"] = rc.params.nu;
    c["omega"] = rc.params.omega;
    c["include_convection"] = rc.params.include_convection;
    c["scheme"] = scheme_kind_name(rc.scheme.scheme);
    c["tau"] = rc.scheme.tau;
    c["final_time"] = rc.scheme.final_time;
    c["forcing"] = json{{"kind", rc.forcing.kind},
                        {"degree", rc.forcing.harmonic.l},
                        {"order_index", rc.forcing.harmonic.k},
                        {"amplitude", rc.forcing.amplitude}};
    c["initial"] = json{{"kind", rc.initial.kind},
                        {"degree", rc.initial.harmonic.l},
                        {"order_index", rc.initial.harmonic.k}};
    c["seed"] = rc.seed;
    c["output_dir"] = rc.output_dir;
    c["snapshot_times"] = rc.snapshot_times;
    c["sample_every"] = rc.sample_every;
    c["system_mode"] = rc.system_mode;
    return c;
}

json convergence_config_json(const ConvergenceConfig& cc) {
    return json{{"kernel", cc.kernel},
                {"family", std::string(1, cc.family)},
                {"degree", cc.harmonic.l},
                {"order_index", cc.harmonic.k},
                {"sizes", cc.sizes},
                {"points", point_kind_name(cc.points)},
                {"seed", cc.seed},
                {"probe_count", cc.probe_count},
                {"output_dir", cc.output_dir}};
}

json manufactured_config_json(const ManufacturedConfig& mc) {
    return json{{"run", run_config_json(mc.base)},
                {"spatial_sizes", mc.spatial_sizes},
                {"temporal_taus", mc.temporal_taus},
                {"reference_tau", mc.reference_tau},
                {"probe_count", mc.probe_count}};
}

RunConfig run_config_from_json(const json& c, RunConfig rc) {
    check_keys(c,
               {"points", "kernel", "nu", "omega", "include_convection", "scheme",
                "tau", "final_time", "forcing", "initial", "seed", "output_dir",
                "snapshot_times", "sample_every", "system_mode"},
               "run config");
    if (c.contains("points")) {
        const json& p = sub_object(c, "points", "run config");
        check_keys(p, {"kind", "n", "seed", "file"}, "points");
        std::string kind = get_or<std::string>(p, "kind", point_kind_name(rc.points.kind));
        try {
            rc.points.kind = parse_point_kind(kind);
        } catch (const std::domain_error& e) {
            throw FormatError(std::string("config: ") + e.what());
        }
        rc.points.n = get_or(p, "n", rc.points.n);
        rc.points.seed = get_or(p, "seed", rc.points.seed);
        rc.points.file = get_or(p, "file", rc.points.file);
    }
    rc.kernel = get_or(c, "kernel", rc.kernel);
    rc.params.nu = get_or(c, "nu", rc.params.nu);
    rc.params.omega = get_or(c, "omega", rc.params.omega);
    rc.params.include_convection =
        get_or(c, "include_convection", rc.params.include_convection);
    rc.scheme.scheme = parse_scheme_kind(
        get_or<std::string>(c, "scheme", scheme_kind_name(rc.scheme.scheme)));
    rc.scheme.tau = get_or(c, "tau", rc.scheme.tau);
    rc.scheme.final_time = get_or(c, "final_time", rc.scheme.final_time);
    if (c.contains("forcing")) {
        const json& f = sub_object(c, "forcing", "run config");
        check_keys(f, {"kind", "degree", "order_index", "amplitude"}, "forcing");
        rc.forcing.kind = get_or(f, "kind", rc.forcing.kind);
        rc.forcing.harmonic = read_harmonic(f, rc.forcing.harmonic);
        rc.forcing.amplitude = get_or(f, "amplitude", rc.forcing.amplitude);
    }
    if (c.contains("initial")) {
        const json& i = sub_object(c, "initial", "run config");
        check_keys(i, {"kind", "degree", "order_index"}, "initial");
        rc.initial.kind = get_or(i, "kind", rc.initial.kind);
        rc.initial.harmonic = read_harmonic(i, rc.initial.harmonic);
    }
    rc.seed = get_or(c, "seed", rc.seed);
    rc.output_dir = get_or(c, "output_dir", rc.output_dir);
    rc.snapshot_times = get_or(c, "snapshot_times", rc.snapshot_times);
    rc.sample_every = get_or(c, "sample_every", rc.sample_every);
    rc.system_mode = get_or(c, "system_mode", rc.system_mode);
    return rc;
}

ConvergenceConfig convergence_config_from_json(const json& c, ConvergenceConfig cc) {
    check_keys(c,
               {"kernel", "family", "degree", "order_index", "sizes", "points",
                "seed", "probe_count", "output_dir"},
               "convergence config");
    cc.kernel = get_or(c, "kernel", cc.kernel);
    std::string family = get_or<std::string>(c, "family", std::string(1, cc.family));
    if (family != "y" && family != "z")
        throw FormatError("config: family must be \"y\" or \"z\", got \"" + family + "\"");
    cc.family = family[0];
    cc.harmonic = read_harmonic(c, cc.harmonic);
    cc.sizes = get_or(c, "sizes", cc.sizes);
    try {
        cc.points = parse_point_kind(
            get_or<std::string>(c, "points", point_kind_name(cc.points)));
    } catch (const std::domain_error& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    cc.seed = get_or(c, "seed", cc.seed);
    cc.probe_count = get_or(c, "probe_count", cc.probe_count);
    cc.output_dir = get_or(c, "output_dir", cc.output_dir);
    return cc;
}

ManufacturedConfig manufactured_config_from_json(const json& c, ManufacturedConfig mc) {
    check_keys(c,
               {"run", "spatial_sizes", "temporal_taus", "reference_tau",
                "probe_count"},
               "manufactured config");
    if (c.contains("run"))
        mc.base = run_config_from_json(sub_object(c, "run", "manufactured config"),
                                       mc.base);
    mc.spatial_sizes = get_or(c, "spatial_sizes", mc.spatial_sizes);
    mc.temporal_taus = get_or(c, "temporal_taus", mc.temporal_taus);
    mc.reference_tau = get_or(c, "reference_tau", mc.reference_tau);
    mc.probe_count = get_or(c, "probe_count", mc.probe_count);
    return mc;
}

// ============================================================================
// Artifact helpers
// ============================================================================

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw FormatError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path);
    out << text;
    out.flush();
    if (!out) throw FormatError("write failed for " + path);
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string parent_dir(const std::string& path) {
    std::string dir = std::filesystem::path(path).parent_path().string();
    return dir.empty() ? std::string(".") : dir;
}

struct ProbeErrors {
    double max_error = 0.0;
    double l2_error = 0.0;
};

// Max and discrete L2 distance between an expansion and an exact field over
// a probe grid (pointwise evaluations are independent, so they parallelize).
ProbeErrors probe_errors(const KernelExpansion& e, const PointSet& probes,
                         const std::function<Vec3(const SpherePoint&)>& exact) {
    std::vector<double> err(probes.size());
    parallel_for(probes.size(), [&](std::size_t i) {
        err[i] = (evaluate(e, probes.points[i]) - exact(probes.points[i])).norm();
    });
    ProbeErrors out;
    for (double v : err) out.max_error = std::max(out.max_error, v);
    out.l2_error = discrete_l2_norm(err);
    return out;
}

// ============================================================================
// Gnuplot scripts (presentation only; nothing downstream parses them)
// ============================================================================

void write_gnuplot_convergence(const std::string& dir, const std::string& csv_name) {
    write_text_file(dir + "/plot_convergence.gp",
                    "# log-log probe errors against the fill distance\n"
                    "set datafile separator ','\n"
                    "set key autotitle columnhead\n"
                    "set logscale xy\n"
                    "set xlabel 'fill distance h'\n"
                    "set ylabel 'probe error'\n"
                    "plot '" + csv_name + "' using 2:3 with linespoints, \\\n"
                    "     '' using 2:4 with linespoints\n");
}

void write_gnuplot_diagnostics(const std::string& dir) {
    write_text_file(dir + "/plot_diagnostics.gp",
                    "# velocity and pressure norms over time\n"
                    "set datafile separator ','\n"
                    "set key autotitle columnhead\n"
                    "set xlabel 't'\n"
                    "set logscale y\n"
                    "plot 'diagnostics.csv' using 1:2 with lines, \\\n"
                    "     '' using 1:3 with lines\n");
}

void write_gnuplot_snapshot(const std::string& dir) {
    write_text_file(dir + "/plot_snapshot.gp",
                    "# velocity glyphs of one snapshot; usage:\n"
                    "#   gnuplot -p -c plot_snapshot.gp snapshot_t10.csv\n"
                    "set datafile separator ','\n"
                    "set key off\n"
                    "set view equal xyz\n"
                    "splot ARG1 skip 1 using 1:2:3:($4*0.3):($5*0.3):($6*0.3) "
                    "with vectors\n");
}

void write_gnuplot_temporal(const std::string& dir) {
    write_text_file(dir + "/plot_temporal.gp",
                    "# temporal errors against the step size, one curve per scheme\n"
                    "set datafile separator ','\n"
                    "set logscale xy\n"
                    "set xlabel 'tau'\n"
                    "set ylabel 'error vs reference'\n"
                    "plot 'temporal.csv' skip 1 "
                    "using (strcol(1) eq 'imex_rk3' ? $2 : NaN):3 "
                    "with linespoints title 'imex_rk3', \\\n"
                    "     '' skip 1 "
                    "using (strcol(1) eq 'semi_implicit_euler' ? $2 : NaN):3 "
                    "with linespoints title 'semi_implicit_euler'\n");
}

// ============================================================================
// Run orchestration shared by nse-run and resume
// ============================================================================

// Snapshot files carry nodal velocity plus recovered pressure; the blow-up
// checkpoint lands next to the other artifacts.
RunOptions artifact_options(const RunConfig& config, const std::string& out_dir,
                            const ForcingSpec& forcing) {
    RunOptions opts;
    opts.sample_every = config.sample_every;
    opts.snapshot_times = config.snapshot_times;
    opts.seed = config.seed;
    opts.blowup_checkpoint_path = out_dir + "/checkpoint_blowup.json";
    const PhysicalParams params = config.params;
    opts.on_snapshot = [out_dir, params, forcing](const SolverState& s, double t) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_t%g.csv", t);
        DiscreteRhs rhs = discrete_rhs(s.full_system(), s.velocity(), t, params, forcing);
        std::vector<double> p = pressure_at_nodes(rhs.beta, t);
        write_snapshot_csv(out_dir + "/" + name, *s.points_ptr(), s.nodal_velocity(), &p);
    };
    return opts;
}

// Integrates, writes diagnostics.csv and the final checkpoint, and prints a
// one-line summary. kExitBlowUp when the run left the finite range (the last
// finite state is already checkpointed by then), kExitIo on artifact
// failures; anything else propagates.
int integrate_and_report(SolverState& state, const RunConfig& config,
                         const SchemeConfig& scheme, const ForcingSpec& forcing,
                         const std::string& out_dir, bool gnuplot) {
    RunResult result;
    try {
        result = run(state, scheme, config.params, forcing,
                     artifact_options(config, out_dir, forcing));
    } catch (const BlowUpError& e) {
        std::fprintf(stderr, "error: %s (last finite state in %s)\n", e.what(),
                     (out_dir + "/checkpoint_blowup.json").c_str());
        return kExitBlowUp;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    try {
        write_diagnostics_csv(out_dir + "/diagnostics.csv", result.series);
        write_checkpoint(out_dir + "/checkpoint.json", state, scheme, config.params,
                         config.seed);
        if (gnuplot) {
            write_gnuplot_diagnostics(out_dir);
            if (!config.snapshot_times.empty()) write_gnuplot_snapshot(out_dir);
        }
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    const DiagnosticsSample& last = result.series.back();
    std::printf("t=%.6g steps=%ld e_u=%.10g e_p=%.10g (%ld implicit factorization%s, "
                "artifacts in %s)\n",
                last.t, result.steps, last.e_u, last.e_p,
                state.implicit_factorization_count(),
                state.implicit_factorization_count() == 1 ? "" : "s", out_dir.c_str());
    return kExitOk;
}

void print_error(const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
}

} // namespace

// ============================================================================
// Config loading, saving, validation
// ============================================================================

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(unwrap_config(read_json_file(path)), RunConfig{});
}

ConvergenceConfig load_convergence_config(const std::string& path) {
    return convergence_config_from_json(unwrap_config(read_json_file(path)),
                                        ConvergenceConfig{});
}

ManufacturedConfig load_manufactured_config(const std::string& path) {
    return manufactured_config_from_json(unwrap_config(read_json_file(path)),
                                         ManufacturedConfig{});
}

void save_run_config(const std::string& path, const RunConfig& config,
                     const std::string& command) {
    write_json_file(path, json{{"command", command}, {"config", run_config_json(config)}});
}

void validate(const RunConfig& config) {
    if (config.points.file.empty()) {
        if (config.points.n < 4)
            throw std::domain_error("config: points.n must be >= 4");
    } else if (!std::filesystem::exists(config.points.file)) {
        throw std::domain_error("config: points file not found: " + config.points.file);
    }
    try {
        parse_kernel_spec(config.kernel);
    } catch (const FormatError& e) {
        throw std::domain_error(std::string("config: ") + e.what());
    }
    validate(config.params);
    validate(config.scheme);
    if (config.forcing.kind != "zero" && config.forcing.kind != "benchmark" &&
        config.forcing.kind != "manufactured")
        throw std::domain_error("config: forcing.kind must be zero, benchmark, or "
                                "manufactured, got " + config.forcing.kind);
    if (config.forcing.amplitude != "decay" && config.forcing.amplitude != "zero")
        throw std::domain_error("config: forcing.amplitude must be decay or zero, got " +
                                config.forcing.amplitude);
    if (config.forcing.kind == "manufactured" &&
        (config.forcing.harmonic.l < 1 || config.forcing.harmonic.l > kHarmonicLMax))
        throw std::domain_error("config: forcing degree must be in 1.." +
                                std::to_string(kHarmonicLMax));
    if (config.initial.kind != "zero" && config.initial.kind != "harmonic")
        throw std::domain_error("config: initial.kind must be zero or harmonic, got " +
                                config.initial.kind);
    if (config.initial.kind == "harmonic" &&
        (config.initial.harmonic.l < 1 || config.initial.harmonic.l > kHarmonicLMax))
        throw std::domain_error("config: initial degree must be in 1.." +
                                std::to_string(kHarmonicLMax));
    if (config.sample_every < 1)
        throw std::domain_error("config: sample_every must be >= 1");
    for (double t : config.snapshot_times)
        if (!std::isfinite(t) || t < 0.0)
            throw std::domain_error("config: snapshot times must be finite and >= 0");
    parse_system_mode(config.system_mode);
    if (config.output_dir.empty())
        throw std::domain_error("config: output_dir must not be empty");
}

void validate(const ConvergenceConfig& config) {
    try {
        parse_kernel_spec(config.kernel);
    } catch (const FormatError& e) {
        throw std::domain_error(std::string("config: ") + e.what());
    }
    if (config.family != 'y' && config.family != 'z')
        throw std::domain_error("config: family must be 'y' or 'z'");
    if (config.harmonic.l < 1 || config.harmonic.l > kHarmonicLMax)
        throw std::domain_error("config: degree must be in 1.." +
                                std::to_string(kHarmonicLMax));
    if (config.sizes.empty())
        throw std::domain_error("config: sizes must not be empty");
    for (std::size_t i = 0; i < config.sizes.size(); ++i) {
        if (config.sizes[i] < 4)
            throw std::domain_error("config: sizes must all be >= 4");
        if (i > 0 && config.sizes[i] <= config.sizes[i - 1])
            throw std::domain_error("config: sizes must be strictly increasing");
    }
    if (config.probe_count < 4)
        throw std::domain_error("config: probe_count must be >= 4");
    if (config.output_dir.empty())
        throw std::domain_error("config: output_dir must not be empty");
}

void validate(const ManufacturedConfig& config) {
    validate(config.base);
    if (config.base.forcing.kind != "manufactured")
        throw std::domain_error("config: the manufactured study requires "
                                "forcing.kind == manufactured");
    if (!config.base.points.file.empty())
        throw std::domain_error("config: the manufactured study generates its node "
                                "ladders; points.file must be empty");
    if (config.spatial_sizes.empty())
        throw std::domain_error("config: spatial_sizes must not be empty");
    for (std::size_t i = 0; i < config.spatial_sizes.size(); ++i) {
        if (config.spatial_sizes[i] < 4)
            throw std::domain_error("config: spatial_sizes must all be >= 4");
        if (i > 0 && config.spatial_sizes[i] <= config.spatial_sizes[i - 1])
            throw std::domain_error("config: spatial_sizes must be strictly increasing");
    }
    if (config.temporal_taus.empty())
        throw std::domain_error("config: temporal_taus must not be empty");
    for (std::size_t i = 0; i < config.temporal_taus.size(); ++i) {
        if (!(config.temporal_taus[i] > 0.0) || !std::isfinite(config.temporal_taus[i]))
            throw std::domain_error("config: temporal_taus must be positive and finite");
        if (i > 0 && config.temporal_taus[i] >= config.temporal_taus[i - 1])
            throw std::domain_error("config: temporal_taus must be strictly decreasing");
    }
    if (!(config.reference_tau > 0.0) ||
        config.reference_tau >= config.temporal_taus.back())
        throw std::domain_error("config: reference_tau must be positive and smaller "
                                "than every entry of temporal_taus");
    if (config.probe_count < 4)
        throw std::domain_error("config: probe_count must be >= 4");
}

// ============================================================================
// Builders
// ============================================================================

PointSet build_points(const PointsConfig& config) {
    if (!config.file.empty()) return load_points(config.file);
    return generate_points(config.kind, config.n, config.seed);
}

ForcingSpec build_forcing(const RunConfig& config) {
    ForcingSpec spec;
    if (config.forcing.kind == "zero") return spec;
    if (config.forcing.kind == "benchmark") {
        spec.kind = ForcingKind::benchmark_gamma_y30;
        return spec;
    }
    spec.kind = ForcingKind::manufactured;
    if (config.forcing.amplitude == "decay") {
        spec.manufactured = std::make_shared<const ManufacturedProblem>(
            ManufacturedProblem::eigen_decay(config.forcing.harmonic, config.params));
    } else {
        auto zero = [](double) { return 0.0; };
        spec.manufactured = std::make_shared<const ManufacturedProblem>(
            config.forcing.harmonic, config.params, zero, zero);
    }
    return spec;
}

SolverState build_state(const RunConfig& config) {
    auto ps = std::make_shared<const PointSet>(build_points(config.points));
    auto zonal = std::make_shared<const ZonalKernel>(parse_kernel_spec(config.kernel));
    std::vector<Vec3> u0(ps->size(), Vec3::Zero());
    if (config.initial.kind == "harmonic")
        for (std::size_t i = 0; i < ps->size(); ++i)
            u0[i] = vector_harmonic_div(config.initial.harmonic, ps->points[i]);
    return init_state(ps, zonal, NodalField(ps, std::move(u0)),
                      parse_system_mode(config.system_mode));
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& error) {
    if (h.size() != error.size())
        throw std::domain_error("fitted_order: h and error sizes differ");
    if (h.size() < 2)
        throw std::domain_error("fitted_order: needs at least two samples");
    const std::size_t n = h.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(h[i] > 0.0) || !std::isfinite(h[i]) || !(error[i] > 0.0) ||
            !std::isfinite(error[i]))
            throw std::domain_error("fitted_order: entries must be positive and finite");
        x[i] = std::log(h[i]);
        y[i] = std::log(error[i]);
    }
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (sxx == 0.0) throw std::domain_error("fitted_order: h values must differ");
    return sxy / sxx;
}

// ============================================================================
// Commands
// ============================================================================

int cmd_pointgen(const PointsConfig& config, const std::string& out_path) {
    PointSet ps;
    try {
        ps = build_points(config);
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }
    try {
        save_points(ps, out_path);
    } catch (const std::exception& e) {
        print_error(e);
        return kExitIo;
    }
    std::printf("wrote %zu nodes to %s (fill distance %.6g rad, riesz energy %.10g)\n",
                ps.size(), out_path.c_str(), ps.fill_distance_estimate,
                riesz_energy(ps.points));
    return kExitOk;
}

namespace {

// Shared ladder for interp-conv and helmholtz-conv: only the linear system
// and the sampled right-hand side differ.
int convergence_study(const ConvergenceConfig& config, bool helmholtz) {
    try {
        validate(config);
        if (helmholtz && config.family != 'y')
            throw std::domain_error(
                "config: the Ritz study supports only the divergence-free family 'y'");
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }

    const char* command = helmholtz ? "helmholtz-conv" : "interp-conv";
    const std::string csv_name =
        helmholtz ? "helmholtz_convergence.csv" : "interp_convergence.csv";
    std::vector<double> hs, max_errs, l2_errs;
    try {
        auto zonal = std::make_shared<const ZonalKernel>(parse_kernel_spec(config.kernel));
        const PointSet probes =
            generate_points(PointKind::fibonacci, config.probe_count, config.seed);
        auto target = [&](const SpherePoint& x) -> Vec3 {
            return config.family == 'y' ? vector_harmonic_div(config.harmonic, x)
                                        : vector_harmonic_curl(config.harmonic, x);
        };
        const double rhs_scale =
            1.0 + harmonic_eigenvalue(config.harmonic.l); // (I - lap*) of the target
        for (int n : config.sizes) {
            auto ps = std::make_shared<const PointSet>(
                generate_points(config.points, n, config.seed));
            std::vector<Vec3> samples(ps->size());
            for (std::size_t i = 0; i < ps->size(); ++i) {
                samples[i] = target(ps->points[i]);
                if (helmholtz) samples[i] *= rhs_scale;
            }
            NodalField data(ps, std::move(samples));
            KernelExpansion fit = [&] {
                if (helmholtz) {
                    ReducedSystem sys(ps, MatrixKernel(MatrixKernelKind::helmholtz_div, zonal));
                    sys.factorize();
                    return ritz_project(sys, data);
                }
                if (config.family == 'y') {
                    ReducedSystem sys(ps, MatrixKernel(MatrixKernelKind::div, zonal));
                    sys.factorize();
                    return interpolate(sys, data);
                }
                ReducedSystem sys(ps, MatrixKernel(MatrixKernelKind::full, zonal));
                sys.factorize();
                return curl_project(sys, data);
            }();
            ProbeErrors pe = probe_errors(fit, probes, target);
            hs.push_back(ps->fill_distance_estimate);
            max_errs.push_back(pe.max_error);
            l2_errs.push_back(pe.l2_error);
            std::printf("%s: n=%d h=%.6g max_error=%.10g l2_error=%.10g\n", command, n,
                        hs.back(), pe.max_error, pe.l2_error);
        }
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }

    try {
        ensure_dir(config.output_dir);
        std::string csv = "n,h,max_error,l2_error\n";
        for (std::size_t i = 0; i < hs.size(); ++i) {
            char row[160];
            std::snprintf(row, sizeof(row), "%d,%.17g,%.17g,%.17g\n", config.sizes[i],
                          hs[i], max_errs[i], l2_errs[i]);
            csv += row;
        }
        write_text_file(config.output_dir + "/" + csv_name, csv);
        json meta{{"command", command}, {"config", convergence_config_json(config)}};
        if (hs.size() >= 2) {
            meta["fitted_order_max"] = fitted_order(hs, max_errs);
            meta["fitted_order_l2"] = fitted_order(hs, l2_errs);
            std::printf("%s: fitted order max=%.3f l2=%.3f\n", command,
                        meta["fitted_order_max"].get<double>(),
                        meta["fitted_order_l2"].get<double>());
        } else {
            meta["fitted_order_max"] = nullptr;
            meta["fitted_order_l2"] = nullptr;
            std::printf("%s: single size, no fitted order\n", command);
        }
        write_json_file(config.output_dir + "/metadata.json", meta);
        if (config.gnuplot) write_gnuplot_convergence(config.output_dir, csv_name);
    } catch (const std::exception& e) {
        print_error(e);
        return kExitIo;
    }
    return kExitOk;
}

} // namespace

int cmd_interp_convergence(const ConvergenceConfig& config) {
    return convergence_study(config, false);
}

int cmd_helmholtz_convergence(const ConvergenceConfig& config) {
    return convergence_study(config, true);
}

int cmd_nse_run(const RunConfig& config, bool gnuplot) {
    std::optional<SolverState> state;
    ForcingSpec forcing;
    try {
        validate(config);
        forcing = build_forcing(config);
        state.emplace(build_state(config));
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }
    try {
        ensure_dir(config.output_dir);
        save_run_config(config.output_dir + "/metadata.json", config, "nse-run");
    } catch (const std::exception& e) {
        print_error(e);
        return kExitIo;
    }
    return integrate_and_report(*state, config, config.scheme, forcing,
                                config.output_dir, gnuplot);
}

int cmd_nse_manufactured(const ManufacturedConfig& config, bool gnuplot) {
    try {
        validate(config);
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }
    const RunConfig& base = config.base;
    const std::string& out_dir = base.output_dir;

    std::shared_ptr<const ZonalKernel> zonal;
    ForcingSpec forcing;
    PointSet probes;
    try {
        zonal = std::make_shared<const ZonalKernel>(parse_kernel_spec(base.kernel));
        forcing = build_forcing(base);
        probes = generate_points(PointKind::fibonacci, config.probe_count,
                                 base.points.seed);
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }
    const ManufacturedProblem& problem = *forcing.manufactured;
    const SystemMode mode = parse_system_mode(base.system_mode);
    const double T = base.scheme.final_time;

    // Every study run starts from the exact solution at t = 0 and keeps the
    // configured physics; only n or tau vary.
    auto fresh_state = [&](int n) {
        auto ps = std::make_shared<const PointSet>(
            generate_points(base.points.kind, n, base.points.seed));
        std::vector<Vec3> u0(ps->size());
        for (std::size_t i = 0; i < ps->size(); ++i)
            u0[i] = problem.exact_velocity(0.0, ps->points[i]);
        return init_state(ps, zonal, NodalField(ps, std::move(u0)), mode);
    };
    RunOptions opts;
    opts.sample_every = 1 << 30; // only the endpoints matter here
    opts.blowup_checkpoint_path = out_dir + "/checkpoint_blowup.json";

    std::vector<double> hs, sp_max, sp_l2;
    std::vector<double> temporal_errors[2]; // [0] imex_rk3, [1] semi_implicit_euler
    const SchemeKind temporal_schemes[2] = {SchemeKind::imex_rk3,
                                            SchemeKind::semi_implicit_euler};
    try {
        ensure_dir(out_dir);
    } catch (const std::exception& e) {
        print_error(e);
        return kExitIo;
    }
    try {
        for (int n : config.spatial_sizes) {
            SolverState state = fresh_state(n);
            run(state, base.scheme, base.params, forcing, opts);
            ProbeErrors pe = probe_errors(
                state.velocity(), probes,
                [&](const SpherePoint& x) { return problem.exact_velocity(T, x); });
            hs.push_back(state.points_ptr()->fill_distance_estimate);
            sp_max.push_back(pe.max_error);
            sp_l2.push_back(pe.l2_error);
            std::printf("spatial: n=%d h=%.6g max_error=%.10g l2_error=%.10g\n", n,
                        hs.back(), pe.max_error, pe.l2_error);
        }

        SolverState reference = fresh_state(base.points.n);
        run(reference,
            SchemeConfig{SchemeKind::imex_rk3, config.reference_tau, T},
            base.params, forcing, opts);
        const std::vector<Vec3> u_ref = reference.nodal_velocity();
        for (int s = 0; s < 2; ++s) {
            for (double tau : config.temporal_taus) {
                SolverState state = fresh_state(base.points.n);
                run(state, SchemeConfig{temporal_schemes[s], tau, T}, base.params,
                    forcing, opts);
                std::vector<Vec3> diff = state.nodal_velocity();
                for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= u_ref[i];
                temporal_errors[s].push_back(discrete_l2_norm(diff));
                std::printf("temporal: scheme=%s tau=%.6g error=%.10g\n",
                            scheme_kind_name(temporal_schemes[s]).c_str(), tau,
                            temporal_errors[s].back());
            }
        }
    } catch (const BlowUpError& e) {
        std::fprintf(stderr, "error: %s (last finite state in %s)\n", e.what(),
                     opts.blowup_checkpoint_path.c_str());
        return kExitBlowUp;
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }

    try {
        std::string spatial_csv = "n,h,max_error,l2_error\n";
        for (std::size_t i = 0; i < hs.size(); ++i) {
            char row[160];
            std::snprintf(row, sizeof(row), "%d,%.17g,%.17g,%.17g\n",
                          config.spatial_sizes[i], hs[i], sp_max[i], sp_l2[i]);
            spatial_csv += row;
        }
        write_text_file(out_dir + "/spatial.csv", spatial_csv);

        std::string temporal_csv = "scheme,tau,error\n";
        for (int s = 0; s < 2; ++s)
            for (std::size_t i = 0; i < config.temporal_taus.size(); ++i) {
                char row[160];
                std::snprintf(row, sizeof(row), "%s,%.17g,%.17g\n",
                              scheme_kind_name(temporal_schemes[s]).c_str(),
                              config.temporal_taus[i], temporal_errors[s][i]);
                temporal_csv += row;
            }
        write_text_file(out_dir + "/temporal.csv", temporal_csv);

        json meta{{"command", "nse-manufactured"},
                  {"config", manufactured_config_json(config)}};
        auto order_or_null = [](const std::vector<double>& h,
                                const std::vector<double>& e) -> json {
            try {
                return fitted_order(h, e);
            } catch (const std::domain_error&) {
                return nullptr;
            }
        };
        meta["spatial_fitted_order_max"] = order_or_null(hs, sp_max);
        meta["spatial_fitted_order_l2"] = order_or_null(hs, sp_l2);
        meta["temporal_fitted_order_imex_rk3"] =
            order_or_null(config.temporal_taus, temporal_errors[0]);
        meta["temporal_fitted_order_semi_implicit_euler"] =
            order_or_null(config.temporal_taus, temporal_errors[1]);
        write_json_file(out_dir + "/metadata.json", meta);
        for (const char* key : {"spatial_fitted_order_max", "spatial_fitted_order_l2",
                                "temporal_fitted_order_imex_rk3",
                                "temporal_fitted_order_semi_implicit_euler"})
            if (!meta[key].is_null())
                std::printf("%s=%.3f\n", key, meta[key].get<double>());
        if (gnuplot) {
            write_gnuplot_convergence(out_dir, "spatial.csv");
            write_gnuplot_temporal(out_dir);
        }
    } catch (const std::exception& e) {
        print_error(e);
        return kExitIo;
    }
    return kExitOk;
}

int cmd_resume(const std::string& checkpoint_path, const std::string& config_path,
               const std::string& output_dir, double final_time_override,
               bool gnuplot) {
    Checkpoint cp;
    RunConfig rc;
    std::optional<SolverState> state;
    ForcingSpec forcing;
    std::string out_dir = output_dir;
    double T = 0.0;
    try {
        cp = read_checkpoint(checkpoint_path);
        const std::string meta_path =
            config_path.empty() ? parent_dir(checkpoint_path) + "/metadata.json"
                                : config_path;
        rc = load_run_config(meta_path);
        validate(rc);
        // The checkpoint is authoritative for the state; the config supplies
        // the run context (forcing, sampling). They must describe the same
        // experiment.
        if (rc.params.nu != cp.params.nu || rc.params.omega != cp.params.omega ||
            rc.params.include_convection != cp.params.include_convection)
            throw std::domain_error("resume: physical parameters in " + meta_path +
                                    " do not match the checkpoint");
        if (rc.scheme.scheme != cp.scheme.scheme || rc.scheme.tau != cp.scheme.tau)
            throw std::domain_error("resume: scheme in " + meta_path +
                                    " does not match the checkpoint");
        if (kernel_spec_string(parse_kernel_spec(rc.kernel)) != cp.kernel_spec)
            throw std::domain_error("resume: kernel in " + meta_path +
                                    " does not match the checkpoint");
        T = final_time_override > 0.0 ? final_time_override : cp.scheme.final_time;
        if (T < cp.t)
            throw std::domain_error("resume: final time " + std::to_string(T) +
                                    " lies before the checkpoint time " +
                                    std::to_string(cp.t));
        if (out_dir.empty()) out_dir = parent_dir(checkpoint_path) + "/resumed";
        forcing = build_forcing(rc);
        state.emplace(resume_state(cp, parse_system_mode(rc.system_mode)));
    } catch (const std::exception& e) {
        print_error(e);
        return kExitConfig;
    }

    // Snapshots already produced by the original run are not rewritten.
    RunConfig resumed = rc;
    resumed.scheme.final_time = T;
    resumed.output_dir = out_dir;
    resumed.snapshot_times.clear();
    for (double t : rc.snapshot_times)
        if (t > cp.t + 1e-12) resumed.snapshot_times.push_back(t);

    try {
        ensure_dir(out_dir);
        save_run_config(out_dir + "/metadata.json", resumed, "resume");
    } catch (const std::exception& e) {
        print_error(e);
        return kExitIo;
    }
    return integrate_and_report(*state, resumed, resumed.scheme, forcing, out_dir,
                                gnuplot);
}

} // namespace sphereflow
