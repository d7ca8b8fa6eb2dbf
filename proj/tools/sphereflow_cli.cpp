// Command-line front end. Each subcommand wraps one driver command: configs
// come from JSON files (a metadata.json written by a previous run works too),
// with a few flags for the common overrides. Exit codes: 0 ok, 2 bad config
// or inputs, 3 blow-up (checkpoint written), 4 artifact write failure,
// 1 unexpected error.

#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "sphereflow/driver.hpp"
#include "sphereflow/errors.hpp"

int main(int argc, char** argv) {
    using namespace sphereflow;

    CLI::App app{"divergence-free kernel collocation solver on the rotating sphere"};
    app.require_subcommand(1);

    PointsConfig pg;
    std::string pg_kind = "fibonacci";
    std::string pg_out = "points.txt";
    CLI::App* pointgen = app.add_subcommand("pointgen", "generate a node set file");
    pointgen->add_option("--kind", pg_kind, "fibonacci | random_uniform | riesz_minimized");
    pointgen->add_option("--n", pg.n, "node count (>= 4)");
    pointgen->add_option("--seed", pg.seed, "generator seed");
    pointgen->add_option("--file", pg.file, "copy nodes from this file instead of generating");
    pointgen->add_option("--out", pg_out, "output path");

    std::string ic_config, ic_out;
    bool ic_gnuplot = false;
    CLI::App* interp = app.add_subcommand(
        "interp-conv", "interpolation refinement study over a node-count ladder");
    interp->add_option("--config", ic_config, "JSON config (or a metadata.json)");
    interp->add_option("--output-dir", ic_out, "override the output directory");
    interp->add_flag("--gnuplot", ic_gnuplot, "also write gnuplot scripts");

    std::string hc_config, hc_out;
    bool hc_gnuplot = false;
    CLI::App* helmholtz = app.add_subcommand(
        "helmholtz-conv", "Ritz projection refinement study (divergence-free family)");
    helmholtz->add_option("--config", hc_config, "JSON config (or a metadata.json)");
    helmholtz->add_option("--output-dir", hc_out, "override the output directory");
    helmholtz->add_flag("--gnuplot", hc_gnuplot, "also write gnuplot scripts");

    std::string nr_config, nr_out;
    bool nr_gnuplot = false, nr_full_scale = false;
    CLI::App* nse_run = app.add_subcommand(
        "nse-run", "time integration with diagnostics, snapshots, and a checkpoint");
    nse_run->add_option("--config", nr_config, "JSON config (or a metadata.json)");
    nse_run->add_option("--output-dir", nr_out, "override the output directory");
    nse_run->add_flag("--full-scale", nr_full_scale,
                      "use the 2500-node benchmark grid (long run)");
    nse_run->add_flag("--gnuplot", nr_gnuplot, "also write gnuplot scripts");

    std::string nm_config, nm_out;
    bool nm_gnuplot = false;
    CLI::App* manufactured = app.add_subcommand(
        "nse-manufactured", "spatial and temporal verification against an exact solution");
    manufactured->add_option("--config", nm_config, "JSON config (or a metadata.json)");
    manufactured->add_option("--output-dir", nm_out, "override the output directory");
    manufactured->add_flag("--gnuplot", nm_gnuplot, "also write gnuplot scripts");

    std::string rs_checkpoint, rs_config, rs_out;
    double rs_final_time = 0.0;
    bool rs_gnuplot = false;
    CLI::App* resume = app.add_subcommand(
        "resume", "continue a checkpointed run to its final time");
    resume->add_option("checkpoint", rs_checkpoint, "checkpoint JSON file")->required();
    resume->add_option("--config", rs_config,
                       "run context (default: metadata.json next to the checkpoint)");
    resume->add_option("--output-dir", rs_out,
                       "artifact directory (default: <checkpoint dir>/resumed)");
    resume->add_option("--final-time", rs_final_time,
                       "override the configured final time (> 0)");
    resume->add_flag("--gnuplot", rs_gnuplot, "also write gnuplot scripts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand(pointgen)) {
            pg.kind = parse_point_kind(pg_kind);
            return cmd_pointgen(pg, pg_out);
        }
        if (app.got_subcommand(interp)) {
            ConvergenceConfig cc =
                ic_config.empty() ? ConvergenceConfig{} : load_convergence_config(ic_config);
            if (!ic_out.empty()) cc.output_dir = ic_out;
            cc.gnuplot = ic_gnuplot;
            return cmd_interp_convergence(cc);
        }
        if (app.got_subcommand(helmholtz)) {
            ConvergenceConfig cc =
                hc_config.empty() ? ConvergenceConfig{} : load_convergence_config(hc_config);
            if (!hc_out.empty()) cc.output_dir = hc_out;
            cc.gnuplot = hc_gnuplot;
            return cmd_helmholtz_convergence(cc);
        }
        if (app.got_subcommand(nse_run)) {
            RunConfig rc = nr_config.empty() ? RunConfig{} : load_run_config(nr_config);
            if (!nr_out.empty()) rc.output_dir = nr_out;
            if (nr_full_scale) {
                rc.points.file.clear();
                rc.points.n = 2500;
            }
            return cmd_nse_run(rc, nr_gnuplot);
        }
        if (app.got_subcommand(manufactured)) {
            ManufacturedConfig mc = nm_config.empty() ? ManufacturedConfig{}
                                                      : load_manufactured_config(nm_config);
            if (!nm_out.empty()) mc.base.output_dir = nm_out;
            return cmd_nse_manufactured(mc, nm_gnuplot);
        }
        if (app.got_subcommand(resume))
            return cmd_resume(rs_checkpoint, rs_config, rs_out, rs_final_time, rs_gnuplot);
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
