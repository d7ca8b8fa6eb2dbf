#include "sphereflow/timestepping.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

constexpr double kBlowUpLimit = 1e12;

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::domain_error("time step must be positive and finite");
}

// Steps accept nu = 0 (pure advection/rotation: the diffusion term simply
// vanishes) even though the physical configuration requires nu > 0; the
// residual assembly never reads nu.
void check_step_params(const PhysicalParams& params) {
    if (!(params.nu >= 0.0) || !std::isfinite(params.nu) ||
        !(params.omega >= 0.0) || !std::isfinite(params.omega))
        throw std::domain_error("step: invalid physical parameters");
}

void check_blow_up(const Eigen::VectorXd& alpha, double t) {
    if (!alpha.allFinite() ||
        (alpha.size() > 0 && alpha.cwiseAbs().maxCoeff() > kBlowUpLimit))
        throw BlowUpError("time integration left the finite range", t);
}

// ---- base64 (RFC 4648, no line breaks) -------------------------------------

const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        unsigned int word = data[i] << 16;
        if (i + 1 < len) word |= data[i + 1] << 8;
        if (i + 2 < len) word |= data[i + 2];
        out.push_back(kB64Alphabet[(word >> 18) & 63]);
        out.push_back(kB64Alphabet[(word >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64Alphabet[(word >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64Alphabet[word & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    int table[256];
    for (int i = 0; i < 256; ++i) table[i] = -1;
    for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kB64Alphabet[i])] = i;

    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    unsigned int word = 0;
    int bits = 0;
    for (const char c : text) {
        if (c == '=') break;
        const int v = table[static_cast<unsigned char>(c)];
        if (v < 0) throw FormatError("base64: unexpected character in payload");
        word = (word << 6) | static_cast<unsigned int>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((word >> bits) & 0xff));
        }
    }
    return out;
}

std::string encode_doubles(const std::vector<double>& values) {
    return base64_encode(reinterpret_cast<const unsigned char*>(values.data()),
                         values.size() * sizeof(double));
}

std::vector<double> decode_doubles(const std::string& text, const char* what) {
    const std::vector<unsigned char> bytes = base64_decode(text);
    if (bytes.size() % sizeof(double) != 0)
        throw FormatError(std::string(what) + ": payload is not a whole number "
                          "of doubles");
    std::vector<double> values(bytes.size() / sizeof(double));
    std::memcpy(values.data(), bytes.data(), bytes.size());
    return values;
}

} // namespace

// ---- scheme plumbing --------------------------------------------------------

SchemeKind parse_scheme_kind(const std::string& name) {
    if (name == "explicit_euler") return SchemeKind::explicit_euler;
    if (name == "semi_implicit_euler") return SchemeKind::semi_implicit_euler;
    if (name == "imex_rk3") return SchemeKind::imex_rk3;
    throw FormatError("unknown scheme '" + name +
                      "' (expected explicit_euler, semi_implicit_euler, or "
                      "imex_rk3)");
}

std::string scheme_kind_name(SchemeKind kind) {
    switch (kind) {
    case SchemeKind::explicit_euler: return "explicit_euler";
    case SchemeKind::semi_implicit_euler: return "semi_implicit_euler";
    case SchemeKind::imex_rk3: return "imex_rk3";
    }
    throw std::logic_error("scheme_kind_name: unknown scheme");
}

void validate(const SchemeConfig& config) {
    if (!(config.tau > 0.0) || !std::isfinite(config.tau))
        throw std::domain_error("SchemeConfig: tau must be positive");
    if (!(config.final_time >= config.tau) || !std::isfinite(config.final_time))
        throw std::domain_error("SchemeConfig: need 0 < tau <= final time");
}

const ImexTableau& imex_rk3_tableau() {
    static const ImexTableau table = [] {
        ImexTableau t{};
        // gamma is the middle root of x^3 - 3x^2 + 3x/2 - 1/6, the value
        // giving an L-stable third-order singly diagonal implicit part.
        const double g = 0.435866521508458999416019451193556843;
        const double b1 = -1.5 * g * g + 4.0 * g - 0.25;
        const double b2 = 1.5 * g * g - 5.0 * g + 1.25;
        t.gamma = g;
        t.c = {0.0, g, (1.0 + g) / 2.0, 1.0};
        t.b = {0.0, b1, b2, g};
        t.a_implicit = {{{0.0, 0.0, 0.0, 0.0},
                         {0.0, g, 0.0, 0.0},
                         {0.0, (1.0 - g) / 2.0, g, 0.0},
                         {0.0, b1, b2, g}}};
        // The third and fourth explicit rows come from the published
        // reference values; the trailing entry of each row is defined by the
        // row sum so the abscissae match exactly.
        const double e31 = 0.3212788860;
        const double e41 = -0.105858296;
        const double e42 = 0.5529291479;
        t.a_explicit = {{{0.0, 0.0, 0.0, 0.0},
                         {g, 0.0, 0.0, 0.0},
                         {e31, t.c[2] - e31, 0.0, 0.0},
                         {e41, e42, 1.0 - e41 - e42, 0.0}}};
        return t;
    }();
    return table;
}

// ---- SolverState ------------------------------------------------------------

SolverState::SolverState(std::shared_ptr<const PointSet> ps,
                         std::shared_ptr<const ZonalKernel> zonal, SystemMode mode)
    : zonal_(zonal),
      div_(ps, MatrixKernel(MatrixKernelKind::div, zonal), mode),
      full_(ps, MatrixKernel(MatrixKernelKind::full, zonal), mode),
      laplace_(std::move(ps), MatrixKernel(MatrixKernelKind::laplace_div, zonal),
               mode),
      alpha_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(div_.size()))) {
    div_.factorize();
    full_.factorize();
}

KernelExpansion SolverState::velocity() const {
    return KernelExpansion(MatrixKernel(MatrixKernelKind::div, zonal_),
                           points_ptr(), div_.expand(alpha_));
}

std::vector<Vec3> SolverState::nodal_velocity() const {
    return div_.expand(div_.apply(alpha_));
}

double SolverState::velocity_norm() const {
    return discrete_l2_norm(nodal_velocity());
}

void SolverState::set(double t, Eigen::VectorXd alpha) {
    if (alpha.size() != static_cast<Eigen::Index>(div_.size()))
        throw std::domain_error("SolverState::set: bad coefficient count");
    check_blow_up(alpha, t);
    t_ = t;
    alpha_ = std::move(alpha);
}

void SolverState::commit(double t, Eigen::VectorXd alpha) {
    check_blow_up(alpha, t);
    t_ = t;
    alpha_ = std::move(alpha);
}

void SolverState::ensure_implicit_factor(double coeff) {
    if (implicit_ready_ && coeff == implicit_coeff_) return;
    implicit_matrix_ = div_.dense_copy();
    if (coeff != 0.0) implicit_matrix_ -= coeff * laplace_.dense_copy();
    implicit_llt_.compute(implicit_matrix_);
    if (implicit_llt_.info() != Eigen::Success)
        throw IllConditioningError("implicit step matrix is not positive definite",
                                   -1);
    implicit_coeff_ = coeff;
    implicit_ready_ = true;
    ++implicit_factorizations_;
}

Eigen::VectorXd SolverState::implicit_solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = implicit_llt_.solve(rhs);
    x += implicit_llt_.solve(Eigen::VectorXd(rhs - implicit_matrix_ * x));
    return x;
}

// beta in reduced coordinates: A_div^{-1} g(alpha, t), via the full-kernel
// projection of the momentum residual (kernel exchange).
Eigen::VectorXd SolverState::projected_rhs(const Eigen::VectorXd& alpha, double t,
                                           const PhysicalParams& params,
                                           const ForcingSpec& forcing) const {
    const KernelExpansion u(MatrixKernel(MatrixKernelKind::div, zonal_),
                            points_ptr(), div_.expand(alpha));
    return projected_residual_reduced(full_, u, t, params, forcing);
}

SolverState init_state(std::shared_ptr<const PointSet> ps,
                       std::shared_ptr<const ZonalKernel> zonal,
                       const NodalField& u0, SystemMode mode) {
    bool same = u0.points_ptr() == ps;
    if (!same && u0.points().size() == ps->size()) {
        same = true;
        for (std::size_t j = 0; j < ps->size() && same; ++j)
            same = u0.points().points[j].v == ps->points[j].v;
    }
    if (!same)
        throw std::domain_error("init_state: initial data lives on different nodes");
    SolverState state(std::move(ps), std::move(zonal), mode);
    state.set(0.0, state.div_system().solve(state.div_system().reduce(u0.values())));
    return state;
}

// ---- steps ------------------------------------------------------------------

void step_explicit_euler(SolverState& state, double tau,
                         const PhysicalParams& params, const ForcingSpec& forcing) {
    check_tau(tau);
    check_step_params(params);
    Eigen::VectorXd rate =
        state.projected_rhs(state.alpha_, state.t_, params, forcing);
    if (params.nu > 0.0)
        rate += params.nu * state.div_.solve(state.laplace_.apply(state.alpha_));
    state.commit(state.t_ + tau, state.alpha_ + tau * rate);
}

void step_semi_implicit_euler(SolverState& state, double tau,
                              const PhysicalParams& params,
                              const ForcingSpec& forcing) {
    check_tau(tau);
    check_step_params(params);
    state.ensure_implicit_factor(params.nu * tau);
    const Eigen::VectorXd beta =
        state.projected_rhs(state.alpha_, state.t_, params, forcing);
    Eigen::VectorXd w = state.div_.apply(beta);
    if (params.nu > 0.0) w += params.nu * state.laplace_.apply(state.alpha_);
    state.commit(state.t_ + tau, state.alpha_ + tau * state.implicit_solve(w));
}

void step_imex_rk3(SolverState& state, double tau, const PhysicalParams& params,
                   const ForcingSpec& forcing) {
    check_tau(tau);
    check_step_params(params);
    const ImexTableau& tb = imex_rk3_tableau();
    state.ensure_implicit_factor(params.nu * tau * tb.gamma);

    // f_e[i] = A_div^{-1} g at stage i; f_i[i] = nu A_div^{-1} A_lap U_i,
    // recovered algebraically from the stage equation (no extra solve).
    std::array<Eigen::VectorXd, 4> f_e;
    std::array<Eigen::VectorXd, 4> f_i;
    f_e[0] = state.projected_rhs(state.alpha_, state.t_, params, forcing);

    for (int i = 1; i < 4; ++i) {
        Eigen::VectorXd rhs = state.alpha_;
        for (int j = 0; j < i; ++j) {
            if (tb.a_explicit[i][j] != 0.0)
                rhs += (tau * tb.a_explicit[i][j]) * f_e[j];
            if (j >= 1 && tb.a_implicit[i][j] != 0.0)
                rhs += (tau * tb.a_implicit[i][j]) * f_i[j];
        }
        const Eigen::VectorXd stage = state.implicit_solve(state.div_.apply(rhs));
        f_i[i] = (stage - rhs) / (tau * tb.gamma);
        f_e[i] = state.projected_rhs(stage, state.t_ + tb.c[i] * tau, params,
                                     forcing);
    }

    Eigen::VectorXd next = state.alpha_;
    for (int i = 1; i < 4; ++i) next += (tau * tb.b[i]) * (f_e[i] + f_i[i]);
    state.commit(state.t_ + tau, std::move(next));
}

// ---- diagnostics and the driver loop ----------------------------------------

double pressure_norm(const SolverState& state, const PhysicalParams& params,
                     const ForcingSpec& forcing) {
    const Eigen::VectorXd beta_red = projected_residual_reduced(
        state.full_system(), state.velocity(), state.time(), params, forcing);
    PressureCoefficients bundle;
    bundle.time = state.time();
    bundle.ps = state.points_ptr();
    bundle.zonal = state.zonal();
    bundle.beta = state.full_system().expand(beta_red);
    return discrete_l2_norm(pressure_at_nodes(bundle, state.time()));
}

RunResult run(SolverState& state, const SchemeConfig& config,
              const PhysicalParams& params, const ForcingSpec& forcing,
              const RunOptions& options) {
    if (!(config.tau > 0.0) || !std::isfinite(config.tau))
        throw std::domain_error("run: tau must be positive");
    if (!std::isfinite(config.final_time) || config.final_time < state.time())
        throw std::domain_error("run: final time precedes the current time");
    if (options.sample_every < 1)
        throw std::domain_error("run: sample_every must be at least 1");

    const auto started = std::chrono::steady_clock::now();
    const auto wall_ms = [&started] {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - started)
            .count();
    };

    RunResult result;
    const auto sample = [&] {
        result.series.push_back({state.time(), state.velocity_norm(),
                                 pressure_norm(state, params, forcing), wall_ms()});
    };

    std::vector<double> snapshots = options.snapshot_times;
    std::sort(snapshots.begin(), snapshots.end());
    std::size_t next_snapshot = 0;
    const auto fire_snapshots = [&] {
        while (next_snapshot < snapshots.size() &&
               snapshots[next_snapshot] <= state.time() + 1e-12) {
            if (options.on_snapshot)
                options.on_snapshot(state, snapshots[next_snapshot]);
            ++next_snapshot;
        }
    };

    const double T = config.final_time;
    const double landing = 1e-12 * std::max(1.0, std::abs(T));
    sample();
    fire_snapshots();

    long since_sample = 0;
    while (T - state.time() > landing) {
        const double remaining = T - state.time();
        const bool final_step = remaining <= config.tau * (1.0 + 1e-9);
        const double tau = final_step ? remaining : config.tau;
        try {
            switch (config.scheme) {
            case SchemeKind::explicit_euler:
                step_explicit_euler(state, tau, params, forcing);
                break;
            case SchemeKind::semi_implicit_euler:
                step_semi_implicit_euler(state, tau, params, forcing);
                break;
            case SchemeKind::imex_rk3:
                step_imex_rk3(state, tau, params, forcing);
                break;
            }
        } catch (const BlowUpError&) {
            // The step left the state untouched: checkpoint the last finite
            // state, then propagate.
            if (!options.blowup_checkpoint_path.empty())
                write_checkpoint(options.blowup_checkpoint_path, state, config,
                                 params, options.seed);
            throw;
        }
        ++result.steps;
        if (final_step) state.set(T, state.coefficients());
        ++since_sample;
        if (since_sample == options.sample_every || final_step) {
            sample();
            since_sample = 0;
        }
        fire_snapshots();
    }
    return result;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsSample>& series) {
    std::ofstream out(path);
    if (!out) throw FormatError("write_diagnostics_csv: cannot open " + path);
    out << "t,e_u,e_p,wall_ms\n";
    char buf[160];
    for (const DiagnosticsSample& s : series) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", s.t, s.e_u,
                      s.e_p, s.wall_ms);
        out << buf;
    }
    if (!out) throw FormatError("write_diagnostics_csv: write failed for " + path);
}

// ---- checkpoint / resume ------------------------------------------------------

void write_checkpoint(const std::string& path, const SolverState& state,
                      const SchemeConfig& scheme, const PhysicalParams& params,
                      std::uint64_t seed) {
    const PointSet& ps = *state.points_ptr();
    std::vector<double> coords;
    coords.reserve(3 * ps.size());
    for (const SpherePoint& p : ps.points) {
        coords.push_back(p.x());
        coords.push_back(p.y());
        coords.push_back(p.z());
    }
    const Eigen::VectorXd& alpha = state.coefficients();
    std::vector<double> alpha_flat(alpha.data(), alpha.data() + alpha.size());

    nlohmann::json doc;
    doc["version"] = 1;
    doc["kernel"] = kernel_spec_string(state.zonal()->wendland());
    doc["node_count"] = ps.size();
    doc["nu"] = params.nu;
    doc["omega"] = params.omega;
    doc["include_convection"] = params.include_convection;
    doc["scheme"] = scheme_kind_name(scheme.scheme);
    doc["tau"] = scheme.tau;
    doc["final_time"] = scheme.final_time;
    doc["t"] = state.time();
    doc["seed"] = seed;
    doc["points_b64"] = encode_doubles(coords);
    doc["alpha_b64"] = encode_doubles(alpha_flat);

    std::ofstream out(path);
    if (!out) throw FormatError("write_checkpoint: cannot open " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw FormatError("write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("read_checkpoint: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("read_checkpoint: invalid JSON in " + path + ": " +
                          e.what());
    }

    Checkpoint cp;
    try {
        cp.version = doc.at("version").get<int>();
        if (cp.version != 1)
            throw FormatError("read_checkpoint: unsupported version " +
                              std::to_string(cp.version) + " in " + path);
        cp.kernel_spec = doc.at("kernel").get<std::string>();
        cp.params.nu = doc.at("nu").get<double>();
        cp.params.omega = doc.at("omega").get<double>();
        cp.params.include_convection = doc.at("include_convection").get<bool>();
        cp.scheme.scheme = parse_scheme_kind(doc.at("scheme").get<std::string>());
        cp.scheme.tau = doc.at("tau").get<double>();
        cp.scheme.final_time = doc.at("final_time").get<double>();
        cp.t = doc.at("t").get<double>();
        cp.seed = doc.at("seed").get<std::uint64_t>();

        const std::vector<double> coords =
            decode_doubles(doc.at("points_b64").get<std::string>(), "points");
        if (coords.size() % 3 != 0 ||
            coords.size() / 3 != doc.at("node_count").get<std::size_t>())
            throw FormatError("read_checkpoint: node payload size mismatch in " +
                              path);
        std::vector<SpherePoint> pts;
        pts.reserve(coords.size() / 3);
        for (std::size_t j = 0; j < coords.size(); j += 3)
            pts.emplace_back(Vec3(coords[j], coords[j + 1], coords[j + 2]));
        cp.ps = std::make_shared<PointSet>(make_point_set(std::move(pts)));

        const std::vector<double> alpha =
            decode_doubles(doc.at("alpha_b64").get<std::string>(), "alpha");
        if (alpha.size() != 2 * cp.ps->size())
            throw FormatError(
                "read_checkpoint: coefficient payload size mismatch in " + path);
        cp.alpha = Eigen::Map<const Eigen::VectorXd>(
            alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("read_checkpoint: missing or malformed field in " +
                          path + ": " + e.what());
    }
    return cp;
}

SolverState resume_state(const Checkpoint& checkpoint, SystemMode mode) {
    auto zonal = std::make_shared<ZonalKernel>(
        parse_kernel_spec(checkpoint.kernel_spec));
    SolverState state(checkpoint.ps, std::move(zonal), mode);
    state.set(checkpoint.t, checkpoint.alpha);
    return state;
}

} // namespace sphereflow
