#pragma once

/// Method-of-lines time integration of the semi-discrete system
///   A_div d(alpha)/dt = nu A_lap alpha + g(alpha, t)
/// in reduced tangent-frame coordinates: explicit Euler, semi-implicit Euler
/// (stiff diffusion treated implicitly), and a third-order L-stable IMEX
/// Runge-Kutta scheme, plus the fixed-step driver loop with diagnostics,
/// snapshot callbacks, and checkpoint/resume.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "sphereflow/fields.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/interpolation.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/pde_ops.hpp"

namespace sphereflow {

enum class SchemeKind { explicit_euler, semi_implicit_euler, imex_rk3 };
SchemeKind parse_scheme_kind(const std::string& name);
std::string scheme_kind_name(SchemeKind kind);

struct SchemeConfig {
    SchemeKind scheme = SchemeKind::imex_rk3;
    double tau = 1e-2;       // fixed step size
    double final_time = 1.0; // horizon T
};

// Throws std::domain_error unless 0 < tau <= final_time.
void validate(const SchemeConfig& config);

// Four-stage additive Runge-Kutta tableau: the implicit part is singly
// diagonal (all nonzero diagonal entries equal gamma) with an explicit first
// stage, the explicit part is a classical ERK, and both share the weights b
// and abscissae c. The scheme is stiffly accurate and L-stable in its
// implicit part and third-order accurate; the exact coefficients are listed
// in docs/tableaux.md and validated empirically by the order tests.
struct ImexTableau {
    double gamma;
    std::array<double, 4> c;
    std::array<std::array<double, 4>, 4> a_implicit;
    std::array<std::array<double, 4>, 4> a_explicit;
    std::array<double, 4> b;
};
const ImexTableau& imex_rk3_tableau();

// Time, reduced coefficients, and the cached linear algebra of one
// discretization: the factorized divergence-free Gram matrix, the factorized
// full-kernel Gram matrix (for the projected RHS), the Laplacian operator
// matrix (negative definite, applied but never factorized), and the lazily
// (re)factorized implicit step matrix A_div - c A_lap keyed by the scalar c.
class SolverState {
public:
    SolverState(std::shared_ptr<const PointSet> ps,
                std::shared_ptr<const ZonalKernel> zonal,
                SystemMode mode = SystemMode::automatic);

    double time() const { return t_; }
    const Eigen::VectorXd& coefficients() const { return alpha_; }
    const std::shared_ptr<const PointSet>& points_ptr() const {
        return div_.points_ptr();
    }
    const std::shared_ptr<const ZonalKernel>& zonal() const { return zonal_; }

    // Velocity views of the current coefficients.
    KernelExpansion velocity() const;
    std::vector<Vec3> nodal_velocity() const; // A_div alpha at the nodes
    double velocity_norm() const;             // e_u, the discrete L2 norm

    const ReducedSystem& div_system() const { return div_; }
    const ReducedSystem& full_system() const { return full_; }
    const ReducedSystem& laplace_operator() const { return laplace_; }
    long implicit_factorization_count() const { return implicit_factorizations_; }

    // Replaces time and coefficients (init and resume). Throws
    // std::domain_error on a size mismatch and BlowUpError on non-finite or
    // oversized coefficients.
    void set(double t, Eigen::VectorXd alpha);

private:
    friend void step_explicit_euler(SolverState&, double, const PhysicalParams&,
                                    const ForcingSpec&);
    friend void step_semi_implicit_euler(SolverState&, double,
                                         const PhysicalParams&, const ForcingSpec&);
    friend void step_imex_rk3(SolverState&, double, const PhysicalParams&,
                              const ForcingSpec&);

    void ensure_implicit_factor(double coeff);
    Eigen::VectorXd implicit_solve(const Eigen::VectorXd& rhs) const;
    Eigen::VectorXd projected_rhs(const Eigen::VectorXd& alpha, double t,
                                  const PhysicalParams& params,
                                  const ForcingSpec& forcing) const;
    void commit(double t, Eigen::VectorXd alpha);

    std::shared_ptr<const ZonalKernel> zonal_;
    ReducedSystem div_;
    ReducedSystem full_;
    ReducedSystem laplace_;
    double t_ = 0.0;
    Eigen::VectorXd alpha_;

    double implicit_coeff_ = 0.0;
    bool implicit_ready_ = false;
    Eigen::MatrixXd implicit_matrix_;
    Eigen::LLT<Eigen::MatrixXd> implicit_llt_;
    long implicit_factorizations_ = 0;
};

// Interpolates u0 with the divergence-free kernel: alpha(0) solves the
// collocation system, t = 0. u0 must live on the same nodes.
SolverState init_state(std::shared_ptr<const PointSet> ps,
                       std::shared_ptr<const ZonalKernel> zonal,
                       const NodalField& u0,
                       SystemMode mode = SystemMode::automatic);

// One step of each scheme; t advances by tau. The states are strongly
// exception-safe: on BlowUpError (any |coefficient| > 1e12 or non-finite)
// the state is left unchanged.
void step_explicit_euler(SolverState& state, double tau,
                         const PhysicalParams& params, const ForcingSpec& forcing);
void step_semi_implicit_euler(SolverState& state, double tau,
                              const PhysicalParams& params,
                              const ForcingSpec& forcing);
void step_imex_rk3(SolverState& state, double tau, const PhysicalParams& params,
                   const ForcingSpec& forcing);

// e_p for the current state: solves the projected residual at the current
// time and takes the discrete L2 norm of the recovered nodal pressure.
double pressure_norm(const SolverState& state, const PhysicalParams& params,
                     const ForcingSpec& forcing);

struct DiagnosticsSample {
    double t;
    double e_u;
    double e_p;
    double wall_ms; // wall-clock since run start; excluded from determinism
};

struct RunOptions {
    // Diagnostics cadence: a sample before the first step, after every
    // sample_every-th step, and after the final step.
    int sample_every = 1;
    // Snapshot callback fires the first time t reaches each listed value.
    std::vector<double> snapshot_times;
    std::function<void(const SolverState&, double)> on_snapshot;
    // When nonempty, a blow-up writes the last finite state here before the
    // error propagates.
    std::string blowup_checkpoint_path;
    std::uint64_t seed = 0; // recorded in checkpoints
};

struct RunResult {
    std::vector<DiagnosticsSample> series;
    long steps = 0;
};

// Fixed-step integration until final_time; the last step is shortened to
// land exactly on it (|t - T| <= 1e-12 T, in fact exact).
RunResult run(SolverState& state, const SchemeConfig& config,
              const PhysicalParams& params, const ForcingSpec& forcing,
              const RunOptions& options = {});

// CSV with header t,e_u,e_p,wall_ms and one row per sample.
void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsSample>& series);

// Self-contained run snapshot: configuration header plus base64-encoded
// little-endian doubles for the node coordinates and the reduced
// coefficients, so a resumed run rebuilds bitwise-identical systems.
struct Checkpoint {
    int version = 1;
    std::string kernel_spec;
    SchemeConfig scheme;
    PhysicalParams params;
    double t = 0.0;
    std::uint64_t seed = 0;
    std::shared_ptr<const PointSet> ps;
    Eigen::VectorXd alpha;
};

void write_checkpoint(const std::string& path, const SolverState& state,
                      const SchemeConfig& scheme, const PhysicalParams& params,
                      std::uint64_t seed);
Checkpoint read_checkpoint(const std::string& path);
SolverState resume_state(const Checkpoint& checkpoint,
                         SystemMode mode = SystemMode::automatic);

} // namespace sphereflow
