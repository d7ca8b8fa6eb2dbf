#pragma once

/// Right-hand-side machinery for the incompressible flow solver on the
/// rotating sphere: nonlinear convection from analytic kernel derivatives,
/// the Coriolis term, forcing models (including an exact manufactured
/// solution built from vector harmonics), the projected discrete RHS with
/// cached pressure coefficients, and kernel-based pressure recovery.

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "sphereflow/fields.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/harmonics.hpp"
#include "sphereflow/interpolation.hpp"
#include "sphereflow/kernels.hpp"

namespace sphereflow {

struct PhysicalParams {
    double nu = 1e-4;    // viscosity, > 0
    double omega = 1.0;  // angular velocity, >= 0
    // Dropping the nonlinear term turns the system into pure rotating
    // diffusion; used by stability and eigen-decay tests.
    bool include_convection = true;
};

// Throws std::domain_error unless nu > 0 and omega >= 0.
void validate(const PhysicalParams& params);

// Benchmark forcing amplitude: 1 on [0, 10], then cos(pi t / 5) e^{(10-t)/5}
// (continuous at t = 10). Arguments beyond the nominal [0, 60] range keep
// using the decaying branch.
double benchmark_gamma(double t);

// Nonlinear convection (u . grad*) u of a divergence-free (or full-kind)
// expansion, sampled at the expansion's own nodes and projected onto the
// tangent planes there.
NodalField convection(const KernelExpansion& u);

// Coriolis term 2 omega x3 (x cross u) at the nodes; exactly tangential.
NodalField coriolis(const NodalField& u, const PhysicalParams& params);
NodalField coriolis(const KernelExpansion& u, const PhysicalParams& params);

// Exact solution u(t, x) = a(t) y_{l,k}(x) together with the forcing that
// makes it solve the projected momentum equation:
//   f = (a' + nu l(l+1) a) y + a^2 B(y, y) + a C(y),
// with the convection of the harmonic computed by exact polynomial calculus
// and everything projected onto tangent planes at the sample nodes. The
// params embedded here (nu, omega, include_convection) must match the solver
// configuration that consumes the forcing.
class ManufacturedProblem {
public:
    ManufacturedProblem(const HarmonicIndex& idx, const PhysicalParams& params,
                        std::function<double(double)> amplitude,
                        std::function<double(double)> amplitude_dot);

    // a(t) = exp(-nu l(l+1) t): the amplitude that kills the linear part of
    // the forcing, leaving f = a^2 B + a C.
    static ManufacturedProblem eigen_decay(const HarmonicIndex& idx,
                                           const PhysicalParams& params);

    const HarmonicIndex& index() const { return idx_; }
    const PhysicalParams& params() const { return params_; }
    double amplitude(double t) const { return a_(t); }

    Vec3 exact_velocity(double t, const SpherePoint& x) const;

    // Ambient (unprojected) B(y, y) of the unit-amplitude harmonic at x,
    // from the polynomial identity B_m = (w . grad) w_m / l(l+1) with
    // w = sqrt(l(l+1)) y; exposed for oracle comparison.
    Vec3 harmonic_convection(const SpherePoint& x) const;

    std::vector<Vec3> forcing_samples(double t, const PointSet& ps) const;

private:
    HarmonicIndex idx_;
    PhysicalParams params_;
    std::function<double(double)> a_;
    std::function<double(double)> adot_;
    double lambda_;
    std::array<CartesianPoly, 3> w_;
    std::array<std::array<CartesianPoly, 3>, 3> dw_; // dw_[m][i] = d w_m / d x_i
};

enum class ForcingKind { zero, benchmark_gamma_y30, manufactured, custom };

struct ForcingSpec {
    ForcingKind kind = ForcingKind::zero;
    // Required when kind == manufactured.
    std::shared_ptr<const ManufacturedProblem> manufactured;
    // Required when kind == custom: nodal samples at a given time.
    std::function<std::vector<Vec3>(double, const PointSet&)> custom;
};

// Samples f(t, .) at the nodes. benchmark_gamma_y30 is gamma(t) times the
// L2-normalized divergence-free harmonic of degree 3, order 0.
std::vector<Vec3> forcing_samples(const ForcingSpec& forcing, double t,
                                  const PointSet& ps);

// Full-kernel interpolation coefficients of the momentum residual
// f - B(u,u) - C(u) at one time; the input for pressure recovery, keyed by
// the time they were produced at.
struct PressureCoefficients {
    double time = 0.0;
    std::shared_ptr<const PointSet> ps;
    std::shared_ptr<const ZonalKernel> zonal;
    std::vector<Vec3> beta;
};

struct DiscreteRhs {
    NodalField g;               // nodal trace of the projected residual
    PressureCoefficients beta;  // cached for pressure recovery at this time
};

// g(alpha) at time t: interpolate the nodal residual f - B - C with the full
// kernel, then evaluate the divergence-free part (kernel exchange) at the
// nodes. The system must be full-kind, factorized, and share the expansion's
// nodes and zonal kernel.
DiscreteRhs discrete_rhs(const ReducedSystem& full_system, const KernelExpansion& u,
                         double t, const PhysicalParams& params,
                         const ForcingSpec& forcing);

// Reduced-coordinate shortcut for integrators: returns beta in frame
// coordinates, which equals A_div^{-1} g exactly (the projected RHS seen
// through the divergence-free Gram matrix), skipping the nodal evaluation.
Eigen::VectorXd projected_residual_reduced(const ReducedSystem& full_system,
                                           const KernelExpansion& u, double t,
                                           const PhysicalParams& params,
                                           const ForcingSpec& forcing);

// Pressure recovery p_h(x) = sum_j F'(x . x_j) (x - (x . x_j) x_j) . beta_j
// (the second-argument surface gradient of the scalar kernel against the
// cached coefficients). query_time must match the time the coefficients
// were produced at (StateError otherwise); the surface gradient of p_h is
// identically the curl-kind expansion with the same coefficients.
double pressure_recover(const PressureCoefficients& beta, const SpherePoint& x,
                        double query_time);
std::vector<double> pressure_at_nodes(const PressureCoefficients& beta,
                                      double query_time);

} // namespace sphereflow
