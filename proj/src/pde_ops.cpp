#include "sphereflow/pde_ops.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

namespace {

// ============================================================================
// shared argument checks
// ============================================================================

void check_same_nodes(const ReducedSystem& sys, const KernelExpansion& u) {
    bool same = sys.points_ptr() == u.points_ptr();
    if (!same && sys.points().size() == u.points().size()) {
        same = true;
        for (std::size_t j = 0; j < sys.points().size() && same; ++j)
            same = sys.points().points[j].v == u.points().points[j].v;
    }
    if (!same)
        throw std::domain_error(
            "discrete_rhs: velocity expansion and projection system use "
            "different node sets");
}

void check_compatible(const ReducedSystem& sys, const KernelExpansion& u) {
    if (sys.kernel().kind != MatrixKernelKind::full)
        throw std::domain_error(
            "discrete_rhs: projection system must use the full kernel");
    if (u.kernel().kind != MatrixKernelKind::div)
        throw std::domain_error(
            "discrete_rhs: velocity expansion must use the divergence-free "
            "kernel");
    const WendlandFunction& a = sys.kernel().zonal->wendland();
    const WendlandFunction& b = u.kernel().zonal->wendland();
    if (a.family() != b.family() || a.eps() != b.eps())
        throw std::domain_error(
            "discrete_rhs: velocity expansion and projection system use "
            "different zonal kernels");
    check_same_nodes(sys, u);
}

// Tangent-projected nodal samples of f - (u . grad*) u - 2 omega x3 (x cross u)
// at time t; the input of the projection solve.
std::vector<Vec3> momentum_residual(const ReducedSystem& full_system,
                                    const KernelExpansion& u, double t,
                                    const PhysicalParams& params,
                                    const ForcingSpec& forcing) {
    // The residual never reads nu, so nu = 0 (pure advection/rotation) is
    // fine here even though the physical configuration requires nu > 0.
    if (!(params.nu >= 0.0) || !std::isfinite(params.nu) ||
        !(params.omega >= 0.0) || !std::isfinite(params.omega))
        throw std::domain_error("discrete_rhs: invalid physical parameters");
    check_compatible(full_system, u);

    const PointSet& ps = full_system.points();
    const std::vector<Vec3> f = forcing_samples(forcing, t, ps);
    std::vector<Vec3> r(ps.size());
    parallel_for(ps.size(), [&](std::size_t j) {
        const SpherePoint& x = ps.points[j];
        const Vec3 uj = evaluate(u, x);
        Vec3 val = f[j];
        if (params.include_convection) val -= evaluate_gradient(u, x) * uj;
        val -= (2.0 * params.omega * x.z()) * x.v.cross(uj);
        val -= val.dot(x.v) * x.v;
        r[j] = val;
    });
    return r;
}

void check_pressure_bundle(const PressureCoefficients& beta, double query_time) {
    if (!beta.ps || !beta.zonal)
        throw std::domain_error("pressure_recover: empty coefficient bundle");
    if (beta.beta.size() != beta.ps->size())
        throw std::domain_error(
            "pressure_recover: coefficient count does not match the node set");
    if (std::abs(query_time - beta.time) >
        1e-12 * std::max(1.0, std::abs(beta.time)))
        throw StateError(
            "pressure_recover: coefficients are stale (produced at a "
            "different time than queried)");
}

} // namespace

// ============================================================================
// parameters and forcing amplitudes
// ============================================================================

void validate(const PhysicalParams& params) {
    if (!(params.nu > 0.0) || !std::isfinite(params.nu))
        throw std::domain_error("PhysicalParams: nu must be positive");
    if (!(params.omega >= 0.0) || !std::isfinite(params.omega))
        throw std::domain_error("PhysicalParams: omega must be non-negative");
}

double benchmark_gamma(double t) {
    if (t >= 0.0 && t <= 10.0) return 1.0;
    return std::cos(M_PI / 5.0 * t) * std::exp((10.0 - t) / 5.0);
}

// ============================================================================
// pointwise terms
// ============================================================================

NodalField convection(const KernelExpansion& u) {
    const PointSet& ps = u.points();
    std::vector<Vec3> out(ps.size());
    parallel_for(ps.size(), [&](std::size_t j) {
        const SpherePoint& x = ps.points[j];
        Vec3 b = evaluate_gradient(u, x) * evaluate(u, x);
        b -= b.dot(x.v) * x.v;
        out[j] = b;
    });
    return NodalField(u.points_ptr(), std::move(out));
}

NodalField coriolis(const NodalField& u, const PhysicalParams& params) {
    validate(params);
    const PointSet& ps = u.points();
    std::vector<Vec3> out(ps.size());
    for (std::size_t j = 0; j < ps.size(); ++j) {
        const SpherePoint& x = ps.points[j];
        out[j] = (2.0 * params.omega * x.z()) * x.v.cross(u.values()[j]);
    }
    return NodalField(u.points_ptr(), std::move(out));
}

NodalField coriolis(const KernelExpansion& u, const PhysicalParams& params) {
    validate(params);
    const PointSet& ps = u.points();
    std::vector<Vec3> out(ps.size());
    parallel_for(ps.size(), [&](std::size_t j) {
        const SpherePoint& x = ps.points[j];
        out[j] = (2.0 * params.omega * x.z()) * x.v.cross(evaluate(u, x));
    });
    return NodalField(u.points_ptr(), std::move(out));
}

// ============================================================================
// manufactured solution
// ============================================================================

ManufacturedProblem::ManufacturedProblem(const HarmonicIndex& idx,
                                         const PhysicalParams& params,
                                         std::function<double(double)> amplitude,
                                         std::function<double(double)> amplitude_dot)
    : idx_(idx), params_(params), a_(std::move(amplitude)),
      adot_(std::move(amplitude_dot)) {
    validate(params_);
    if (idx_.l < 1)
        throw std::domain_error(
            "ManufacturedProblem: vector harmonics require degree >= 1");
    if (!a_ || !adot_)
        throw std::domain_error(
            "ManufacturedProblem: amplitude and its derivative are required");
    lambda_ = harmonic_eigenvalue(idx_.l);
    w_ = lstar_polys(scalar_harmonic_poly(idx_));
    for (int m = 0; m < 3; ++m)
        for (int i = 0; i < 3; ++i) dw_[m][i] = w_[m].derivative(i);
}

ManufacturedProblem ManufacturedProblem::eigen_decay(const HarmonicIndex& idx,
                                                     const PhysicalParams& params) {
    const double rate = params.nu * harmonic_eigenvalue(idx.l);
    return ManufacturedProblem(
        idx, params, [rate](double t) { return std::exp(-rate * t); },
        [rate](double t) { return -rate * std::exp(-rate * t); });
}

Vec3 ManufacturedProblem::exact_velocity(double t, const SpherePoint& x) const {
    return a_(t) * vector_harmonic_div(idx_, x);
}

Vec3 ManufacturedProblem::harmonic_convection(const SpherePoint& x) const {
    // With w = sqrt(l(l+1)) y the ambient components are homogeneous
    // polynomials of degree l, and the radial correction -l w_m (w . x)
    // vanishes identically (w . x is the zero polynomial), leaving
    // B(y, y) = (w . grad) w / (l(l+1)) with plain ambient derivatives.
    const Vec3 w(w_[0].eval(x.v), w_[1].eval(x.v), w_[2].eval(x.v));
    Vec3 b;
    for (int m = 0; m < 3; ++m) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += w[i] * dw_[m][i].eval(x.v);
        b[m] = s;
    }
    return b / lambda_;
}

std::vector<Vec3> ManufacturedProblem::forcing_samples(double t,
                                                       const PointSet& ps) const {
    const double a = a_(t);
    const double linear = adot_(t) + params_.nu * lambda_ * a;
    const double rotation = 2.0 * params_.omega * a;
    std::vector<Vec3> out(ps.size());
    for (std::size_t j = 0; j < ps.size(); ++j) {
        const SpherePoint& x = ps.points[j];
        const Vec3 y = vector_harmonic_div(idx_, x);
        Vec3 f = linear * y;
        if (params_.include_convection) {
            Vec3 b = harmonic_convection(x);
            b -= b.dot(x.v) * x.v;
            f += (a * a) * b;
        }
        f += (rotation * x.z()) * x.v.cross(y);
        out[j] = f;
    }
    return out;
}

// ============================================================================
// forcing dispatch
// ============================================================================

std::vector<Vec3> forcing_samples(const ForcingSpec& forcing, double t,
                                  const PointSet& ps) {
    switch (forcing.kind) {
    case ForcingKind::zero:
        return std::vector<Vec3>(ps.size(), Vec3::Zero());
    case ForcingKind::benchmark_gamma_y30: {
        const double g = benchmark_gamma(t);
        const HarmonicIndex idx(3, 1);
        std::vector<Vec3> out(ps.size());
        for (std::size_t j = 0; j < ps.size(); ++j)
            out[j] = g * vector_harmonic_div(idx, ps.points[j]);
        return out;
    }
    case ForcingKind::manufactured:
        if (!forcing.manufactured)
            throw std::domain_error(
                "forcing_samples: manufactured problem is not set");
        return forcing.manufactured->forcing_samples(t, ps);
    case ForcingKind::custom: {
        if (!forcing.custom)
            throw std::domain_error("forcing_samples: custom callback is not set");
        std::vector<Vec3> out = forcing.custom(t, ps);
        if (out.size() != ps.size())
            throw std::domain_error(
                "forcing_samples: custom sample count does not match the "
                "node set");
        return out;
    }
    }
    throw std::logic_error("forcing_samples: unknown forcing kind");
}

// ============================================================================
// projected RHS and pressure recovery
// ============================================================================

DiscreteRhs discrete_rhs(const ReducedSystem& full_system, const KernelExpansion& u,
                         double t, const PhysicalParams& params,
                         const ForcingSpec& forcing) {
    const std::vector<Vec3> r = momentum_residual(full_system, u, t, params, forcing);
    std::vector<Vec3> beta = full_system.expand(full_system.solve(full_system.reduce(r)));

    PressureCoefficients cached;
    cached.time = t;
    cached.ps = full_system.points_ptr();
    cached.zonal = full_system.kernel().zonal;
    cached.beta = beta;

    const KernelExpansion div_part(
        MatrixKernel(MatrixKernelKind::div, full_system.kernel().zonal),
        full_system.points_ptr(), std::move(beta));
    const PointSet& ps = full_system.points();
    std::vector<Vec3> g(ps.size());
    parallel_for(ps.size(),
                 [&](std::size_t j) { g[j] = evaluate(div_part, ps.points[j]); });
    return DiscreteRhs{NodalField(full_system.points_ptr(), std::move(g)),
                       std::move(cached)};
}

Eigen::VectorXd projected_residual_reduced(const ReducedSystem& full_system,
                                           const KernelExpansion& u, double t,
                                           const PhysicalParams& params,
                                           const ForcingSpec& forcing) {
    const std::vector<Vec3> r = momentum_residual(full_system, u, t, params, forcing);
    return full_system.solve(full_system.reduce(r));
}

double pressure_recover(const PressureCoefficients& beta, const SpherePoint& x,
                        double query_time) {
    check_pressure_bundle(beta, query_time);
    const double cutoff = beta.zonal->support_cos();
    double p = 0.0;
    for (std::size_t j = 0; j < beta.ps->size(); ++j) {
        const Vec3& y = beta.ps->points[j].v;
        const double tj = x.v.dot(y);
        if (tj <= cutoff) continue;
        p += beta.zonal->eval(tj, 1) * (x.v - tj * y).dot(beta.beta[j]);
    }
    return p;
}

std::vector<double> pressure_at_nodes(const PressureCoefficients& beta,
                                      double query_time) {
    check_pressure_bundle(beta, query_time);
    const PointSet& ps = *beta.ps;
    std::vector<double> out(ps.size());
    parallel_for(ps.size(), [&](std::size_t j) {
        out[j] = pressure_recover(beta, ps.points[j], query_time);
    });
    return out;
}

} // namespace sphereflow
