#pragma once

/// Discrete tangential vector fields on the sphere: nodal samples with
/// tangent-projected ingestion, kernel expansions with support-pruned
/// evaluation and analytic ambient Jacobians, discrete L2 diagnostics, and
/// snapshot export (CSV and JSON).

#include <memory>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/kernels.hpp"

namespace sphereflow {

// Tangent samples attached to a point set. Construction projects each sample
// onto the tangent plane of its node: relative normal components up to 1e-6
// are dropped silently, anything larger is rejected as non-tangential data.
class NodalField {
public:
    NodalField(std::shared_ptr<const PointSet> ps, std::vector<Vec3> samples);

    const PointSet& points() const { return *ps_; }
    const std::shared_ptr<const PointSet>& points_ptr() const { return ps_; }
    const std::vector<Vec3>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    std::shared_ptr<const PointSet> ps_;
    std::vector<Vec3> values_;
};

// Expansion sum_j K(x, x_j) alpha_j with one tangent coefficient per node.
// Immutable; coefficient updates build a new expansion.
class KernelExpansion {
public:
    KernelExpansion(MatrixKernel kernel, std::shared_ptr<const PointSet> ps,
                    std::vector<Vec3> coefficients);

    const MatrixKernel& kernel() const { return kernel_; }
    const PointSet& points() const { return *ps_; }
    const std::shared_ptr<const PointSet>& points_ptr() const { return ps_; }
    const std::vector<Vec3>& coefficients() const { return coeffs_; }
    std::size_t size() const { return coeffs_.size(); }

private:
    MatrixKernel kernel_;
    std::shared_ptr<const PointSet> ps_;
    std::vector<Vec3> coeffs_;
};

// Expansion value at x, skipping nodes outside the kernel support.
Vec3 evaluate(const KernelExpansion& e, const SpherePoint& x);

// Brute-force sum over every node; oracle for the pruned path.
Vec3 evaluate_unpruned(const KernelExpansion& e, const SpherePoint& x);

// Ambient Jacobian at x of the tangentially extended expansion field; the
// surface Jacobian is this times (I - x x^T). Supported for the div and
// full kinds with at least three zonal derivatives (families 2-4).
Mat3 evaluate_gradient(const KernelExpansion& e, const SpherePoint& x);

// sqrt((4 pi / N) sum |v_j|^2): quasi-uniform quadrature of the L2 norm.
// The scalar overload serves pressure samples.
double discrete_l2_norm(const NodalField& f);
double discrete_l2_norm(const std::vector<Vec3>& values);
double discrete_l2_norm(const std::vector<double>& values);

struct SnapshotMetadata {
    double time = 0.0;
    std::string kernel_spec; // e.g. "wendland4:eps=1"
    double eps = 1.0;
    double nu = 0.0;
    double omega = 0.0;
};

// CSV columns x,y,z,ux,uy,uz plus p when pressure is given; one node per row.
void write_snapshot_csv(const std::string& path, const PointSet& ps,
                        const std::vector<Vec3>& velocity,
                        const std::vector<double>* pressure = nullptr);

// JSON variant: {"metadata": {...}, "nodes": [[x,y,z,ux,uy,uz(,p)], ...]}.
void write_snapshot_json(const std::string& path, const PointSet& ps,
                         const std::vector<Vec3>& velocity,
                         const std::vector<double>* pressure,
                         const SnapshotMetadata& meta);

} // namespace sphereflow
