#pragma once

/// Kernel collocation systems in tangent-frame coordinates: assembly of the
/// reduced 2N x 2N matrices, cached Cholesky factorizations (dense or
/// sparse), interpolation, and the kernel-exchange projectors (approximate
/// Leray, curl-free complement, Helmholtz Ritz).

#include <memory>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Sparse>

#include "sphereflow/fields.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/kernels.hpp"

namespace sphereflow {

// Storage/factorization strategy. `automatic` picks sparse when the kernel
// support makes the block density small, dense otherwise.
enum class SystemMode { automatic, dense, sparse };

// The 3N x 3N collocation system A[(j),(k)] = K(x_j, x_k) reduced to tangent
// coordinates: entry (2j+a, 2k+b) = e_j^a . (K(x_j, x_k) e_k^b) with the
// node frames e^1, e^2. Symmetric (blocks are mirrored explicitly) and, for
// the div/curl/full/helmholtz_div kinds, positive definite, so Cholesky
// applies. The laplace_div system is negative definite (the Laplacian is a
// negative operator): assemble it as a cached operator matrix only, since
// factorize() rejects it.
//
// Construction assembles the matrix only; factorize() computes and caches
// the Cholesky factor, and solve() reuses it (read-only, safe to share
// across threads). Instrumentation counters expose the reuse behaviour.
class ReducedSystem {
public:
    // Throws IllConditioningError when two nodes lie closer than 1e-8
    // radians (the resulting Gram rows are numerically dependent).
    ReducedSystem(std::shared_ptr<const PointSet> ps, MatrixKernel kernel,
                  SystemMode mode = SystemMode::automatic);

    const PointSet& points() const { return *ps_; }
    const std::shared_ptr<const PointSet>& points_ptr() const { return ps_; }
    const MatrixKernel& kernel() const { return kernel_; }
    std::size_t size() const { return 2 * ps_->size(); }
    bool is_sparse() const { return sparse_; }
    bool is_factorized() const { return factorized_; }

    // Computes the Cholesky factor once; later calls are no-ops. Throws
    // IllConditioningError carrying the failing pivot index when the matrix
    // is not numerically positive definite.
    void factorize();

    // Solves A x = rhs with one step of iterative refinement. Throws
    // StateError before factorize() has run.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    // Frame transport: nodal tangent vectors to reduced coordinates and back.
    Eigen::VectorXd reduce(const std::vector<Vec3>& nodal) const;
    std::vector<Vec3> expand(const Eigen::VectorXd& reduced) const;

    // Matrix-vector product with the assembled matrix (no factorization
    // required); this is how the operator-valued kinds are meant to be used.
    Eigen::VectorXd apply(const Eigen::VectorXd& reduced) const;

    // Dense view of the assembled matrix (copies the sparse storage).
    Eigen::MatrixXd dense_copy() const;
    std::size_t stored_nonzeros() const;

    long factorization_count() const { return factorizations_; }
    long solve_count() const { return solves_; }

private:
    using SparseLLT = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                                           Eigen::AMDOrdering<int>>;

    std::shared_ptr<const PointSet> ps_;
    MatrixKernel kernel_;
    bool sparse_ = false;
    bool factorized_ = false;
    Eigen::MatrixXd dense_;
    Eigen::SparseMatrix<double> sparse_mat_;
    std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> dense_llt_;
    std::unique_ptr<SparseLLT> sparse_llt_;
    long factorizations_ = 0;
    mutable long solves_ = 0;
};

// Collocation interpolant of the data through the system's kernel: the
// returned expansion reproduces the (tangent-projected) data at every node
// up to the solver tolerance. The system must be factorized.
KernelExpansion interpolate(const ReducedSystem& sys, const NodalField& data);

// One-shot convenience: assembles, factorizes, and solves.
KernelExpansion interpolate(const MatrixKernel& kernel, const NodalField& data,
                            SystemMode mode = SystemMode::automatic);

// Approximate Leray projector: interpolate with the full kernel, then re-key
// the coefficients to the divergence-free kernel (kernel exchange). The
// system passed in must have the full kind.
KernelExpansion leray_project(const ReducedSystem& full_system, const NodalField& data);
KernelExpansion leray_project(std::shared_ptr<const ZonalKernel> zonal,
                              const NodalField& data,
                              SystemMode mode = SystemMode::automatic);

// Curl-free complement of the Leray projector: same solve, coefficients
// re-keyed to the curl-free kernel. leray + curl sum to the full interpolant.
KernelExpansion curl_project(const ReducedSystem& full_system, const NodalField& data);
KernelExpansion curl_project(std::shared_ptr<const ZonalKernel> zonal,
                             const NodalField& data,
                             SystemMode mode = SystemMode::automatic);

// Ritz projection through the Helmholtz operator: solves the collocation
// system assembled from (-Lap + id) applied to the divergence-free kernel
// (system kind helmholtz_div) against samples of (-Lap + id)u, and returns
// the divergence-free expansion satisfying those equations at the nodes.
KernelExpansion ritz_project(const ReducedSystem& helmholtz_system, const NodalField& rhs);
KernelExpansion ritz_project(std::shared_ptr<const ZonalKernel> zonal,
                             const NodalField& rhs,
                             SystemMode mode = SystemMode::automatic);

} // namespace sphereflow
