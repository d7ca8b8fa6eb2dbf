#include "sphereflow/interpolation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

namespace {

// Fraction of nonzero off-diagonal blocks below which automatic mode picks
// the sparse path.
constexpr double kSparseDensityLimit = 0.25;

// Near-duplicate nodes make Gram rows numerically dependent; the angle is
// measured through |x cross y| (well conditioned near zero, unlike acos).
constexpr double kMinNodeSeparation = 1e-8;

// 2x2 tangent-frame reduction of one kernel block.
Eigen::Matrix2d reduce_block(const Mat3& k, const TangentFrame& fx,
                             const TangentFrame& fy) {
    Eigen::Matrix2d m;
    m(0, 0) = fx.e1.dot(k * fy.e1);
    m(0, 1) = fx.e1.dot(k * fy.e2);
    m(1, 0) = fx.e2.dot(k * fy.e1);
    m(1, 1) = fx.e2.dot(k * fy.e2);
    return m;
}

// Plain unblocked Cholesky scan used only to name the failing pivot after
// the fast factorization reports a numerical issue.
int find_failing_pivot(Eigen::MatrixXd m) {
    const Eigen::Index n = m.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = m(j, j) - m.row(j).head(j).squaredNorm();
        if (!(d > 0.0)) return static_cast<int>(j);
        const double l = std::sqrt(d);
        m(j, j) = l;
        for (Eigen::Index i = j + 1; i < n; ++i)
            m(i, j) = (m(i, j) - m.row(i).head(j).dot(m.row(j).head(j))) / l;
    }
    return -1;
}

void check_same_nodes(const ReducedSystem& sys, const NodalField& data,
                      const char* who) {
    if (sys.points_ptr() == data.points_ptr()) return;
    const auto& a = sys.points().points;
    const auto& b = data.points().points;
    if (a.size() == b.size()) {
        bool same = true;
        for (std::size_t j = 0; j < a.size() && same; ++j)
            same = (a[j].v == b[j].v);
        if (same) return;
    }
    throw std::domain_error(std::string(who) + ": data nodes differ from system nodes");
}

KernelExpansion solve_rekeyed(const ReducedSystem& sys, const NodalField& data,
                              MatrixKernelKind out_kind, const char* who) {
    check_same_nodes(sys, data, who);
    const Eigen::VectorXd c = sys.solve(sys.reduce(data.values()));
    return KernelExpansion(MatrixKernel(out_kind, sys.kernel().zonal),
                           sys.points_ptr(), sys.expand(c));
}

ReducedSystem assembled(std::shared_ptr<const PointSet> ps, MatrixKernel kernel,
                        SystemMode mode) {
    ReducedSystem sys(std::move(ps), std::move(kernel), mode);
    sys.factorize();
    return sys;
}

} // namespace

ReducedSystem::ReducedSystem(std::shared_ptr<const PointSet> ps, MatrixKernel kernel,
                             SystemMode mode)
    : ps_(std::move(ps)), kernel_(std::move(kernel)) {
    const auto& pts = ps_->points;
    const auto& frames = ps_->frames;
    const std::size_t n = pts.size();
    if (n == 0) throw std::domain_error("ReducedSystem: empty point set");
    const double cutoff = kernel_.support_cos();

    // One scan over pairs: reject near-duplicates and count the support
    // graph density for the automatic mode decision.
    std::size_t in_support = 0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
            const double t = pts[j].v.dot(pts[k].v);
            if (t > 0.9 && pts[j].v.cross(pts[k].v).norm() < kMinNodeSeparation)
                throw IllConditioningError("ReducedSystem: nodes " + std::to_string(j) +
                                               " and " + std::to_string(k) +
                                               " are closer than 1e-8 radians",
                                           static_cast<int>(k));
            if (t > cutoff) ++in_support;
        }
    }
    const double density =
        static_cast<double>(2 * in_support + n) / (static_cast<double>(n) * n);
    sparse_ = (mode == SystemMode::sparse) ||
              (mode == SystemMode::automatic && cutoff > -1.0 &&
               density < kSparseDensityLimit);

    if (!sparse_) {
        dense_.setZero(2 * n, 2 * n);
        parallel_for(n, [&](std::size_t j) {
            for (std::size_t k = j; k < n; ++k) {
                if (j != k && pts[j].v.dot(pts[k].v) <= cutoff) continue;
                const Eigen::Matrix2d block = reduce_block(
                    kernel_.eval(pts[j], pts[k]), frames[j], frames[k]);
                dense_.block<2, 2>(2 * j, 2 * k) = block;
                if (j != k) dense_.block<2, 2>(2 * k, 2 * j) = block.transpose();
            }
        });
    } else {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(8 * in_support + 4 * n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = j; k < n; ++k) {
                if (j != k && pts[j].v.dot(pts[k].v) <= cutoff) continue;
                const Eigen::Matrix2d block = reduce_block(
                    kernel_.eval(pts[j], pts[k]), frames[j], frames[k]);
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        const int row = static_cast<int>(2 * j) + a;
                        const int col = static_cast<int>(2 * k) + b;
                        trips.emplace_back(row, col, block(a, b));
                        if (j != k) trips.emplace_back(col, row, block(a, b));
                    }
                }
            }
        }
        sparse_mat_.resize(static_cast<Eigen::Index>(2 * n),
                           static_cast<Eigen::Index>(2 * n));
        sparse_mat_.setFromTriplets(trips.begin(), trips.end());
        sparse_mat_.makeCompressed();
    }
}

void ReducedSystem::factorize() {
    if (factorized_) return;
    if (!sparse_) {
        dense_llt_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(dense_);
        if (dense_llt_->info() != Eigen::Success)
            throw IllConditioningError("ReducedSystem: Cholesky factorization failed",
                                       find_failing_pivot(dense_));
    } else {
        sparse_llt_ = std::make_unique<SparseLLT>();
        sparse_llt_->compute(sparse_mat_);
        if (sparse_llt_->info() != Eigen::Success)
            throw IllConditioningError("ReducedSystem: Cholesky factorization failed",
                                       find_failing_pivot(dense_copy()));
    }
    factorized_ = true;
    ++factorizations_;
}

Eigen::VectorXd ReducedSystem::solve(const Eigen::VectorXd& rhs) const {
    if (!factorized_)
        throw StateError("ReducedSystem::solve: factorize() has not run");
    if (rhs.size() != static_cast<Eigen::Index>(size()))
        throw std::domain_error("ReducedSystem::solve: rhs size " +
                                std::to_string(rhs.size()) + " != " +
                                std::to_string(size()));
    Eigen::VectorXd x;
    if (!sparse_) {
        x = dense_llt_->solve(rhs);
        x += dense_llt_->solve(Eigen::VectorXd(rhs - dense_ * x));
    } else {
        x = sparse_llt_->solve(rhs);
        x += sparse_llt_->solve(Eigen::VectorXd(rhs - sparse_mat_ * x));
    }
    ++solves_;
    return x;
}

Eigen::VectorXd ReducedSystem::reduce(const std::vector<Vec3>& nodal) const {
    const std::size_t n = ps_->size();
    if (nodal.size() != n)
        throw std::domain_error("ReducedSystem::reduce: got " +
                                std::to_string(nodal.size()) + " vectors for " +
                                std::to_string(n) + " nodes");
    Eigen::VectorXd b(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        b(2 * j) = ps_->frames[j].e1.dot(nodal[j]);
        b(2 * j + 1) = ps_->frames[j].e2.dot(nodal[j]);
    }
    return b;
}

std::vector<Vec3> ReducedSystem::expand(const Eigen::VectorXd& reduced) const {
    const std::size_t n = ps_->size();
    if (reduced.size() != static_cast<Eigen::Index>(2 * n))
        throw std::domain_error("ReducedSystem::expand: bad coordinate count");
    std::vector<Vec3> nodal(n);
    for (std::size_t j = 0; j < n; ++j)
        nodal[j] = reduced(2 * j) * ps_->frames[j].e1 +
                   reduced(2 * j + 1) * ps_->frames[j].e2;
    return nodal;
}

Eigen::VectorXd ReducedSystem::apply(const Eigen::VectorXd& reduced) const {
    if (reduced.size() != static_cast<Eigen::Index>(size()))
        throw std::domain_error("ReducedSystem::apply: bad coordinate count");
    if (!sparse_) return dense_ * reduced;
    return sparse_mat_ * reduced;
}

Eigen::MatrixXd ReducedSystem::dense_copy() const {
    if (!sparse_) return dense_;
    return Eigen::MatrixXd(sparse_mat_);
}

std::size_t ReducedSystem::stored_nonzeros() const {
    if (!sparse_) return static_cast<std::size_t>(dense_.size());
    return static_cast<std::size_t>(sparse_mat_.nonZeros());
}

KernelExpansion interpolate(const ReducedSystem& sys, const NodalField& data) {
    return solve_rekeyed(sys, data, sys.kernel().kind, "interpolate");
}

KernelExpansion interpolate(const MatrixKernel& kernel, const NodalField& data,
                            SystemMode mode) {
    return interpolate(assembled(data.points_ptr(), kernel, mode), data);
}

KernelExpansion leray_project(const ReducedSystem& full_system, const NodalField& data) {
    if (full_system.kernel().kind != MatrixKernelKind::full)
        throw std::domain_error("leray_project: system kind must be full, got " +
                                matrix_kernel_kind_name(full_system.kernel().kind));
    return solve_rekeyed(full_system, data, MatrixKernelKind::div, "leray_project");
}

KernelExpansion leray_project(std::shared_ptr<const ZonalKernel> zonal,
                              const NodalField& data, SystemMode mode) {
    return leray_project(assembled(data.points_ptr(),
                                   MatrixKernel(MatrixKernelKind::full, std::move(zonal)),
                                   mode),
                         data);
}

KernelExpansion curl_project(const ReducedSystem& full_system, const NodalField& data) {
    if (full_system.kernel().kind != MatrixKernelKind::full)
        throw std::domain_error("curl_project: system kind must be full, got " +
                                matrix_kernel_kind_name(full_system.kernel().kind));
    return solve_rekeyed(full_system, data, MatrixKernelKind::curl, "curl_project");
}

KernelExpansion curl_project(std::shared_ptr<const ZonalKernel> zonal,
                             const NodalField& data, SystemMode mode) {
    return curl_project(assembled(data.points_ptr(),
                                  MatrixKernel(MatrixKernelKind::full, std::move(zonal)),
                                  mode),
                        data);
}

KernelExpansion ritz_project(const ReducedSystem& helmholtz_system, const NodalField& rhs) {
    if (helmholtz_system.kernel().kind != MatrixKernelKind::helmholtz_div)
        throw std::domain_error("ritz_project: system kind must be helmholtz_div, got " +
                                matrix_kernel_kind_name(helmholtz_system.kernel().kind));
    return solve_rekeyed(helmholtz_system, rhs, MatrixKernelKind::div, "ritz_project");
}

KernelExpansion ritz_project(std::shared_ptr<const ZonalKernel> zonal,
                             const NodalField& rhs, SystemMode mode) {
    return ritz_project(
        assembled(rhs.points_ptr(),
                  MatrixKernel(MatrixKernelKind::helmholtz_div, std::move(zonal)), mode),
        rhs);
}

} // namespace sphereflow
