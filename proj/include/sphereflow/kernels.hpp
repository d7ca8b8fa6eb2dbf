#pragma once

/// Compactly supported Wendland radial kernels, the induced zonal kernels
/// F(t) = psi(sqrt(2-2t)/eps) on the sphere with analytic derivative tables,
/// and the matrix-valued tangential kernels built from them (divergence-free,
/// curl-free, their sum, the surface Laplacian of the divergence-free kernel,
/// and the Helmholtz combination).
///
/// All derivative tables are exact integer-coefficient polynomial forms; the
/// zonal derivatives use the divided-difference operator (Dg)(r) = -g'(r)/r,
/// for which F^(k)(t) = eps^(-2k) (D^k psi)(r(t)) with r(t) = sqrt(2-2t)/eps.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow {

// Radial basis function psi(r) = (1-r)_+^a q(r) from the family table.
// Families 1..4 are C^2, C^4, C^6, C^8 on R^3 respectively; the scaled kernel
// is psi(r/eps).
class WendlandFunction {
public:
    WendlandFunction(int family, double eps);

    int family() const { return family_; }
    double eps() const { return eps_; }
    double sigma() const { return sigma_; }
    // Highest 1-d radial derivative available analytically (2 for family 1,
    // 4 for families 2-4).
    int radial_budget() const { return family_ == 1 ? 2 : 4; }
    // Highest k with F^(k) finite at t=1 (equals the family index).
    int zonal_budget() const { return family_; }

    // psi^(k) as a plain polynomial on [0,1) (zero outside).
    const std::vector<long long>& radial_poly(int k) const { return deriv_[k]; }

private:
    int family_;
    double eps_;
    double sigma_;
    std::array<std::vector<long long>, 5> deriv_;
};

// psi^(k)(r/eps)/eps^k; identically zero for r/eps >= 1.
// Throws UnsupportedDerivativeError when k exceeds the family's radial budget.
double eval_wendland(const WendlandFunction& w, double r, int k = 0);

// Parses "wendland{1..4}" or "wendland{1..4}:eps=<float>" (eps defaults to 1).
WendlandFunction parse_kernel_spec(const std::string& spec);
std::string kernel_spec_string(const WendlandFunction& w);

// Zonal kernel F(t) = psi(sqrt(2-2t)/eps) with derivatives up to order 4.
// The divided derivatives D^k psi are stored as exact rational forms
// P_k(r)/r^{m_k}; m_k = 0 exactly when k is within the family's zonal budget,
// which is why F^(k)(1) exists only for k <= family index.
class ZonalKernel {
public:
    explicit ZonalKernel(WendlandFunction w);

    const WendlandFunction& wendland() const { return w_; }
    double eps() const { return w_.eps(); }

    // F^(k)(t). Throws domain_error for |t| > 1 + 1e-12 and
    // UnsupportedDerivativeError for k > 4 or for t = 1 with k above the
    // family's zonal budget (the limit is infinite there).
    // At t = 1 itself the analytic limits are, scaled by eps^(2k):
    //   family 1: F'   = 20
    //   family 2: F''  = 56, 1680
    //   family 3: F''' = 22, 528, 22176
    //   family 4: F'''' = 130, 3432, 102960, 5765760
    // (Taylor coefficients of psi at 0 fed through the divided derivatives.)
    double eval(double t, int k = 0) const;

    // F^(k) parametrized by the scaled chordal distance rho = |x - y|/eps
    // instead of t. Near t = 1 the map t -> rho is ill-conditioned; callers
    // holding a well-conditioned separation (e.g. |x cross y|) should derive
    // rho from it and use this entry point so that kernel factors built from
    // the same separation stay mutually consistent. rho must be >= 0.
    double eval_at_separation(double rho, int k = 0) const;

    // Stable near-diagonal combinations (all have limit 0 at t = 1):
    //   weighted_second = (1-t^2)   F''(t)   (all families)
    //   weighted_third  = (1-t^2)   F'''(t)  (families 2-4)
    //   weighted_fourth = (1-t^2)^2 F''''(t) (families 2-4)
    double weighted_second(double t) const;
    double weighted_third(double t) const;
    double weighted_fourth(double t) const;

    // Support threshold 1 - eps^2/2: the kernel and all its derivatives
    // vanish identically for x.y <= this value (below -1 for eps >= 2, in
    // which case nothing is pruned).
    double support_cos() const { return support_cos_; }

private:
    struct RationalForm {
        std::vector<long long> num; // numerator polynomial coefficients
        int pow_r = 0;              // denominator power of r
    };
    double eval_form(const RationalForm& f, double r, int extra_pow) const;

    WendlandFunction w_;
    std::array<RationalForm, 5> dtab_; // D^k psi
    double support_cos_;
};

enum class MatrixKernelKind { div, curl, full, laplace_div, helmholtz_div };
MatrixKernelKind parse_matrix_kernel_kind(const std::string& name);
std::string matrix_kernel_kind_name(MatrixKernelKind kind);

// Divergence-free kernel: applying the surface curl to F(x.y) in each
// argument gives, with t = x.y and u = x cross y,
//   Phi_div(x,y) = -F''(t) u u^T + F'(t) (t I - y x^T).
// Columns map T_y to T_x; the kernel vanishes for x.y below the support
// threshold. Well defined for every family including the diagonal.
Mat3 eval_div_kernel(const ZonalKernel& zk, const SpherePoint& x,
                     const SpherePoint& y);

// Curl-free kernel: projected gradients in both arguments,
//   Phi_curl(x,y) = F''(t) (y - t x)(x - t y)^T
//                 + F'(t) (I - x x^T - y y^T + t x y^T).
Mat3 eval_curl_kernel(const ZonalKernel& zk, const SpherePoint& x,
                      const SpherePoint& y);

// Entrywise sum of the previous two.
Mat3 eval_full_kernel(const ZonalKernel& zk, const SpherePoint& x,
                      const SpherePoint& y);

// Surface Laplacian (in x) of the divergence-free kernel: the scalar zonal
// Laplacian G(t) = (1-t^2)F''(t) - 2t F'(t) replaces F before the same
// machinery (valid because both operators are diagonal on the zonal
// expansion):
//   Lap Phi_div(x,y) = -G''(t) u u^T + G'(t) (t I - y x^T).
// Requires four zonal derivatives: families 2-4 only.
Mat3 eval_laplace_div_kernel(const ZonalKernel& zk, const SpherePoint& x,
                             const SpherePoint& y);

// (-Lap + id) applied to the divergence-free kernel, as the exact
// floating-point difference div - laplace_div.
Mat3 eval_helmholtz_div_kernel(const ZonalKernel& zk, const SpherePoint& x,
                               const SpherePoint& y);

// Ambient Jacobian A of the single-pair field x -> Phi_div(x,y) alpha
// (A[m][i] = d/dx_i of component m, with x treated as a free ambient point).
// The surface Jacobian of the field is A (I - x x^T). Families 2-4.
Mat3 eval_div_kernel_jacobian(const ZonalKernel& zk, const SpherePoint& x,
                              const SpherePoint& y, const Vec3& alpha);

// Same for the curl-free kernel: Jacobian of x -> Phi_curl(x,y) alpha.
Mat3 eval_curl_kernel_jacobian(const ZonalKernel& zk, const SpherePoint& x,
                               const SpherePoint& y, const Vec3& alpha);

// Matrix kernel handle: a kind plus the shared zonal table.
struct MatrixKernel {
    MatrixKernelKind kind = MatrixKernelKind::div;
    std::shared_ptr<const ZonalKernel> zonal;

    MatrixKernel() = default;
    MatrixKernel(MatrixKernelKind k, std::shared_ptr<const ZonalKernel> z)
        : kind(k), zonal(std::move(z)) {}

    Mat3 eval(const SpherePoint& x, const SpherePoint& y) const;
    double support_cos() const { return zonal->support_cos(); }
};

} // namespace sphereflow
