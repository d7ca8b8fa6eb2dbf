#include "sphereflow/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

using Poly = std::vector<long long>;

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

Poly poly_derivative(const Poly& p) {
    if (p.size() <= 1) return {0};
    Poly out(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i)
        out[i - 1] = p[i] * static_cast<long long>(i);
    return out;
}

// (1-r)^a with exact binomial coefficients.
Poly one_minus_r_pow(int a) {
    Poly out(a + 1);
    long long binom = 1;
    for (int k = 0; k <= a; ++k) {
        out[k] = (k % 2 == 0) ? binom : -binom;
        binom = binom * (a - k) / (k + 1);
    }
    return out;
}

double poly_eval(const Poly& p, double r) {
    double v = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) v = v * r + static_cast<double>(p[i]);
    return v;
}

struct FamilyData {
    int support_exponent;
    Poly factor;
    double sigma;
};

const FamilyData& family_data(int family) {
    static const FamilyData table[4] = {
        {4, {1, 4}, 2.5},
        {6, {3, 18, 35}, 3.5},
        {8, {1, 8, 25, 32}, 4.5},
        {10, {5, 50, 210, 450, 429}, 5.5},
    };
    if (family < 1 || family > 4)
        throw std::domain_error("WendlandFunction: family must be in 1..4");
    return table[family - 1];
}

constexpr double kDiagBand = 1e-9;   // 1 - t below this uses the stable path
constexpr double kCrossGuard = 1e-28; // |x cross y|^2 below this is exact overlap

Mat3 skew(const Vec3& y) {
    Mat3 s;
    s << 0.0, -y[2], y[1], y[2], 0.0, -y[0], -y[1], y[0], 0.0;
    return s;
}

// Scaled chordal separation for the zonal tables, taken from whichever of t
// and u2 = |x cross y|^2 is well conditioned. 1 - t loses all precision as
// t -> 1 while u2 (= 1 - t^2 for unit vectors) keeps it, so inside the
// near-diagonal band rho is rebuilt from u2; deriving every kernel factor
// from this one rho keeps the rank-structured terms consistent with the
// u u^T outer products as x -> y.
double kernel_rho(const ZonalKernel& zk, double t, double u2) {
    if (1.0 - t <= kDiagBand)
        return std::sqrt(2.0 * u2 / (1.0 + t)) / zk.eps();
    return std::sqrt(2.0 - 2.0 * t) / zk.eps();
}

} // namespace

// ---- WendlandFunction -------------------------------------------------------

WendlandFunction::WendlandFunction(int family, double eps)
    : family_(family), eps_(eps) {
    const auto& data = family_data(family);
    if (!(eps > 0.0))
        throw std::domain_error("WendlandFunction: eps must be positive");
    sigma_ = data.sigma;
    deriv_[0] = poly_mul(one_minus_r_pow(data.support_exponent), data.factor);
    for (int k = 1; k <= 4; ++k) deriv_[k] = poly_derivative(deriv_[k - 1]);
}

double eval_wendland(const WendlandFunction& w, double r, int k) {
    if (r < 0.0) throw std::domain_error("eval_wendland: radius must be >= 0");
    if (k < 0 || k > w.radial_budget())
        throw UnsupportedDerivativeError(
            "eval_wendland: derivative order " + std::to_string(k) +
            " exceeds the budget of family " + std::to_string(w.family()));
    const double s = r / w.eps();
    if (s >= 1.0) return 0.0;
    return poly_eval(w.radial_poly(k), s) / std::pow(w.eps(), k);
}

WendlandFunction parse_kernel_spec(const std::string& spec) {
    const std::string prefix = "wendland";
    if (spec.rfind(prefix, 0) != 0)
        throw FormatError("kernel spec must start with 'wendland': " + spec);
    std::size_t pos = prefix.size();
    if (pos >= spec.size() || spec[pos] < '1' || spec[pos] > '4')
        throw FormatError("kernel spec needs a family digit in 1..4: " + spec);
    const int family = spec[pos] - '0';
    ++pos;
    double eps = 1.0;
    if (pos < spec.size()) {
        const std::string eps_key = ":eps=";
        if (spec.compare(pos, eps_key.size(), eps_key) != 0)
            throw FormatError("kernel spec expects ':eps=<float>' after the family: " +
                              spec);
        pos += eps_key.size();
        std::size_t used = 0;
        try {
            eps = std::stod(spec.substr(pos), &used);
        } catch (const std::exception&) {
            throw FormatError("kernel spec has an unparseable eps: " + spec);
        }
        if (pos + used != spec.size())
            throw FormatError("kernel spec has trailing characters: " + spec);
        if (!(eps > 0.0)) throw FormatError("kernel spec needs eps > 0: " + spec);
    }
    return WendlandFunction(family, eps);
}

std::string kernel_spec_string(const WendlandFunction& w) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "wendland%d:eps=%.17g", w.family(), w.eps());
    return buf;
}

// ---- ZonalKernel ------------------------------------------------------------

ZonalKernel::ZonalKernel(WendlandFunction w) : w_(std::move(w)) {
    // D^k psi by iterating (Dg)(r) = -g'(r)/r on P/r^m forms:
    // numerator coefficients map as Q_i = (m - i) P_i with m -> m + 2, then
    // factors of r cancel while the constant term is zero.
    dtab_[0].num = w_.radial_poly(0);
    dtab_[0].pow_r = 0;
    for (int k = 1; k <= 4; ++k) {
        const auto& prev = dtab_[k - 1];
        RationalForm next;
        next.num.resize(prev.num.size());
        for (std::size_t i = 0; i < prev.num.size(); ++i)
            next.num[i] = (static_cast<long long>(prev.pow_r) -
                           static_cast<long long>(i)) *
                          prev.num[i];
        next.pow_r = prev.pow_r + 2;
        while (next.pow_r > 0 && !next.num.empty() && next.num.front() == 0) {
            next.num.erase(next.num.begin());
            --next.pow_r;
        }
        while (!next.num.empty() && next.num.back() == 0) next.num.pop_back();
        dtab_[k] = std::move(next);
    }
    // The reduction must discover exactly the family's smoothness.
    for (int k = 0; k <= w_.family() && k <= 4; ++k) assert(dtab_[k].pow_r == 0);
    support_cos_ = 1.0 - 0.5 * w_.eps() * w_.eps();
}

double ZonalKernel::eval_form(const RationalForm& f, double r, int extra_pow) const {
    double v = poly_eval(f.num, r);
    int diff = extra_pow - f.pow_r;
    for (; diff > 0; --diff) v *= r;
    for (; diff < 0; ++diff) v /= r;
    return v;
}

double ZonalKernel::eval(double t, int k) const {
    if (std::abs(t) > 1.0 + 1e-12)
        throw std::domain_error("ZonalKernel: t outside [-1, 1]");
    t = std::clamp(t, -1.0, 1.0);
    return eval_at_separation(std::sqrt(std::max(0.0, 2.0 - 2.0 * t)) / eps(),
                              k);
}

double ZonalKernel::eval_at_separation(double rho, int k) const {
    if (k < 0 || k > 4)
        throw UnsupportedDerivativeError("ZonalKernel: derivative order " +
                                         std::to_string(k) + " not tabulated");
    if (rho < 0.0)
        throw std::domain_error("ZonalKernel: separation must be >= 0");
    if (rho >= 1.0) return 0.0;
    if (rho == 0.0 && dtab_[k].pow_r > 0)
        throw UnsupportedDerivativeError(
            "ZonalKernel: F^(" + std::to_string(k) +
            ") diverges at t=1 for family " + std::to_string(w_.family()));
    const double inv_eps2 = 1.0 / (eps() * eps());
    return std::pow(inv_eps2, k) * eval_form(dtab_[k], rho, 0);
}

double ZonalKernel::weighted_second(double t) const {
    if (std::abs(t) > 1.0 + 1e-12)
        throw std::domain_error("ZonalKernel: t outside [-1, 1]");
    t = std::clamp(t, -1.0, 1.0);
    const double rho = std::sqrt(std::max(0.0, 2.0 - 2.0 * t)) / eps();
    if (rho >= 1.0) return 0.0;
    // (1-t^2) F'' = ((1+t)/2) eps^-2 [rho^2 D^2 psi](rho)
    return 0.5 * (1.0 + t) / (eps() * eps()) * eval_form(dtab_[2], rho, 2);
}

double ZonalKernel::weighted_third(double t) const {
    if (w_.family() < 2)
        throw UnsupportedDerivativeError(
            "ZonalKernel: (1-t^2)F''' unbounded for family 1");
    if (std::abs(t) > 1.0 + 1e-12)
        throw std::domain_error("ZonalKernel: t outside [-1, 1]");
    t = std::clamp(t, -1.0, 1.0);
    const double rho = std::sqrt(std::max(0.0, 2.0 - 2.0 * t)) / eps();
    if (rho >= 1.0) return 0.0;
    const double inv_eps2 = 1.0 / (eps() * eps());
    return 0.5 * (1.0 + t) * inv_eps2 * inv_eps2 * eval_form(dtab_[3], rho, 2);
}

double ZonalKernel::weighted_fourth(double t) const {
    if (w_.family() < 2)
        throw UnsupportedDerivativeError(
            "ZonalKernel: (1-t^2)^2 F'''' unbounded for family 1");
    if (std::abs(t) > 1.0 + 1e-12)
        throw std::domain_error("ZonalKernel: t outside [-1, 1]");
    t = std::clamp(t, -1.0, 1.0);
    const double rho = std::sqrt(std::max(0.0, 2.0 - 2.0 * t)) / eps();
    if (rho >= 1.0) return 0.0;
    const double q = 0.5 * (1.0 + t);
    const double inv_eps2 = 1.0 / (eps() * eps());
    return q * q * inv_eps2 * inv_eps2 * eval_form(dtab_[4], rho, 4);
}

// ---- matrix kernels ---------------------------------------------------------

MatrixKernelKind parse_matrix_kernel_kind(const std::string& name) {
    if (name == "div") return MatrixKernelKind::div;
    if (name == "curl") return MatrixKernelKind::curl;
    if (name == "full") return MatrixKernelKind::full;
    if (name == "laplace_div") return MatrixKernelKind::laplace_div;
    if (name == "helmholtz_div") return MatrixKernelKind::helmholtz_div;
    throw FormatError("unknown matrix kernel kind: " + name);
}

std::string matrix_kernel_kind_name(MatrixKernelKind kind) {
    switch (kind) {
        case MatrixKernelKind::div: return "div";
        case MatrixKernelKind::curl: return "curl";
        case MatrixKernelKind::full: return "full";
        case MatrixKernelKind::laplace_div: return "laplace_div";
        case MatrixKernelKind::helmholtz_div: return "helmholtz_div";
    }
    throw std::logic_error("unreachable");
}

Mat3 eval_div_kernel(const ZonalKernel& zk, const SpherePoint& x,
                     const SpherePoint& y) {
    const double t = x.v.dot(y.v);
    if (t <= zk.support_cos()) return Mat3::Zero();
    const Vec3 u = x.v.cross(y.v);
    const double u2 = u.squaredNorm();
    const double rho = kernel_rho(zk, t, u2);
    const Mat3 second = zk.eval_at_separation(rho, 1) *
                        (t * Mat3::Identity() - y.v * x.v.transpose());
    if (1.0 - t <= kDiagBand && u2 < kCrossGuard) return second;
    return -zk.eval_at_separation(rho, 2) * (u * u.transpose()) + second;
}

Mat3 eval_curl_kernel(const ZonalKernel& zk, const SpherePoint& x,
                      const SpherePoint& y) {
    const double t = x.v.dot(y.v);
    if (t <= zk.support_cos()) return Mat3::Zero();
    const Vec3 v = y.v - t * x.v; // P_x y
    const Vec3 w = x.v - t * y.v; // P_y x
    const double u2 = x.v.cross(y.v).squaredNorm();
    const double rho = kernel_rho(zk, t, u2);
    const Mat3 second = zk.eval_at_separation(rho, 1) *
                        (Mat3::Identity() - x.v * x.v.transpose() -
                         y.v * y.v.transpose() + t * x.v * y.v.transpose());
    if (1.0 - t <= kDiagBand && u2 < kCrossGuard) return second;
    return zk.eval_at_separation(rho, 2) * (v * w.transpose()) + second;
}

Mat3 eval_full_kernel(const ZonalKernel& zk, const SpherePoint& x,
                      const SpherePoint& y) {
    return eval_div_kernel(zk, x, y) + eval_curl_kernel(zk, x, y);
}

Mat3 eval_laplace_div_kernel(const ZonalKernel& zk, const SpherePoint& x,
                             const SpherePoint& y) {
    if (zk.wendland().family() < 2)
        throw UnsupportedDerivativeError(
            "eval_laplace_div_kernel: family 1 lacks the required four zonal "
            "derivatives");
    const double t = x.v.dot(y.v);
    if (t <= zk.support_cos()) return Mat3::Zero();
    const Vec3 u = x.v.cross(y.v);
    const double u2 = u.squaredNorm();
    const double rho = kernel_rho(zk, t, u2);
    const double f1 = zk.eval_at_separation(rho, 1);
    const double f2 = zk.eval_at_separation(rho, 2);
    if (1.0 - t <= kDiagBand && u2 < kCrossGuard) {
        // Exact overlap: the (1-t^2)-weighted terms vanish in the limit.
        const double gp = -4.0 * t * f2 - 2.0 * f1;
        return gp * (t * Mat3::Identity() - y.v * x.v.transpose());
    }
    const double f3 = zk.eval_at_separation(rho, 3);
    const double f4 = zk.eval_at_separation(rho, 4);
    // u2 stands in for 1 - t^2 (equal for unit vectors): it keeps the
    // weighted third/fourth derivatives consistent with the u u^T factor,
    // which 1 - t*t cannot do once t rounds to 1.
    const double gp = u2 * f3 - 4.0 * t * f2 - 2.0 * f1;
    const double gpp = u2 * f4 - 6.0 * t * f3 - 6.0 * f2;
    return -gpp * (u * u.transpose()) +
           gp * (t * Mat3::Identity() - y.v * x.v.transpose());
}

Mat3 eval_helmholtz_div_kernel(const ZonalKernel& zk, const SpherePoint& x,
                               const SpherePoint& y) {
    return eval_div_kernel(zk, x, y) - eval_laplace_div_kernel(zk, x, y);
}

Mat3 eval_div_kernel_jacobian(const ZonalKernel& zk, const SpherePoint& x,
                              const SpherePoint& y, const Vec3& alpha) {
    if (zk.wendland().family() < 2)
        throw UnsupportedDerivativeError(
            "eval_div_kernel_jacobian: family 1 lacks the required bounded "
            "second derivative");
    const double t = x.v.dot(y.v);
    if (t <= zk.support_cos()) return Mat3::Zero();
    const Vec3 u = x.v.cross(y.v);
    const double u2 = u.squaredNorm();
    const double s = u.dot(alpha);
    const double rho = kernel_rho(zk, t, u2);
    const double f1 = zk.eval_at_separation(rho, 1);
    const double f2 = zk.eval_at_separation(rho, 2);
    Mat3 a = f2 * (t * alpha - x.v.dot(alpha) * y.v) * y.v.transpose() +
             f1 * (alpha * y.v.transpose() - y.v * alpha.transpose()) -
             f2 * u * y.v.cross(alpha).transpose() + (f2 * s) * skew(y.v);
    if (!(1.0 - t <= kDiagBand && u2 < kCrossGuard))
        a -= zk.eval_at_separation(rho, 3) * s * u * y.v.transpose();
    return a;
}

Mat3 eval_curl_kernel_jacobian(const ZonalKernel& zk, const SpherePoint& x,
                               const SpherePoint& y, const Vec3& alpha) {
    if (zk.wendland().family() < 2)
        throw UnsupportedDerivativeError(
            "eval_curl_kernel_jacobian: family 1 lacks the required bounded "
            "second derivative");
    const double t = x.v.dot(y.v);
    if (t <= zk.support_cos()) return Mat3::Zero();
    const double u2 = x.v.cross(y.v).squaredNorm();
    const double rho = kernel_rho(zk, t, u2);
    const double f1 = zk.eval_at_separation(rho, 1);
    const double f2 = zk.eval_at_separation(rho, 2);
    const Vec3 v = y.v - t * x.v;    // P_x y
    const Vec3 w = x.v - t * y.v;    // P_y x
    const double wa = w.dot(alpha);
    const double xa = x.v.dot(alpha);
    const double ya = y.v.dot(alpha);
    // Product rule on F''(t) (w.alpha) v + F'(t) h with h the second-part
    // column; grad t = y, d(w.alpha) = alpha - (y.alpha) y, dv = -x y^T - tI.
    const Vec3 h = alpha - xa * x.v - ya * y.v + t * ya * x.v;
    Mat3 a =
        f2 * (v * (alpha - ya * y.v).transpose() -
              wa * (x.v * y.v.transpose() + t * Mat3::Identity()) +
              h * y.v.transpose()) +
        f1 * (-x.v * alpha.transpose() - xa * Mat3::Identity() +
              ya * (x.v * y.v.transpose() + t * Mat3::Identity()));
    if (!(1.0 - t <= kDiagBand && u2 < kCrossGuard))
        a += zk.eval_at_separation(rho, 3) * wa * v * y.v.transpose();
    return a;
}

Mat3 MatrixKernel::eval(const SpherePoint& x, const SpherePoint& y) const {
    switch (kind) {
        case MatrixKernelKind::div: return eval_div_kernel(*zonal, x, y);
        case MatrixKernelKind::curl: return eval_curl_kernel(*zonal, x, y);
        case MatrixKernelKind::full: return eval_full_kernel(*zonal, x, y);
        case MatrixKernelKind::laplace_div:
            return eval_laplace_div_kernel(*zonal, x, y);
        case MatrixKernelKind::helmholtz_div:
            return eval_helmholtz_div_kernel(*zonal, x, y);
    }
    throw std::logic_error("unreachable");
}

} // namespace sphereflow
