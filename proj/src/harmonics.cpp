#include "sphereflow/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sphereflow/errors.hpp"

namespace sphereflow {

// ---- CartesianPoly ----------------------------------------------------------

CartesianPoly CartesianPoly::monomial(int a, int b, int c, double coef) {
    CartesianPoly p;
    if (coef != 0.0) p.terms_.push_back({a, b, c, coef});
    return p;
}

int CartesianPoly::max_degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.a + t.b + t.c);
    return d;
}

double CartesianPoly::eval(const Vec3& x) const {
    const int d = max_degree();
    // Power tables beat pow() for the degree-19 streamfunctions; fall back to
    // heap storage for the rare very-high-degree products.
    constexpr int kStackCap = 24;
    double buf[3 * kStackCap];
    std::vector<double> heap;
    double *px = buf, *py = buf + kStackCap, *pz = buf + 2 * kStackCap;
    if (d + 1 > kStackCap) {
        heap.resize(3 * (d + 1));
        px = heap.data();
        py = px + (d + 1);
        pz = py + (d + 1);
    }
    px[0] = py[0] = pz[0] = 1.0;
    for (int i = 1; i <= d; ++i) {
        px[i] = px[i - 1] * x[0];
        py[i] = py[i - 1] * x[1];
        pz[i] = pz[i - 1] * x[2];
    }
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.coef * px[t.a] * py[t.b] * pz[t.c];
    return sum;
}

CartesianPoly CartesianPoly::derivative(int dim) const {
    CartesianPoly out;
    for (const auto& t : terms_) {
        int e[3] = {t.a, t.b, t.c};
        if (e[dim] == 0) continue;
        const double coef = t.coef * e[dim];
        e[dim] -= 1;
        out.terms_.push_back({e[0], e[1], e[2], coef});
    }
    return out;
}

std::array<CartesianPoly, 3> CartesianPoly::gradient_polys() const {
    return {derivative(0), derivative(1), derivative(2)};
}

CartesianPoly& CartesianPoly::operator+=(const CartesianPoly& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    compress();
    return *this;
}

CartesianPoly& CartesianPoly::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& t : terms_) t.coef *= s;
    return *this;
}

CartesianPoly CartesianPoly::operator*(const CartesianPoly& other) const {
    CartesianPoly out;
    out.terms_.reserve(terms_.size() * other.terms_.size());
    for (const auto& s : terms_)
        for (const auto& t : other.terms_)
            out.terms_.push_back({s.a + t.a, s.b + t.b, s.c + t.c, s.coef * t.coef});
    out.compress();
    return out;
}

void CartesianPoly::compress() {
    auto key = [](const Term& t) {
        return std::array<int, 4>{t.a + t.b + t.c, t.a, t.b, t.c};
    };
    std::sort(terms_.begin(), terms_.end(),
              [&](const Term& u, const Term& v) { return key(u) < key(v); });
    std::vector<Term> merged;
    for (const auto& t : terms_) {
        if (!merged.empty() && key(merged.back()) == key(t))
            merged.back().coef += t.coef;
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Term& t) { return t.coef == 0.0; }),
                 merged.end());
    terms_ = std::move(merged);
}

double sphere_monomial_moment(int a, int b, int c) {
    if ((a | b | c) < 0) throw std::domain_error("negative monomial exponent");
    if (a % 2 || b % 2 || c % 2) return 0.0;
    // Recursion M(a+2,b,c) = M(a,b,c) (a+1)/(a+b+c+3), M(0,0,0) = 4 pi.
    double m = 4.0 * M_PI;
    int ca = 0, cb = 0, cc = 0;
    while (ca < a) { m *= (ca + 1.0) / (ca + cb + cc + 3.0); ca += 2; }
    while (cb < b) { m *= (cb + 1.0) / (ca + cb + cc + 3.0); cb += 2; }
    while (cc < c) { m *= (cc + 1.0) / (ca + cb + cc + 3.0); cc += 2; }
    return m;
}

double CartesianPoly::integrate_sphere() const {
    double sum = 0.0;
    for (const auto& t : terms_) {
        if (t.a % 2 || t.b % 2 || t.c % 2) continue;
        sum += t.coef * sphere_monomial_moment(t.a, t.b, t.c);
    }
    return sum;
}

// ---- harmonic table ---------------------------------------------------------

HarmonicIndex::HarmonicIndex(int degree, int order_index) : l(degree), k(order_index) {
    if (l < 0) throw std::domain_error("HarmonicIndex: degree must be >= 0");
    if (k < 1 || k > 2 * l + 1)
        throw std::domain_error("HarmonicIndex: k out of [1, 2l+1]");
}

double harmonic_eigenvalue(int l) {
    if (l < 0) throw std::domain_error("harmonic_eigenvalue: degree must be >= 0");
    return static_cast<double>(l) * (l + 1);
}

namespace {

// Legendre polynomials and their z-derivatives as 1-d coefficient arrays
// (coefficients are dyadic rationals, so the recurrence is exact in double).
std::vector<double> legendre_coeffs(int l) {
    std::vector<std::vector<double>> p(l + 1);
    p[0] = {1.0};
    if (l >= 1) p[1] = {0.0, 1.0};
    for (int n = 1; n < l; ++n) {
        std::vector<double> next(n + 2, 0.0);
        for (int i = 0; i <= n; ++i) next[i + 1] += (2.0 * n + 1.0) * p[n][i];
        for (std::size_t i = 0; i < p[n - 1].size(); ++i) next[i] -= n * p[n - 1][i];
        for (auto& c : next) c /= (n + 1.0);
        p[n + 1] = std::move(next);
    }
    return p[l];
}

std::vector<double> poly1d_derivative(const std::vector<double>& p, int times) {
    std::vector<double> cur = p;
    for (int d = 0; d < times; ++d) {
        std::vector<double> next(cur.size() > 1 ? cur.size() - 1 : 1, 0.0);
        for (std::size_t i = 1; i < cur.size(); ++i) next[i - 1] = cur[i] * i;
        cur = std::move(next);
    }
    return cur;
}

// Real/imaginary parts of (x1 + i x2)^m as Cartesian polynomials.
std::pair<CartesianPoly, CartesianPoly> cos_sin_factor(int m) {
    CartesianPoly re = CartesianPoly::monomial(0, 0, 0, 1.0);
    CartesianPoly im;
    for (int i = 0; i < m; ++i) {
        CartesianPoly re_next = re * CartesianPoly::monomial(1, 0, 0, 1.0);
        CartesianPoly tmp = im * CartesianPoly::monomial(0, 1, 0, 1.0);
        tmp *= -1.0;
        re_next += tmp;
        CartesianPoly im_next = re * CartesianPoly::monomial(0, 1, 0, 1.0);
        im_next += im * CartesianPoly::monomial(1, 0, 0, 1.0);
        re = std::move(re_next);
        im = std::move(im_next);
    }
    return {re, im};
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

struct HarmonicEntry {
    CartesianPoly poly;
    std::array<CartesianPoly, 3> grad;
};

// Builds Y_{l,k}: N_{lm} * (d^m P_l/dz^m)(x3) * Re/Im[(x1+i x2)^m].
HarmonicEntry build_harmonic(int l, int k) {
    const int m = k / 2;
    const bool sine = (k % 2 == 1) && k > 1;
    const auto dpl = poly1d_derivative(legendre_coeffs(l), m);
    CartesianPoly axial;
    for (std::size_t i = 0; i < dpl.size(); ++i)
        if (dpl[i] != 0.0) axial += CartesianPoly::monomial(0, 0, static_cast<int>(i), dpl[i]);
    double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) * factorial(l - m) /
                            factorial(l + m));
    if (m > 0) norm *= std::sqrt(2.0);
    CartesianPoly result;
    if (m == 0) {
        result = axial;
    } else {
        const auto [re, im] = cos_sin_factor(m);
        result = axial * (sine ? im : re);
    }
    result *= norm;
    HarmonicEntry entry;
    entry.grad = result.gradient_polys();
    entry.poly = std::move(result);
    return entry;
}

const HarmonicEntry& harmonic_entry(const HarmonicIndex& idx) {
    if (idx.l > kHarmonicLMax)
        throw UnsupportedDegreeError("scalar_harmonic: degree above table bound " +
                                     std::to_string(kHarmonicLMax));
    static const std::vector<std::vector<HarmonicEntry>> table = [] {
        std::vector<std::vector<HarmonicEntry>> t(kHarmonicLMax + 1);
        for (int l = 0; l <= kHarmonicLMax; ++l)
            for (int k = 1; k <= 2 * l + 1; ++k) t[l].push_back(build_harmonic(l, k));
        return t;
    }();
    return table[idx.l][idx.k - 1];
}

} // namespace

const CartesianPoly& scalar_harmonic_poly(const HarmonicIndex& idx) {
    return harmonic_entry(idx).poly;
}

double scalar_harmonic(const HarmonicIndex& idx, const SpherePoint& x) {
    return harmonic_entry(idx).poly.eval(x.v);
}

Vec3 vector_harmonic_div(const HarmonicIndex& idx, const SpherePoint& x) {
    if (idx.l < 1)
        throw std::domain_error("vector_harmonic_div: no tangential harmonics of degree 0");
    const auto& e = harmonic_entry(idx);
    const Vec3 g(e.grad[0].eval(x.v), e.grad[1].eval(x.v), e.grad[2].eval(x.v));
    return x.v.cross(g) / std::sqrt(harmonic_eigenvalue(idx.l));
}

Vec3 vector_harmonic_curl(const HarmonicIndex& idx, const SpherePoint& x) {
    // z := x cross y, which equals the projected gradient of Y up to sign;
    // computing the cross product literally makes the duality pair
    // x cross y == z and x cross z == -y hold to rounding.
    return x.v.cross(vector_harmonic_div(idx, x));
}

std::array<CartesianPoly, 3> lstar_polys(const CartesianPoly& p) {
    const auto g = p.gradient_polys();
    std::array<CartesianPoly, 3> out;
    for (int m = 0; m < 3; ++m) {
        const int i = (m + 1) % 3, j = (m + 2) % 3;
        CartesianPoly xi_gj = CartesianPoly::monomial(i == 0, i == 1, i == 2, 1.0) * g[j];
        CartesianPoly xj_gi = CartesianPoly::monomial(j == 0, j == 1, j == 2, 1.0) * g[i];
        xj_gi *= -1.0;
        xi_gj += xj_gi;
        out[m] = std::move(xi_gj);
    }
    return out;
}

std::array<CartesianPoly, 3> gradstar_polys(const CartesianPoly& p) {
    const auto g = p.gradient_polys();
    CartesianPoly radial;  // x . grad p
    for (int i = 0; i < 3; ++i)
        radial += CartesianPoly::monomial(i == 0, i == 1, i == 2, 1.0) * g[i];
    std::array<CartesianPoly, 3> out;
    for (int m = 0; m < 3; ++m) {
        CartesianPoly xm_radial =
            CartesianPoly::monomial(m == 0, m == 1, m == 2, 1.0) * radial;
        xm_radial *= -1.0;
        out[m] = g[m];
        out[m] += xm_radial;
    }
    return out;
}

CartesianPoly random_streamfunction(int max_degree, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto next_pm1 = [&rng] { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; };
    CartesianPoly p;
    // Deterministic multi-index order: total degree, then a, then b descending.
    for (int d = 1; d <= max_degree; ++d)
        for (int a = d; a >= 0; --a)
            for (int b = d - a; b >= 0; --b) {
                const int c = d - a - b;
                p += CartesianPoly::monomial(a, b, c, next_pm1() / d);
            }
    return p;
}

// ---- finite-difference surface operators ------------------------------------

namespace {

inline Vec3 radial(const Vec3& y) { return y / y.norm(); }

} // namespace

SurfaceScalarOpsFD surface_ops_fd(const ScalarField& f, const SpherePoint& x,
                                  double h) {
    Vec3 g;
    double lap = -6.0 * f(x.v);  // center of the 7-point Laplacian; x is unit
    for (int i = 0; i < 3; ++i) {
        const double fp = f(radial(x.v + h * Vec3::Unit(i)));
        const double fm = f(radial(x.v - h * Vec3::Unit(i)));
        g[i] = (fp - fm) / (2.0 * h);
        lap += fp + fm;
    }
    lap /= h * h;
    const Vec3 gs = g - g.dot(x.v) * x.v;
    return {gs, x.v.cross(gs), lap};
}

SurfaceVectorOpsFD surface_ops_fd(const VectorField3& u, const SpherePoint& x,
                                  double h) {
    Mat3 jac;  // jac(m,i) = d u_m / d x_i of the radial extension
    Vec3 lap = -6.0 * u(x.v);
    for (int i = 0; i < 3; ++i) {
        const Vec3 up = u(radial(x.v + h * Vec3::Unit(i)));
        const Vec3 um = u(radial(x.v - h * Vec3::Unit(i)));
        jac.col(i) = (up - um) / (2.0 * h);
        lap += up + um;
    }
    lap /= h * h;
    double div = 0.0, curl_div = 0.0;
    for (int m = 0; m < 3; ++m) {
        const Vec3 grad_m = jac.row(m).transpose();
        const Vec3 gs = grad_m - grad_m.dot(x.v) * x.v;
        div += gs[m];
        curl_div += x.v.cross(gs)[m];
    }
    return {div, curl_div, lap};
}

} // namespace sphereflow
