#pragma once

/// Real scalar spherical harmonics Y_{l,k} and tangential vector spherical
/// harmonics (divergence-free and curl-free families) for low degrees, plus
/// exact polynomial calculus on the sphere and the finite-difference oracle
/// for the surface operators.
///
/// Index convention for k in [1, 2l+1]: k=1 is the zonal member (order 0);
/// k=2m / k=2m+1 are the cosine / sine members of order m >= 1.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow {

// Sparse polynomial in (x1, x2, x3) with exact monomial coefficients.
class CartesianPoly {
public:
    struct Term {
        int a, b, c;  // exponents
        double coef;
    };

    CartesianPoly() = default;
    static CartesianPoly monomial(int a, int b, int c, double coef);

    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    int max_degree() const;

    double eval(const Vec3& x) const;
    CartesianPoly derivative(int dim) const;
    std::array<CartesianPoly, 3> gradient_polys() const;

    CartesianPoly& operator+=(const CartesianPoly& other);
    CartesianPoly& operator*=(double s);
    CartesianPoly operator*(const CartesianPoly& other) const;

    // Exact integral of the polynomial over the unit sphere (monomial
    // moments in closed form; odd-exponent moments vanish).
    double integrate_sphere() const;

    // Canonical ordering (degree, then exponents) with merged duplicates.
    void compress();

private:
    std::vector<Term> terms_;
};

// Exact integral of x1^a x2^b x3^c over S^2.
double sphere_monomial_moment(int a, int b, int c);

struct HarmonicIndex {
    int l;
    int k;
    HarmonicIndex(int degree, int order_index);
};

inline constexpr int kHarmonicLMax = 5;

// lambda_l = l(l+1), the -Laplace-Beltrami eigenvalue of degree-l harmonics.
double harmonic_eigenvalue(int l);

// Fully L2-normalized real harmonic as a Cartesian polynomial (table bound
// kHarmonicLMax); integral of Y^2 over S^2 is 1.
const CartesianPoly& scalar_harmonic_poly(const HarmonicIndex& idx);
double scalar_harmonic(const HarmonicIndex& idx, const SpherePoint& x);

// Tangential vector harmonics: divergence-free y = (x cross grad Y)/sqrt(l(l+1))
// and curl-free z = x cross y, so the duality x cross y == z, x cross z == -y
// holds pointwise (z spans the projected-gradient family). Requires l >= 1.
Vec3 vector_harmonic_div(const HarmonicIndex& idx, const SpherePoint& x);
Vec3 vector_harmonic_curl(const HarmonicIndex& idx, const SpherePoint& x);

// Ambient polynomial component fields whose restrictions to S^2 are
// sqrt(l(l+1)) times the y- / z-type harmonics built from p:
//   lstar_polys:    x cross grad p            (divergence-free family)
//   gradstar_polys: grad p - (x . grad p) x   (curl-free family on S^2)
std::array<CartesianPoly, 3> lstar_polys(const CartesianPoly& p);
std::array<CartesianPoly, 3> gradstar_polys(const CartesianPoly& p);

// Random streamfunction: coefficients a_n = g_n/|n|_1 for 1 <= |n|_1 <= max_degree,
// g_n i.i.d. uniform in [-1,1]; deterministic in seed. (The constant term is
// irrelevant after the surface curl and is set to zero.)
CartesianPoly random_streamfunction(int max_degree = 19, std::uint64_t seed = 0);

// ---- finite-difference oracle for the surface operators --------------------
// Fields are extended radially (f(x/|x|)); central differences of step h give
// O(h^2) approximations of the ambient-space definitions of the operators.

using ScalarField = std::function<double(const Vec3&)>;
using VectorField3 = std::function<Vec3(const Vec3&)>;

inline constexpr double kDefaultFdStep = 1e-4;

struct SurfaceScalarOpsFD {
    Vec3 grad;      // surface gradient
    Vec3 curl;      // surface curl x cross grad
    double laplace; // Laplace-Beltrami
};
SurfaceScalarOpsFD surface_ops_fd(const ScalarField& f, const SpherePoint& x,
                                  double h = kDefaultFdStep);

struct SurfaceVectorOpsFD {
    double div;      // surface divergence
    double curl_div; // surface curl-divergence (L* dot)
    Vec3 laplace;    // componentwise Laplace-Beltrami
};
SurfaceVectorOpsFD surface_ops_fd(const VectorField3& u, const SpherePoint& x,
                                  double h = kDefaultFdStep);

} // namespace sphereflow
