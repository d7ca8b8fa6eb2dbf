#pragma once

/// Collocation point sets on the unit sphere: tangent frames, geodesic
/// distances, fill-distance estimation, point generation and file I/O.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sphereflow/errors.hpp"

namespace sphereflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Point on S^2. Construction renormalizes; near-zero input is rejected.
struct SpherePoint {
    Vec3 v;

    SpherePoint() : v(0, 0, 1) {}
    explicit SpherePoint(const Vec3& raw);
    SpherePoint(double x, double y, double z) : SpherePoint(Vec3(x, y, z)) {}

    double x() const { return v.x(); }
    double y() const { return v.y(); }
    double z() const { return v.z(); }
};

// Orthonormal tangent basis at a point; (e1, e2, x) is right-handed.
struct TangentFrame {
    Vec3 e1;
    Vec3 e2;
};

// Geodesic (great-circle) distance in radians, in [0, pi].
double geodesic_distance(const SpherePoint& a, const SpherePoint& b);

// Deterministic frame: coordinate axis least aligned with x (lowest index on
// ties), Gram-Schmidt for e1, e2 = x cross e1.
TangentFrame tangent_frame(const SpherePoint& x);

struct PointSet {
    std::vector<SpherePoint> points;
    std::vector<TangentFrame> frames;
    double fill_distance_estimate = 0.0;  // radians
    int probe_resolution = 0;             // probes used for the estimate

    std::size_t size() const { return points.size(); }
};

// Builds a PointSet from raw points: computes frames, checks pairwise
// distinctness, and estimates the fill distance (probe_resolution = 0 picks
// max(4096, 4n) probes).
PointSet make_point_set(std::vector<SpherePoint> pts, int probe_resolution = 0);

// Max over a fixed M-point Fibonacci probe grid of the min geodesic distance
// to ps. Underestimates the true sup by at most the probe-grid resolution.
double estimate_fill_distance(const PointSet& ps, int probe_resolution);

// Same estimate plus the probe point realizing the max (refinement hook for
// tests and point-set repair).
struct FillDistanceProbe {
    double radians;
    SpherePoint argmax;
};
FillDistanceProbe estimate_fill_distance_detailed(const PointSet& ps,
                                                  int probe_resolution);

enum class PointKind { fibonacci, random_uniform, riesz_minimized };

PointKind parse_point_kind(const std::string& name);
std::string point_kind_name(PointKind kind);

// n >= 4 points of the requested family; deterministic given seed.
// riesz_minimized runs projected gradient descent on the Riesz s=1 energy
// from a fibonacci start until the energy decrease per step drops below
// 1e-10 (or max_iters).
PointSet generate_points(PointKind kind, int n, std::uint64_t seed,
                         int riesz_max_iters = 1000);

// Riesz s=1 energy sum_{i<j} 1/|x_i - x_j| (exposed for descent tests).
double riesz_energy(const std::vector<SpherePoint>& pts);

// Text format: one "x y z" triple per line, '#' starts a comment line.
// Rows deviating from unit norm by more than 1e-6 are a format error;
// smaller deviations are renormalized.
PointSet load_points(const std::string& path);
void save_points(const PointSet& ps, const std::string& path);

} // namespace sphereflow
