#include "sphereflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "sphereflow/parallel.hpp"

namespace sphereflow {

namespace {

constexpr double kGoldenAngle = 2.39996322972865332;  // pi*(3 - sqrt(5))

Vec3 fibonacci_node(int i, int n) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = kGoldenAngle * i;
    return {r * std::cos(theta), r * std::sin(theta), z};
}

// Uniform double in [0,1) from the top 53 bits of the generator output;
// avoids std::uniform_real_distribution's implementation-defined stream.
double next_unit(std::mt19937_64& rng) {
    return (rng() >> 11) * 0x1.0p-53;
}

} // namespace

SpherePoint::SpherePoint(const Vec3& raw) {
    const double n = raw.norm();
    if (n < 1e-12)
        throw std::domain_error("SpherePoint: vector norm below 1e-12");
    v = raw / n;
}

double geodesic_distance(const SpherePoint& a, const SpherePoint& b) {
    const double t = std::clamp(a.v.dot(b.v), -1.0, 1.0);
    return std::acos(t);
}

TangentFrame tangent_frame(const SpherePoint& x) {
    int axis = 0;
    double best = std::abs(x.v[0]);
    for (int i = 1; i < 3; ++i) {
        if (std::abs(x.v[i]) < best) {
            best = std::abs(x.v[i]);
            axis = i;
        }
    }
    Vec3 a = Vec3::Unit(axis);
    Vec3 e1 = (a - a.dot(x.v) * x.v).normalized();
    Vec3 e2 = x.v.cross(e1);  // unit because x is perpendicular to e1
    return {e1, e2};
}

PointSet make_point_set(std::vector<SpherePoint> pts, int probe_resolution) {
    if (pts.empty()) throw std::domain_error("make_point_set: empty point set");
    PointSet ps;
    ps.points = std::move(pts);
    ps.frames.reserve(ps.points.size());
    for (const auto& p : ps.points) ps.frames.push_back(tangent_frame(p));
    for (std::size_t i = 0; i < ps.points.size(); ++i)
        for (std::size_t j = i + 1; j < ps.points.size(); ++j)
            if (ps.points[i].v.dot(ps.points[j].v) > 1.0 - 1e-14)
                throw std::domain_error("make_point_set: duplicate points at indices " +
                                        std::to_string(i) + "," + std::to_string(j));
    if (probe_resolution <= 0)
        probe_resolution = std::max<int>(4096, 4 * static_cast<int>(ps.points.size()));
    ps.probe_resolution = probe_resolution;
    ps.fill_distance_estimate = estimate_fill_distance(ps, probe_resolution);
    return ps;
}

FillDistanceProbe estimate_fill_distance_detailed(const PointSet& ps,
                                                  int probe_resolution) {
    if (ps.points.empty())
        throw std::domain_error("estimate_fill_distance: empty point set");
    if (probe_resolution < static_cast<int>(ps.points.size()))
        throw std::domain_error("estimate_fill_distance: probe grid smaller than point set");
    const int m = probe_resolution;
    // Per-probe nearest node via max dot product; arccos once at the end.
    std::vector<double> best_dot(m);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t i) {
        const Vec3 probe = fibonacci_node(static_cast<int>(i), m);
        double best = -1.0;
        for (const auto& p : ps.points) best = std::max(best, probe.dot(p.v));
        best_dot[i] = best;
    });
    int arg = 0;
    for (int i = 1; i < m; ++i)
        if (best_dot[i] < best_dot[arg]) arg = i;
    return {std::acos(std::clamp(best_dot[arg], -1.0, 1.0)),
            SpherePoint(fibonacci_node(arg, m))};
}

double estimate_fill_distance(const PointSet& ps, int probe_resolution) {
    return estimate_fill_distance_detailed(ps, probe_resolution).radians;
}

PointKind parse_point_kind(const std::string& name) {
    if (name == "fibonacci") return PointKind::fibonacci;
    if (name == "random_uniform") return PointKind::random_uniform;
    if (name == "riesz_minimized") return PointKind::riesz_minimized;
    throw std::domain_error("unknown point kind: " + name);
}

std::string point_kind_name(PointKind kind) {
    switch (kind) {
        case PointKind::fibonacci: return "fibonacci";
        case PointKind::random_uniform: return "random_uniform";
        case PointKind::riesz_minimized: return "riesz_minimized";
    }
    return "?";
}

double riesz_energy(const std::vector<SpherePoint>& pts) {
    double e = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            e += 1.0 / (pts[i].v - pts[j].v).norm();
    return e;
}

namespace {

std::vector<SpherePoint> riesz_descent(std::vector<SpherePoint> pts, int max_iters) {
    const std::size_t n = pts.size();
    double energy = riesz_energy(pts);
    double step = 1.0 / static_cast<double>(n);  // scaled down by line search
    std::vector<Vec3> grad(n);
    for (int iter = 0; iter < max_iters; ++iter) {
        for (auto& g : grad) g.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const Vec3 d = pts[i].v - pts[j].v;
                const Vec3 f = d / std::pow(d.norm(), 3);
                grad[i] -= f;  // dE/dx_i = -(x_i-x_j)/|x_i-x_j|^3
                grad[j] += f;
            }
        }
        // Tangential projection, then backtracking so energy never increases.
        for (std::size_t i = 0; i < n; ++i)
            grad[i] -= grad[i].dot(pts[i].v) * pts[i].v;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            std::vector<SpherePoint> trial = pts;
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = SpherePoint(pts[i].v - step * grad[i]);
            const double trial_energy = riesz_energy(trial);
            if (trial_energy < energy) {
                const double gain = energy - trial_energy;
                pts = std::move(trial);
                energy = trial_energy;
                improved = true;
                step *= 1.5;
                if (gain < 1e-10) return pts;
                break;
            }
            step *= 0.5;
        }
        if (!improved) return pts;
    }
    return pts;
}

} // namespace

PointSet generate_points(PointKind kind, int n, std::uint64_t seed,
                         int riesz_max_iters) {
    if (n < 4) throw std::domain_error("generate_points: n must be >= 4");
    std::vector<SpherePoint> pts;
    pts.reserve(n);
    switch (kind) {
        case PointKind::fibonacci:
            for (int i = 0; i < n; ++i) pts.emplace_back(fibonacci_node(i, n));
            break;
        case PointKind::random_uniform: {
            std::mt19937_64 rng(seed);
            for (int i = 0; i < n; ++i) {
                const double z = 2.0 * next_unit(rng) - 1.0;
                const double phi = 2.0 * M_PI * next_unit(rng);
                const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                pts.emplace_back(Vec3(r * std::cos(phi), r * std::sin(phi), z));
            }
            break;
        }
        case PointKind::riesz_minimized: {
            for (int i = 0; i < n; ++i) pts.emplace_back(fibonacci_node(i, n));
            pts = riesz_descent(std::move(pts), riesz_max_iters);
            break;
        }
    }
    return make_point_set(std::move(pts));
}

PointSet load_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("load_points: cannot open " + path);
    std::vector<SpherePoint> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream row(line);
        double x, y, z;
        if (!(row >> x >> y >> z))
            throw FormatError("load_points: bad row at " + path + ":" +
                              std::to_string(lineno));
        const double norm = Vec3(x, y, z).norm();
        if (std::abs(norm - 1.0) > 1e-6)
            throw FormatError("load_points: non-unit row (norm " +
                              std::to_string(norm) + ") at " + path + ":" +
                              std::to_string(lineno));
        pts.emplace_back(Vec3(x, y, z));
    }
    if (pts.empty()) throw FormatError("load_points: no points in " + path);
    return make_point_set(std::move(pts));
}

void save_points(const PointSet& ps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("save_points: cannot open " + path);
    out << "# x y z (" << ps.size() << " unit vectors)\n";
    char buf[128];
    for (const auto& p : ps.points) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    if (!out) throw FormatError("save_points: write failed for " + path);
}

} // namespace sphereflow
