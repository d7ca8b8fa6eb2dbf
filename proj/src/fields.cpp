#include "sphereflow/fields.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Drops the normal component of each sample. Components up to 1e-6 of the
// sample norm are assumed to be ingestion noise and removed silently;
// anything larger means the data is not tangential and is rejected.
std::vector<Vec3> project_tangential(const PointSet& ps, std::vector<Vec3> samples,
                                     const char* who) {
    if (samples.size() != ps.size())
        throw std::domain_error(std::string(who) + ": got " +
                                std::to_string(samples.size()) + " samples for " +
                                std::to_string(ps.size()) + " nodes");
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const Vec3& x = ps.points[j].v;
        const double normal = samples[j].dot(x);
        if (std::abs(normal) > 1e-6 * samples[j].norm())
            throw std::domain_error(std::string(who) + ": sample " +
                                    std::to_string(j) +
                                    " has a normal component of " +
                                    std::to_string(normal) + " (limit 1e-6 relative)");
        samples[j] -= normal * x;
    }
    return samples;
}

void write_row(std::ofstream& out, const SpherePoint& p, const Vec3& u,
               const double* pressure) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  p.x(), p.y(), p.z(), u.x(), u.y(), u.z());
    out << buf;
    if (pressure) {
        std::snprintf(buf, sizeof buf, ",%.17g", *pressure);
        out << buf;
    }
    out << "\n";
}

void check_snapshot_sizes(const PointSet& ps, const std::vector<Vec3>& velocity,
                          const std::vector<double>* pressure, const char* who) {
    if (velocity.size() != ps.size())
        throw std::domain_error(std::string(who) + ": velocity count " +
                                std::to_string(velocity.size()) +
                                " does not match node count " +
                                std::to_string(ps.size()));
    if (pressure && pressure->size() != ps.size())
        throw std::domain_error(std::string(who) + ": pressure count " +
                                std::to_string(pressure->size()) +
                                " does not match node count " +
                                std::to_string(ps.size()));
}

} // namespace

NodalField::NodalField(std::shared_ptr<const PointSet> ps, std::vector<Vec3> samples)
    : ps_(std::move(ps)),
      values_(project_tangential(*ps_, std::move(samples), "NodalField")) {}

KernelExpansion::KernelExpansion(MatrixKernel kernel, std::shared_ptr<const PointSet> ps,
                                 std::vector<Vec3> coefficients)
    : kernel_(std::move(kernel)),
      ps_(std::move(ps)),
      coeffs_(project_tangential(*ps_, std::move(coefficients), "KernelExpansion")) {}

Vec3 evaluate(const KernelExpansion& e, const SpherePoint& x) {
    const double cutoff = e.kernel().support_cos();
    const auto& pts = e.points().points;
    Vec3 acc = Vec3::Zero();
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (x.v.dot(pts[j].v) <= cutoff) continue;
        acc += e.kernel().eval(x, pts[j]) * e.coefficients()[j];
    }
    return acc;
}

Vec3 evaluate_unpruned(const KernelExpansion& e, const SpherePoint& x) {
    const auto& pts = e.points().points;
    Vec3 acc = Vec3::Zero();
    for (std::size_t j = 0; j < pts.size(); ++j)
        acc += e.kernel().eval(x, pts[j]) * e.coefficients()[j];
    return acc;
}

Mat3 evaluate_gradient(const KernelExpansion& e, const SpherePoint& x) {
    const MatrixKernelKind kind = e.kernel().kind;
    if (kind != MatrixKernelKind::div && kind != MatrixKernelKind::full)
        throw std::domain_error("evaluate_gradient: kind must be div or full, got " +
                                matrix_kernel_kind_name(kind));
    const ZonalKernel& zk = *e.kernel().zonal;
    if (zk.wendland().radial_budget() < 3)
        throw UnsupportedDerivativeError(
            "evaluate_gradient: needs three kernel derivatives (families 2-4)");
    const double cutoff = e.kernel().support_cos();
    const auto& pts = e.points().points;
    Mat3 acc = Mat3::Zero();
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (x.v.dot(pts[j].v) <= cutoff) continue;
        const Vec3& a = e.coefficients()[j];
        acc += eval_div_kernel_jacobian(zk, x, pts[j], a);
        if (kind == MatrixKernelKind::full)
            acc += eval_curl_kernel_jacobian(zk, x, pts[j], a);
    }
    // Chain rule through the radial extension u(z) = u_h(z/|z|).
    return acc * (Mat3::Identity() - x.v * x.v.transpose());
}

double discrete_l2_norm(const NodalField& f) { return discrete_l2_norm(f.values()); }

double discrete_l2_norm(const std::vector<Vec3>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& v : values) sum += v.squaredNorm();
    return std::sqrt(2.0 * kTwoPi * sum / static_cast<double>(values.size()));
}

double discrete_l2_norm(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double p : values) sum += p * p;
    return std::sqrt(2.0 * kTwoPi * sum / static_cast<double>(values.size()));
}

void write_snapshot_csv(const std::string& path, const PointSet& ps,
                        const std::vector<Vec3>& velocity,
                        const std::vector<double>* pressure) {
    check_snapshot_sizes(ps, velocity, pressure, "write_snapshot_csv");
    std::ofstream out(path);
    if (!out) throw FormatError("write_snapshot_csv: cannot open " + path);
    out << (pressure ? "x,y,z,ux,uy,uz,p\n" : "x,y,z,ux,uy,uz\n");
    for (std::size_t j = 0; j < ps.size(); ++j)
        write_row(out, ps.points[j], velocity[j], pressure ? &(*pressure)[j] : nullptr);
    if (!out) throw FormatError("write_snapshot_csv: write failed for " + path);
}

void write_snapshot_json(const std::string& path, const PointSet& ps,
                         const std::vector<Vec3>& velocity,
                         const std::vector<double>* pressure,
                         const SnapshotMetadata& meta) {
    check_snapshot_sizes(ps, velocity, pressure, "write_snapshot_json");
    nlohmann::json doc;
    doc["metadata"] = {{"time", meta.time},
                       {"kernel", meta.kernel_spec},
                       {"eps", meta.eps},
                       {"nu", meta.nu},
                       {"omega", meta.omega},
                       {"node_count", ps.size()},
                       {"has_pressure", pressure != nullptr}};
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t j = 0; j < ps.size(); ++j) {
        const SpherePoint& p = ps.points[j];
        const Vec3& u = velocity[j];
        nlohmann::json row = {p.x(), p.y(), p.z(), u.x(), u.y(), u.z()};
        if (pressure) row.push_back((*pressure)[j]);
        nodes.push_back(std::move(row));
    }
    doc["nodes"] = std::move(nodes);
    std::ofstream out(path);
    if (!out) throw FormatError("write_snapshot_json: cannot open " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw FormatError("write_snapshot_json: write failed for " + path);
}

} // namespace sphereflow
