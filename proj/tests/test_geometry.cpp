#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "sphereflow/geometry.hpp"

using namespace sphereflow;

namespace {

SpherePoint random_point(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    while (v.norm() < 1e-6) v = Vec3(gauss(rng), gauss(rng), gauss(rng));
    return SpherePoint(v);
}

void check_frame(const SpherePoint& x, const TangentFrame& f) {
    CHECK(std::abs(f.e1.dot(x.v)) < 1e-12);
    CHECK(std::abs(f.e2.dot(x.v)) < 1e-12);
    CHECK(std::abs(f.e1.dot(f.e2)) < 1e-12);
    CHECK(std::abs(f.e1.norm() - 1.0) < 1e-12);
    CHECK(std::abs(f.e2.norm() - 1.0) < 1e-12);
    CHECK((f.e1.cross(f.e2) - x.v).norm() < 1e-12);
}

} // namespace

TEST_CASE("sphere point construction renormalizes and rejects zero") {
    SpherePoint p(Vec3(0, 0, 2));
    CHECK(std::abs(p.v.norm() - 1.0) < 1e-12);
    CHECK(p.z() == doctest::Approx(1.0));
    CHECK_THROWS_AS(SpherePoint(Vec3(0, 0, 0)), std::domain_error);
}

TEST_CASE("geodesic distance basic values") {
    CHECK(geodesic_distance(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0)) ==
          doctest::Approx(M_PI / 2).epsilon(1e-14));
    CHECK(geodesic_distance(SpherePoint(0, 0, 1), SpherePoint(0, 0, 1)) == 0.0);
    CHECK(geodesic_distance(SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)) ==
          doctest::Approx(M_PI).epsilon(1e-14));
}

TEST_CASE("geodesic distance triangle inequality on random triples") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const SpherePoint a = random_point(rng);
        const SpherePoint b = random_point(rng);
        const SpherePoint c = random_point(rng);
        CHECK(geodesic_distance(a, c) <=
              geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-12);
    }
}

TEST_CASE("tangent frames: invariants and branch-local continuity") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const SpherePoint x = random_point(rng);
        check_frame(x, tangent_frame(x));
    }
    const SpherePoint pole(0, 0, 1);
    check_frame(pole, tangent_frame(pole));

    const SpherePoint x0(1, 0, 0);
    const SpherePoint x1(Vec3(1, 1e-9, -2e-9));
    const TangentFrame f0 = tangent_frame(x0);
    const TangentFrame f1 = tangent_frame(x1);
    CHECK((f0.e1 - f1.e1).norm() < 1e-6);
    CHECK((f0.e2 - f1.e2).norm() < 1e-6);
}

TEST_CASE("fill distance: single point covers the sphere up to pi") {
    PointSet ps = make_point_set({SpherePoint(0, 0, 1)});
    const double est = estimate_fill_distance(ps, 100000);
    CHECK(est == doctest::Approx(M_PI).epsilon(2e-2));
}

TEST_CASE("fill distance: octahedron and tetrahedron against exact values") {
    std::vector<SpherePoint> oct = {
        SpherePoint(1, 0, 0),  SpherePoint(-1, 0, 0), SpherePoint(0, 1, 0),
        SpherePoint(0, -1, 0), SpherePoint(0, 0, 1),  SpherePoint(0, 0, -1)};
    PointSet ps = make_point_set(oct);
    // Exact fill distance: face barycenter (1,1,1)/sqrt(3) to a vertex.
    CHECK(std::abs(estimate_fill_distance(ps, 100000) - std::acos(1.0 / std::sqrt(3.0))) <
          2e-2);

    const double s = 1.0 / std::sqrt(3.0);
    std::vector<SpherePoint> tet = {
        SpherePoint(s, s, s), SpherePoint(s, -s, -s), SpherePoint(-s, s, -s),
        SpherePoint(-s, -s, s)};
    PointSet tps = make_point_set(tet);
    // Farthest point is the antipode of a vertex, at arccos(1/3).
    CHECK(std::abs(estimate_fill_distance(tps, 100000) - std::acos(1.0 / 3.0)) < 2e-2);
}

TEST_CASE("fill distance errors and estimator contract") {
    PointSet ps = generate_points(PointKind::fibonacci, 16, 0);
    CHECK_THROWS_AS(estimate_fill_distance(ps, 8), std::domain_error);
    CHECK_THROWS_AS(make_point_set({}), std::domain_error);
    // Denser probing can only move the estimate up toward the true sup.
    CHECK(estimate_fill_distance(ps, 1000) <= estimate_fill_distance(ps, 64000) + 1e-15);
}

TEST_CASE("fill distance is monotone nonincreasing when adding the argmax probe") {
    PointSet ps = generate_points(PointKind::fibonacci, 50, 0);
    const int m = 20000;
    for (int round = 0; round < 3; ++round) {
        const FillDistanceProbe probe = estimate_fill_distance_detailed(ps, m);
        auto pts = ps.points;
        pts.push_back(probe.argmax);
        PointSet grown = make_point_set(std::move(pts), m);
        CHECK(estimate_fill_distance(grown, m) <= probe.radians + 1e-15);
        ps = std::move(grown);
    }
}

TEST_CASE("generate_points families") {
    CHECK_THROWS_AS(generate_points(PointKind::fibonacci, 3, 0), std::domain_error);

    PointSet fib = generate_points(PointKind::fibonacci, 100, 0);
    double min_dist = M_PI;
    for (std::size_t i = 0; i < fib.size(); ++i)
        for (std::size_t j = i + 1; j < fib.size(); ++j)
            min_dist = std::min(min_dist, geodesic_distance(fib.points[i], fib.points[j]));
    CHECK(min_dist > 0.15);

    PointSet r1 = generate_points(PointKind::random_uniform, 50, 7);
    PointSet r2 = generate_points(PointKind::random_uniform, 50, 7);
    for (std::size_t i = 0; i < r1.size(); ++i)
        CHECK((r1.points[i].v - r2.points[i].v).norm() == 0.0);

    PointSet fib6 = generate_points(PointKind::fibonacci, 6, 0);
    PointSet riesz6 = generate_points(PointKind::riesz_minimized, 6, 0);
    CHECK(riesz_energy(riesz6.points) <= riesz_energy(fib6.points));
}

TEST_CASE("point file round trip and format gates") {
    const std::string dir = "test_geometry_io";
    std::remove((dir + ".txt").c_str());
    {
        std::FILE* f = std::fopen("tg_single.txt", "w");
        std::fputs("# single point\n0 0 1\n", f);
        std::fclose(f);
    }
    PointSet single = load_points("tg_single.txt");
    REQUIRE(single.size() == 1);
    CHECK((single.points[0].v - Vec3(0, 0, 1)).norm() == 0.0);

    PointSet ps = generate_points(PointKind::random_uniform, 40, 3);
    save_points(ps, "tg_roundtrip.txt");
    PointSet back = load_points("tg_roundtrip.txt");
    REQUIRE(back.size() == ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i)
        CHECK((back.points[i].v - ps.points[i].v).norm() < 1e-15);

    {
        std::FILE* f = std::fopen("tg_bad.txt", "w");
        std::fputs("1 1 1\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_points("tg_bad.txt"), FormatError);
    CHECK_THROWS_AS(load_points("tg_missing_file.txt"), FormatError);
    std::remove("tg_single.txt");
    std::remove("tg_roundtrip.txt");
    std::remove("tg_bad.txt");
}

TEST_CASE("generated point sets carry valid frames everywhere") {
    for (PointKind kind :
         {PointKind::fibonacci, PointKind::random_uniform, PointKind::riesz_minimized}) {
        PointSet ps = generate_points(kind, 32, 11);
        REQUIRE(ps.frames.size() == ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) check_frame(ps.points[i], ps.frames[i]);
        CHECK(ps.fill_distance_estimate > 0.0);
    }
}
