#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sprim/descriptor.hpp"
#include "test_support.hpp"

using namespace sprim;

TEST_CASE("atomic_descriptor of orthogonal difference vectors is zero") {
    REQUIRE(atomic_descriptor(Vec3(1, 0, 0), Vec3::Zero(), Vec3(0, 1, 0), Vec3::Zero()) ==
            Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("atomic_descriptor of an identical pair is one") {
    REQUIRE(atomic_descriptor(Vec3(0.3, -0.2, 0.7), Vec3(0.1, 0.1, 0.1), Vec3(0.3, -0.2, 0.7),
                              Vec3(0.1, 0.1, 0.1)) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("atomic_descriptor hand-evaluated 45-degree case") {
    // (1,0,0) vs (1,1,0)/sqrt(2): cosine 1/sqrt(2).
    REQUIRE(atomic_descriptor(Vec3(1, 0, 0), Vec3::Zero(), Vec3(1, 1, 0), Vec3::Zero()) ==
            Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-15));
}

TEST_CASE("atomic_descriptor rejects coincident centers") {
    REQUIRE_THROWS_AS(atomic_descriptor(Vec3::Zero(), Vec3::Zero(), Vec3(1, 0, 0), Vec3::Zero()),
                      DegenerateVector);
}

TEST_CASE("atomic_descriptor_grad matches central finite differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        std::array<Vec3, 4> c;
        for (auto& v : c) v = Vec3(u(rng), u(rng), u(rng));
        if ((c[0] - c[1]).norm() < 0.1 || (c[2] - c[3]).norm() < 0.1) continue;
        const auto grads = atomic_descriptor_grad(c[0], c[1], c[2], c[3]);
        for (int k = 0; k < 4; ++k) {
            for (int d = 0; d < 3; ++d) {
                auto cp = c, cm = c;
                cp[std::size_t(k)](d) += h;
                cm[std::size_t(k)](d) -= h;
                const double fd = (atomic_descriptor(cp[0], cp[1], cp[2], cp[3]) -
                                   atomic_descriptor(cm[0], cm[1], cm[2], cm[3])) /
                                  (2 * h);
                REQUIRE(grads[std::size_t(k)](d) == Catch::Approx(fd).margin(1e-6));
            }
        }
    }
}

TEST_CASE("sample_quadruples basic contracts") {
    const std::vector<Label> labels = {0, 2, 5, 9};
    REQUIRE(sample_quadruples(labels, 0, 7).quadruples.empty());

    const QuadrupleSample a = sample_quadruples(labels, 500, 7);
    const QuadrupleSample b = sample_quadruples(labels, 500, 7);
    REQUIRE(a.quadruples == b.quadruples);

    REQUIRE_THROWS_AS(sample_quadruples({3}, 10, 7), LabelSetTooSmall);
}

TEST_CASE("sample_quadruples with two labels enumerates the feasible set") {
    const std::vector<Label> labels = {1, 4};
    const QuadrupleSample qs = sample_quadruples(labels, 100, 3);
    // Feasible set is exactly {(1,4),(4,1)} x {(1,4),(4,1)}.
    for (const Quadruple& q : qs.quadruples) {
        REQUIRE(q[0] != q[1]);
        REQUIRE(q[2] != q[3]);
        for (Label l : q) REQUIRE((l == 1 || l == 4));
    }
}

TEST_CASE("sample_quadruples rejects center-degenerate draws when a map is given") {
    const std::vector<Label> labels = {0, 1, 2, 3};
    CenterMap centers;
    centers[0] = Vec3(0, 0, 0);
    centers[1] = Vec3(0, 0, 0); // coincides with label 0
    centers[2] = Vec3(1, 0, 0);
    centers[3] = Vec3(0, 1, 0);
    const QuadrupleSample qs = sample_quadruples(labels, 300, 17, &centers);
    const ShapeDescriptor f = shape_descriptor(centers, qs); // must not throw
    REQUIRE(f.size() == 300);
}

TEST_CASE("shape_descriptor is SIM(3)-invariant") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> n_labels(4, 32);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = n_labels(rng);
        std::vector<Label> labels;
        CenterMap centers;
        for (int i = 0; i < n; ++i) {
            labels.push_back(i);
            centers[i] = Vec3(u(rng), u(rng), u(rng));
        }
        const QuadrupleSample qs = sample_quadruples(labels, 200, 101 + std::uint64_t(trial),
                                                     &centers);
        const Sim3 T = testing::random_sim3(rng);
        CenterMap moved;
        for (const auto& [l, c] : centers) moved[l] = T.apply(c);
        const ShapeDescriptor fa = shape_descriptor(centers, qs);
        const ShapeDescriptor fb = shape_descriptor(moved, qs);
        REQUIRE((fa - fb).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("shape_descriptor entries are bounded by one") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Label> labels;
    CenterMap centers;
    for (int i = 0; i < 16; ++i) {
        labels.push_back(i);
        centers[i] = Vec3(u(rng), u(rng), u(rng));
    }
    const QuadrupleSample qs = sample_quadruples(labels, 2000, 5, &centers);
    const ShapeDescriptor f = shape_descriptor(centers, qs);
    REQUIRE(f.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    REQUIRE(f.allFinite());
}

TEST_CASE("shape_descriptor single orthogonal quadruple") {
    CenterMap centers;
    centers[0] = Vec3(1, 0, 0);
    centers[1] = Vec3::Zero();
    centers[2] = Vec3(0, 1, 0);
    QuadrupleSample qs;
    qs.quadruples = {{0, 1, 2, 1}};
    const ShapeDescriptor f = shape_descriptor(centers, qs);
    REQUIRE(f.size() == 1);
    REQUIRE(f(0) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("shape_descriptor reports missing labels and degenerate quadruples") {
    CenterMap centers;
    centers[0] = Vec3(1, 0, 0);
    centers[1] = Vec3::Zero();
    QuadrupleSample qs;
    qs.quadruples = {{0, 1, 0, 7}};
    REQUIRE_THROWS_AS(shape_descriptor(centers, qs), MissingLabel);

    centers[2] = Vec3(1, 0, 0); // coincides with label 0
    QuadrupleSample degen;
    degen.quadruples = {{0, 1, 1, 0}, {0, 2, 0, 1}};
    try {
        shape_descriptor(centers, degen);
        FAIL("expected DegenerateVector");
    } catch (const DegenerateVector& e) {
        REQUIRE(std::string(e.what()).find("index 1") != std::string::npos);
    }
}

TEST_CASE("shape_descriptor is invariant under reflections too") {
    // The atomic descriptor is a cosine of difference vectors; every
    // orthogonal map, reflections included, preserves dot products, so a
    // chiral shape and its mirror image share the same descriptor. The
    // descriptor therefore cannot distinguish handedness; pose recovery
    // resolves it through the point correspondences instead.
    CenterMap centers;
    centers[0] = Vec3(0, 0, 0);
    centers[1] = Vec3(1, 0, 0);
    centers[2] = Vec3(0.2, 0.9, 0.1);
    centers[3] = Vec3(-0.4, 0.3, 0.8);
    centers[4] = Vec3(0.5, -0.6, 0.4);
    CenterMap mirrored;
    for (const auto& [l, c] : centers) mirrored[l] = Vec3(c.x(), c.y(), -c.z());

    const QuadrupleSample qs = sample_quadruples({0, 1, 2, 3, 4}, 200, 9, &centers);
    const ShapeDescriptor fa = shape_descriptor(centers, qs);
    const ShapeDescriptor fb = shape_descriptor(mirrored, qs);
    REQUIRE((fa - fb).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("descriptor_residual basics and brute-force oracle") {
    const ShapeDescriptor a = (ShapeDescriptor(2) << 1.0, 0.0).finished();
    const ShapeDescriptor b = ShapeDescriptor::Zero(2);
    REQUIRE(descriptor_residual(a, a) == 0.0);
    REQUIRE(descriptor_residual(a, b) == Catch::Approx(1.0));
    REQUIRE_THROWS_AS(descriptor_residual(a, ShapeDescriptor::Zero(3)), LengthMismatch);

    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ShapeDescriptor x(10000), y(10000);
    for (int i = 0; i < 10000; ++i) {
        x(i) = u(rng);
        y(i) = u(rng);
    }
    long double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const long double d = (long double)(x(i)) - (long double)(y(i));
        sum += d * d;
    }
    REQUIRE(descriptor_residual(x, y) ==
            Catch::Approx(double(std::sqrt(sum))).margin(1e-10));
}
