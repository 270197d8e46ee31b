#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sprim/metrics.hpp"
#include "test_support.hpp"

using namespace sprim;

TEST_CASE("iou3d analytic cases") {
    OrientedBox unit;
    unit.extents = Vec3::Ones();
    REQUIRE(iou3d(unit, unit) == 1.0);

    OrientedBox far = unit;
    far.pose.t = Vec3(10, 0, 0);
    REQUIRE(iou3d(unit, far) == 0.0);

    // Unit cube shifted by 0.5 along x: intersection 0.5, union 1.5.
    OrientedBox shifted = unit;
    shifted.pose.t = Vec3(0.5, 0, 0);
    REQUIRE(std::abs(iou3d(unit, shifted) - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("iou3d is symmetric within grid noise") {
    std::mt19937_64 rng(80);
    for (int trial = 0; trial < 5; ++trial) {
        OrientedBox a, b;
        a.extents = Vec3(0.4, 0.7, 1.1);
        b.extents = Vec3(0.9, 0.5, 0.6);
        a.pose = testing::random_sim3(rng, 0.5, 2.0, 0.3);
        b.pose = testing::random_sim3(rng, 0.5, 2.0, 0.3);
        REQUIRE(std::abs(iou3d(a, b) - iou3d(b, a)) <= 0.01);
    }
}

TEST_CASE("pose_error trivial and symmetric cases") {
    std::mt19937_64 rng(81);
    const Sim3 gt = testing::random_sim3(rng, 0.5, 2.0, 1.0);
    const PoseError same = pose_error(gt, gt, SymmetrySpec::none());
    REQUIRE(same.rot_deg == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(same.trans_m == 0.0);
    REQUIRE(same.scale_ratio == 1.0);

    // Rotating about the symmetry axis is free for symmetric categories.
    const SymmetrySpec sym = SymmetrySpec::six_fold();
    Sim3 spun = gt;
    spun.R = gt.R * axis_angle_deg(sym.axis, 60.0);
    REQUIRE(pose_error(spun, gt, sym).rot_deg <= 1e-7);
    // ... including angles outside the discrete training set (continuous quotient).
    spun.R = gt.R * axis_angle_deg(sym.axis, 25.0);
    REQUIRE(pose_error(spun, gt, sym).rot_deg <= 1e-7);
    // But not for asymmetric categories.
    REQUIRE(pose_error(spun, gt, SymmetrySpec::none()).rot_deg == Catch::Approx(25.0).margin(1e-6));
}

TEST_CASE("pose_error off-axis rotation is measured exactly") {
    std::mt19937_64 rng(82);
    const Sim3 gt = testing::random_sim3(rng, 0.5, 2.0, 1.0);
    const SymmetrySpec sym = SymmetrySpec::six_fold(); // axis z
    Sim3 pred = gt;
    pred.R = gt.R * axis_angle_deg(Vec3::UnitX(), 10.0); // tilts the symmetry axis by 10 deg
    REQUIRE(pose_error(pred, gt, sym).rot_deg == Catch::Approx(10.0).margin(1e-6));
    REQUIRE(pose_error(pred, gt, SymmetrySpec::none()).rot_deg == Catch::Approx(10.0).margin(1e-6));
}

TEST_CASE("pose_error rotation term is invariant under a common world rotation") {
    std::mt19937_64 rng(83);
    const Sim3 gt = testing::random_sim3(rng, 0.5, 2.0, 1.0);
    Sim3 pred = gt;
    pred.R = gt.R * axis_angle_deg(Vec3(1, 1, 0).normalized(), 7.0);
    const Mat3 world = testing::random_rotation(rng);
    Sim3 gt2 = gt, pred2 = pred;
    gt2.R = world * gt.R;
    pred2.R = world * pred.R;
    for (const SymmetrySpec& sym : {SymmetrySpec::none(), SymmetrySpec::six_fold()})
        REQUIRE(pose_error(pred, gt, sym).rot_deg ==
                Catch::Approx(pose_error(pred2, gt2, sym).rot_deg).margin(1e-9));
}

TEST_CASE("average_precision counts joint threshold hits") {
    std::vector<PoseError> errors(2);
    errors[0] = {3.0, 0.02, 1.0};
    errors[1] = {7.0, 0.02, 1.0};
    REQUIRE(average_precision(errors, 5.0, 0.02) == 0.5);
    REQUIRE(average_precision(errors, 10.0, 0.02) == 1.0);
    REQUIRE(average_precision(errors, 10.0, 0.01) == 0.0);
    REQUIRE(average_precision({{0, 0, 1}, {0, 0, 1}}, 5.0, 0.02) == 1.0);
    REQUIRE_THROWS_AS(average_precision({}, 5.0, 0.02), EmptyList);
}

TEST_CASE("average_precision is monotone in the thresholds") {
    std::mt19937_64 rng(84);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PoseError> errors;
    for (int i = 0; i < 200; ++i) errors.push_back({20.0 * u(rng), 0.1 * u(rng), 1.0});
    double prev = 0.0;
    for (double th = 0.0; th <= 20.0; th += 0.5) {
        const double ap = average_precision(errors, th, 0.05);
        REQUIRE(ap >= prev);
        prev = ap;
    }
}

TEST_CASE("chamfer analytic values and symmetry") {
    std::mt19937_64 rng(85);
    const PointCloud a = testing::random_cloud(rng, 50);
    REQUIRE(chamfer(a, a) == 0.0);
    REQUIRE(chamfer({Vec3::Zero()}, {Vec3(0.1, 0, 0)}) == Catch::Approx(0.02).margin(1e-15));
    const PointCloud b = testing::random_cloud(rng, 70);
    REQUIRE(chamfer(a, b) == chamfer(b, a));
    REQUIRE(chamfer(a, b) >= 0.0);
    REQUIRE_THROWS_AS(chamfer({}, a), EmptyList);
}

TEST_CASE("chamfer matches an independent brute-force oracle") {
    std::mt19937_64 rng(86);
    const PointCloud a = testing::random_cloud(rng, 100);
    const PointCloud b = testing::random_cloud(rng, 100);
    // Independent accumulation: squared distance matrix, then row/col minima.
    Eigen::MatrixXd d2(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            d2(Eigen::Index(i), Eigen::Index(j)) = (a[i] - b[j]).squaredNorm();
    const double oracle =
        d2.rowwise().minCoeff().mean() + d2.colwise().minCoeff().mean();
    REQUIRE(std::abs(chamfer(a, b) - oracle) <= 1e-12);
}

TEST_CASE("ap_curves constant for a perfect instance and consistent with average_precision") {
    std::vector<InstanceMetrics> perfect(1);
    perfect[0] = {"s0", "catA", 0.0, 0.0, 1.0, 1.0, 0.0};
    const auto curves = ap_curves(perfect, {1, 5, 10}, {0.01, 0.05}, {0.25, 0.5});
    for (const auto& p : curves) REQUIRE(p.ap == 1.0);

    std::mt19937_64 rng(87);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<InstanceMetrics> rows;
    std::vector<PoseError> errors;
    for (int i = 0; i < 100; ++i) {
        InstanceMetrics r;
        r.id = "s" + std::to_string(i);
        r.category = "catA";
        r.rot_deg = 20.0 * u(rng);
        r.trans_m = 0.1 * u(rng);
        r.iou = u(rng);
        rows.push_back(r);
        errors.push_back({r.rot_deg, r.trans_m, 1.0});
    }
    const std::vector<double> rot_grid = {2, 5, 10, 15};
    const auto table = ap_curves(rows, rot_grid, {0.02, 0.08}, {0.5});
    double prev = 0.0;
    for (const auto& p : table) {
        if (p.metric != "rotation_deg") continue;
        // Pointwise cross-check: rotation curve leaves translation unconstrained.
        REQUIRE(p.ap ==
                Catch::Approx(average_precision(errors, p.threshold,
                                                std::numeric_limits<double>::infinity()))
                    .margin(1e-12));
        REQUIRE(p.ap >= prev);
        prev = p.ap;
    }
    REQUIRE_THROWS_AS(ap_curves({}, rot_grid, {0.02}, {0.5}), EmptyList);
}
