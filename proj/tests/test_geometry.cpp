#include <catch2/catch_amalgamated.hpp>

#include "sprim/geometry.hpp"
#include "test_support.hpp"

using namespace sprim;

TEST_CASE("sim3_apply identity leaves the cloud unchanged") {
    std::mt19937_64 rng(1);
    const PointCloud cloud = testing::random_cloud(rng, 20);
    const PointCloud out = sim3_apply(Sim3::identity(), cloud);
    for (std::size_t i = 0; i < cloud.size(); ++i) REQUIRE(out[i] == cloud[i]);
}

TEST_CASE("sim3_apply componentwise arithmetic") {
    Sim3 T;
    T.s = 2.0;
    T.t = Vec3(1, 0, 0);
    const PointCloud out = sim3_apply(T, {Vec3(1, 1, 1)});
    REQUIRE(out[0].isApprox(Vec3(3, 2, 2), 1e-15));
}

TEST_CASE("sim3 inverse round-trips a cloud") {
    std::mt19937_64 rng(2);
    const Sim3 T = testing::random_sim3(rng);
    const PointCloud cloud = testing::random_cloud(rng, 30);
    const PointCloud back = sim3_apply(T.inverse(), sim3_apply(T, cloud));
    for (std::size_t i = 0; i < cloud.size(); ++i)
        REQUIRE((back[i] - cloud[i]).norm() < 1e-9);
}

TEST_CASE("sim3 compose with inverse is identity") {
    std::mt19937_64 rng(3);
    const Sim3 T = testing::random_sim3(rng);
    const Sim3 id = T.compose(T.inverse());
    REQUIRE(std::abs(id.s - 1.0) < 1e-9);
    REQUIRE((id.R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(id.t.norm() < 1e-8);
    REQUIRE(T.valid());
}

TEST_CASE("umeyama on identical clouds returns identity") {
    std::mt19937_64 rng(4);
    const PointCloud cloud = testing::random_cloud(rng, 4);
    const auto res = umeyama_align(cloud, cloud);
    REQUIRE(std::abs(res.transform.s - 1.0) < 1e-10);
    REQUIRE((res.transform.R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(res.transform.t.norm() < 1e-10);
    REQUIRE(res.residual < 1e-18);
}

TEST_CASE("umeyama recovers a random constructed transform") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Sim3 T = testing::random_sim3(rng);
        const PointCloud src = testing::random_cloud(rng, 10);
        const PointCloud dst = sim3_apply(T, src);
        const auto res = umeyama_align(src, dst);
        REQUIRE(rotation_angle_deg(res.transform.R, T.R) <= 1e-7);
        REQUIRE(std::abs(res.transform.s - T.s) / T.s <= 1e-10);
        REQUIRE((res.transform.t - T.t).norm() <= 1e-9);
    }
}

TEST_CASE("umeyama rejects collinear sources") {
    PointCloud src, dst;
    for (int i = 0; i < 5; ++i) {
        src.emplace_back(i, 0, 0);
        dst.emplace_back(i, i, 0);
    }
    REQUIRE_THROWS_AS(umeyama_align(src, dst), DegenerateConfiguration);
}

TEST_CASE("umeyama rejects coincident sources") {
    const PointCloud src(5, Vec3(1, 2, 3));
    std::mt19937_64 rng(6);
    REQUIRE_THROWS_AS(umeyama_align(src, testing::random_cloud(rng, 5)),
                      DegenerateConfiguration);
}

TEST_CASE("umeyama left-composition property") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Sim3 T0 = testing::random_sim3(rng, 0.5, 2.0, 1.0);
        const Sim3 T = testing::random_sim3(rng, 0.5, 2.0, 1.0);
        const PointCloud src = testing::random_cloud(rng, 12);
        const Sim3 combined = T.compose(T0);
        const auto res = umeyama_align(src, sim3_apply(combined, src));
        REQUIRE(rotation_angle_deg(res.transform.R, combined.R) < 1e-6);
        REQUIRE(std::abs(res.transform.s - combined.s) < 1e-8 * combined.s);
        REQUIRE((res.transform.t - combined.t).norm() < 1e-8);
    }
}

TEST_CASE("duplicating a correspondence equals weighting it") {
    std::mt19937_64 rng(8);
    PointCloud src = testing::random_cloud(rng, 5);
    const Sim3 T = testing::random_sim3(rng, 0.5, 2.0, 1.0);
    PointCloud dst = sim3_apply(T, src);
    // Perturb one correspondence so the solve is not exact.
    dst[0] += Vec3(0.3, -0.2, 0.1);

    PointCloud src_rep = src, dst_rep = dst;
    for (int k = 0; k < 2; ++k) {
        src_rep.push_back(src[1]);
        dst_rep.push_back(dst[1]);
    }
    const auto repeated = umeyama_align(src_rep, dst_rep);

    // Brute-force weighted solve: expand weights into explicit repetition.
    PointCloud src_w, dst_w;
    const std::vector<int> weights = {1, 3, 1, 1, 1};
    for (std::size_t i = 0; i < src.size(); ++i)
        for (int k = 0; k < weights[i]; ++k) {
            src_w.push_back(src[i]);
            dst_w.push_back(dst[i]);
        }
    const auto weighted = umeyama_align(src_w, dst_w);
    REQUIRE((repeated.transform.R - weighted.transform.R).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(std::abs(repeated.transform.s - weighted.transform.s) < 1e-12);
    REQUIRE((repeated.transform.t - weighted.transform.t).norm() < 1e-12);
}

TEST_CASE("planar sources never yield a reflection") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        PointCloud src;
        for (int i = 0; i < 8; ++i) src.emplace_back(u(rng), u(rng), 0.0);
        const Sim3 T = testing::random_sim3(rng, 0.5, 2.0, 1.0);
        const auto res = umeyama_align(src, sim3_apply(T, src));
        REQUIRE(res.transform.R.determinant() > 0.0);
        REQUIRE(std::abs(res.transform.R.determinant() - 1.0) < 1e-9);
    }
}
