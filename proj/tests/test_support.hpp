#pragma once

#include <random>

#include "sprim/geometry.hpp"

namespace sprim::testing {

inline Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    while (q.norm() < 1e-6) q = {gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
    return q.normalized().toRotationMatrix();
}

inline Sim3 random_sim3(std::mt19937_64& rng, double s_min = 0.1, double s_max = 10.0,
                        double t_range = 10.0) {
    std::uniform_real_distribution<double> su(s_min, s_max);
    std::uniform_real_distribution<double> tu(-t_range, t_range);
    Sim3 T;
    T.s = su(rng);
    T.R = random_rotation(rng);
    T.t = Vec3(tu(rng), tu(rng), tu(rng));
    return T;
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double range = 1.0) {
    std::uniform_real_distribution<double> u(-range, range);
    PointCloud out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
    return out;
}

} // namespace sprim::testing
