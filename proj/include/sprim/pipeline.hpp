#pragma once

#include <chrono>

#include "sprim/optimizer.hpp"

namespace sprim {

struct EstimationResult {
    LatentCode z_hat;
    Sim3 pose;
    double alignment_residual = 0.0;  // mean squared correspondence error
    double descriptor_residual = 0.0; // at z_hat
    int observed_label_count = 0;
    double optimize_ms = 0.0;
    double pose_ms = 0.0;
};

/// Recovers the SIM(3) pose by aligning the decoded center of each observed
/// point's label to that point (dust excluded, many-to-one correspondences).
inline UmeyamaResult recover_pose(const LabeledPointCloud& lc, const PrimitiveSet& decoded) {
    PointCloud src, dst;
    src.reserve(lc.points.size());
    dst.reserve(lc.points.size());
    for (std::size_t i = 0; i < lc.points.size(); ++i) {
        if (lc.labels[i] == kDust) continue;
        src.push_back(decoded.primitives[std::size_t(lc.labels[i])].c);
        dst.push_back(lc.points[i]);
    }
    return umeyama_align(src, dst);
}

/// End-to-end estimation: centralize -> quadruple sampling -> latent shape
/// optimization -> Umeyama pose recovery against the decoded shape.
inline EstimationResult estimate(const LabeledPointCloud& lc, const LinearShapeBasis& basis,
                                 const OptimizerConfig& cfg) {
    using clock = std::chrono::steady_clock;

    const SemanticCenters obs = centralize(lc);

    const auto t0 = clock::now();
    const OptimizationTrace trace = cfg.ransac ? optimize_shape_ransac(obs, basis, cfg)
                                               : optimize_shape(obs, basis, cfg);
    const auto t1 = clock::now();

    EstimationResult res;
    res.z_hat = trace.z_hat;
    res.observed_label_count = int(obs.size());
    res.descriptor_residual = trace.points.empty() ? 0.0 : 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : trace.points)
        if (pt.objective < best) {
            best = pt.objective;
            res.descriptor_residual = pt.residual;
        }

    const PrimitiveSet decoded = decode(basis, res.z_hat);
    const UmeyamaResult aligned = recover_pose(lc, decoded);
    const auto t2 = clock::now();

    res.pose = aligned.transform;
    res.alignment_residual = aligned.residual;
    res.optimize_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    res.pose_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    return res;
}

} // namespace sprim
