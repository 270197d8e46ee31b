#pragma once

#include <algorithm>
#include <numeric>
#include <optional>

#include "sprim/descriptor.hpp"
#include "sprim/shape_basis.hpp"

namespace sprim {

struct RansacConfig {
    int rounds = 16;
    double subset_fraction = 0.5;
    double trim_quantile = 0.7;
};

struct OptimizerConfig {
    int iterations = 100;
    double step = 0.02;
    double momentum = 0.9;
    double eta = 1e-4; // ||z|| regularization weight
    std::size_t m = 10000;
    bool resample_per_iter = false;
    std::optional<RansacConfig> ransac;
    std::uint64_t seed = 0;
};

struct TracePoint {
    double objective = 0.0;
    double residual = 0.0;
    double z_norm = 0.0;
};

struct OptimizationTrace {
    std::vector<TracePoint> points;
    LatentCode z_hat;
};

namespace detail {

// Subtract the centroid and normalize the mean center norm. The descriptor is
// SIM(3)-invariant, so this leaves every objective value unchanged, but it
// removes the floating-point cancellation that world-frame translations and
// scales would otherwise inject into the observed descriptors.
inline SemanticCenters canonicalize_centers(const SemanticCenters& obs) {
    SemanticCenters out = obs;
    if (out.centers.empty()) return out;
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& c : out.centers) centroid += c;
    centroid /= double(out.centers.size());
    double mean_norm = 0.0;
    for (Vec3& c : out.centers) {
        c -= centroid;
        mean_norm += c.norm();
    }
    mean_norm /= double(out.centers.size());
    if (mean_norm > 0.0)
        for (Vec3& c : out.centers) c /= mean_norm;
    return out;
}

// Decoded centers of the labels referenced by a quadruple sample, plus the
// machinery to evaluate the descriptor and its gradient w.r.t. z.
struct ObjectiveEval {
    const LinearShapeBasis* basis;
    const QuadrupleSample* qs;
    ShapeDescriptor f_obs;
    double eta;

    ShapeDescriptor decoded_descriptor(const LatentCode& z) const {
        const Eigen::VectorXd packed = basis->mean + basis->basis * z;
        ShapeDescriptor values(Eigen::Index(qs->size()));
        for (std::size_t m = 0; m < qs->size(); ++m) {
            const Quadruple& q = qs->quadruples[m];
            values(Eigen::Index(m)) = atomic_descriptor(
                packed.segment<3>(4 * Eigen::Index(q[0])), packed.segment<3>(4 * Eigen::Index(q[1])),
                packed.segment<3>(4 * Eigen::Index(q[2])), packed.segment<3>(4 * Eigen::Index(q[3])));
        }
        return values;
    }

    double objective(const LatentCode& z) const {
        return (f_obs - decoded_descriptor(z)).norm() + eta * z.norm();
    }

    // Analytic gradient; the ||z||_2 term uses z / max(||z||, 1e-9).
    LatentCode gradient(const LatentCode& z, double* objective_out = nullptr,
                        double* residual_out = nullptr) const {
        const Eigen::VectorXd packed = basis->mean + basis->basis * z;
        const Eigen::Index n_c = basis->n_primitives;
        Eigen::VectorXd center_accum = Eigen::VectorXd::Zero(3 * n_c);
        ShapeDescriptor f_dec(Eigen::Index(qs->size()));
        for (std::size_t m = 0; m < qs->size(); ++m) {
            const Quadruple& q = qs->quadruples[m];
            f_dec(Eigen::Index(m)) = atomic_descriptor(
                packed.segment<3>(4 * Eigen::Index(q[0])), packed.segment<3>(4 * Eigen::Index(q[1])),
                packed.segment<3>(4 * Eigen::Index(q[2])), packed.segment<3>(4 * Eigen::Index(q[3])));
        }
        const Eigen::VectorXd r = f_obs - f_dec;
        const double rnorm = r.norm();
        // The floor smooths the gradient of ||r|| near a perfect fit; below it
        // the direction of r is dominated by rounding noise and a unit-length
        // gradient would make the iteration chaotic.
        const double resid_scale = 1.0 / std::max(rnorm, 1e-6);
        for (std::size_t m = 0; m < qs->size(); ++m) {
            const Quadruple& q = qs->quadruples[m];
            const auto grads = atomic_descriptor_grad(
                packed.segment<3>(4 * Eigen::Index(q[0])), packed.segment<3>(4 * Eigen::Index(q[1])),
                packed.segment<3>(4 * Eigen::Index(q[2])), packed.segment<3>(4 * Eigen::Index(q[3])));
            const double w = -r(Eigen::Index(m)) * resid_scale;
            for (int k = 0; k < 4; ++k)
                center_accum.segment<3>(3 * Eigen::Index(q[std::size_t(k)])) +=
                    w * grads[std::size_t(k)];
        }
        // Chain through the constant center Jacobian (center rows of the basis).
        LatentCode grad = LatentCode::Zero(basis->latent_dim);
        for (Eigen::Index i = 0; i < n_c; ++i)
            grad += basis->basis.middleRows<3>(4 * i).transpose() * center_accum.segment<3>(3 * i);
        grad += eta * z / std::max(z.norm(), 1e-9);
        if (objective_out) *objective_out = rnorm + eta * z.norm();
        if (residual_out) *residual_out = rnorm;
        return grad;
    }
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

} // namespace detail

/// Eq.-style objective: ||f(obs) - f(decode(z))||_2 + eta ||z||_2, both
/// descriptors evaluated over the same quadruple sample.
inline double objective(const LatentCode& z, const LinearShapeBasis& basis,
                        const SemanticCenters& obs, const QuadrupleSample& qs, double eta) {
    const CenterMap obs_map = make_center_map(detail::canonicalize_centers(obs));
    detail::ObjectiveEval eval{&basis, &qs, shape_descriptor(obs_map, qs), eta};
    return eval.objective(z);
}

/// Analytic gradient of the objective w.r.t. z.
inline LatentCode objective_gradient(const LatentCode& z, const LinearShapeBasis& basis,
                                     const SemanticCenters& obs, const QuadrupleSample& qs,
                                     double eta) {
    const CenterMap obs_map = make_center_map(detail::canonicalize_centers(obs));
    detail::ObjectiveEval eval{&basis, &qs, shape_descriptor(obs_map, qs), eta};
    return eval.gradient(z);
}

namespace detail {

// Gradient descent with classical momentum from z = 0; returns the
// best-objective iterate.
inline OptimizationTrace optimize_core(const SemanticCenters& obs, const LinearShapeBasis& basis,
                                       const OptimizerConfig& cfg, const QuadrupleSample& qs_init) {
    const CenterMap obs_map = make_center_map(canonicalize_centers(obs));
    QuadrupleSample qs = qs_init;
    ObjectiveEval eval{&basis, &qs, shape_descriptor(obs_map, qs), cfg.eta};

    OptimizationTrace trace;
    trace.points.reserve(std::size_t(cfg.iterations));
    LatentCode z = LatentCode::Zero(basis.latent_dim);
    LatentCode velocity = LatentCode::Zero(basis.latent_dim);
    LatentCode best_z = z;
    double best_obj = std::numeric_limits<double>::infinity();
    // Constant-step descent on a norm objective never settles: the gradient
    // keeps a fixed magnitude, so the iterate orbits the optimum. Halving the
    // step once the best objective stalls turns the tail of the run into a
    // contraction, which both refines the optimum and keeps the trajectory
    // deterministic under rounding-level input perturbations.
    double step_scale = 1.0;
    int stall = 0;

    for (int it = 0; it < cfg.iterations; ++it) {
        if (cfg.resample_per_iter && it > 0) {
            qs = sample_quadruples(qs_init.source_labels, qs_init.size(),
                                   derive_seed(qs_init.seed, std::uint64_t(it)), &obs_map);
            eval.f_obs = shape_descriptor(obs_map, qs);
        }
        const LatentCode grad = eval.gradient(z);
        velocity = cfg.momentum * velocity - step_scale * cfg.step * grad;
        z += velocity;
        double resid = 0.0;
        const double obj = [&] {
            const ShapeDescriptor f_dec = eval.decoded_descriptor(z);
            resid = (eval.f_obs - f_dec).norm();
            return resid + cfg.eta * z.norm();
        }();
        trace.points.push_back({obj, resid, z.norm()});
        if (obj < best_obj) {
            best_obj = obj;
            best_z = z;
            stall = 0;
        } else if (++stall >= 10) {
            step_scale *= 0.5;
            stall = 0;
        }
    }
    trace.z_hat = best_z;
    return trace;
}

} // namespace detail

/// Online latent shape optimization from the mean shape (z = 0);
/// deterministic given the seed.
inline OptimizationTrace optimize_shape(const SemanticCenters& obs, const LinearShapeBasis& basis,
                                        const OptimizerConfig& cfg) {
    if (obs.size() < 4) throw TooFewLabels("optimize_shape: need at least 4 observed labels");
    const CenterMap obs_map = make_center_map(detail::canonicalize_centers(obs));
    const QuadrupleSample qs = sample_quadruples(obs.labels, cfg.m, cfg.seed, &obs_map);
    return detail::optimize_core(obs, basis, cfg, qs);
}

/// RANSAC variant: n_r independent optimizations on random quadruple subsets,
/// scored by the trimmed mean of absolute descriptor residuals over the full
/// sample; returns the best-scoring candidate.
inline OptimizationTrace optimize_shape_ransac(const SemanticCenters& obs,
                                               const LinearShapeBasis& basis,
                                               const OptimizerConfig& cfg) {
    if (!cfg.ransac) throw std::invalid_argument("optimize_shape_ransac: ransac config missing");
    if (obs.size() < 4)
        throw TooFewLabels("optimize_shape_ransac: need at least 4 observed labels");
    const RansacConfig& rc = *cfg.ransac;
    const CenterMap obs_map = make_center_map(detail::canonicalize_centers(obs));
    const QuadrupleSample qs_full = sample_quadruples(obs.labels, cfg.m, cfg.seed, &obs_map);
    const ShapeDescriptor f_obs_full = shape_descriptor(obs_map, qs_full);

    detail::ObjectiveEval full_eval{&basis, &qs_full, f_obs_full, cfg.eta};
    const std::size_t keep =
        std::max<std::size_t>(1, std::size_t(std::ceil(rc.trim_quantile * double(qs_full.size()))));

    OptimizationTrace best;
    double best_score = std::numeric_limits<double>::infinity();
    for (int round = 0; round < rc.rounds; ++round) {
        QuadrupleSample sub = qs_full;
        if (rc.subset_fraction < 1.0) {
            const std::size_t sub_m = std::max<std::size_t>(
                1, std::size_t(rc.subset_fraction * double(qs_full.size())));
            std::mt19937_64 rng(detail::derive_seed(cfg.seed, 0x5A5A0000ull + std::uint64_t(round)));
            std::vector<std::size_t> idx(qs_full.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            sub.quadruples.clear();
            for (std::size_t k = 0; k < sub_m; ++k)
                sub.quadruples.push_back(qs_full.quadruples[idx[k]]);
        }
        OptimizationTrace cand = detail::optimize_core(obs, basis, cfg, sub);

        std::vector<double> abs_res(qs_full.size());
        const ShapeDescriptor f_dec = full_eval.decoded_descriptor(cand.z_hat);
        for (std::size_t i = 0; i < qs_full.size(); ++i)
            abs_res[i] = std::abs(f_obs_full(Eigen::Index(i)) - f_dec(Eigen::Index(i)));
        std::nth_element(abs_res.begin(), abs_res.begin() + long(keep) - 1, abs_res.end());
        double score = 0.0;
        for (std::size_t i = 0; i < keep; ++i) score += abs_res[i];
        score /= double(keep);

        if (score < best_score) {
            best_score = score;
            best = std::move(cand);
        }
    }
    return best;
}

} // namespace sprim
