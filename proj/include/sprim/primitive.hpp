#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sprim/geometry.hpp"

namespace sprim {

struct SpherePrimitive {
    Vec3 c = Vec3::Zero();
    double r = 0.0;
};

/// Ordered set of sphere primitives for one category instance; the index of a
/// primitive is its semantic label.
struct PrimitiveSet {
    std::string category;
    std::vector<SpherePrimitive> primitives;

    std::size_t size() const { return primitives.size(); }
};

struct SdfSample {
    Vec3 x = Vec3::Zero();
    double s = 0.0;
};

/// Signed distance from x to the union-of-spheres surface:
/// min_i ||x - c_i|| - r_i. Negative inside the nearest sphere.
inline double primitive_sdf(const Vec3& x, const PrimitiveSet& ps) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : ps.primitives)
        best = std::min(best, (x - p.c).norm() - p.r);
    return best;
}

/// Remaps an SDF target so primitives settle on the surface instead of
/// filling the interior: s stays as-is down to -t/2, deeper values are
/// reflected to -s - t. Continuous at s = -t/2.
inline double truncate_sdf(double s, double t) {
    return s >= -t / 2.0 ? s : -s - t;
}

struct FitConfig {
    int iterations = 2000;
    double step = 1e-2;
    double init_radius = 0.02;
    double loss_clamp = 0.05; // final truncation band of the L1 loss
    std::uint64_t seed = 0;
};

struct FitResult {
    PrimitiveSet set;
    double loss = 0.0;
};

namespace detail {

// Truncated-L1: both the predicted distance and the remapped target are
// clamped to [-t, t], so the loss concentrates on the surface shell.
inline double truncated_l1(double d, double target, double t) {
    return std::abs(std::clamp(d, -t, t) - std::clamp(target, -t, t));
}

inline double fit_loss(const std::vector<SdfSample>& samples,
                       const std::vector<double>& targets,
                       const PrimitiveSet& ps, double band) {
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        sum += truncated_l1(primitive_sdf(samples[i].x, ps), targets[i], band);
    return sum / double(samples.size());
}

// Farthest-point sampling over the given positions.
inline std::vector<Vec3> farthest_points(const std::vector<Vec3>& pts, int k,
                                         std::mt19937_64& rng) {
    std::vector<Vec3> out;
    if (pts.empty()) return out;
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    out.push_back(pts[pick(rng)]);
    std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
    while (int(out.size()) < k) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            dist[i] = std::min(dist[i], (pts[i] - out.back()).squaredNorm());
            if (dist[i] > best_d) {
                best_d = dist[i];
                best = i;
            }
        }
        out.push_back(pts[best]);
    }
    return out;
}

} // namespace detail

/// Fits n_c sphere primitives to SDF samples by subgradient descent on the
/// truncated-L1 objective, with step halving whenever a step would increase
/// the loss. Radii are clamped at 0 after every step.
inline FitResult fit_primitives(const std::vector<SdfSample>& samples, int n_c,
                                double t, const FitConfig& cfg = {}) {
    if (n_c < 1) throw InsufficientSamples("fit_primitives: n_c must be >= 1");
    if (int(samples.size()) < 10 * n_c)
        throw InsufficientSamples("fit_primitives: need at least 10*n_c samples");

    std::vector<double> targets(samples.size());
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        targets[i] = truncate_sdf(samples[i].s, t);
        has_pos |= samples[i].s > 0.0;
        has_neg |= samples[i].s < 0.0;
    }
    if (!has_pos || !has_neg)
        throw InsufficientSamples("fit_primitives: samples must span both SDF signs");

    // Initialize on interior sample positions, spread by farthest-point
    // sampling; near-surface interior samples preferred so primitives start
    // on the shell the truncated targets describe.
    std::vector<Vec3> interior;
    for (const auto& smp : samples)
        if (smp.s < 0.0 && smp.s >= -t / 2.0 - 0.05) interior.push_back(smp.x);
    if (int(interior.size()) < n_c)
        for (const auto& smp : samples)
            if (smp.s < -t / 2.0 - 0.05) interior.push_back(smp.x);
    std::mt19937_64 rng(cfg.seed);
    const std::vector<Vec3> seeds = detail::farthest_points(interior, n_c, rng);

    FitResult res;
    res.set.primitives.resize(std::size_t(n_c));
    for (int i = 0; i < n_c; ++i) {
        res.set.primitives[std::size_t(i)].c = seeds[std::size_t(i) % seeds.size()];
        res.set.primitives[std::size_t(i)].r = cfg.init_radius;
    }

    const std::size_t n = samples.size();
    // Coarse-to-fine truncation band: a wide band early lets primitives grow
    // toward far samples (narrow-band loss is flat there, which traps tiny
    // spheres); the final narrow band localizes centers onto the surface.
    const double band_final = cfg.loss_clamp;
    const double band_start = std::max(band_final, 0.5);
    const int anneal_iters = std::max(1, cfg.iterations / 2);
    const auto band_at = [&](int it) {
        if (it >= anneal_iters) return band_final;
        const double f = double(it) / double(anneal_iters);
        return band_start * std::pow(band_final / band_start, f);
    };
    double band = band_at(0);
    double step = cfg.step;
    double loss = detail::fit_loss(samples, targets, res.set, band);
    std::vector<Vec3> grad_c(static_cast<std::size_t>(n_c));
    std::vector<double> grad_r(static_cast<std::size_t>(n_c));

    for (int it = 0; it < cfg.iterations; ++it) {
        const double band_now = band_at(it);
        if (band_now != band) {
            band = band_now;
            loss = detail::fit_loss(samples, targets, res.set, band);
        }
        std::fill(grad_c.begin(), grad_c.end(), Vec3::Zero());
        std::fill(grad_r.begin(), grad_r.end(), 0.0);

        for (std::size_t i = 0; i < n; ++i) {
            // Only the nearest primitive receives a subgradient.
            std::size_t arg = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < res.set.primitives.size(); ++j) {
                const double dj =
                    (samples[i].x - res.set.primitives[j].c).norm() - res.set.primitives[j].r;
                if (dj < best) {
                    best = dj;
                    arg = j;
                }
            }
            // Leaky subgradient: samples clamped out of the [-t, t] band
            // still steer the nearest primitive toward the band, which frees
            // spheres that swallowed interior samples and pulls coverage
            // toward uncovered surface.
            const double target = std::clamp(targets[i], -band, band);
            const double sgn = best > target ? 1.0 : (best < target ? -1.0 : 0.0);
            const Vec3 diff = samples[i].x - res.set.primitives[arg].c;
            const double nrm = diff.norm();
            if (nrm > 1e-12) grad_c[arg] += sgn * (-diff / nrm);
            grad_r[arg] += -sgn;
        }

        PrimitiveSet trial = res.set;
        for (std::size_t j = 0; j < trial.primitives.size(); ++j) {
            trial.primitives[j].c -= step * grad_c[j] / double(n);
            trial.primitives[j].r =
                std::max(0.0, trial.primitives[j].r - step * grad_r[j] / double(n));
        }
        const double trial_loss = detail::fit_loss(samples, targets, trial, band);
        if (!std::isfinite(trial_loss)) throw NonFiniteLoss("fit_primitives: loss diverged");
        if (trial_loss <= loss) {
            res.set = std::move(trial);
            loss = trial_loss;
            step = std::min(step * 1.2, cfg.step);
        } else {
            step *= 0.5;
            if (step < 1e-12) break;
        }
    }
    res.loss = loss;
    return res;
}

namespace detail {

// Hungarian algorithm (Jonker-Volgenant style potentials), O(n^3).
// cost is row-major n x n; returns assignment row -> column.
inline std::vector<int> hungarian(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(std::size_t(n) + 1, 0.0), v(std::size_t(n) + 1, 0.0);
    std::vector<int> p(std::size_t(n) + 1, 0), way(std::size_t(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(std::size_t(n) + 1, inf);
        std::vector<char> used(std::size_t(n) + 1, false);
        do {
            used[std::size_t(j0)] = true;
            const int i0 = p[std::size_t(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[std::size_t(j)]) continue;
                const double cur = cost[std::size_t(i0 - 1) * std::size_t(n) + std::size_t(j - 1)] -
                                   u[std::size_t(i0)] - v[std::size_t(j)];
                if (cur < minv[std::size_t(j)]) {
                    minv[std::size_t(j)] = cur;
                    way[std::size_t(j)] = j0;
                }
                if (minv[std::size_t(j)] < delta) {
                    delta = minv[std::size_t(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[std::size_t(j)]) {
                    u[std::size_t(p[std::size_t(j)])] += delta;
                    v[std::size_t(j)] -= delta;
                } else {
                    minv[std::size_t(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[std::size_t(j0)] != 0);
        do {
            const int j1 = way[std::size_t(j0)];
            p[std::size_t(j0)] = p[std::size_t(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(std::size_t(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[std::size_t(j)] != 0) row_to_col[std::size_t(p[std::size_t(j)] - 1)] = j - 1;
    return row_to_col;
}

} // namespace detail

struct AlignResult {
    std::vector<PrimitiveSet> sets;
    std::vector<double> costs; // total matched center distance per set
};

/// Re-indexes each primitive set so index k refers to the same semantic part
/// as index k of the reference, via minimum-cost bipartite matching of
/// centers. All instances must already be in canonical pose.
inline AlignResult align_primitive_indices(const std::vector<PrimitiveSet>& sets,
                                           const PrimitiveSet& reference) {
    const int n = int(reference.size());
    AlignResult out;
    for (const auto& set : sets) {
        if (int(set.size()) != n)
            throw CountMismatch("align_primitive_indices: primitive counts differ");
        std::vector<double> cost(std::size_t(n) * std::size_t(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                cost[std::size_t(i) * std::size_t(n) + std::size_t(j)] =
                    (set.primitives[std::size_t(i)].c - reference.primitives[std::size_t(j)].c)
                        .norm();
        const std::vector<int> match = detail::hungarian(cost, n);
        PrimitiveSet permuted;
        permuted.category = set.category;
        permuted.primitives.resize(std::size_t(n));
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            permuted.primitives[std::size_t(match[std::size_t(i)])] =
                set.primitives[std::size_t(i)];
            total += cost[std::size_t(i) * std::size_t(n) + std::size_t(match[std::size_t(i)])];
        }
        out.sets.push_back(std::move(permuted));
        out.costs.push_back(total);
    }
    return out;
}

} // namespace sprim
