#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sprim/geometry.hpp"
#include "sprim/primitive.hpp"

namespace sprim {

using Label = int;
inline constexpr Label kDust = -1;

/// Rotational symmetry of a category: a canonical-frame axis and the set of
/// rotation angles (degrees) under which labels are considered equivalent.
/// Non-symmetric categories use {0}; symmetric ones {0, 60, ..., 300}.
struct SymmetrySpec {
    Vec3 axis = Vec3::UnitZ();
    std::vector<double> angles_deg = {0.0};

    static SymmetrySpec none() { return {}; }
    static SymmetrySpec six_fold(const Vec3& axis = Vec3::UnitZ()) {
        return {axis.normalized(), {0.0, 60.0, 120.0, 180.0, 240.0, 300.0}};
    }
    bool symmetric() const { return angles_deg.size() > 1; }
};

struct LabeledPointCloud {
    PointCloud points;
    std::vector<Label> labels;
};

/// Per-label mean positions of a labeled cloud, dust excluded, labels sorted.
struct SemanticCenters {
    std::vector<Label> labels;
    std::vector<Vec3> centers;
    std::vector<int> counts;

    std::size_t size() const { return labels.size(); }
};

/// Nearest-center label per point; ties broken toward the lowest index.
inline std::vector<Label> assign_labels(const PointCloud& cloud, const PrimitiveSet& ps) {
    std::vector<Label> labels(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Label best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ps.size(); ++j) {
            const double d = (cloud[i] - ps.primitives[j].c).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = Label(j);
            }
        }
        labels[i] = best;
    }
    return labels;
}

/// Labels against the primitive centers rotated by theta about the symmetry axis.
inline std::vector<Label> rotated_labels(const PointCloud& cloud, const PrimitiveSet& ps,
                                         const SymmetrySpec& sym, double theta_deg) {
    if (std::find(sym.angles_deg.begin(), sym.angles_deg.end(), theta_deg) ==
        sym.angles_deg.end())
        throw AngleNotInSpec("rotated_labels: angle not in symmetry spec");
    const Mat3 rot = axis_angle_deg(sym.axis, theta_deg);
    PrimitiveSet rotated = ps;
    for (auto& p : rotated.primitives) p.c = rot * p.c;
    return assign_labels(cloud, rotated);
}

struct SymmetricLoss {
    double loss = 0.0;
    double theta_deg = 0.0;
};

/// Minimum over the symmetry angles of the mean cross-entropy between the
/// predicted class distributions (N_c + 1 classes, dust last) and the
/// rotated ground-truth labels.
inline SymmetricLoss symmetric_cross_entropy(const std::vector<std::vector<double>>& pred,
                                             const PointCloud& cloud, const PrimitiveSet& ps,
                                             const SymmetrySpec& sym) {
    const std::size_t n_classes = ps.size() + 1;
    if (pred.size() != cloud.size())
        throw MalformedDistribution("symmetric_cross_entropy: row count mismatch");
    for (const auto& row : pred) {
        if (row.size() != n_classes)
            throw MalformedDistribution("symmetric_cross_entropy: wrong class count");
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0) throw MalformedDistribution("symmetric_cross_entropy: negative prob");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw MalformedDistribution("symmetric_cross_entropy: rows must sum to 1");
    }

    SymmetricLoss best{std::numeric_limits<double>::infinity(), 0.0};
    for (double theta : sym.angles_deg) {
        const std::vector<Label> gt = rotated_labels(cloud, ps, sym, theta);
        double ce = 0.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double p = pred[i][std::size_t(gt[i])];
            ce += -std::log(std::max(p, 1e-300));
        }
        ce /= double(cloud.size());
        if (ce < best.loss) best = {ce, theta};
    }
    return best;
}

struct LabelNoiseConfig {
    double flip_fraction = 0.0;
    double dust_radius = 0.1; // canonical units
    std::uint64_t seed = 0;
};

/// Stand-in for a learned segmentation network: transforms the observation
/// into canonical frame with the ground-truth pose, assigns nearest-center
/// labels, marks points beyond dust_radius of every center as dust, and
/// optionally flips a fraction of labels to a random wrong label.
inline LabeledPointCloud oracle_label_observation(const PointCloud& observed, const Sim3& gt,
                                                  const PrimitiveSet& ps,
                                                  const LabelNoiseConfig& noise = {}) {
    const PointCloud canonical = sim3_apply(gt.inverse(), observed);
    LabeledPointCloud out;
    out.points = observed;
    out.labels = assign_labels(canonical, ps);
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        const Vec3& c = ps.primitives[std::size_t(out.labels[i])].c;
        if ((canonical[i] - c).norm() > noise.dust_radius) out.labels[i] = kDust;
    }
    if (noise.flip_fraction > 0.0 && ps.size() > 1) {
        std::mt19937_64 rng(noise.seed);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, int(ps.size()) - 2);
        for (auto& l : out.labels) {
            if (l == kDust || coin(rng) >= noise.flip_fraction) continue;
            int wrong = pick(rng);
            if (wrong >= l) ++wrong;
            l = wrong;
        }
    }
    return out;
}

/// Eq.-style centralization: per-label mean of the observed points, dust
/// excluded. Requires at least 4 distinct labels (descriptor quadruples).
inline SemanticCenters centralize(const LabeledPointCloud& lc) {
    if (lc.points.size() != lc.labels.size())
        throw LengthMismatch("centralize: point/label count mismatch");
    std::vector<Label> distinct;
    for (Label l : lc.labels)
        if (l != kDust) distinct.push_back(l);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4) throw TooFewLabels("centralize: fewer than 4 distinct labels");

    SemanticCenters out;
    out.labels = distinct;
    out.centers.assign(distinct.size(), Vec3::Zero());
    out.counts.assign(distinct.size(), 0);
    for (std::size_t i = 0; i < lc.points.size(); ++i) {
        if (lc.labels[i] == kDust) continue;
        const std::size_t slot = std::size_t(
            std::lower_bound(distinct.begin(), distinct.end(), lc.labels[i]) - distinct.begin());
        out.centers[slot] += lc.points[i];
        out.counts[slot] += 1;
    }
    for (std::size_t k = 0; k < out.centers.size(); ++k) out.centers[k] /= double(out.counts[k]);
    return out;
}

} // namespace sprim
