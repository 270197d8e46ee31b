#pragma once

#include <string>
#include <vector>

#include "sprim/geometry.hpp"
#include "sprim/labeling.hpp"

namespace sprim {

/// Canonical axis-aligned box of the given extents centered at the origin,
/// posed into world by a similarity transform.
struct OrientedBox {
    Sim3 pose;
    Vec3 extents = Vec3::Ones();

    bool contains(const Vec3& world_p) const {
        const Vec3 q = pose.inverse().apply(world_p);
        return std::abs(q.x()) <= extents.x() / 2.0 && std::abs(q.y()) <= extents.y() / 2.0 &&
               std::abs(q.z()) <= extents.z() / 2.0;
    }

    std::array<Vec3, 8> corners() const {
        std::array<Vec3, 8> out;
        int idx = 0;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1})
                    out[std::size_t(idx++)] = pose.apply(
                        Vec3(sx * extents.x() / 2.0, sy * extents.y() / 2.0, sz * extents.z() / 2.0));
        return out;
    }
};

/// Grid-sampled IoU of two oriented boxes: `resolution`^3 cell centers over
/// the AABB of both boxes. Exact for identical and for disjoint boxes;
/// resolution 100 keeps the grid quantization error of partially overlapping
/// boxes below 0.01.
inline double iou3d(const OrientedBox& a, const OrientedBox& b, int resolution = 100) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& box : {a, b})
        for (const Vec3& c : box.corners()) {
            lo = lo.cwiseMin(c);
            hi = hi.cwiseMax(c);
        }
    const Vec3 cell = (hi - lo) / double(resolution);
    const Sim3 inv_a = a.pose.inverse(), inv_b = b.pose.inverse();
    const auto inside = [](const Sim3& inv, const Vec3& extents, const Vec3& world_p) {
        const Vec3 q = inv.apply(world_p);
        return std::abs(q.x()) <= extents.x() / 2.0 && std::abs(q.y()) <= extents.y() / 2.0 &&
               std::abs(q.z()) <= extents.z() / 2.0;
    };
    long in_a = 0, in_b = 0, in_both = 0;
    for (int ix = 0; ix < resolution; ++ix)
        for (int iy = 0; iy < resolution; ++iy)
            for (int iz = 0; iz < resolution; ++iz) {
                const Vec3 p = lo + Vec3((ix + 0.5) * cell.x(), (iy + 0.5) * cell.y(),
                                         (iz + 0.5) * cell.z());
                const bool pa = inside(inv_a, a.extents, p), pb = inside(inv_b, b.extents, p);
                in_a += pa;
                in_b += pb;
                in_both += pa && pb;
            }
    const long uni = in_a + in_b - in_both;
    return uni == 0 ? 0.0 : double(in_both) / double(uni);
}

struct PoseError {
    double rot_deg = 0.0;
    double trans_m = 0.0;
    double scale_ratio = 1.0;
};

/// Rotation/translation/scale error between poses. Symmetric categories use
/// the continuous axis quotient: the angle between the two rotated symmetry
/// axes.
inline PoseError pose_error(const Sim3& pred, const Sim3& gt, const SymmetrySpec& sym) {
    PoseError e;
    if (sym.symmetric()) {
        const double c = (pred.R * sym.axis).normalized().dot((gt.R * sym.axis).normalized());
        e.rot_deg = std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
    } else {
        e.rot_deg = rotation_angle_deg(pred.R, gt.R);
    }
    e.trans_m = (pred.t - gt.t).norm();
    e.scale_ratio = pred.s / gt.s;
    return e;
}

/// Fraction of instances within both thresholds simultaneously.
inline double average_precision(const std::vector<PoseError>& errors, double rot_thresh_deg,
                                double trans_thresh_m) {
    if (errors.empty()) throw EmptyList("average_precision: no instances");
    long hit = 0;
    for (const auto& e : errors)
        hit += e.rot_deg <= rot_thresh_deg && e.trans_m <= trans_thresh_m;
    return double(hit) / double(errors.size());
}

inline double average_precision_iou(const std::vector<double>& ious, double iou_thresh) {
    if (ious.empty()) throw EmptyList("average_precision_iou: no instances");
    long hit = 0;
    for (double v : ious) hit += v >= iou_thresh;
    return double(hit) / double(ious.size());
}

/// Symmetric squared Chamfer distance: mean over a of min squared distance
/// to b, plus the same with the roles swapped.
inline double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw EmptyList("chamfer: empty cloud");
    auto one_way = [](const PointCloud& from, const PointCloud& to) {
        double sum = 0.0;
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
            sum += best;
        }
        return sum / double(from.size());
    };
    return one_way(a, b) + one_way(b, a);
}

struct InstanceMetrics {
    std::string id;
    std::string category;
    double rot_deg = 0.0;
    double trans_m = 0.0;
    double scale_ratio = 1.0;
    double iou = 0.0;
    double chamfer = 0.0;
};

struct CurvePoint {
    std::string category;
    std::string metric; // "rotation_deg", "translation_m", "iou"
    double threshold = 0.0;
    double ap = 0.0;
};

/// Per-category AP as a function of threshold for rotation, translation and
/// IoU. Rotation and translation curves vary one threshold with the other
/// unconstrained.
inline std::vector<CurvePoint> ap_curves(const std::vector<InstanceMetrics>& reports,
                                         const std::vector<double>& rot_grid_deg,
                                         const std::vector<double>& trans_grid_m,
                                         const std::vector<double>& iou_grid) {
    if (reports.empty()) throw EmptyList("ap_curves: no instances");
    std::vector<std::string> categories;
    for (const auto& r : reports)
        if (std::find(categories.begin(), categories.end(), r.category) == categories.end())
            categories.push_back(r.category);

    std::vector<CurvePoint> out;
    for (const auto& cat : categories) {
        std::vector<const InstanceMetrics*> rows;
        for (const auto& r : reports)
            if (r.category == cat) rows.push_back(&r);
        auto frac = [&](auto&& pred) {
            long hit = 0;
            for (const auto* r : rows) hit += pred(*r);
            return double(hit) / double(rows.size());
        };
        for (double th : rot_grid_deg)
            out.push_back({cat, "rotation_deg", th,
                           frac([&](const InstanceMetrics& r) { return r.rot_deg <= th; })});
        for (double th : trans_grid_m)
            out.push_back({cat, "translation_m", th,
                           frac([&](const InstanceMetrics& r) { return r.trans_m <= th; })});
        for (double th : iou_grid)
            out.push_back(
                {cat, "iou", th, frac([&](const InstanceMetrics& r) { return r.iou >= th; })});
    }
    return out;
}

} // namespace sprim
