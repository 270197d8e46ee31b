#pragma once

#include <functional>
#include <random>

#include "sprim/labeling.hpp"
#include "sprim/metrics.hpp"
#include "sprim/pipeline.hpp"
#include "sprim/shape_basis.hpp"

namespace sprim {

namespace sdf {

inline double capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
    const Vec3 pa = p - a, ba = b - a;
    const double bb = ba.squaredNorm();
    const double h = bb > 0.0 ? std::clamp(pa.dot(ba) / bb, 0.0, 1.0) : 0.0;
    return (pa - ba * h).norm() - r;
}

inline double rounded_box(const Vec3& p, const Vec3& half_extents, double rounding) {
    const Vec3 q = p.cwiseAbs() - half_extents;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0) - rounding;
}

inline double capped_cylinder(const Vec3& p, double radius, double half_height) {
    const double dx = std::hypot(p.x(), p.y()) - radius;
    const double dz = std::abs(p.z()) - half_height;
    const double ox = std::max(dx, 0.0), oz = std::max(dz, 0.0);
    return std::min(std::max(dx, dz), 0.0) + std::hypot(ox, oz);
}

// Torus in the xz-plane (ring axis along y), centered at the origin.
inline double torus_y(const Vec3& p, double major_r, double minor_r) {
    const double q = std::hypot(p.x(), p.z()) - major_r;
    return std::hypot(q, p.y()) - minor_r;
}

} // namespace sdf

/// Procedural category family: an analytic SDF parameterized over declared
/// ranges, normalized so every instance has unit bounding-box diagonal.
struct CategorySpec {
    enum class Family { Lathe, Hinge, BodyHandle };

    std::string name;
    Family family = Family::Lathe;
    std::vector<std::pair<double, double>> param_ranges;
    SymmetrySpec symmetry;

    // Rotationally symmetric two-capsule profile (bottle/bowl/can-like):
    // params = body half-height, body radius, neck half-height, neck radius.
    static CategorySpec lathe() {
        CategorySpec s;
        s.name = "lathe";
        s.family = Family::Lathe;
        s.param_ranges = {{0.0, 0.5}, {0.1, 0.4}, {0.0, 0.3}, {0.0, 0.2}};
        s.symmetry = SymmetrySpec::six_fold();
        return s;
    }

    // Two rounded slabs joined along a hinge (laptop-like):
    // params = slab length, slab half-width, opening angle (degrees).
    static CategorySpec hinge() {
        CategorySpec s;
        s.name = "hinge";
        s.family = Family::Hinge;
        s.param_ranges = {{0.3, 0.45}, {0.22, 0.35}, {80.0, 130.0}};
        s.symmetry = SymmetrySpec::none();
        return s;
    }

    // Capped cylinder with a torus handle (mug-like):
    // params = body radius, body half-height, handle major radius.
    static CategorySpec body_handle() {
        CategorySpec s;
        s.name = "body_handle";
        s.family = Family::BodyHandle;
        s.param_ranges = {{0.2, 0.3}, {0.2, 0.35}, {0.08, 0.15}};
        s.symmetry = SymmetrySpec::none();
        return s;
    }

    void validate(const std::vector<double>& params) const {
        if (params.size() != param_ranges.size())
            throw ParamsOutOfRange(name + ": wrong parameter count");
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i] < param_ranges[i].first || params[i] > param_ranges[i].second)
                throw ParamsOutOfRange(name + ": parameter " + std::to_string(i) + " out of range");
    }
};

/// An instantiated category shape: normalized analytic SDF (unit bounding-box
/// diagonal, box centered at the origin) together with its canonical bounds.
struct ShapeInstance {
    std::function<double(const Vec3&)> sdf;
    Vec3 bbox_min = Vec3::Zero();
    Vec3 bbox_max = Vec3::Zero();
};

namespace detail {

inline double raw_family_sdf(const CategorySpec& spec, const std::vector<double>& q,
                             const Vec3& p) {
    switch (spec.family) {
        case CategorySpec::Family::Lathe: {
            const double h1 = q[0], r1 = q[1], h2 = q[2], r2 = q[3];
            const double body = sdf::capsule(p, {0, 0, -h1}, {0, 0, h1}, r1);
            const double neck = sdf::capsule(p, {0, 0, h1}, {0, 0, h1 + 2 * h2}, r2);
            return std::min(body, neck);
        }
        case CategorySpec::Family::Hinge: {
            const double bx = q[0], by = q[1], phi = q[2] * M_PI / 180.0;
            const double tz = 0.02, round = 0.01;
            const Vec3 he(bx, by, tz);
            const double base = sdf::rounded_box(p - Vec3(bx, 0, 0), he, round);
            const Mat3 rot = Eigen::AngleAxisd(-phi, Vec3::UnitY()).toRotationMatrix();
            const Vec3 lid_center = rot * Vec3(bx, 0, 0);
            const double lid = sdf::rounded_box(rot.transpose() * (p - lid_center), he, round);
            return std::min(base, lid);
        }
        case CategorySpec::Family::BodyHandle: {
            const double rb = q[0], hb = q[1], rt = q[2];
            const double minor = 0.03;
            const double body = sdf::capped_cylinder(p, rb, hb);
            const double handle = sdf::torus_y(p - Vec3(rb + 0.4 * rt, 0, 0), rt, minor);
            return std::min(body, handle);
        }
    }
    return std::numeric_limits<double>::infinity();
}

inline void raw_family_bbox(const CategorySpec& spec, const std::vector<double>& q, Vec3& lo,
                            Vec3& hi) {
    switch (spec.family) {
        case CategorySpec::Family::Lathe: {
            const double h1 = q[0], r1 = q[1], h2 = q[2], r2 = q[3];
            const double rmax = std::max(r1, r2);
            lo = Vec3(-rmax, -rmax, -h1 - r1);
            hi = Vec3(rmax, rmax, std::max(h1 + r1, h1 + 2 * h2 + r2));
            break;
        }
        case CategorySpec::Family::Hinge: {
            const double bx = q[0], by = q[1], phi = q[2] * M_PI / 180.0;
            const double tz = 0.02, round = 0.01;
            const Mat3 rot = Eigen::AngleAxisd(-phi, Vec3::UnitY()).toRotationMatrix();
            lo = Vec3::Constant(std::numeric_limits<double>::infinity());
            hi = -lo;
            for (int sx : {-1, 1})
                for (int sy : {-1, 1})
                    for (int sz : {-1, 1}) {
                        const Vec3 c(sx * bx, sy * by, sz * tz);
                        const Vec3 base_corner = c + Vec3(bx, 0, 0);
                        const Vec3 lid_corner = rot * (c + Vec3(bx, 0, 0));
                        lo = lo.cwiseMin(base_corner).cwiseMin(lid_corner);
                        hi = hi.cwiseMax(base_corner).cwiseMax(lid_corner);
                    }
            lo -= Vec3::Constant(round);
            hi += Vec3::Constant(round);
            break;
        }
        case CategorySpec::Family::BodyHandle: {
            const double rb = q[0], hb = q[1], rt = q[2];
            const double minor = 0.03;
            lo = Vec3(-rb, -rb, -hb);
            hi = Vec3(rb + 0.4 * rt + rt + minor, rb, hb);
            break;
        }
    }
}

} // namespace detail

/// Instantiates a category shape and rescales it to unit bounding-box
/// diagonal with the box centered at the origin.
inline ShapeInstance make_shape(const CategorySpec& spec, const std::vector<double>& params) {
    spec.validate(params);
    Vec3 lo, hi;
    detail::raw_family_bbox(spec, params, lo, hi);
    const double diag = (hi - lo).norm();
    const Vec3 center = (lo + hi) / 2.0;
    const double k = 1.0 / diag;
    ShapeInstance out;
    out.bbox_min = (lo - center) * k;
    out.bbox_max = (hi - center) * k;
    out.sdf = [spec, params, center, k](const Vec3& x) {
        return k * detail::raw_family_sdf(spec, params, x / k + center);
    };
    return out;
}

/// n SDF samples of a normalized shape: half rejection-sampled near the
/// surface (|s| <= 0.05), half uniform in the unit box, values exact from
/// the analytic SDF.
inline std::vector<SdfSample> sample_sdf(const CategorySpec& spec,
                                         const std::vector<double>& params, std::size_t n,
                                         std::uint64_t seed) {
    const ShapeInstance shape = make_shape(spec, params);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-0.5, 0.5);
    auto draw = [&] { return Vec3(box(rng), box(rng), box(rng)); };

    std::vector<SdfSample> out;
    out.reserve(n);
    const std::size_t n_near = n / 2;
    std::size_t attempts = 0;
    while (out.size() < n_near && attempts < 100000 * n) {
        ++attempts;
        const Vec3 x = draw();
        const double s = shape.sdf(x);
        if (std::abs(s) <= 0.05) out.push_back({x, s});
    }
    while (out.size() < n) {
        const Vec3 x = draw();
        out.push_back({x, shape.sdf(x)});
    }
    return out;
}

struct CategoryModel {
    LinearShapeBasis basis;
    std::vector<PrimitiveSet> instances; // index-aligned to instance 0
    std::vector<double> fit_losses;
    std::vector<double> recon_chamfer; // decode(project(k)) centers vs fitted centers
};

struct BuildConfig {
    std::size_t samples_per_instance = 6000;
    FitConfig fit;
};

inline PointCloud primitive_centers(const PrimitiveSet& ps) {
    PointCloud out;
    out.reserve(ps.size());
    for (const auto& p : ps.primitives) out.push_back(p.c);
    return out;
}

/// Builds a category shape model: per-instance primitive fitting on analytic
/// SDF samples, index alignment to instance 0, and a latent basis fit.
inline CategoryModel build_category_model(const CategorySpec& spec, int n_instances, int n_c,
                                          int latent_dim, double trunc, std::uint64_t seed,
                                          const BuildConfig& cfg = {}) {
    if (n_instances <= latent_dim)
        throw TooFewInstances("build_category_model: need more instances than latent dims");

    std::vector<PrimitiveSet> fitted;
    std::vector<double> losses;
    for (int k = 0; k < n_instances; ++k) {
        const std::uint64_t inst_seed = detail::derive_seed(seed, std::uint64_t(k));
        std::mt19937_64 rng(inst_seed);
        std::vector<double> params;
        for (const auto& [lo, hi] : spec.param_ranges)
            params.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
        const auto samples = sample_sdf(spec, params, cfg.samples_per_instance, inst_seed ^ 0xABCD);
        FitConfig fc = cfg.fit;
        fc.seed = inst_seed ^ 0x1234;
        FitResult fr = fit_primitives(samples, n_c, trunc, fc);
        fr.set.category = spec.name;
        fitted.push_back(std::move(fr.set));
        losses.push_back(fr.loss);
    }

    const AlignResult aligned = align_primitive_indices(fitted, fitted.front());

    CategoryModel model;
    model.basis = fit_shape_basis(aligned.sets, latent_dim);
    model.instances = aligned.sets;
    model.fit_losses = std::move(losses);
    for (const auto& inst : model.instances) {
        const PrimitiveSet recon = decode(model.basis, project(model.basis, inst));
        model.recon_chamfer.push_back(chamfer(primitive_centers(inst), primitive_centers(recon)));
    }
    return model;
}

struct CameraPose {
    Vec3 position = Vec3::Zero();
    Mat3 cam_from_world = Mat3::Identity(); // rows: right, down, forward
};

/// Camera at `position` looking toward `target`, rolled about the view axis.
inline CameraPose look_at(const Vec3& position, const Vec3& target, double roll_rad = 0.0) {
    const Vec3 fwd = (target - position).normalized();
    Vec3 up = std::abs(fwd.z()) < 0.99 ? Vec3::UnitZ() : Vec3::UnitX();
    Vec3 right = fwd.cross(up).normalized();
    Vec3 down = fwd.cross(right).normalized();
    const Mat3 spin = Eigen::AngleAxisd(roll_rad, fwd).toRotationMatrix();
    right = spin * right;
    down = spin * down;
    CameraPose cam;
    cam.position = position;
    cam.cam_from_world.row(0) = right;
    cam.cam_from_world.row(1) = down;
    cam.cam_from_world.row(2) = fwd;
    return cam;
}

struct ViewConfig {
    int width = 160;
    int height = 120;
    double focal_px = 200.0;
};

/// Single-view depth simulation: pinhole z-buffer splatting, keeping only the
/// nearest point per pixel. Returned points stay in world coordinates.
inline PointCloud partial_view(const PointCloud& cloud, const CameraPose& cam,
                               const ViewConfig& view = {}) {
    std::vector<int> nearest(std::size_t(view.width) * std::size_t(view.height), -1);
    std::vector<double> depth(nearest.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 pc = cam.cam_from_world * (cloud[i] - cam.position);
        if (pc.z() <= 1e-12) continue;
        const int u = int(std::floor(view.focal_px * pc.x() / pc.z() + view.width / 2.0));
        const int v = int(std::floor(view.focal_px * pc.y() / pc.z() + view.height / 2.0));
        if (u < 0 || u >= view.width || v < 0 || v >= view.height) continue;
        const std::size_t pix = std::size_t(v) * std::size_t(view.width) + std::size_t(u);
        if (pc.z() < depth[pix]) {
            depth[pix] = pc.z();
            nearest[pix] = int(i);
        }
    }
    PointCloud out;
    for (int idx : nearest)
        if (idx >= 0) out.push_back(cloud[std::size_t(idx)]);
    if (out.empty()) throw EmptyView("partial_view: no point projects into the image");
    return out;
}

struct CorruptConfig {
    double sigma = 0.0; // Gaussian noise, fraction of diameter
    double outlier_frac = 0.0;
    std::uint64_t seed = 0;
};

/// Adds isotropic Gaussian noise (sigma * diameter per axis) and replaces a
/// fraction of points (round-half-up count) with uniform draws in the
/// 1.5x-inflated cloud bounding box.
inline PointCloud corrupt(const PointCloud& cloud, double diameter, const CorruptConfig& cfg) {
    PointCloud out = cloud;
    std::mt19937_64 rng(cfg.seed);
    if (cfg.sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, cfg.sigma * diameter);
        for (auto& p : out) p += Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    const std::size_t n_out = std::size_t(std::floor(cfg.outlier_frac * double(out.size()) + 0.5));
    if (n_out > 0) {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (const auto& p : cloud) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Vec3 center = (lo + hi) / 2.0;
        const Vec3 half = (hi - lo) * 0.75; // 1.5x inflation
        std::vector<std::size_t> idx(out.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (std::size_t k = 0; k < n_out; ++k)
            out[idx[k]] = center + Vec3(uni(rng) * half.x(), uni(rng) * half.y(),
                                        uni(rng) * half.z());
    }
    return out;
}

struct SceneConfig {
    ViewConfig view;
    CorruptConfig corruption;
    LabelNoiseConfig label_noise;
    // Dense enough that the z-buffer at 160x120 genuinely occludes the far
    // side of the object instead of letting back points fall between pixels.
    std::size_t surface_samples = 32768;
    std::size_t observed_points = 1024;
    double min_diameter = 0.1, max_diameter = 0.5;
};

struct SceneInstance {
    LatentCode gt_z;
    Sim3 gt_pose;
    PointCloud full_cloud;      // world frame, pre-view
    LabeledPointCloud observed; // exactly `observed_points` labeled points
    double diameter = 0.0;      // world bounding-box diagonal (meters)
    CorruptConfig noise_record;
    SymmetrySpec symmetry;
};

namespace detail {

inline PointCloud sample_union_surface(const PrimitiveSet& ps, std::size_t n,
                                       std::mt19937_64& rng) {
    std::vector<double> weights;
    for (const auto& p : ps.primitives) weights.push_back(p.r * p.r);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::normal_distribution<double> gauss(0.0, 1.0);
    PointCloud out;
    std::size_t attempts = 0;
    while (out.size() < n && attempts < 1000 * n) {
        ++attempts;
        const auto& prim = ps.primitives[pick(rng)];
        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        if (dir.squaredNorm() < 1e-12) continue;
        dir.normalize();
        const Vec3 p = prim.c + prim.r * dir;
        if (primitive_sdf(p, ps) >= -1e-9) out.push_back(p);
    }
    if (out.empty()) throw EmptyView("sample_union_surface: degenerate primitive set");
    return out;
}

} // namespace detail

/// Generates one synthetic scene: latent draw, union-of-spheres surface
/// sampling, random SIM(3) pose, single-view culling, corruption, oracle
/// labeling, and resampling to a fixed point count. Deterministic in
/// (config, seed). Throws EmptyView when the camera sees nothing; the
/// caller redraws with another seed.
inline SceneInstance synth_scene(const LinearShapeBasis& basis, const CategorySpec& spec,
                                 std::uint64_t seed, const SceneConfig& cfg = {}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni01(0.0, 1.0);

    SceneInstance scene;
    scene.symmetry = spec.symmetry;
    scene.gt_z = LatentCode(basis.latent_dim);
    for (int d = 0; d < basis.latent_dim; ++d)
        scene.gt_z(d) = std::clamp(gauss(rng), -3.0, 3.0);

    const PrimitiveSet decoded = decode(basis, scene.gt_z);
    const PointCloud canonical = detail::sample_union_surface(decoded, cfg.surface_samples, rng);

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : canonical) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double canon_diag = (hi - lo).norm();

    scene.diameter = cfg.min_diameter + uni01(rng) * (cfg.max_diameter - cfg.min_diameter);
    scene.gt_pose.s = scene.diameter / canon_diag;
    scene.gt_pose.R = Eigen::Quaterniond(gauss(rng), gauss(rng), gauss(rng), gauss(rng))
                          .normalized()
                          .toRotationMatrix();
    scene.gt_pose.t = Vec3(uni01(rng) - 0.5, uni01(rng) - 0.5, uni01(rng) - 0.5) * 0.4;

    scene.full_cloud = sim3_apply(scene.gt_pose, canonical);
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : scene.full_cloud) centroid += p;
    centroid /= double(scene.full_cloud.size());

    Vec3 view_dir(gauss(rng), gauss(rng), gauss(rng));
    while (view_dir.squaredNorm() < 1e-12) view_dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    view_dir.normalize();
    const double cam_dist = (2.0 + 2.0 * uni01(rng)) * scene.diameter;
    const CameraPose cam =
        look_at(centroid + cam_dist * view_dir, centroid, 2.0 * M_PI * uni01(rng));

    PointCloud visible = partial_view(scene.full_cloud, cam, cfg.view);

    CorruptConfig corr = cfg.corruption;
    corr.seed = detail::derive_seed(seed, 7);
    scene.noise_record = corr;
    visible = corrupt(visible, scene.diameter, corr);

    LabelNoiseConfig ln = cfg.label_noise;
    ln.seed = detail::derive_seed(seed, 11);
    const LabeledPointCloud labeled = oracle_label_observation(visible, scene.gt_pose, decoded, ln);

    // Resample to exactly cfg.observed_points, with replacement when short.
    scene.observed.points.reserve(cfg.observed_points);
    scene.observed.labels.reserve(cfg.observed_points);
    if (labeled.points.size() >= cfg.observed_points) {
        std::vector<std::size_t> idx(labeled.points.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < cfg.observed_points; ++k) {
            scene.observed.points.push_back(labeled.points[idx[k]]);
            scene.observed.labels.push_back(labeled.labels[idx[k]]);
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, labeled.points.size() - 1);
        for (std::size_t k = 0; k < cfg.observed_points; ++k) {
            const std::size_t i = pick(rng);
            scene.observed.points.push_back(labeled.points[i]);
            scene.observed.labels.push_back(labeled.labels[i]);
        }
    }
    return scene;
}

/// Half-occluded fixture exhibiting shape ambiguity: the observation covers
/// only the lower primitives while one latent mode moves only the upper
/// ones, so distinct (z, pose) interpretations leave the descriptor residual
/// essentially unchanged.
struct AmbiguityFixture {
    LinearShapeBasis basis;
    SemanticCenters observation;
    LatentCode z_a, z_b;
    QuadrupleSample quadruples;
};

inline AmbiguityFixture make_ambiguity_fixture() {
    // 8 primitives: lower ring (observed) + upper ring (occluded).
    const int n_c = 8;
    AmbiguityFixture fx;
    fx.basis.latent_dim = 2;
    fx.basis.n_primitives = n_c;
    fx.basis.mean = Eigen::VectorXd::Zero(4 * n_c);
    for (int i = 0; i < 4; ++i) {
        const double ang = i * M_PI / 2.0;
        fx.basis.mean.segment<3>(4 * i) = Vec3(0.3 * std::cos(ang), 0.3 * std::sin(ang), -0.25);
        fx.basis.mean(4 * i + 3) = 0.05;
        fx.basis.mean.segment<3>(4 * (i + 4)) =
            Vec3(0.2 * std::cos(ang + 0.4), 0.2 * std::sin(ang + 0.4), 0.25);
        fx.basis.mean(4 * (i + 4) + 3) = 0.05;
    }
    fx.basis.basis = Eigen::MatrixXd::Zero(4 * n_c, 2);
    // Mode 0 stretches the upper (occluded) ring only; mode 1 nudges its height.
    for (int i = 4; i < 8; ++i) {
        const Vec3 c = fx.basis.mean.segment<3>(4 * i);
        fx.basis.basis.block<2, 1>(4 * i, 0) = 0.1 * c.head<2>().normalized();
        fx.basis.basis(4 * i + 2, 1) = 0.08;
    }

    fx.observation.labels = {0, 1, 2, 3};
    for (int i = 0; i < 4; ++i) {
        fx.observation.centers.push_back(fx.basis.mean.segment<3>(4 * i));
        fx.observation.counts.push_back(10);
    }
    fx.z_a = LatentCode::Zero(2);
    fx.z_b = (LatentCode(2) << 1.5, -1.0).finished();
    const CenterMap obs_map = make_center_map(fx.observation);
    fx.quadruples = sample_quadruples(fx.observation.labels, 256, 42, &obs_map);
    return fx;
}

} // namespace sprim
