#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sprim/bench.hpp"
#include "sprim/metrics.hpp"
#include "sprim/optimizer.hpp"
#include "sprim/pipeline.hpp"

namespace sprim::io {

using nlohmann::json;

/// Write-temp-then-rename so partially written files never appear.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& data) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(data.data(), std::streamsize(data.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- JSON schemas ----

inline json to_json(const PrimitiveSet& ps) {
    json spheres = json::array();
    for (const auto& p : ps.primitives)
        spheres.push_back({{"c", {p.c.x(), p.c.y(), p.c.z()}}, {"r", p.r}});
    return {{"category", ps.category}, {"n_primitives", ps.size()}, {"spheres", spheres}};
}

inline PrimitiveSet primitive_set_from_json(const json& j) {
    PrimitiveSet ps;
    ps.category = j.at("category").get<std::string>();
    for (const auto& s : j.at("spheres")) {
        SpherePrimitive p;
        p.c = Vec3(s.at("c")[0], s.at("c")[1], s.at("c")[2]);
        p.r = s.at("r");
        ps.primitives.push_back(p);
    }
    if (ps.size() != j.at("n_primitives").get<std::size_t>())
        throw IoError("primitive set: n_primitives mismatch");
    return ps;
}

inline json to_json(const LinearShapeBasis& b) {
    json basis = json::array();
    for (Eigen::Index r = 0; r < b.basis.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < b.basis.cols(); ++c) row.push_back(b.basis(r, c));
        basis.push_back(row);
    }
    json mean = json::array();
    for (Eigen::Index r = 0; r < b.mean.size(); ++r) mean.push_back(b.mean(r));
    return {{"latent_dim", b.latent_dim},
            {"n_primitives", b.n_primitives},
            {"category", b.category},
            {"mean", mean},
            {"basis", basis}};
}

inline LinearShapeBasis basis_from_json(const json& j) {
    LinearShapeBasis b;
    b.latent_dim = j.at("latent_dim");
    b.n_primitives = j.at("n_primitives");
    b.category = j.value("category", "");
    const auto& mean = j.at("mean");
    b.mean.resize(Eigen::Index(mean.size()));
    for (std::size_t i = 0; i < mean.size(); ++i) b.mean(Eigen::Index(i)) = mean[i];
    const auto& rows = j.at("basis");
    b.basis.resize(Eigen::Index(rows.size()), b.latent_dim);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < b.latent_dim; ++c) b.basis(Eigen::Index(r), c) = rows[r][std::size_t(c)];
    return b;
}

inline json to_json(const SymmetrySpec& sym) {
    return {{"axis", {sym.axis.x(), sym.axis.y(), sym.axis.z()}}, {"angles_deg", sym.angles_deg}};
}

inline SymmetrySpec symmetry_from_json(const json& j) {
    SymmetrySpec sym;
    sym.axis = Vec3(j.at("axis")[0], j.at("axis")[1], j.at("axis")[2]);
    sym.angles_deg = j.at("angles_deg").get<std::vector<double>>();
    return sym;
}

inline json to_json(const Sim3& T) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(T.R(r, c));
    return {{"scale", T.s}, {"rotation", rot}, {"translation", {T.t.x(), T.t.y(), T.t.z()}}};
}

inline Sim3 sim3_from_json(const json& j) {
    Sim3 T;
    T.s = j.at("scale");
    const auto& rot = j.at("rotation");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) T.R(r, c) = rot[std::size_t(3 * r + c)];
    T.t = Vec3(j.at("translation")[0], j.at("translation")[1], j.at("translation")[2]);
    return T;
}

inline json to_json(const EstimationResult& res) {
    json z = json::array();
    for (Eigen::Index i = 0; i < res.z_hat.size(); ++i) z.push_back(res.z_hat(i));
    json out = to_json(res.pose);
    out["z"] = z;
    out["residuals"] = {{"alignment", res.alignment_residual},
                        {"descriptor", res.descriptor_residual}};
    out["timings_ms"] = {{"optimize", res.optimize_ms}, {"pose", res.pose_ms}};
    out["observed_labels"] = res.observed_label_count;
    return out;
}

inline EstimationResult estimation_from_json(const json& j) {
    EstimationResult res;
    res.pose = sim3_from_json(j);
    const auto& z = j.at("z");
    res.z_hat.resize(Eigen::Index(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) res.z_hat(Eigen::Index(i)) = z[i];
    res.alignment_residual = j.at("residuals").at("alignment");
    res.descriptor_residual = j.at("residuals").at("descriptor");
    res.observed_label_count = j.value("observed_labels", 0);
    return res;
}

// Scene ground truth: gt.json alongside cloud.ply.
inline json scene_gt_to_json(const SceneInstance& scene) {
    json z = json::array();
    for (Eigen::Index i = 0; i < scene.gt_z.size(); ++i) z.push_back(scene.gt_z(i));
    json out = to_json(scene.gt_pose);
    out["z"] = z;
    out["symmetry"] = to_json(scene.symmetry);
    out["diameter"] = scene.diameter;
    return out;
}

// ---- PLY (binary little endian, x/y/z float32 + label int32) ----

inline std::string ply_bytes(const LabeledPointCloud& lc) {
    if (lc.points.size() != lc.labels.size()) throw LengthMismatch("ply: point/label mismatch");
    std::ostringstream out(std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << lc.points.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property int label\nend_header\n";
    for (std::size_t i = 0; i < lc.points.size(); ++i) {
        const float xyz[3] = {float(lc.points[i].x()), float(lc.points[i].y()),
                              float(lc.points[i].z())};
        const std::int32_t label = lc.labels[i];
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        out.write(reinterpret_cast<const char*>(&label), sizeof(label));
    }
    return out.str();
}

inline void write_ply(const std::filesystem::path& path, const LabeledPointCloud& lc) {
    write_file_atomic(path, ply_bytes(lc));
}

inline LabeledPointCloud read_ply(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    const std::string marker = "end_header\n";
    const std::size_t hdr_end = data.find(marker);
    if (hdr_end == std::string::npos) throw IoError("ply: missing header: " + path.string());
    const std::string header = data.substr(0, hdr_end);
    if (header.find("binary_little_endian") == std::string::npos)
        throw IoError("ply: expected binary little endian: " + path.string());
    std::size_t n = 0;
    {
        std::istringstream hs(header);
        std::string line;
        while (std::getline(hs, line))
            if (line.rfind("element vertex ", 0) == 0) n = std::stoul(line.substr(15));
    }
    LabeledPointCloud lc;
    lc.points.reserve(n);
    lc.labels.reserve(n);
    const char* p = data.data() + hdr_end + marker.size();
    const std::size_t need = n * (3 * sizeof(float) + sizeof(std::int32_t));
    if (data.size() - (hdr_end + marker.size()) < need)
        throw IoError("ply: truncated payload: " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
        float xyz[3];
        std::int32_t label;
        std::memcpy(xyz, p, sizeof(xyz));
        p += sizeof(xyz);
        std::memcpy(&label, p, sizeof(label));
        p += sizeof(label);
        lc.points.emplace_back(xyz[0], xyz[1], xyz[2]);
        lc.labels.push_back(label);
    }
    return lc;
}

// ---- CSV ----

inline std::string trace_csv(const OptimizationTrace& trace) {
    std::ostringstream out;
    out << "iteration,objective,residual,z_norm\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.points.size(); ++i)
        out << i << ',' << trace.points[i].objective << ',' << trace.points[i].residual << ','
            << trace.points[i].z_norm << '\n';
    return out.str();
}

inline std::string metrics_csv(const std::vector<InstanceMetrics>& rows) {
    std::ostringstream out;
    out << "id,category,rot_deg,trans_m,scale_ratio,iou,chamfer\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.id << ',' << r.category << ',' << r.rot_deg << ',' << r.trans_m << ','
            << r.scale_ratio << ',' << r.iou << ',' << r.chamfer << '\n';
    return out.str();
}

inline std::string curves_csv(const std::vector<CurvePoint>& points) {
    std::ostringstream out;
    out << "threshold,category,metric,ap\n";
    out.precision(17);
    for (const auto& p : points)
        out << p.threshold << ',' << p.category << ',' << p.metric << ',' << p.ap << '\n';
    return out.str();
}

} // namespace sprim::io
