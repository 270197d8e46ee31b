// Command-line surface: category model fitting, scene synthesis, estimation,
// evaluation, and SVG plot emission.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O
// failure. Batch commands isolate per-scene failures (recorded in the scene's
// result.json) and still exit 0.
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "sprim/bench.hpp"
#include "sprim/io.hpp"
#include "sprim/metrics.hpp"
#include "sprim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sprim;
using namespace sprim::io;

namespace {

constexpr int kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4;

struct Profile {
    int n_primitives = 64;
    std::size_t quadruples = 10000;
    int latent_dim = 8;
    int instances = 40;
};

Profile profile_by_name(const std::string& name) {
    if (name == "desk") return {64, 10000, 8, 40};
    if (name == "paper-parity") return {256, 1000000, 8, 40};
    throw CLI::ValidationError("--profile", "unknown profile: " + name);
}

CategorySpec category_by_name(const std::string& name) {
    if (name == "lathe") return CategorySpec::lathe();
    if (name == "hinge") return CategorySpec::hinge();
    if (name == "body_handle") return CategorySpec::body_handle();
    throw CLI::ValidationError("--category", "unknown category: " + name);
}

// Scene ground truth parsed back from gt.json.
struct SceneGt {
    Sim3 pose;
    LatentCode z;
    SymmetrySpec symmetry;
    double diameter = 0.0;
};

SceneGt scene_gt_from_json(const json& j) {
    SceneGt gt;
    gt.pose = sim3_from_json(j);
    const auto& z = j.at("z");
    gt.z.resize(Eigen::Index(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) gt.z(Eigen::Index(i)) = z[i];
    gt.symmetry = symmetry_from_json(j.at("symmetry"));
    gt.diameter = j.at("diameter");
    return gt;
}

std::vector<fs::path> scene_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "cloud.ply"))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw IoError("no scene directories under " + root.string());
    return dirs;
}

// Worker pool over indexed jobs; each job must handle its own failures.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
    const int n_threads = std::max(1, threads);
    if (n_threads == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) job(i);
        });
    for (auto& th : pool) th.join();
}

// ---- fit --------------------------------------------------------------------

int cmd_fit(const std::string& category, int instances, int n_c, double trunc, int latent_dim,
            const fs::path& out, std::uint64_t seed) {
    const CategorySpec spec = category_by_name(category);
    const CategoryModel model = build_category_model(spec, instances, n_c, latent_dim, trunc, seed);

    fs::create_directories(out / "instances");
    write_file_atomic(out / "basis.json", to_json(model.basis).dump(2) + "\n");
    for (std::size_t k = 0; k < model.instances.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), "instance_%03zu.json", k);
        write_file_atomic(out / "instances" / name, to_json(model.instances[k]).dump(2) + "\n");
    }

    double loss_sum = 0.0, loss_max = 0.0, recon_sum = 0.0;
    for (double l : model.fit_losses) {
        loss_sum += l;
        loss_max = std::max(loss_max, l);
    }
    for (double c : model.recon_chamfer) recon_sum += c;
    std::cout << "category " << category << ": " << instances << " instances, " << n_c
              << " primitives, latent dim " << latent_dim << "\n"
              << "fit loss mean " << loss_sum / double(instances) << ", max " << loss_max << "\n"
              << "reconstruction chamfer mean " << recon_sum / double(instances) << "\n"
              << "wrote " << (out / "basis.json").string() << "\n";
    return kExitOk;
}

// ---- synth ------------------------------------------------------------------

int cmd_synth(const fs::path& model_path, const std::string& category, int n_scenes,
              const fs::path& out, double sigma, double outliers, double flips,
              std::uint64_t seed) {
    const LinearShapeBasis basis = basis_from_json(json::parse(read_file(model_path)));
    const CategorySpec spec = category_by_name(category);
    SceneConfig cfg;
    cfg.corruption.sigma = sigma;
    cfg.corruption.outlier_frac = outliers;
    cfg.label_noise.flip_fraction = flips;

    fs::create_directories(out);
    std::uint64_t draw = 0;
    for (int k = 0; k < n_scenes; ++k) {
        SceneInstance scene;
        for (;;) {
            try {
                scene = synth_scene(basis, spec, seed + draw++, cfg);
                break;
            } catch (const EmptyView&) {
                // camera missed the object: redraw per contract
            }
        }
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%04d", k);
        const fs::path dir = out / name;
        fs::create_directories(dir);
        write_ply(dir / "cloud.ply", scene.observed);
        json gt = scene_gt_to_json(scene);
        gt["category"] = category;
        write_file_atomic(dir / "gt.json", gt.dump(2) + "\n");
    }
    std::cout << "wrote " << n_scenes << " scenes under " << out.string() << "\n";
    return kExitOk;
}

// ---- estimate ---------------------------------------------------------------

int cmd_estimate(const fs::path& model_path, const fs::path& scenes, int iters,
                 std::size_t quads, bool ransac, double label_noise, std::uint64_t seed,
                 int threads) {
    const LinearShapeBasis basis = basis_from_json(json::parse(read_file(model_path)));
    const std::vector<fs::path> dirs = scene_dirs(scenes);

    std::atomic<int> failures{0};
    parallel_for(dirs.size(), threads, [&](std::size_t i) {
        const fs::path& dir = dirs[i];
        try {
            LabeledPointCloud lc = read_ply(dir / "cloud.ply");
            if (label_noise > 0.0) {
                // Simulated segmentation noise: flip a fraction of non-dust
                // labels to a different uniformly random class.
                std::mt19937_64 rng(seed ^ (0xBEEF0000ull + i));
                std::uniform_real_distribution<double> coin(0.0, 1.0);
                std::uniform_int_distribution<int> pick(0, basis.n_primitives - 2);
                for (auto& l : lc.labels) {
                    if (l == kDust || coin(rng) >= label_noise) continue;
                    int wrong = pick(rng);
                    if (wrong >= l) ++wrong;
                    l = Label(wrong);
                }
            }
            OptimizerConfig cfg;
            cfg.iterations = iters;
            cfg.m = quads;
            cfg.seed = seed + i;
            if (ransac) cfg.ransac = RansacConfig{};
            const SemanticCenters obs = centralize(lc);
            const OptimizationTrace trace = cfg.ransac ? optimize_shape_ransac(obs, basis, cfg)
                                                       : optimize_shape(obs, basis, cfg);
            const EstimationResult res = estimate(lc, basis, cfg);
            write_file_atomic(dir / "result.json", to_json(res).dump(2) + "\n");
            write_file_atomic(dir / "trace.csv", trace_csv(trace));
        } catch (const std::exception& e) {
            // Per-scene failure isolation: record the error, keep the batch going.
            ++failures;
            json err = {{"error", e.what()}};
            try {
                write_file_atomic(dir / "result.json", err.dump(2) + "\n");
            } catch (...) {
            }
        }
    });
    std::cout << "estimated " << dirs.size() - std::size_t(failures) << "/" << dirs.size()
              << " scenes";
    if (failures > 0) std::cout << " (" << failures << " recorded failures)";
    std::cout << "\n";
    return kExitOk;
}

// ---- eval -------------------------------------------------------------------

Vec3 canonical_extents(const PrimitiveSet& ps) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const auto& p : ps.primitives) {
        lo = lo.cwiseMin(p.c - Vec3::Constant(p.r));
        hi = hi.cwiseMax(p.c + Vec3::Constant(p.r));
    }
    return hi - lo;
}

int cmd_eval(const fs::path& model_path, const fs::path& scenes, const fs::path& out) {
    const LinearShapeBasis basis = basis_from_json(json::parse(read_file(model_path)));
    const std::vector<fs::path> dirs = scene_dirs(scenes);

    std::vector<InstanceMetrics> rows;
    int failures = 0;
    double hits_5_5 = 0, hits_10_10 = 0;
    for (const fs::path& dir : dirs) {
        const json gt_json = json::parse(read_file(dir / "gt.json"));
        const SceneGt gt = scene_gt_from_json(gt_json);
        json result_json;
        try {
            result_json = json::parse(read_file(dir / "result.json"));
        } catch (const std::exception&) {
            throw IoError("missing result.json in " + dir.string() + " (run estimate first)");
        }
        if (result_json.contains("error")) {
            ++failures;
            continue;
        }
        const EstimationResult res = estimation_from_json(result_json);

        const PoseError pe = pose_error(res.pose, gt.pose, gt.symmetry);
        const PrimitiveSet gt_shape = decode(basis, gt.z);
        const PrimitiveSet pred_shape = decode(basis, res.z_hat);
        OrientedBox gt_box{gt.pose, canonical_extents(gt_shape)};
        OrientedBox pred_box{res.pose, canonical_extents(pred_shape)};
        std::mt19937_64 rng_a(11), rng_b(13);
        const double cd = chamfer(detail::sample_union_surface(pred_shape, 1024, rng_a),
                                  detail::sample_union_surface(gt_shape, 1024, rng_b));

        InstanceMetrics row;
        row.id = dir.filename().string();
        row.category = gt_json.value("category", basis.category);
        row.rot_deg = pe.rot_deg;
        row.trans_m = pe.trans_m;
        row.scale_ratio = pe.scale_ratio;
        row.iou = iou3d(pred_box, gt_box);
        row.chamfer = cd;
        rows.push_back(row);
        hits_5_5 += (pe.rot_deg <= 5.0 && pe.trans_m <= 0.05 * gt.diameter);
        hits_10_10 += (pe.rot_deg <= 10.0 && pe.trans_m <= 0.10 * gt.diameter);
    }
    if (rows.empty()) throw IoError("no successful results to evaluate");

    std::vector<double> ious;
    for (const auto& r : rows) ious.push_back(r.iou);
    const double n_total = double(dirs.size());
    json summary = {
        {"instances", rows.size()},
        {"failures", failures},
        {"ap",
         {{"rot5deg_trans5pct_diameter", hits_5_5 / n_total},
          {"rot10deg_trans10pct_diameter", hits_10_10 / n_total},
          {"iou50", average_precision_iou(ious, 0.50) * double(rows.size()) / n_total},
          {"iou75", average_precision_iou(ious, 0.75) * double(rows.size()) / n_total}}}};

    std::vector<double> rot_grid, trans_grid, iou_grid;
    for (double th = 1.0; th <= 30.0; th += 1.0) rot_grid.push_back(th);
    for (double th = 0.005; th <= 0.1005; th += 0.005) trans_grid.push_back(th);
    for (double th = 0.05; th <= 0.951; th += 0.05) iou_grid.push_back(th);
    const std::vector<CurvePoint> curves = ap_curves(rows, rot_grid, trans_grid, iou_grid);

    fs::create_directories(out);
    write_file_atomic(out / "metrics.csv", metrics_csv(rows));
    write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
    write_file_atomic(out / "curves.csv", curves_csv(curves));
    std::cout << summary.dump(2) << "\nwrote metrics.csv, summary.json, curves.csv under "
              << out.string() << "\n";
    return kExitOk;
}

// ---- plot -------------------------------------------------------------------

std::string svg_line_chart(const std::string& title,
                           const std::vector<std::pair<std::string, std::vector<Vec3>>>& series,
                           const std::string& x_label, const std::string& y_label) {
    // series values: x in v.x(), y in v.y(); v.z() unused
    const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;
    double x_min = 1e300, x_max = -1e300, y_min = 0.0, y_max = -1e300;
    for (const auto& [name, pts] : series)
        for (const Vec3& p : pts) {
            x_min = std::min(x_min, p.x());
            x_max = std::max(x_max, p.x());
            y_max = std::max(y_max, p.y());
        }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;
    const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
    const auto py = [&](double y) { return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title
       << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
       << h - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double xv = x_min + (x_max - x_min) * tick / 4.0;
        const double yv = y_min + (y_max - y_min) * tick / 4.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 18
           << "\" text-anchor=\"middle\">" << xv << "</text>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
           << "\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
       << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (mt + h - mb) / 2 << ")\">"
       << y_label << "</text>\n";
    int color = 0;
    for (const auto& [name, pts] : series) {
        const char* c = palette[color % 8];
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (const Vec3& p : pts) os << px(p.x()) << ',' << py(p.y()) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << w - mr - 6 << "\" y=\"" << mt + 16 * color + 12
           << "\" text-anchor=\"end\" fill=\"" << c << "\">" << name << "</text>\n";
        ++color;
    }
    os << "</svg>\n";
    return os.str();
}

int cmd_plot(const fs::path& eval_dir, const fs::path& scenes, const fs::path& out) {
    fs::create_directories(out);
    int emitted = 0;

    const fs::path curves_path = eval_dir / "curves.csv";
    if (!eval_dir.empty() && fs::exists(curves_path)) {
        // curves.csv: threshold,category,metric,ap
        std::istringstream in(read_file(curves_path));
        std::string line;
        std::getline(in, line); // header
        std::map<std::string, std::map<std::string, std::vector<Vec3>>> by_metric;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string th, cat, metric, ap;
            std::getline(row, th, ',');
            std::getline(row, cat, ',');
            std::getline(row, metric, ',');
            std::getline(row, ap, ',');
            by_metric[metric][cat].emplace_back(std::stod(th), std::stod(ap), 0.0);
        }
        for (const auto& [metric, cats] : by_metric) {
            std::vector<std::pair<std::string, std::vector<Vec3>>> series(cats.begin(),
                                                                          cats.end());
            write_file_atomic(out / (metric + ".svg"),
                              svg_line_chart("AP vs " + metric + " threshold", series, metric,
                                             "average precision"));
            ++emitted;
        }
    }

    if (!scenes.empty() && fs::exists(scenes)) {
        std::vector<std::pair<std::string, std::vector<Vec3>>> series;
        for (const fs::path& dir : scene_dirs(scenes)) {
            const fs::path trace_path = dir / "trace.csv";
            if (!fs::exists(trace_path)) continue;
            std::istringstream in(read_file(trace_path));
            std::string line;
            std::getline(in, line); // header
            std::vector<Vec3> pts;
            while (std::getline(in, line)) {
                std::istringstream row(line);
                std::string it, obj;
                std::getline(row, it, ',');
                std::getline(row, obj, ',');
                pts.emplace_back(std::stod(it), std::stod(obj), 0.0);
            }
            if (!pts.empty()) series.emplace_back(dir.filename().string(), std::move(pts));
            if (series.size() >= 8) break; // keep the chart legible
        }
        if (!series.empty()) {
            write_file_atomic(out / "traces.svg",
                              svg_line_chart("optimization traces", series, "iteration",
                                             "objective"));
            ++emitted;
        }
    }
    if (emitted == 0) throw IoError("nothing to plot: need curves.csv and/or trace.csv inputs");
    std::cout << "wrote " << emitted << " SVG file(s) under " << out.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic sphere-primitive shape and SIM(3) pose estimation"};
    app.require_subcommand(1);

    std::string profile_name = "desk";
    std::uint64_t seed = 0;
    int threads = int(std::thread::hardware_concurrency());
    app.add_option("--profile", profile_name, "parameter profile: desk or paper-parity")
        ->capture_default_str();
    app.add_option("--seed", seed, "base random seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads for batch commands")
        ->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a category shape model");
    std::string fit_category = "lathe";
    int fit_instances = -1, fit_n_c = -1, fit_latent = -1;
    double fit_trunc = 0.02;
    std::string fit_out = "model";
    fit->add_option("--category", fit_category, "lathe, hinge, or body_handle")->required();
    fit->add_option("--instances", fit_instances, "training instances (default from profile)");
    fit->add_option("--n-primitives", fit_n_c, "primitives per instance (default from profile)");
    fit->add_option("--trunc", fit_trunc, "SDF truncation band")->capture_default_str();
    fit->add_option("--latent-dim", fit_latent, "latent dimensions (default from profile)");
    fit->add_option("--out", fit_out, "output directory")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
    std::string synth_model, synth_category = "lathe", synth_out = "scenes";
    int synth_scenes = 20;
    double synth_sigma = 0.0, synth_outliers = 0.0, synth_flips = 0.0;
    synth->add_option("--model", synth_model, "basis.json from fit")->required();
    synth->add_option("--category", synth_category, "lathe, hinge, or body_handle")->required();
    synth->add_option("--scenes", synth_scenes, "scene count")->capture_default_str();
    synth->add_option("--sigma", synth_sigma, "Gaussian noise, fraction of diameter")
        ->capture_default_str();
    synth->add_option("--outliers", synth_outliers, "outlier fraction")->capture_default_str();
    synth->add_option("--label-flips", synth_flips, "oracle label flip fraction")
        ->capture_default_str();
    synth->add_option("--out", synth_out, "output directory")->capture_default_str();

    // estimate
    auto* est = app.add_subcommand("estimate", "estimate shape and pose per scene");
    std::string est_model, est_scenes;
    int est_iters = 100;
    std::size_t est_quads = 0;
    bool est_ransac = false;
    double est_label_noise = 0.0;
    est->add_option("--model", est_model, "basis.json from fit")->required();
    est->add_option("--scenes", est_scenes, "scene directory from synth")->required();
    est->add_option("--iters", est_iters, "optimizer iterations")->capture_default_str();
    est->add_option("--quads", est_quads, "quadruple count (default from profile)");
    est->add_flag("--ransac", est_ransac, "robust RANSAC shape optimization");
    est->add_option("--label-noise", est_label_noise, "extra label flip fraction at estimation")
        ->capture_default_str();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate results against ground truth");
    std::string ev_model, ev_scenes, ev_out = "eval";
    ev->add_option("--model", ev_model, "basis.json from fit")->required();
    ev->add_option("--scenes", ev_scenes, "scene directory with gt.json + result.json")
        ->required();
    ev->add_option("--out", ev_out, "output directory")->capture_default_str();

    // plot
    auto* plot = app.add_subcommand("plot", "emit SVG charts from eval/estimate outputs");
    std::string plot_eval, plot_scenes, plot_out = "plots";
    plot->add_option("--eval", plot_eval, "eval output directory (curves.csv)");
    plot->add_option("--scenes", plot_scenes, "scene directory (trace.csv files)");
    plot->add_option("--out", plot_out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const Profile profile = profile_by_name(profile_name);
        if (fit->parsed()) {
            if (fit_trunc <= 0.0) {
                std::cerr << "error: --trunc must be positive\n";
                return kExitConfig;
            }
            return cmd_fit(fit_category, fit_instances > 0 ? fit_instances : profile.instances,
                           fit_n_c > 0 ? fit_n_c : profile.n_primitives, fit_trunc,
                           fit_latent > 0 ? fit_latent : profile.latent_dim, fit_out, seed);
        }
        if (synth->parsed())
            return cmd_synth(synth_model, synth_category, synth_scenes, synth_out, synth_sigma,
                             synth_outliers, synth_flips, seed);
        if (est->parsed())
            return cmd_estimate(est_model, est_scenes, est_iters,
                                est_quads > 0 ? est_quads : profile.quadruples, est_ransac,
                                est_label_noise, seed, threads);
        if (ev->parsed()) return cmd_eval(ev_model, ev_scenes, ev_out);
        if (plot->parsed()) return cmd_plot(plot_eval, plot_scenes, plot_out);
        return kExitConfig;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        // domain errors: degenerate geometry, divergence, bad parameters
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
