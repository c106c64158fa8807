#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "xpf/errors.hpp"
#include "xpf/implant.hpp"
#include "xpf/metrics.hpp"
#include "xpf/pipeline.hpp"
#include "xpf/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool desk_scale = false;
};

xpf::PipelineConfig load_config(const Globals& g) {
    json j = json::object();
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) {
            throw xpf::IoError("cannot open config " + g.config_path);
        }
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw xpf::InvalidArgument(g.config_path + ": " + e.what());
        }
    }
    if (g.seed) {
        j["master_seed"] = *g.seed;
    }
    if (g.out) {
        j["output_dir"] = *g.out;
    }
    return xpf::config_from_json(j, g.desk_scale);
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw xpf::IoError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

std::string scene_dir(int scene) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%03d", scene);
    return buf;
}

int run_forge(const Globals& g, const std::string& kind_name, int count, double voxel_spacing) {
    const std::uint64_t seed = g.seed.value_or(0);
    std::optional<xpf::ImplantKind> kind;
    if (kind_name != "any") {
        kind = xpf::implant_kind_from_string(kind_name);
    }
    json out = json::array();
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = xpf::derive_seed(seed, static_cast<std::uint64_t>(i));
        const xpf::ImplantModel model = xpf::random_implant(s, kind);
        json item = {{"seed", s}, {"implant", model}};
        if (voxel_spacing > 0.0) {
            const xpf::BinaryVolume bv = xpf::voxelize(model, voxel_spacing);
            item["voxel_count"] = bv.count();
            item["dims"] = bv.dims;
            item["warnings"] = bv.warnings;
        }
        out.push_back(item);
    }
    if (g.out) {
        write_json(fs::path(*g.out) / "implants.json", out);
    } else {
        std::cout << out.dump(2) << '\n';
    }
    return 0;
}

int run_compose(const Globals& g, int scene) {
    const xpf::PipelineConfig cfg = load_config(g);
    const xpf::PreparedScene prep = xpf::prepare_scene(cfg, scene);
    const fs::path dir = cfg.output_dir / scene_dir(scene);
    fs::create_directories(dir);
    xpf::save_volume(prep.scene.anatomy, dir / "anatomy");
    xpf::save_volume(prep.scene.metal, dir / "metal");
    xpf::save_volume(prep.scene.merged, dir / "merged");
    write_json(dir / "scene.json", {{"scene", scene},
                                    {"scene_seed", prep.scene_seed},
                                    {"anatomy_source", prep.anatomy_source},
                                    {"crop_start", prep.crop_start},
                                    {"placements", prep.scene.placements}});
    std::cout << "composed scene " << scene << " into " << dir.string() << " (" << prep.scene.placements.size()
              << " implants)\n";
    return 0;
}

int run_project(const Globals& g, int scene, bool without_metal) {
    const xpf::PipelineConfig cfg = load_config(g);
    const xpf::MaterialModel model = xpf::load_material_model(xpf::resolve_data_dir(cfg.data_dir));
    const xpf::PreparedScene prep = xpf::prepare_scene(cfg, scene);
    const xpf::Volume& hu = without_metal ? prep.scene.anatomy : prep.scene.merged;
    const xpf::NoiselessProjections proj = xpf::render_noiseless(hu, cfg, model);
    const fs::path dir = cfg.output_dir / scene_dir(scene) / (without_metal ? "without_metal" : "with_metal");
    xpf::save_stack(proj.intensity, dir, "intensity");
    xpf::save_stack(xpf::negative_log(proj.intensity), dir, "line_integral");
    xpf::save_stack(proj.metal_thickness, dir, "metal_thickness");
    std::cout << "projected scene " << scene << " (" << proj.intensity.geometry.view_count() << " views) into "
              << dir.string() << '\n';
    return 0;
}

int run_generate(const Globals& g, bool dry) {
    const xpf::PipelineConfig cfg = load_config(g);
    if (dry) {
        const xpf::DryRunCounts d = xpf::dry_run(cfg);
        std::cout << json{{"scenes", d.scenes},
                          {"views_per_scene", d.views_per_scene},
                          {"pairs", d.pairs},
                          {"train_scenes", d.train_scenes},
                          {"val_scenes", d.val_scenes},
                          {"train_pairs", d.train_pairs},
                          {"val_pairs", d.val_pairs}}
                         .dump(2)
                  << '\n';
        return 0;
    }
    const xpf::DatasetManifest m = xpf::generate_dataset(cfg);
    xpf::validate_manifest(m, cfg.output_dir);
    std::size_t pairs = 0;
    for (const auto& s : m.scenes) {
        pairs += s.views.size();
    }
    std::cout << "generated " << m.scenes.size() << " scenes, " << pairs << " projection/mask pairs in "
              << cfg.output_dir.string() << '\n';
    return 0;
}

int run_annotate(const Globals& g, const std::string& with_dir, const std::string& without_dir,
                 const std::string& stem, std::optional<double> threshold) {
    const xpf::ProjectionStack with = xpf::load_stack(with_dir, stem);
    const xpf::ProjectionStack without = xpf::load_stack(without_dir, stem);
    const xpf::SubtractionResult r = xpf::annotate_by_subtraction(with, without, threshold);
    const fs::path dir = g.out.value_or("annotations");
    fs::create_directories(dir);
    for (std::size_t v = 0; v < r.masks.size(); ++v) {
        xpf::write_raw(dir / (xpf::view_file_stem("mask", static_cast<int>(v)) + ".u8"), r.masks[v]);
    }
    write_json(dir / "thresholds.json", {{"thresholds", r.thresholds},
                                         {"method", threshold ? "fixed" : "otsu"},
                                         {"rows", with.geometry.n_v},
                                         {"cols", with.geometry.n_u}});
    std::cout << "wrote " << r.masks.size() << " masks to " << dir.string() << '\n';
    return 0;
}

int run_evaluate(const Globals& g, const std::string& manifest_path, const std::string& split,
                 const std::string& pred_dir, const std::string& gt_dir, int rows, int cols) {
    std::vector<xpf::ScoredItem> items;
    if (!manifest_path.empty()) {
        const xpf::DatasetManifest m = xpf::load_manifest(manifest_path);
        const fs::path root = fs::path(manifest_path).parent_path();
        for (const auto& s : m.scenes) {
            if (split != "all" && s.split != split) {
                continue;
            }
            for (const auto& v : s.views) {
                const xpf::Mask gt = xpf::read_raw_mask(root / v.mask, m.rows, m.cols);
                const xpf::Mask pred = xpf::read_raw_mask(fs::path(pred_dir) / v.mask, m.rows, m.cols);
                items.push_back({scene_dir(s.index), v.mask, xpf::confusion(pred, gt)});
            }
        }
    } else {
        if (gt_dir.empty() || rows < 1 || cols < 1) {
            throw xpf::InvalidArgument("evaluate: give --manifest, or --gt with --rows and --cols");
        }
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(gt_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".u8") {
                files.push_back(fs::relative(e.path(), gt_dir));
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& rel : files) {
            const xpf::Mask gt = xpf::read_raw_mask(fs::path(gt_dir) / rel, rows, cols);
            const xpf::Mask pred = xpf::read_raw_mask(fs::path(pred_dir) / rel, rows, cols);
            const std::string scan = rel.has_parent_path() ? rel.parent_path().string() : std::string(".");
            items.push_back({scan, rel.string(), xpf::confusion(pred, gt)});
        }
    }
    const json report = xpf::evaluation_report(items);
    if (g.out) {
        write_json(fs::path(*g.out) / "evaluation.json", report);
    } else {
        std::cout << report.dump(2) << '\n';
    }
    for (const char* k : {"dice", "precision", "recall"}) {
        std::fprintf(stderr, "%-9s %.2f +/- %.2f\n", k, report[k]["mean"].get<double>(),
                     report[k]["std"].get<double>());
    }
    return 0;
}

int run_preview(const std::string& manifest_path, int scene, int view, const std::string& image) {
    const xpf::DatasetManifest m = xpf::load_manifest(manifest_path);
    xpf::preview(m, fs::path(manifest_path).parent_path(), scene, view, image);
    std::cout << "wrote " << image << " and " << xpf::overlay_path(image).string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic multi-metal X-ray projection generator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Pipeline config (JSON)");
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--desk-scale", g.desk_scale, "Small detector, few views and a small volume");

    std::string kind = "any";
    int count = 1;
    double voxel_spacing = 0.0;
    auto* forge = app.add_subcommand("forge", "Draw random implant models and print them as JSON");
    forge->add_option("--kind", kind, "kwire, screw, plate or any")->check(CLI::IsMember({"kwire", "screw", "plate", "any"}));
    forge->add_option("--count", count, "Number of implants")->check(CLI::PositiveNumber);
    forge->add_option("--voxelize", voxel_spacing, "Also voxelize at this spacing (mm) and report voxel counts");

    int scene = 0;
    auto* compose = app.add_subcommand("compose", "Build one scene (anatomy + implants) and save its volumes");
    compose->add_option("--scene", scene, "Scene index");

    bool without_metal = false;
    auto* project = app.add_subcommand("project", "Render noiseless projections of one scene");
    project->add_option("--scene", scene, "Scene index");
    project->add_flag("--without-metal", without_metal, "Project the anatomy alone");

    bool dry = false;
    auto* generate = app.add_subcommand("generate", "Render the full dataset and write manifest.json");
    generate->add_flag("--dry-run", dry, "Only report scene/view/split counts");

    std::string with_dir, without_dir, stem = "line_integral";
    std::optional<double> threshold;
    auto* annotate = app.add_subcommand("annotate-diff", "Masks from the difference of paired projection stacks");
    annotate->add_option("--with", with_dir, "Stack directory with metal")->required();
    annotate->add_option("--without", without_dir, "Stack directory without metal")->required();
    annotate->add_option("--stem", stem, "Stack file stem");
    annotate->add_option("--threshold", threshold, "Fixed threshold (default: Otsu per view)");

    std::string manifest, split = "val", pred_dir, gt_dir;
    int rows = 0, cols = 0;
    auto* evaluate = app.add_subcommand("evaluate", "Dice, precision and recall of predicted masks");
    evaluate->add_option("--manifest", manifest, "Ground truth from a dataset manifest");
    evaluate->add_option("--split", split, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}));
    evaluate->add_option("--pred", pred_dir, "Prediction directory (same relative layout)")->required();
    evaluate->add_option("--gt", gt_dir, "Ground-truth mask directory");
    evaluate->add_option("--rows", rows, "Mask rows (with --gt)");
    evaluate->add_option("--cols", cols, "Mask columns (with --gt)");

    int view = 0;
    std::string image = "preview.png";
    auto* prev = app.add_subcommand("preview", "Grayscale PNG of a projection plus a green mask overlay");
    prev->add_option("--manifest", manifest, "Dataset manifest")->required();
    prev->add_option("--scene", scene, "Scene index");
    prev->add_option("--view", view, "View index");
    prev->add_option("--image", image, "Output PNG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*forge) {
            return run_forge(g, kind, count, voxel_spacing);
        }
        if (*compose) {
            return run_compose(g, scene);
        }
        if (*project) {
            return run_project(g, scene, without_metal);
        }
        if (*generate) {
            return run_generate(g, dry);
        }
        if (*annotate) {
            return run_annotate(g, with_dir, without_dir, stem, threshold);
        }
        if (*evaluate) {
            return run_evaluate(g, manifest, split, pred_dir, gt_dir, rows, cols);
        }
        if (*prev) {
            return run_preview(manifest, scene, view, image);
        }
    } catch (const xpf::SceneError& e) {
        std::cerr << "error in scene " << e.scene_index() << ": " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
