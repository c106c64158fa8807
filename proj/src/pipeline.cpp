#include "xpf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "xpf/errors.hpp"
#include "xpf/random.hpp"

namespace xpf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags for seeds derived from a scene seed.
enum SeedTag : std::uint64_t { kCropTag = 1, kPhantomTag = 2, kPlacementTag = 3, kNoiseTag = 4, kGammaTag = 5 };

std::string physics_name(PhysicsMode m) { return m == PhysicsMode::mono ? "mono" : "poly"; }

PhysicsMode physics_from_string(const std::string& s) {
    if (s == "mono") {
        return PhysicsMode::mono;
    }
    if (s == "poly") {
        return PhysicsMode::poly;
    }
    throw InvalidArgument("physics mode must be 'mono' or 'poly', got '" + s + "'");
}

std::string scene_dir_name(int scene) {
    std::ostringstream os;
    os << "scene_" << std::setw(3) << std::setfill('0') << scene;
    return os.str();
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace

void apply_desk_scale(PipelineConfig& cfg) {
    const double fov_mm = cfg.geometry.n_u * cfg.geometry.pixel_pitch_mm;
    cfg.desk_scale = true;
    cfg.n_scenes = 2;
    cfg.n_train = 1;
    cfg.n_val = 1;
    cfg.geometry.n_u = 244;
    cfg.geometry.n_v = 244;
    cfg.geometry.pixel_pitch_mm = fov_mm / 244.0;
    cfg.geometry.angles_deg = ProjectionGeometry::uniform_angles(8, 45.0);
    cfg.anatomy.phantom_dims = {125, 75, 75};
    cfg.anatomy.crop_slices = 150;
}

void validate(const PipelineConfig& cfg) {
    if (cfg.n_scenes < 1 || cfg.n_train < 0 || cfg.n_val < 0 || cfg.n_train + cfg.n_val != cfg.n_scenes) {
        throw InvalidArgument("pipeline: n_scenes must be >= 1 and equal n_train + n_val");
    }
    if (cfg.n_implants_per_scene < 1) {
        throw InvalidArgument("pipeline: n_implants_per_scene must be >= 1");
    }
    validate(cfg.geometry);
    validate(cfg.augmentation);
    if (!(cfg.mono_energy_keV > 0.0)) {
        throw InvalidArgument("pipeline: mono_energy_keV must be > 0");
    }
    if (!(cfg.metal_epsilon_mm >= 0.0)) {
        throw InvalidArgument("pipeline: metal_epsilon_mm must be >= 0");
    }
    const auto& a = cfg.anatomy;
    if (!(a.source_spacing_mm > 0.0) || !(a.target_spacing_mm > 0.0) || a.crop_slices < 1) {
        throw InvalidArgument("pipeline: anatomy spacings must be > 0 and crop_slices >= 1");
    }
    if (a.files.empty()) {
        for (int d : a.phantom_dims) {
            if (d < 1) {
                throw InvalidArgument("pipeline: phantom dims must be >= 1");
            }
        }
        const long resampled = std::lround(a.phantom_dims[0] * a.source_spacing_mm / a.target_spacing_mm);
        if (resampled < a.crop_slices) {
            throw InvalidArgument("pipeline: crop_slices exceeds the resampled phantom length");
        }
    }
}

PipelineConfig config_from_json(const json& j, bool force_desk_scale) {
    PipelineConfig c;
    try {
        if (force_desk_scale || j.value("desk_scale", false)) {
            apply_desk_scale(c);
        }
        c.master_seed = j.value("master_seed", c.master_seed);
        c.n_scenes = j.value("n_scenes", c.n_scenes);
        c.n_implants_per_scene = j.value("n_implants_per_scene", c.n_implants_per_scene);
        if (j.contains("geometry")) {
            from_json(j.at("geometry"), c.geometry);
        }
        if (j.contains("physics_mode")) {
            c.physics = physics_from_string(j.at("physics_mode").get<std::string>());
        }
        c.mono_energy_keV = j.value("mono_energy_keV", c.mono_energy_keV);
        if (j.contains("augmentation")) {
            from_json(j.at("augmentation"), c.augmentation);
        }
        if (j.contains("split")) {
            c.n_train = j.at("split").value("train", c.n_train);
            c.n_val = j.at("split").value("val", c.n_val);
        } else if (j.contains("n_scenes") && !force_desk_scale && !j.value("desk_scale", false)) {
            // keep the 9:1 split when only the scene count changes
            c.n_val = std::min(c.n_scenes, std::max(1, c.n_scenes / 10));
            c.n_train = c.n_scenes - c.n_val;
        }
        if (j.contains("anatomy")) {
            const json& a = j.at("anatomy");
            c.anatomy.phantom_dims = a.value("phantom_dims", c.anatomy.phantom_dims);
            c.anatomy.source_spacing_mm = a.value("source_spacing_mm", c.anatomy.source_spacing_mm);
            c.anatomy.target_spacing_mm = a.value("target_spacing_mm", c.anatomy.target_spacing_mm);
            c.anatomy.crop_slices = a.value("crop_slices", c.anatomy.crop_slices);
            c.anatomy.files = a.value("files", c.anatomy.files);
        }
        c.metal_epsilon_mm = j.value("metal_epsilon_mm", c.metal_epsilon_mm);
        c.export_png16 = j.value("export_png16", c.export_png16);
        if (j.contains("output_dir")) {
            c.output_dir = j.at("output_dir").get<std::string>();
        }
        if (j.contains("data_dir")) {
            c.data_dir = j.at("data_dir").get<std::string>();
        }
        c.workers = j.value("workers", c.workers);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("pipeline config: ") + e.what());
    }
    validate(c);
    return c;
}

json config_to_json(const PipelineConfig& c) {
    return {{"master_seed", c.master_seed},
            {"n_scenes", c.n_scenes},
            {"n_implants_per_scene", c.n_implants_per_scene},
            {"geometry", c.geometry},
            {"physics_mode", physics_name(c.physics)},
            {"mono_energy_keV", c.mono_energy_keV},
            {"augmentation", c.augmentation},
            {"split", {{"train", c.n_train}, {"val", c.n_val}}},
            {"anatomy",
             {{"phantom_dims", c.anatomy.phantom_dims},
              {"source_spacing_mm", c.anatomy.source_spacing_mm},
              {"target_spacing_mm", c.anatomy.target_spacing_mm},
              {"crop_slices", c.anatomy.crop_slices},
              {"files", c.anatomy.files}}},
            {"metal_epsilon_mm", c.metal_epsilon_mm},
            {"export_png16", c.export_png16},
            {"desk_scale", c.desk_scale}};
}

DryRunCounts dry_run(const PipelineConfig& cfg) {
    validate(cfg);
    DryRunCounts d;
    d.scenes = cfg.n_scenes;
    d.views_per_scene = cfg.geometry.view_count();
    for (int s = 0; s < cfg.n_scenes; ++s) {
        (is_validation_scene(cfg, s) ? d.val_scenes : d.train_scenes) += 1;
    }
    d.train_pairs = d.train_scenes * d.views_per_scene;
    d.val_pairs = d.val_scenes * d.views_per_scene;
    d.pairs = d.train_pairs + d.val_pairs;
    return d;
}

bool is_validation_scene(const PipelineConfig& cfg, int scene) { return scene >= cfg.n_train; }

// ---- manifest ---------------------------------------------------------------

void to_json(json& j, const DatasetManifest& m) {
    json scenes = json::array();
    for (const auto& s : m.scenes) {
        json views = json::array();
        for (const auto& v : s.views) {
            views.push_back({{"view", v.view},
                             {"angle_deg", v.angle_deg},
                             {"gamma", v.gamma},
                             {"projection", v.projection},
                             {"projection_sha256", v.projection_sha256},
                             {"sidecar", v.sidecar},
                             {"mask", v.mask},
                             {"mask_sha256", v.mask_sha256}});
        }
        scenes.push_back({{"index", s.index},
                          {"split", s.split},
                          {"scene_seed", s.scene_seed},
                          {"anatomy_source", s.anatomy_source},
                          {"crop_start", s.crop_start},
                          {"noise_seed", s.noise_seed},
                          {"placements", s.placements},
                          {"views", views}});
    }
    j = {{"format_version", m.format_version},
         {"config", m.config},
         {"image", {{"rows", m.rows}, {"cols", m.cols}, {"projection_dtype", "f32le"}, {"mask_dtype", "u8"}}},
         {"scenes", scenes},
         {"splits", {{"train", m.train}, {"val", m.val}}}};
}

void from_json(const json& j, DatasetManifest& m) {
    m.format_version = j.at("format_version").get<std::string>();
    m.config = j.at("config");
    m.rows = j.at("image").at("rows").get<int>();
    m.cols = j.at("image").at("cols").get<int>();
    m.scenes.clear();
    for (const auto& js : j.at("scenes")) {
        SceneRecord s;
        s.index = js.at("index").get<int>();
        s.split = js.at("split").get<std::string>();
        s.scene_seed = js.at("scene_seed").get<std::uint64_t>();
        s.anatomy_source = js.at("anatomy_source");
        s.crop_start = js.at("crop_start").get<int>();
        s.noise_seed = js.at("noise_seed").get<std::uint64_t>();
        s.placements = js.at("placements").get<std::vector<Placement>>();
        for (const auto& jv : js.at("views")) {
            ViewRecord v;
            v.view = jv.at("view").get<int>();
            v.angle_deg = jv.at("angle_deg").get<double>();
            v.gamma = jv.at("gamma").get<double>();
            v.projection = jv.at("projection").get<std::string>();
            v.projection_sha256 = jv.at("projection_sha256").get<std::string>();
            v.sidecar = jv.at("sidecar").get<std::string>();
            v.mask = jv.at("mask").get<std::string>();
            v.mask_sha256 = jv.at("mask_sha256").get<std::string>();
            s.views.push_back(std::move(v));
        }
        m.scenes.push_back(std::move(s));
    }
    m.train = j.at("splits").at("train").get<std::vector<int>>();
    m.val = j.at("splits").at("val").get<std::vector<int>>();
}

void save_manifest(const DatasetManifest& m, const fs::path& path) { write_json_file(path, json(m)); }

DatasetManifest load_manifest(const fs::path& path) {
    const json j = read_json_file(path);
    try {
        return j.get<DatasetManifest>();
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": malformed manifest: " + e.what());
    }
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256: digest init failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return os.str();
}

void validate_manifest(const DatasetManifest& m, const fs::path& root) {
    if (m.format_version != "1") {
        throw InvalidArgument("manifest: unsupported format version '" + m.format_version + "'");
    }
    std::set<int> seen;
    for (int s : m.train) {
        if (!seen.insert(s).second) {
            throw InvalidArgument("manifest: scene listed twice in splits");
        }
    }
    for (int s : m.val) {
        if (!seen.insert(s).second) {
            throw InvalidArgument("manifest: scene listed in more than one split");
        }
    }
    std::set<int> indices;
    for (const auto& s : m.scenes) {
        indices.insert(s.index);
        const bool in_train = std::find(m.train.begin(), m.train.end(), s.index) != m.train.end();
        if ((s.split == "train") != in_train || (s.split != "train" && s.split != "val")) {
            throw InvalidArgument("manifest: split assignment of scene " + std::to_string(s.index) + " is inconsistent");
        }
    }
    if (indices != seen || indices.size() != m.scenes.size()) {
        throw InvalidArgument("manifest: splits do not cover the scenes exactly once");
    }
    const auto pixels = static_cast<std::uintmax_t>(m.rows) * static_cast<std::uintmax_t>(m.cols);
    for (const auto& s : m.scenes) {
        for (const auto& v : s.views) {
            const std::pair<const std::string*, const std::string*> files[] = {{&v.projection, &v.projection_sha256},
                                                                               {&v.mask, &v.mask_sha256}};
            for (const auto& [file, digest] : files) {
                const fs::path p = root / *file;
                if (!fs::exists(p)) {
                    throw IoError("manifest: missing file " + p.string());
                }
                if (sha256_file(p) != *digest) {
                    throw InvalidArgument("manifest: checksum mismatch for " + p.string());
                }
            }
            if (fs::file_size(root / v.projection) != 4 * pixels || fs::file_size(root / v.mask) != pixels) {
                throw InvalidArgument("manifest: projection/mask size mismatch in scene " + std::to_string(s.index));
            }
            if (!fs::exists(root / v.sidecar)) {
                throw IoError("manifest: missing sidecar " + (root / v.sidecar).string());
            }
        }
    }
}

// ---- scene generation --------------------------------------------------------

PreparedScene prepare_scene(const PipelineConfig& cfg, int scene_index) {
    validate(cfg);
    if (scene_index < 0 || scene_index >= cfg.n_scenes) {
        throw OutOfBounds("scene index out of range");
    }
    const std::uint64_t scene_seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(scene_index));
    const auto& a = cfg.anatomy;

    json source;
    std::optional<Volume> raw;
    if (a.files.empty()) {
        const std::uint64_t phantom_seed = derive_seed(scene_seed, kPhantomTag);
        raw = synth_phantom(knee_phantom(phantom_seed, a.phantom_dims, a.source_spacing_mm));
        source = {{"kind", "phantom"},
                  {"seed", phantom_seed},
                  {"dims", a.phantom_dims},
                  {"spacing_mm", a.source_spacing_mm}};
    } else {
        const std::string& file = a.files[static_cast<std::size_t>(scene_index) % a.files.size()];
        raw = load_volume(file);
        source = {{"kind", "file"}, {"path", file}};
    }
    const Volume resampled = resample(*raw, a.target_spacing_mm, cfg.workers);
    raw.reset();
    const int n0 = resampled.dims()[0];
    if (n0 < a.crop_slices) {
        throw InvalidArgument("anatomy has " + std::to_string(n0) + " slices, fewer than crop_slices");
    }
    CounterRng crop_rng(derive_seed(scene_seed, kCropTag));
    const int crop_start = std::uniform_int_distribution<int>(0, n0 - a.crop_slices)(crop_rng);
    const Volume cropped = crop_slices(resampled, crop_start, a.crop_slices);

    ComposedScene scene =
        place_implants(cropped, cfg.n_implants_per_scene, derive_seed(scene_seed, kPlacementTag), cfg.workers);
    const std::uint64_t noise_seed = derive_seed(derive_seed(scene_seed, kNoiseTag), cfg.augmentation.noise_seed);
    return PreparedScene{scene_index, scene_seed, std::move(source), crop_start, noise_seed, std::move(scene)};
}

NoiselessProjections render_noiseless(const Volume& hu, const PipelineConfig& cfg, const MaterialModel& model) {
    ProjectOptions opts;
    opts.workers = cfg.workers;
    if (cfg.physics == PhysicsMode::mono) {
        ProjectionStack li = project_mono(hu, cfg.geometry, cfg.mono_energy_keV, model, opts);
        ProjectionStack intensity = li;
        intensity.channel = Channel::intensity;
        for (auto& img : intensity.images) {
            img = transmitted(img);
        }
        ProjectionStack thickness = project_line_integrals(material_indicator(hu, Material::metal), cfg.geometry, opts);
        thickness.channel = Channel::material_thickness;
        thickness.label = std::string(to_string(Material::metal));
        return {std::move(intensity), std::move(thickness)};
    }
    MaterialProjections mp = project_materials(hu, cfg.geometry, model.densities, opts);
    ProjectionStack intensity{mp.thickness[0].geometry, Channel::intensity, "", {}};
    for (int v = 0; v < intensity.geometry.view_count(); ++v) {
        const auto vi = static_cast<std::size_t>(v);
        const std::array<Image, 4> areal{mp.areal_density[0].images[vi], mp.areal_density[1].images[vi],
                                         mp.areal_density[2].images[vi], mp.areal_density[3].images[vi]};
        intensity.images.push_back(polychromatic_intensity(areal, model, cfg.workers));
    }
    return {std::move(intensity), std::move(mp.thickness[static_cast<int>(Material::metal)])};
}

ProjectionStack negative_log(const ProjectionStack& intensity) {
    ProjectionStack out = intensity;
    out.channel = Channel::line_integral;
    for (auto& img : out.images) {
        for (float& p : img.pixels) {
            if (!(p > 0.0f)) {
                throw InvalidArgument("negative_log: intensity must be positive");
            }
            p = static_cast<float>(-std::log(static_cast<double>(p)));
        }
    }
    return out;
}

namespace {

SceneRecord render_scene(const PipelineConfig& cfg, const MaterialModel& model, int index, const fs::path& root) {
    PreparedScene prep = prepare_scene(cfg, index);
    const NoiselessProjections proj = render_noiseless(prep.scene.merged, cfg, model);

    SceneRecord rec;
    rec.index = index;
    rec.split = is_validation_scene(cfg, index) ? "val" : "train";
    rec.scene_seed = prep.scene_seed;
    rec.anatomy_source = prep.anatomy_source;
    rec.crop_start = prep.crop_start;
    rec.noise_seed = prep.noise_seed;
    rec.placements = prep.scene.placements;

    const std::string dir = scene_dir_name(index);
    fs::create_directories(root / dir);
    CounterRng gamma_rng(derive_seed(prep.scene_seed, kGammaTag));
    std::uniform_real_distribution<double> gamma_dist(cfg.augmentation.gamma_range[0], cfg.augmentation.gamma_range[1]);
    const auto& g = proj.intensity.geometry;

    for (int v = 0; v < g.view_count(); ++v) {
        const auto vi = static_cast<std::size_t>(v);
        const std::uint64_t view_noise_seed = derive_seed(prep.noise_seed, static_cast<std::uint64_t>(v));
        const Image noisy = add_poisson_noise(proj.intensity.images[vi], cfg.augmentation.photons_per_pixel,
                                              view_noise_seed, cfg.workers);
        const double gamma = cfg.augmentation.gamma_range[0] == cfg.augmentation.gamma_range[1]
                                 ? cfg.augmentation.gamma_range[0]
                                 : gamma_dist(gamma_rng);
        const Image image = gamma_adjust(log_normalize(noisy), gamma);
        const Mask mask = metal_mask(proj.metal_thickness.images[vi], cfg.metal_epsilon_mm);

        const std::string stem = view_file_stem("proj", v);
        const std::string mask_stem = view_file_stem("mask", v);
        ViewRecord vr;
        vr.view = v;
        vr.angle_deg = g.angles_deg[vi];
        vr.gamma = gamma;
        vr.projection = dir + "/" + stem + ".f32";
        vr.sidecar = dir + "/" + stem + ".json";
        vr.mask = dir + "/" + mask_stem + ".u8";
        write_raw(root / vr.projection, image);
        write_raw(root / vr.mask, mask);
        write_json_file(root / vr.sidecar, {{"geometry", g},
                                            {"channel", std::string(to_string(Channel::normalized))},
                                            {"view_index", v},
                                            {"angle_deg", vr.angle_deg},
                                            {"rows", image.rows},
                                            {"cols", image.cols},
                                            {"dtype", "f32le"},
                                            {"gamma", gamma},
                                            {"noise_seed", view_noise_seed},
                                            {"mask", mask_stem + ".u8"}});
        if (cfg.export_png16) {
            write_png_gray16(root / dir / (stem + ".png"), image);
            write_png_mask(root / dir / (mask_stem + ".png"), mask);
        }
        vr.projection_sha256 = sha256_file(root / vr.projection);
        vr.mask_sha256 = sha256_file(root / vr.mask);
        rec.views.push_back(std::move(vr));
    }
    return rec;
}

} // namespace

DatasetManifest generate_dataset(const PipelineConfig& cfg) {
    validate(cfg);
    const MaterialModel model = load_material_model(resolve_data_dir(cfg.data_dir));
    const fs::path root = cfg.output_dir;
    try {
        fs::create_directories(root);
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot create output directory " + root.string() + ": " + e.what());
    }

    DatasetManifest m;
    m.config = config_to_json(cfg);
    m.rows = cfg.geometry.n_v;
    m.cols = cfg.geometry.n_u;
    for (int s = 0; s < cfg.n_scenes; ++s) {
        try {
            m.scenes.push_back(render_scene(cfg, model, s, root));
        } catch (const SceneError&) {
            throw;
        } catch (const std::exception& e) {
            throw SceneError(s, e.what());
        }
        (is_validation_scene(cfg, s) ? m.val : m.train).push_back(s);
    }
    save_manifest(m, root / "manifest.json");
    return m;
}

// ---- subtraction annotation --------------------------------------------------

double otsu_threshold(const Image& img) {
    if (img.pixels.empty()) {
        return 0.0;
    }
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) {
        return hi;
    }
    constexpr int kBins = 256;
    std::array<double, kBins> hist{};
    const double width = (hi - lo) / kBins;
    for (float p : img.pixels) {
        const int b = std::min(kBins - 1, static_cast<int>((p - lo) / width));
        hist[b] += 1.0;
    }
    const double total = static_cast<double>(img.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) {
        sum_all += b * hist[b];
    }
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_bin = 0;
    for (int b = 0; b < kBins - 1; ++b) {
        w0 += hist[b];
        sum0 += b * hist[b];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) {
            continue;
        }
        const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_bin = b;
        }
    }
    // upper edge of the last background bin
    return lo + (best_bin + 1) * width;
}

SubtractionResult annotate_by_subtraction(const ProjectionStack& with_metal, const ProjectionStack& without_metal,
                                          std::optional<double> threshold) {
    if (with_metal.geometry != without_metal.geometry || with_metal.images.size() != without_metal.images.size()) {
        throw InvalidArgument("annotate_by_subtraction: stacks differ in geometry or view count");
    }
    SubtractionResult r;
    for (std::size_t v = 0; v < with_metal.images.size(); ++v) {
        const Image& a = with_metal.images[v];
        const Image& b = without_metal.images[v];
        if (!a.same_shape(b)) {
            throw InvalidArgument("annotate_by_subtraction: image shapes differ");
        }
        Image diff(a.rows, a.cols);
        for (std::size_t i = 0; i < a.size(); ++i) {
            diff.pixels[i] = a.pixels[i] - b.pixels[i];
        }
        const double t = threshold ? *threshold : otsu_threshold(diff);
        Mask m(a.rows, a.cols);
        for (std::size_t i = 0; i < a.size(); ++i) {
            m.pixels[i] = diff.pixels[i] > t ? 1 : 0;
        }
        r.masks.push_back(std::move(m));
        r.thresholds.push_back(t);
    }
    return r;
}

// ---- preview -----------------------------------------------------------------

fs::path overlay_path(const fs::path& out) {
    return out.parent_path() / (out.stem().string() + "_overlay.png");
}

void preview(const DatasetManifest& m, const fs::path& root, int scene, int view, const fs::path& out) {
    const auto it = std::find_if(m.scenes.begin(), m.scenes.end(), [&](const SceneRecord& s) { return s.index == scene; });
    if (it == m.scenes.end()) {
        throw OutOfBounds("preview: no scene " + std::to_string(scene) + " in manifest");
    }
    if (view < 0 || view >= static_cast<int>(it->views.size())) {
        throw OutOfBounds("preview: view " + std::to_string(view) + " out of range");
    }
    const ViewRecord& vr = it->views[static_cast<std::size_t>(view)];
    const Image img = read_raw_image(root / vr.projection, m.rows, m.cols);
    const Mask mask = read_raw_mask(root / vr.mask, m.rows, m.cols);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    write_png_gray8(out, img, 0.0f, 1.0f);
    write_png_overlay(overlay_path(out), img, 0.0f, 1.0f, mask);
}

} // namespace xpf
