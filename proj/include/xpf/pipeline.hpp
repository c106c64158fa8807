#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xpf/geometry.hpp"
#include "xpf/image.hpp"
#include "xpf/materials.hpp"
#include "xpf/physics.hpp"
#include "xpf/projector.hpp"
#include "xpf/scene.hpp"

namespace xpf {

enum class PhysicsMode { mono, poly };

struct AnatomyConfig {
    /// Phantom grid before resampling; ignored when `files` is non-empty.
    std::array<int, 3> phantom_dims{500, 300, 300};
    double source_spacing_mm = 1.0;
    double target_spacing_mm = 0.5;
    int crop_slices = 600;
    /// Optional volume files (`.vol.json` stems); scene i uses files[i % n].
    std::vector<std::string> files;

    friend bool operator==(const AnatomyConfig&, const AnatomyConfig&) = default;
};

struct PipelineConfig {
    std::uint64_t master_seed = 0;
    int n_scenes = 50;
    int n_implants_per_scene = 4;
    ProjectionGeometry geometry;
    PhysicsMode physics = PhysicsMode::poly;
    double mono_energy_keV = 60.0;
    AugmentationConfig augmentation;
    int n_train = 45;
    int n_val = 5;
    AnatomyConfig anatomy;
    double metal_epsilon_mm = 0.1;
    bool export_png16 = false;
    bool desk_scale = false;
    std::filesystem::path output_dir = "out";
    std::filesystem::path data_dir;  ///< empty = resolve_data_dir()
    unsigned workers = 0;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Desk-scale overrides: 2 scenes (1 train, 1 val), 8 views at 45 degrees,
/// 244^2 detector with the pitch scaled to keep the field of view, and a
/// 150^3 crop from a 125x75x75 mm phantom.
void apply_desk_scale(PipelineConfig& cfg);

/// Throws InvalidArgument when an invariant does not hold.
void validate(const PipelineConfig& cfg);

/// Defaults, then desk-scale overrides when `desk_scale` is set in `j` or
/// forced, then every key present in `j`.
PipelineConfig config_from_json(const nlohmann::json& j, bool force_desk_scale = false);
/// Reproducibility echo; excludes output_dir, data_dir and workers.
nlohmann::json config_to_json(const PipelineConfig& cfg);

struct DryRunCounts {
    int scenes = 0;
    int views_per_scene = 0;
    int pairs = 0;
    int train_scenes = 0;
    int val_scenes = 0;
    int train_pairs = 0;
    int val_pairs = 0;
};

DryRunCounts dry_run(const PipelineConfig& cfg);

/// Scenes with index >= n_train are validation.
bool is_validation_scene(const PipelineConfig& cfg, int scene);

struct ViewRecord {
    int view = 0;
    double angle_deg = 0.0;
    double gamma = 1.0;
    std::string projection;  ///< relative to the manifest directory
    std::string projection_sha256;
    std::string sidecar;
    std::string mask;
    std::string mask_sha256;

    friend bool operator==(const ViewRecord&, const ViewRecord&) = default;
};

struct SceneRecord {
    int index = 0;
    std::string split;  ///< "train" or "val"
    std::uint64_t scene_seed = 0;
    nlohmann::json anatomy_source;
    int crop_start = 0;
    std::uint64_t noise_seed = 0;
    std::vector<Placement> placements;
    std::vector<ViewRecord> views;

    friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

struct DatasetManifest {
    std::string format_version = "1";
    nlohmann::json config;
    int rows = 0;
    int cols = 0;
    std::vector<SceneRecord> scenes;
    std::vector<int> train;
    std::vector<int> val;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Checks format version, split disjointness and coverage, file presence,
/// checksums and file sizes. Throws InvalidArgument or IoError.
void validate_manifest(const DatasetManifest& m, const std::filesystem::path& root);

std::string sha256_file(const std::filesystem::path& path);

/// Cropped anatomy plus implants for one scene, before projection.
struct PreparedScene {
    int index = 0;
    std::uint64_t scene_seed = 0;
    nlohmann::json anatomy_source;
    int crop_start = 0;
    std::uint64_t noise_seed = 0;
    ComposedScene scene;
};

PreparedScene prepare_scene(const PipelineConfig& cfg, int scene_index);

struct NoiselessProjections {
    ProjectionStack intensity;        ///< I/I0
    ProjectionStack metal_thickness;  ///< mm
};

/// Mono: exp(-line integral of water-scaled mu). Poly: material projection
/// followed by the spectrum-weighted sum.
NoiselessProjections render_noiseless(const Volume& hu, const PipelineConfig& cfg, const MaterialModel& model);

/// -ln(I/I0) per pixel.
ProjectionStack negative_log(const ProjectionStack& intensity);

/// Renders every scene into cfg.output_dir and writes manifest.json there.
/// Errors are rethrown as SceneError carrying the scene index.
DatasetManifest generate_dataset(const PipelineConfig& cfg);

struct SubtractionResult {
    std::vector<Mask> masks;
    std::vector<double> thresholds;
};

/// mask = (with - without) > threshold per view; Otsu's threshold on the
/// difference histogram unless a fixed threshold is given.
SubtractionResult annotate_by_subtraction(const ProjectionStack& with_metal, const ProjectionStack& without_metal,
                                          std::optional<double> threshold = std::nullopt);

/// Otsu's threshold over a 256-bin histogram spanning [min, max].
double otsu_threshold(const Image& img);

/// Writes an 8-bit grayscale PNG of the stored projection at `out` and a
/// green mask overlay next to it (`<stem>_overlay.png`).
void preview(const DatasetManifest& m, const std::filesystem::path& root, int scene, int view,
             const std::filesystem::path& out);

std::filesystem::path overlay_path(const std::filesystem::path& out);

} // namespace xpf
