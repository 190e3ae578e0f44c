#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pf/image.hpp"
#include "pf/preprocess.hpp"

namespace pf {

enum class PatternClass { arch = 0, whorl = 1, left_loop = 2, right_loop = 3 };
inline constexpr int kNumClasses = 4;

const char* to_string(PatternClass c) noexcept;
/// Accepts the four class names plus "tented_arch", which folds into arch, and the
/// one-letter codes A, T, W, L, R used by NIST-style label files.
std::optional<PatternClass> parse_pattern_class(std::string_view name);

struct Singularity {
  enum class Type { core, delta };
  Type type;
  double x, y;  // pixels
};

/// Ridge direction per pixel, angle in [0, pi) measured from +x with y pointing down.
struct OrientationField {
  int width = 0;
  int height = 0;
  std::vector<double> theta;
  std::vector<Singularity> singularities;
  // Core point (midpoint of the cores for whorls, apex for arches).
  double ref_x = 0;
  double ref_y = 0;

  double at(int x, int y) const { return theta[static_cast<std::size_t>(y) * width + x]; }
};

/// Geometry of one pattern. Positions are fractions of the image size.
struct FieldParams {
  int width = 256;
  int height = 256;
  double core_x = 0.5;
  double core_y = 0.42;
  // Loops: delta offset from the core, as drawn for a left loop (positive dx = delta
  // right of the core). Right loops use the mirror image.
  double delta_dx = 0.22;
  double delta_dy = 0.32;
  // Whorls: vertical gap between the two cores; deltas sit below, left and right.
  double whorl_gap = 0.08;
  double whorl_delta_dx = 0.42;
  double whorl_delta_dy = 0.4;
  // Arches: ridge bump height (in units of the bump width) and width. 0 height = flat.
  double arch_height = 0.8;
  double arch_width = 0.2;
  double rotation_deg = 0.0;
  double jitter = 0.0;  // std of singularity position jitter (fraction of size)
};

/// Placement mirrored (x -> width-1-x): core position and rotation. Loop geometry
/// stays in left-loop terms.
FieldParams mirrored(const FieldParams& p);
OrientationField mirror_field(const OrientationField& f);

/// Singular-point model: theta = 1/2 (sum over cores of arg(z - c) - sum over deltas
/// of arg(z - d)) for loops and whorls, a Gaussian ridge bump for arches, then a
/// global rotation. Right loops are built as mirrored left loops.
OrientationField gen_orientation_field(PatternClass cls, const FieldParams& params, std::uint64_t seed);

/// Oriented (Gabor) filtering of a seed texture, `passes` times, stretched to [0,255].
/// The seed is the local plane wave cos(2 pi f (p - ref) . n(p)), n the ridge
/// normal, plus white noise of standard deviation `noise`.
GrayImage render_ridges(const OrientationField& field, double frequency, double noise, std::uint64_t seed,
                        int passes = 3);

struct SynthConfig {
  int n_per_class = 100;
  int size = 128;
  std::uint64_t seed = 0;
  double frequency = 0.045;       // cycles per pixel
  double frequency_jitter = 0.1;  // relative, uniform
  double rotation_deg = 10.0;     // uniform in +-rotation_deg
  double position_jitter = 0.04;  // singularity jitter, fraction of size
  double tented_fraction = 0.3;   // share of arches drawn as tented arches
  double noise = 1.0;             // seed noise for render_ridges
  double grain = 12.0;            // additive pixel noise std (gray levels)
  double contrast_jitter = 0.3;   // smooth illumination variation
  double center_jitter = 0.02;    // annotation error of the recorded core center

  nlohmann::json to_json() const;
};

struct SynthSample {
  GrayImage image;
  PatternClass label;
  bool tented = false;
  int center_x = 0;
  int center_y = 0;
  nlohmann::json params;
};

/// Sample i of a dataset; class = i mod 4. Depends only on (cfg, i).
SynthSample generate_sample(const SynthConfig& cfg, std::size_t index);

struct ManifestRow {
  std::string path;
  std::optional<std::string> label;
  std::optional<int> center_x;
  std::optional<int> center_y;
};

/// CSV with header path,label,center_x,center_y (label and center columns optional).
struct DatasetManifest {
  std::vector<ManifestRow> rows;
  nlohmann::json generation;  // synthetic datasets only
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

/// Writes images/NNNN_label.png, manifest.csv and synth.json under out_dir.
DatasetManifest gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

struct LoadedDataset {
  std::vector<std::string> paths;
  std::vector<GrayImage> images;
  std::vector<std::optional<PatternClass>> labels;
  std::vector<int> center_x, center_y;
  std::vector<std::string> errors;    // itemized, "row N: ..."
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return images.size(); }
  bool has_labels() const;
};

/// Paths are resolved relative to the manifest's directory. Missing centers default
/// to the image center. In strict mode any row error throws ErrorKind::data listing
/// every failing row; in permissive mode failing rows are skipped and reported.
LoadedDataset load_dataset(const std::filesystem::path& manifest, bool permissive = false);

}  // namespace pf
