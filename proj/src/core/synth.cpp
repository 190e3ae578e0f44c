#include "pf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "pf/parallel.hpp"

namespace pf {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
  a = std::fmod(a, kPi);
  return a < 0 ? a + kPi : a;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Orientation-tuned, zero-mean Gabor kernels for `bins` angles in [0, pi).
struct GaborBank {
  int radius = 0;
  int bins = 0;
  std::vector<std::vector<double>> kernels;

  GaborBank(double frequency, int nbins) : bins(nbins) {
    const double sigma = 0.45 / frequency;
    radius = static_cast<int>(std::ceil(2.0 * sigma));
    const int side = 2 * radius + 1;
    for (int b = 0; b < bins; ++b) {
      const double theta = kPi * b / bins;
      const double s = std::sin(theta), c = std::cos(theta);
      std::vector<double> k(static_cast<std::size_t>(side) * side);
      double mean = 0, env_total = 0;
      std::vector<double> env(k.size());
      for (int v = -radius; v <= radius; ++v)
        for (int u = -radius; u <= radius; ++u) {
          const std::size_t i = static_cast<std::size_t>(v + radius) * side + (u + radius);
          const double normal = -u * s + v * c;  // distance across the ridge direction
          env[i] = std::exp(-(u * u + v * v) / (2 * sigma * sigma));
          k[i] = env[i] * std::cos(2 * kPi * frequency * normal);
          mean += k[i];
          env_total += env[i];
        }
      // Remove the DC response by subtracting a scaled envelope.
      for (std::size_t i = 0; i < k.size(); ++i) k[i] -= mean / env_total * env[i];
      kernels.push_back(std::move(k));
    }
  }

  const std::vector<double>& for_angle(double theta) const {
    int b = static_cast<int>(std::lround(theta / kPi * bins)) % bins;
    return kernels[static_cast<std::size_t>(b < 0 ? b + bins : b)];
  }
};

void standardize_squash(std::vector<double>& img) {
  double mean = 0;
  for (double v : img) mean += v;
  mean /= static_cast<double>(img.size());
  double var = 0;
  for (double v : img) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(img.size()));
  for (double& v : img) v = sd > 0 ? std::tanh(1.5 * (v - mean) / sd) : 0.0;
}

}  // namespace

const char* to_string(PatternClass c) noexcept {
  switch (c) {
    case PatternClass::arch: return "arch";
    case PatternClass::whorl: return "whorl";
    case PatternClass::left_loop: return "left_loop";
    case PatternClass::right_loop: return "right_loop";
  }
  return "?";
}

std::optional<PatternClass> parse_pattern_class(std::string_view name) {
  if (name == "arch" || name == "tented_arch" || name == "A" || name == "T") return PatternClass::arch;
  if (name == "whorl" || name == "W") return PatternClass::whorl;
  if (name == "left_loop" || name == "L") return PatternClass::left_loop;
  if (name == "right_loop" || name == "R") return PatternClass::right_loop;
  return std::nullopt;
}

FieldParams mirrored(const FieldParams& p) {
  FieldParams m = p;
  m.core_x = 1.0 - p.core_x;
  m.rotation_deg = -p.rotation_deg;
  return m;
}

OrientationField mirror_field(const OrientationField& f) {
  OrientationField m = f;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      m.theta[static_cast<std::size_t>(y) * f.width + x] = wrap_pi(kPi - f.at(f.width - 1 - x, y));
  for (auto& s : m.singularities) s.x = (f.width - 1) - s.x;
  m.ref_x = (f.width - 1) - f.ref_x;
  return m;
}

OrientationField gen_orientation_field(PatternClass cls, const FieldParams& p, std::uint64_t seed) {
  if (cls == PatternClass::right_loop) return mirror_field(gen_orientation_field(PatternClass::left_loop, mirrored(p), seed));
  require(p.width > 0 && p.height > 0, ErrorKind::config, "orientation field size must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jit(0.0, 1.0);
  const double sx = p.width - 1, sy = p.height - 1;
  auto jittered = [&](double fx, double fy) {
    const double jx = p.jitter > 0 ? p.jitter * jit(rng) : 0.0;
    const double jy = p.jitter > 0 ? p.jitter * jit(rng) : 0.0;
    return std::pair<double, double>{(fx + jx) * sx, (fy + jy) * sy};
  };

  OrientationField f;
  f.width = p.width;
  f.height = p.height;
  const auto [cx, cy] = jittered(p.core_x, p.core_y);
  f.ref_x = cx;
  f.ref_y = cy;
  using T = Singularity::Type;
  switch (cls) {
    case PatternClass::arch:
      break;
    case PatternClass::left_loop: {
      f.singularities.push_back({T::core, cx, cy});
      const auto [dx, dy] = jittered(p.core_x + p.delta_dx, p.core_y + p.delta_dy);
      f.singularities.push_back({T::delta, dx, dy});
      break;
    }
    case PatternClass::whorl: {
      const double half = 0.5 * p.whorl_gap * sy;
      f.singularities.push_back({T::core, cx, cy - half});
      f.singularities.push_back({T::core, cx, cy + half});
      const auto [lx, ly] = jittered(p.core_x - p.whorl_delta_dx, p.core_y + p.whorl_delta_dy);
      const auto [rx, ry] = jittered(p.core_x + p.whorl_delta_dx, p.core_y + p.whorl_delta_dy);
      f.singularities.push_back({T::delta, lx, ly});
      f.singularities.push_back({T::delta, rx, ry});
      break;
    }
    case PatternClass::right_loop:
      break;  // handled above
  }

  // Rotate the whole pattern about the core point.
  const double rot = p.rotation_deg * kPi / 180.0;
  const double cr = std::cos(rot), sr = std::sin(rot);
  for (auto& s : f.singularities) {
    const double u = s.x - cx, v = s.y - cy;
    s.x = cx + cr * u - sr * v;
    s.y = cy + sr * u + cr * v;
  }
  const double w = std::max(1e-6, p.arch_width * sx);
  f.theta.resize(static_cast<std::size_t>(p.width) * p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      // Position in the unrotated pattern frame.
      const double u0 = x - cx, v0 = y - cy;
      const double u = cr * u0 + sr * v0, v = -sr * u0 + cr * v0;
      double theta = 0;
      if (cls == PatternClass::arch) {
        const double bump = std::exp(-u * u / (2 * w * w)) * std::exp(-v * v / (2 * 2.25 * w * w));
        theta = std::atan(p.arch_height * (u / w) * bump);
      } else {
        const double px = cx + u, py = cy + v;
        for (const auto& s : f.singularities) {
          // Singularities were rotated into image space; undo for the pattern frame.
          const double su = s.x - cx, sv = s.y - cy;
          const double qx = cx + cr * su + sr * sv, qy = cy - sr * su + cr * sv;
          const double a = std::atan2(py - qy, px - qx);
          theta += s.type == T::core ? 0.5 * a : -0.5 * a;
        }
      }
      f.theta[static_cast<std::size_t>(y) * p.width + x] = wrap_pi(theta + rot);
    }
  return f;
}

GrayImage render_ridges(const OrientationField& field, double frequency, double noise, std::uint64_t seed,
                        int passes) {
  require(frequency > 0 && frequency < 0.5, ErrorKind::config, "ridge frequency must be in (0, 0.5) cycles/px");
  require(noise >= 0 && passes >= 1, ErrorKind::config, "render_ridges: noise must be >= 0 and passes >= 1");
  const int W = field.width, H = field.height;
  std::vector<double> img(static_cast<std::size_t>(W) * H);
  // Seed: the local plane wave through the reference point, so ridge phase is
  // anchored at the core, plus white noise.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double t = field.at(x, y);
      const double d = -(x - field.ref_x) * std::sin(t) + (y - field.ref_y) * std::cos(t);
      double& v = img[static_cast<std::size_t>(y) * W + x];
      v = std::cos(2 * kPi * frequency * d);
      if (noise > 0) v += noise * n(rng);
    }

  const GaborBank bank(frequency, 64);
  const int r = bank.radius, side = 2 * r + 1, PW = W + 2 * r;
  std::vector<double> next(img.size()), pad(static_cast<std::size_t>(PW) * (H + 2 * r));
  for (int pass = 0; pass < passes; ++pass) {
    for (int y = -r; y < H + r; ++y)
      for (int x = -r; x < W + r; ++x)
        pad[static_cast<std::size_t>(y + r) * PW + (x + r)] =
            img[static_cast<std::size_t>(reflect_index(y, H)) * W + reflect_index(x, W)];
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double* k = bank.for_angle(field.at(x, y)).data();
        // Four partial sums break the serial add chain; the order is fixed, so
        // results stay deterministic.
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        for (int v = 0; v < side; ++v) {
          const double* row = pad.data() + static_cast<std::size_t>(y + v) * PW + x;
          const double* kr = k + static_cast<std::size_t>(v) * side;
          int u = 0;
          for (; u + 4 <= side; u += 4) {
            s0 += kr[u] * row[u];
            s1 += kr[u + 1] * row[u + 1];
            s2 += kr[u + 2] * row[u + 2];
            s3 += kr[u + 3] * row[u + 3];
          }
          for (; u < side; ++u) s0 += kr[u] * row[u];
        }
        next[static_cast<std::size_t>(y) * W + x] = (s0 + s1) + (s2 + s3);
      }
    standardize_squash(next);
    img.swap(next);
  }

  const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
  const double span = *hi - *lo;
  GrayImage out(W, H);
  for (std::size_t i = 0; i < img.size(); ++i)
    out.pixels[i] = span > 0 ? static_cast<std::uint8_t>(std::lround(255.0 * (img[i] - *lo) / span)) : 128;
  return out;
}

nlohmann::json SynthConfig::to_json() const {
  return {{"n_per_class", n_per_class},       {"size", size},
          {"seed", seed},                     {"frequency", frequency},
          {"frequency_jitter", frequency_jitter}, {"rotation_deg", rotation_deg},
          {"position_jitter", position_jitter}, {"tented_fraction", tented_fraction},
          {"noise", noise},                   {"grain", grain},
          {"contrast_jitter", contrast_jitter}, {"center_jitter", center_jitter}};
}

SynthSample generate_sample(const SynthConfig& cfg, std::size_t index) {
  require(cfg.size >= 16, ErrorKind::config, "synthetic image size must be >= 16");
  std::mt19937_64 rng = sample_rng(cfg.seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  SynthSample s;
  s.label = static_cast<PatternClass>(index % kNumClasses);
  FieldParams p;
  p.width = p.height = cfg.size;
  p.jitter = cfg.position_jitter;
  p.rotation_deg = uniform(-cfg.rotation_deg, cfg.rotation_deg);
  switch (s.label) {
    case PatternClass::arch:
      s.tented = unit(rng) < cfg.tented_fraction;
      p.arch_height = s.tented ? uniform(2.0, 3.0) : uniform(0.4, 1.0);
      p.arch_width = s.tented ? uniform(0.06, 0.1) : uniform(0.15, 0.25);
      break;
    case PatternClass::whorl:
      p.whorl_gap = uniform(0.04, 0.12);
      break;
    case PatternClass::left_loop:
    case PatternClass::right_loop:
      p.delta_dx = uniform(0.3, 0.42);
      p.delta_dy = uniform(0.2, 0.3);
      break;
  }
  const std::uint64_t field_seed = rng(), render_seed = rng();
  const double freq = cfg.frequency * uniform(1.0 - cfg.frequency_jitter, 1.0 + cfg.frequency_jitter);
  OrientationField field = gen_orientation_field(s.label, p, field_seed);
  GrayImage img = render_ridges(field, freq, cfg.noise, render_seed);

  // Smooth illumination change plus pixel grain.
  const double phase_x = uniform(0, 2 * kPi), phase_y = uniform(0, 2 * kPi);
  const double amp = cfg.contrast_jitter * unit(rng);
  std::normal_distribution<double> grain(0.0, 1.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double gain = 1.0 - amp * 0.5 * (1 + std::sin(2 * kPi * x / img.width + phase_x) *
                                                       std::cos(2 * kPi * y / img.height + phase_y));
      const double v = 128.0 + (img.at(x, y) - 128.0) * gain + cfg.grain * grain(rng);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }

  const double rx = field.ref_x, ry = field.ref_y;
  std::normal_distribution<double> cj(0.0, cfg.center_jitter * cfg.size);
  s.center_x = std::clamp(static_cast<int>(std::lround(rx + (cfg.center_jitter > 0 ? cj(rng) : 0.0))), 0, cfg.size - 1);
  s.center_y = std::clamp(static_cast<int>(std::lround(ry + (cfg.center_jitter > 0 ? cj(rng) : 0.0))), 0, cfg.size - 1);
  s.image = std::move(img);
  s.params = {{"index", index},
              {"label", to_string(s.label)},
              {"tented", s.tented},
              {"frequency", freq},
              {"rotation_deg", p.rotation_deg},
              {"field_seed", field_seed},
              {"render_seed", render_seed}};
  return s;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open manifest " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    for (auto& col : cols) {
      while (!col.empty() && (col.back() == '\r' || col.back() == ' ')) col.pop_back();
      while (!col.empty() && col.front() == ' ') col.erase(col.begin());
    }
    return cols;
  };
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), ErrorKind::data, path.string() + ": empty manifest");
  const auto header = split(line);
  int ipath = -1, ilabel = -1, icx = -1, icy = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == "path") ipath = i;
    else if (header[i] == "label") ilabel = i;
    else if (header[i] == "center_x") icx = i;
    else if (header[i] == "center_y") icy = i;
  }
  require(ipath >= 0, ErrorKind::data, path.string() + ": manifest header must contain 'path'");

  DatasetManifest m;
  std::vector<std::string> errors;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cols = split(line);
    auto cell = [&](int i) -> std::string { return i >= 0 && i < static_cast<int>(cols.size()) ? cols[i] : ""; };
    ManifestRow row;
    row.path = cell(ipath);
    if (row.path.empty()) {
      errors.push_back("row " + std::to_string(lineno) + ": missing path");
      continue;
    }
    if (!cell(ilabel).empty()) row.label = cell(ilabel);
    try {
      if (!cell(icx).empty()) row.center_x = std::stoi(cell(icx));
      if (!cell(icy).empty()) row.center_y = std::stoi(cell(icy));
    } catch (const std::exception&) {
      errors.push_back("row " + std::to_string(lineno) + ": malformed center coordinates");
      continue;
    }
    m.rows.push_back(std::move(row));
  }
  if (!errors.empty()) {
    std::string msg = path.string() + ": malformed manifest";
    for (const auto& e : errors) msg += "\n  " + e;
    fail(ErrorKind::data, msg);
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream f(path, std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write manifest " + path.string());
  f << "path,label,center_x,center_y\n";
  for (const auto& r : m.rows) {
    f << r.path << ',' << r.label.value_or("") << ',';
    if (r.center_x) f << *r.center_x;
    f << ',';
    if (r.center_y) f << *r.center_y;
    f << '\n';
  }
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path.string());
}

DatasetManifest gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  require(cfg.n_per_class >= 1, ErrorKind::config, "n_per_class must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  require(!ec, ErrorKind::io, "cannot create " + (out_dir / "images").string() + ": " + ec.message());

  const std::size_t n = static_cast<std::size_t>(cfg.n_per_class) * kNumClasses;
  DatasetManifest m;
  m.rows.resize(n);
  std::vector<nlohmann::json> params(n);
  parallel_for(n, [&](std::size_t i) {
    SynthSample s = generate_sample(cfg, i);
    char name[64];
    std::snprintf(name, sizeof name, "images/%04zu_%s.png", i, s.tented ? "tented_arch" : to_string(s.label));
    write_png(out_dir / name, s.image);
    m.rows[i] = ManifestRow{name, s.tented ? "tented_arch" : to_string(s.label), s.center_x, s.center_y};
    params[i] = std::move(s.params);
  });
  m.generation = {{"config", cfg.to_json()}, {"samples", params}};
  write_manifest(out_dir / "manifest.csv", m);
  std::ofstream side(out_dir / "synth.json", std::ios::trunc);
  require(static_cast<bool>(side), ErrorKind::io, "cannot write " + (out_dir / "synth.json").string());
  side << m.generation.dump(2) << '\n';
  return m;
}

bool LoadedDataset::has_labels() const {
  if (labels.empty()) return false;
  for (const auto& l : labels)
    if (!l) return false;
  return true;
}

LoadedDataset load_dataset(const std::filesystem::path& manifest, bool permissive) {
  const DatasetManifest m = read_manifest(manifest);
  const auto base = manifest.parent_path();
  LoadedDataset ds;
  std::size_t unlabeled = 0;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& row = m.rows[i];
    const std::string where = "row " + std::to_string(i + 2) + " (" + row.path + ")";
    std::filesystem::path p = row.path;
    if (p.is_relative()) p = base / p;
    std::optional<PatternClass> label;
    if (row.label) {
      label = parse_pattern_class(*row.label);
      if (!label) {
        ds.errors.push_back(where + ": unknown label '" + *row.label + "'");
        continue;
      }
    } else {
      ++unlabeled;
    }
    GrayImage img;
    try {
      img = read_png(p);
    } catch (const Error& e) {
      ds.errors.push_back(where + ": " + e.what());
      continue;
    }
    ds.center_x.push_back(row.center_x.value_or(img.width / 2));
    ds.center_y.push_back(row.center_y.value_or(img.height / 2));
    ds.paths.push_back(row.path);
    ds.labels.push_back(label);
    ds.images.push_back(std::move(img));
  }
  if (!ds.errors.empty() && !permissive) {
    std::string msg = manifest.string() + ": " + std::to_string(ds.errors.size()) + " row(s) failed to load";
    for (const auto& e : ds.errors) msg += "\n  " + e;
    fail(ErrorKind::data, msg);
  }
  if (unlabeled > 0)
    ds.warnings.push_back(std::to_string(unlabeled) + " row(s) have no label; evaluation is disabled");
  return ds;
}

}  // namespace pf
