#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <openssl/opensslv.h>
#include <png.h>

#include "pf/cli.hpp"
#include "pf/cluster.hpp"
#include "pf/consensus.hpp"
#include "pf/embed.hpp"
#include "pf/evaluate.hpp"
#include "pf/io.hpp"
#include "pf/model.hpp"
#include "pf/parallel.hpp"
#include "pf/preprocess.hpp"
#include "pf/synth.hpp"

#ifndef PF_VERSION
#define PF_VERSION "0.0.0"
#endif

namespace pf::cli {

using nlohmann::json;

namespace {

void note(const std::string& msg) { std::cerr << "pf: " << msg << '\n'; }

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void require_input(const fs::path& p, const char* what) {
  require(!p.empty(), ErrorKind::config, std::string(what) + " is required");
  require(fs::exists(p), ErrorKind::data, std::string("missing ") + what + ": " + p.string());
}

std::string path_str(const fs::path& p) { return p.generic_string(); }

bool looks_like_manifest(const fs::path& p) {
  if (p.extension() != ".csv") return false;
  std::ifstream f(p);
  std::string first;
  std::getline(f, first);
  return first.rfind("path", 0) == 0;
}

std::vector<std::string> class_names() {
  std::vector<std::string> c;
  for (int i = 0; i < kNumClasses; ++i) c.emplace_back(to_string(static_cast<PatternClass>(i)));
  return c;
}

const std::set<std::string>& known_clusterers() {
  static const std::set<std::string> names{"kmeans", "agg", "birch"};
  return names;
}

void check_committee(const std::vector<std::string>& committee) {
  require(!committee.empty(), ErrorKind::config, "committee is empty");
  std::set<std::string> seen;
  for (const auto& name : committee) {
    require(known_clusterers().count(name) == 1, ErrorKind::config,
            "unknown clusterer '" + name + "' (expected kmeans, agg or birch)");
    require(seen.insert(name).second, ErrorKind::config, "clusterer '" + name + "' listed twice");
  }
}

std::vector<std::string> committee_of(const fs::path& clusters) {
  require_input(clusters / "config.json", "cluster stage config");
  return read_json(clusters / "config.json").at("options").at("committee").get<std::vector<std::string>>();
}

std::string display_name(const std::string& clusterer) {
  if (clusterer == "agg") return "AGG";
  if (clusterer == "birch") return "BIRCH";
  return clusterer;
}

void write_config(const fs::path& dir, const std::string& command, const json& options,
                  const std::vector<fs::path>& inputs) {
  write_json(dir / "config.json", config_snapshot(command, options, inputs));
}

// Ids must match sample for sample; anything else means artifacts from different runs.
void check_ids(const std::vector<std::string>& expected, const std::vector<std::string>& got, const fs::path& where) {
  require(expected == got, ErrorKind::data,
          "sample ids in " + where.string() + " do not match the latents (" + std::to_string(got.size()) + " vs " +
              std::to_string(expected.size()) + " rows)");
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::contract:
      return kExitUsage;
    case ErrorKind::numeric:
      return kExitNumeric;
    case ErrorKind::data:
    case ErrorKind::io:
    case ErrorKind::dimension:
      return kExitData;
  }
  return kExitData;
}

Scale desk_scale() noexcept { return {100, 128, 0.045, 128, 200, 0}; }
// Synthetic images at 256 keep the desk ridge count per crop by halving the frequency.
Scale paper_scale() noexcept { return {250, 256, 0.0225, 256, 1000, 200}; }

json hash_input(const fs::path& path) {
  require(fs::exists(path), ErrorKind::data, "missing input: " + path.string());
  json j = {{"path", path_str(path)}};
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    json f = json::object();
    for (const auto& p : files) f[path_str(fs::relative(p, path))] = sha256_file(p);
    j["files"] = std::move(f);
    return j;
  }
  j["sha256"] = sha256_file(path);
  if (looks_like_manifest(path)) {
    const DatasetManifest m = read_manifest(path);
    std::string digests;
    for (const auto& row : m.rows) {
      fs::path p = row.path;
      if (p.is_relative()) p = path.parent_path() / p;
      digests += fs::exists(p) ? sha256_file(p) : std::string(64, '-');
    }
    j["images"] = m.rows.size();
    j["images_sha256"] = sha256_hex(digests);
  }
  return j;
}

json config_snapshot(const std::string& command, const json& options, const std::vector<fs::path>& inputs) {
  json in = json::array();
  for (const auto& p : inputs) in.push_back(hash_input(p));
  return {{"command", command},
          {"version", PF_VERSION},
          {"libraries",
           {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"libpng", PNG_LIBPNG_VER_STRING},
            {"openssl", OPENSSL_VERSION_TEXT},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
          {"options", options},
          {"inputs", in}};
}

void cmd_synth(const SynthOptions& o) {
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  SynthConfig cfg;
  cfg.seed = o.seed;
  cfg.n_per_class = o.n_per_class;
  cfg.size = o.size;
  cfg.frequency = o.frequency;
  const DatasetManifest m = gen_dataset(cfg, o.out);
  write_config(o.out, "synth", {{"out", path_str(o.out)}, {"synth", cfg.to_json()}}, {});
  note("synth: " + std::to_string(m.rows.size()) + " images in " + o.out.string());
}

void cmd_preprocess(const PreprocessOptions& o) {
  require_input(o.manifest, "manifest");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  require(o.size >= 16, ErrorKind::config, "--size must be >= 16");
  require(o.crop >= 0, ErrorKind::config, "--crop must be >= 0");
  const LoadedDataset ds = load_dataset(o.manifest, o.permissive);
  for (const auto& w : ds.warnings) note("warning: " + w);
  for (const auto& e : ds.errors) note("skipped " + e);
  require(ds.size() > 0, ErrorKind::data, "no images loaded from " + o.manifest.string());

  PreprocessConfig pc;
  pc.output_size = o.size;
  fs::create_directories(o.out / "images");
  DatasetManifest out;
  out.rows.resize(ds.size());
  std::vector<int> crops(ds.size());
  parallel_for(ds.size(), [&](std::size_t i) {
    const GrayImage& img = ds.images[i];
    const int side = std::min(img.width, img.height);
    crops[i] = o.crop > 0 ? std::min(o.crop, side) : std::max(1, side * 200 / 256);
    const GrayImage p = preprocess_pipeline(img, CropSpec{ds.center_x[i], ds.center_y[i], crops[i]}, pc);
    char name[512];
    std::snprintf(name, sizeof name, "images/%04zu_%s.png", i, fs::path(ds.paths[i]).stem().string().c_str());
    write_png(o.out / name, p);
    std::optional<std::string> label;
    if (ds.labels[i]) label = to_string(*ds.labels[i]);
    out.rows[i] = ManifestRow{name, label, o.size / 2, o.size / 2};
  });
  out.generation = json::object();
  write_manifest(o.out / "manifest.csv", out);
  write_config(o.out, "preprocess",
               {{"manifest", path_str(o.manifest)},
                {"out", path_str(o.out)},
                {"size", o.size},
                {"crop", o.crop},
                {"crop_rule", o.crop > 0 ? "fixed" : "200/256 of the shorter side"},
                {"permissive", o.permissive},
                {"sigma", pc.sigma},
                {"window", pc.window},
                {"offset", pc.offset},
                {"skipped", ds.errors}},
               {o.manifest});
  note("preprocess: " + std::to_string(ds.size()) + " images -> " + std::to_string(o.size) + "x" +
       std::to_string(o.size));
}

void cmd_train(const TrainOptions& o) {
  require(o.variant != "resize", ErrorKind::config,
          "the resize baseline has nothing to train; run `pf encode --variant resize`");
  const Variant v = parse_variant(o.variant);
  require(!o.unit_ball || v == Variant::b, ErrorKind::config, "--unit-ball applies to variant b only");
  require(o.latent >= 1, ErrorKind::config, "--latent must be >= 1");
  require_input(o.manifest, "manifest");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.lr = o.lr;
  tc.seed = o.seed;
  tc.checkpoint_every = o.checkpoint_every;
  if (o.checkpoint_every > 0) tc.checkpoint_dir = o.out / "checkpoints";
  tc.validate();

  const LoadedDataset ds = load_dataset(o.manifest);
  require(ds.size() > 0, ErrorKind::data, "no images in " + o.manifest.string());
  const int side = ds.images[0].width;
  for (std::size_t i = 0; i < ds.size(); ++i)
    require(ds.images[i].width == side && ds.images[i].height == side, ErrorKind::data,
            ds.paths[i] + " is " + std::to_string(ds.images[i].width) + "x" + std::to_string(ds.images[i].height) +
                "; training needs square images of one size (run `pf preprocess` first)");

  Model<float> m = v == Variant::aytekin ? build_aytekin<float>(o.seed, side) : build_ccae<float>(v, o.latent, o.seed, side);
  if (o.unit_ball) m.norm = RowNorm::unit_ball;
  if (v == Variant::aytekin && o.latent != 128) note("--latent is ignored for the aytekin model (fixed 2048)");
  const Tensor<float> data = images_to_tensor<float>(ds.images);
  const int every = std::max(1, o.epochs / 10);
  note("train: variant " + o.variant + ", " + std::to_string(ds.size()) + " images, " +
       std::to_string(parameter_count(m.arch)) + " parameters");
  const TrainResult r = train(m, data, tc, [&](int epoch, double loss) {
    if (epoch == 1 || epoch % every == 0 || epoch == o.epochs)
      note("epoch " + std::to_string(epoch) + "/" + std::to_string(o.epochs) + " loss " + format_double(loss));
  });
  if (r.skipped_steps > 0) note("warning: " + std::to_string(r.skipped_steps) + " batches skipped by the latent guard");

  fs::create_directories(o.out);
  save_checkpoint(m, o.out / "model.pft", {{"manifest", path_str(o.manifest)}});
  write_loss_curve(o.out / "loss.csv", r.loss_curve);
  write_json(o.out / "train.json", {{"variant", o.variant},
                                    {"parameters", parameter_count(m.arch)},
                                    {"first_loss", r.loss_curve.front()},
                                    {"final_loss", r.loss_curve.back()},
                                    {"skipped_steps", r.skipped_steps},
                                    {"checkpoints", [&] {
                                       std::vector<std::string> p;
                                       for (const auto& c : r.checkpoints) p.push_back(path_str(c));
                                       return p;
                                     }()}});
  write_config(o.out, "train",
               {{"manifest", path_str(o.manifest)},
                {"out", path_str(o.out)},
                {"variant", o.variant},
                {"latent", o.latent},
                {"unit_ball", o.unit_ball},
                {"train", tc.to_json()},
                {"architecture", m.arch.to_json()}},
               {o.manifest});
}

void cmd_encode(const EncodeOptions& o) {
  require_input(o.manifest, "manifest");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  const bool resize = o.variant == "resize";
  const LoadedDataset ds = load_dataset(o.manifest);
  require(ds.size() > 0, ErrorKind::data, "no images in " + o.manifest.string());

  LatentTable t;
  t.ids = ds.paths;
  std::string variant;
  std::vector<fs::path> inputs{o.manifest};
  json options = {{"manifest", path_str(o.manifest)}, {"out", path_str(o.out)}};
  if (resize) {
    t.values = resize_baseline(ds.images, o.resize_side);
    variant = "resize";
    options["resize_side"] = o.resize_side;
  } else {
    require_input(o.model, "model (--model, or --variant resize)");
    Model<float> m = load_checkpoint<float>(o.model);
    variant = to_string(m.variant);
    if (m.variant == Variant::b && m.norm == RowNorm::unit_ball) variant += "_unit_ball";
    require(o.variant.empty() || parse_variant(o.variant) == m.variant, ErrorKind::config,
            "--variant " + o.variant + " does not match the model's variant " + to_string(m.variant));
    for (std::size_t i = 0; i < ds.size(); ++i)
      require(ds.images[i].width == m.arch.input_size && ds.images[i].height == m.arch.input_size,
              ErrorKind::dimension,
              ds.paths[i] + " does not match the model input " + std::to_string(m.arch.input_size) + "x" +
                  std::to_string(m.arch.input_size));
    const Tensor<float> f = latent_features(m, images_to_tensor<float>(ds.images));
    t.values = Tensor<double>(f.shape());
    for (std::size_t i = 0; i < f.size(); ++i) t.values[i] = static_cast<double>(f[i]);
    inputs.push_back(o.model);
    options["model"] = path_str(o.model);
  }
  json labels = json::array();
  for (const auto& l : ds.labels) labels.push_back(l ? json(to_string(*l)) : json(nullptr));
  t.meta = {{"variant", variant}, {"labels", labels}, {"manifest", path_str(o.manifest)}};
  fs::create_directories(o.out);
  write_latents(o.out / "latents", t);
  options["variant"] = variant;
  write_config(o.out, "encode", options, inputs);
  note("encode: " + std::to_string(t.values.dim(0)) + " x " + std::to_string(t.values.dim(1)) + " features (" +
       variant + ")");
}

void cmd_cluster(const ClusterOptions& o) {
  check_committee(o.committee);
  require_input(o.latents, "latents");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  const Linkage link = parse_linkage(o.linkage);
  const LatentTable t = read_latents(o.latents);
  const LatentMatrix f = o.standardize ? standardize(t.values) : t.values;
  fs::create_directories(o.out);
  for (const auto& name : o.committee) {
    ClusterAssignment a = name == "kmeans" ? kmeans(f, o.k, o.seed)
                          : name == "agg"  ? agglomerative(f, o.k, link)
                                           : birch(f, o.k, 0.0, 50, link);
    write_assignment(o.out / name, t.ids, a, o.seed, o.standardize);
  }
  write_config(o.out, "cluster",
               {{"latents", path_str(o.latents)},
                {"out", path_str(o.out)},
                {"committee", o.committee},
                {"k", o.k},
                {"seed", o.seed},
                {"standardize", o.standardize},
                {"linkage", o.linkage}},
               {o.latents});
}

void cmd_consensus(const ConsensusOptions& o) {
  require_input(o.clusters, "clusters directory");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  const std::vector<std::string> committee = o.committee.empty() ? committee_of(o.clusters) : o.committee;
  check_committee(committee);
  std::vector<ClusterAssignment> members;
  std::vector<std::string> ids;
  for (const auto& name : committee) {
    std::vector<std::string> member_ids;
    members.push_back(read_assignment(o.clusters / name, &member_ids));
    if (ids.empty()) {
      ids = std::move(member_ids);
    } else {
      check_ids(ids, member_ids, o.clusters / name);
    }
  }
  const ConsensusResult c = hybrid_cluster(members);
  fs::create_directories(o.out);
  write_consensus(o.out / "consensus", ids, c);
  write_config(o.out, "consensus", {{"clusters", path_str(o.clusters)}, {"out", path_str(o.out)}, {"committee", committee}},
               {o.clusters});
  note("consensus: " + std::to_string(c.accepted_count()) + " of " + std::to_string(c.size()) +
       " accepted, reject rate " + pct(c.reject_rate) + "%");
}

void cmd_evaluate(const EvaluateOptions& o) {
  require_input(o.latents, "latents");
  require_input(o.clusters, "clusters directory");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  const LatentTable t = read_latents(o.latents);
  const std::size_t M = t.ids.size();

  std::vector<std::optional<std::string>> labels(M);
  if (!o.manifest.empty()) {
    require_input(o.manifest, "manifest");
    std::map<std::string, std::optional<std::string>> by_path;
    for (const auto& row : read_manifest(o.manifest).rows) by_path[row.path] = row.label;
    for (std::size_t i = 0; i < M; ++i) {
      const auto it = by_path.find(t.ids[i]);
      if (it != by_path.end()) labels[i] = it->second;
    }
  } else if (t.meta.contains("labels") && t.meta["labels"].is_array() && t.meta["labels"].size() == M) {
    for (std::size_t i = 0; i < M; ++i)
      if (t.meta["labels"][i].is_string()) labels[i] = t.meta["labels"][i].get<std::string>();
  }
  std::size_t missing = 0;
  for (const auto& l : labels) missing += !l || l->empty();
  require(missing == 0, ErrorKind::data,
          "labels required: " + std::to_string(missing) + " of " + std::to_string(M) +
              " samples have no ground-truth label (supply a labeled --manifest)");
  std::vector<int> truth(M);
  for (std::size_t i = 0; i < M; ++i) {
    const auto c = parse_pattern_class(*labels[i]);
    require(c.has_value(), ErrorKind::data, "unknown label '" + *labels[i] + "' for " + t.ids[i]);
    truth[i] = static_cast<int>(*c);
  }

  const auto classes = class_names();
  const std::vector<std::string> committee = committee_of(o.clusters);
  fs::create_directories(o.out);
  json members = json::object();
  std::vector<fs::path> inputs{o.latents, o.clusters};
  for (const auto& name : committee) {
    std::vector<std::string> ids;
    const ClusterAssignment a = read_assignment(o.clusters / name, &ids);
    check_ids(t.ids, ids, o.clusters / name);
    const MetricsReport r = evaluate(a, truth, classes);
    members[name] = r.to_json();
    write_confusion(o.out / ("confusion_" + name + ".csv"), r.confusion);
  }
  json hybrid = nullptr;
  if (!o.consensus.empty()) {
    require_input(o.consensus, "consensus directory");
    std::vector<std::string> ids;
    const ConsensusResult c = read_consensus(o.consensus / "consensus", &ids);
    check_ids(t.ids, ids, o.consensus);
    const MetricsReport r = evaluate(c, truth, classes);
    hybrid = r.to_json();
    write_confusion(o.out / "confusion_hybrid.csv", r.confusion);
    inputs.push_back(o.consensus);
  }
  write_json(o.out / "metrics.json", {{"variant", t.meta.value("variant", std::string("unknown"))},
                                      {"samples", M},
                                      {"committee", committee},
                                      {"members", members},
                                      {"hybrid", hybrid}});
  json options = {{"latents", path_str(o.latents)}, {"clusters", path_str(o.clusters)}, {"out", path_str(o.out)}};
  if (!o.consensus.empty()) options["consensus"] = path_str(o.consensus);
  if (!o.manifest.empty()) {
    options["manifest"] = path_str(o.manifest);
    inputs.push_back(o.manifest);
  }
  write_config(o.out, "evaluate", options, inputs);
}

void cmd_embed(const EmbedOptions& o) {
  require_input(o.latents, "latents");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  const EmbedMethod method = parse_embed_method(o.method);
  const LatentTable t = read_latents(o.latents);
  const std::size_t M = t.ids.size();
  const Tensor<double> xy = embed_2d(t.values, method, o.seed);

  std::vector<int> group(M, -1);
  std::vector<bool> accepted(M, true);
  std::vector<std::string> names, label(M), status(M, "");
  std::vector<fs::path> inputs{o.latents};
  if (!o.consensus.empty()) {
    require_input(o.consensus, "consensus directory");
    std::vector<std::string> ids;
    const ConsensusResult c = read_consensus(o.consensus / "consensus", &ids);
    check_ids(t.ids, ids, o.consensus);
    for (int k = 0; k < c.k; ++k) names.push_back("cluster " + std::to_string(k));
    for (std::size_t i = 0; i < M; ++i) {
      group[i] = c.labels[i];
      accepted[i] = c.accepted(i);
      label[i] = std::to_string(c.labels[i]);
      status[i] = accepted[i] ? "accepted" : "rejected";
    }
    inputs.push_back(o.consensus);
  } else {
    names = class_names();
    const json& l = t.meta.contains("labels") ? t.meta["labels"] : json::array();
    for (std::size_t i = 0; i < M && i < l.size(); ++i) {
      if (!l[i].is_string()) continue;
      label[i] = l[i].get<std::string>();
      if (const auto c = parse_pattern_class(label[i])) group[i] = static_cast<int>(*c);
    }
  }
  fs::create_directories(o.out);
  write_embedding(o.out / "embedding.csv", t.ids, xy, label, status);
  write_svg_scatter(o.out / "scatter.svg", xy, group, accepted, names,
                    t.meta.value("variant", std::string("latent")) + " features, " + o.method);
  json options = {{"latents", path_str(o.latents)}, {"out", path_str(o.out)}, {"method", o.method}, {"seed", o.seed}};
  if (!o.consensus.empty()) options["consensus"] = path_str(o.consensus);
  write_config(o.out, "embed", options, inputs);
}

void cmd_report(const ReportOptions& o) {
  require(!o.evaluations.empty(), ErrorKind::config, "report needs at least one --eval directory");
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  struct Row {
    std::string variant, clusterer;
    double a, p, r, f1, rr;
  };
  std::vector<Row> rows;
  std::vector<fs::path> inputs;
  json sources = json::array();
  for (const auto& dir : o.evaluations) {
    require_input(dir / "metrics.json", "evaluation metrics");
    const json j = read_json(dir / "metrics.json");
    const std::string variant = j.at("variant").get<std::string>();
    auto add = [&](const std::string& name, const json& m) {
      rows.push_back({variant, name, m.at("a_all").get<double>(), m.at("p_average").get<double>(),
                      m.at("r_average").get<double>(), m.at("f1_average").get<double>(),
                      m.at("reject_rate").get<double>()});
    };
    for (const auto& name : j.at("committee")) add(display_name(name.get<std::string>()), j.at("members").at(name));
    if (!j.at("hybrid").is_null()) add("hybrid", j.at("hybrid"));
    inputs.push_back(dir / "metrics.json");
    sources.push_back(path_str(dir));
  }

  std::ostringstream csv, txt;
  csv << "variant,clusterer,A_all,P_average,R_average,F1_average,R.r\n";
  for (const auto& r : rows)
    csv << r.variant << ',' << r.clusterer << ',' << format_double(r.a) << ',' << format_double(r.p) << ','
        << format_double(r.r) << ',' << format_double(r.f1) << ',' << format_double(r.rr) << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-9s %8s %10s %10s %11s %7s\n", "variant", "clusterer", "A_all(%)",
                "P_avg(%)", "R_avg(%)", "F1_avg(%)", "R.r(%)");
  txt << line << std::string(73, '-') << '\n';
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12s %-9s %8s %10s %10s %11s %7s\n", r.variant.c_str(), r.clusterer.c_str(),
                  pct(r.a).c_str(), pct(r.p).c_str(), pct(r.r).c_str(), pct(r.f1).c_str(), pct(r.rr).c_str());
    txt << line;
  }
  fs::create_directories(o.out);
  write_text(o.out / "report.csv", csv.str());
  write_text(o.out / "report.txt", txt.str());
  write_config(o.out, "report", {{"evaluations", sources}, {"out", path_str(o.out)}}, inputs);
  std::cout << txt.str();
}

void cmd_run(const RunOptions& o) {
  require(!o.out.empty(), ErrorKind::config, "--out is required");
  require(!o.variants.empty(), ErrorKind::config, "no variants given");
  static const std::set<std::string> known{"a", "b", "plain", "aytekin", "resize"};
  std::set<std::string> seen;
  for (const auto& v : o.variants) {
    require(known.count(v) == 1, ErrorKind::config, "unknown variant '" + v + "'");
    require(seen.insert(v).second, ErrorKind::config, "variant '" + v + "' listed twice");
  }
  check_committee(o.cluster.committee);
  require(o.embed == "none" || o.embed == "pca" || o.embed == "tsne", ErrorKind::config,
          "--embed must be pca, tsne or none");

  fs::path manifest = o.manifest;
  if (manifest.empty()) {
    SynthOptions s = o.synth;
    s.out = o.out / "data";
    cmd_synth(s);
    manifest = s.out / "manifest.csv";
  } else {
    require_input(manifest, "manifest");
  }
  PreprocessOptions p = o.preprocess;
  p.manifest = manifest;
  p.out = o.out / "prep";
  cmd_preprocess(p);
  const fs::path prepped = p.out / "manifest.csv";
  const LoadedDataset probe = load_dataset(prepped);
  const bool labeled = probe.has_labels();
  if (!labeled) note("warning: the dataset is not fully labeled; evaluate and report are skipped");

  ReportOptions report;
  report.out = o.out / "report";
  for (const auto& v : o.variants) {
    const fs::path dir = o.out / v;
    EncodeOptions e;
    e.manifest = prepped;
    e.out = dir / "latents";
    if (v == "resize") {
      e.variant = "resize";
    } else {
      TrainOptions t = o.train;
      t.variant = v;
      t.unit_ball = o.train.unit_ball && v == "b";
      t.manifest = prepped;
      t.out = dir / "model";
      cmd_train(t);
      e.model = t.out / "model.pft";
    }
    cmd_encode(e);
    ClusterOptions c = o.cluster;
    c.latents = e.out / "latents.pft";
    c.out = dir / "clusters";
    cmd_cluster(c);
    ConsensusOptions cs;
    cs.clusters = c.out;
    cs.out = dir / "consensus";
    cmd_consensus(cs);
    if (labeled) {
      EvaluateOptions ev;
      ev.latents = c.latents;
      ev.clusters = c.out;
      ev.consensus = cs.out;
      ev.out = dir / "eval";
      cmd_evaluate(ev);
      report.evaluations.push_back(ev.out);
    }
    if (o.embed != "none") {
      EmbedOptions em;
      em.latents = c.latents;
      em.consensus = cs.out;
      em.out = dir / "embed";
      em.method = o.embed;
      em.seed = o.cluster.seed;
      cmd_embed(em);
    }
  }
  if (!report.evaluations.empty()) cmd_report(report);

  json synth = o.manifest.empty() ? json{{"n_per_class", o.synth.n_per_class},
                                         {"size", o.synth.size},
                                         {"frequency", o.synth.frequency}}
                                  : json(nullptr);
  write_config(o.out, "run",
               {{"out", path_str(o.out)},
                {"manifest", o.manifest.empty() ? json(nullptr) : json(path_str(o.manifest))},
                {"variants", o.variants},
                {"seed", o.cluster.seed},
                {"synth", synth},
                {"preprocess", {{"size", o.preprocess.size}, {"crop", o.preprocess.crop}}},
                {"train",
                 {{"epochs", o.train.epochs},
                  {"lr", o.train.lr},
                  {"batch_size", o.train.batch_size},
                  {"latent", o.train.latent},
                  {"unit_ball", o.train.unit_ball}}},
                {"cluster",
                 {{"committee", o.cluster.committee},
                  {"k", o.cluster.k},
                  {"standardize", o.cluster.standardize},
                  {"linkage", o.cluster.linkage}}},
                {"embed", o.embed}},
               {manifest});
}

}  // namespace pf::cli
