#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pf/error.hpp"

namespace pf::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// config and contract errors are usage errors; data, io and dimension errors are
/// data errors; numeric errors keep their own status.
int exit_code(ErrorKind kind) noexcept;

/// Defaults that --paper-scale switches between.
struct Scale {
  int n_per_class;
  int synth_size;
  double frequency;  // synthetic ridge frequency, cycles per pixel
  int image_size;    // preprocessed side = model input
  int epochs;
  int crop;          // 0: 200/256 of each image's shorter side
};
Scale desk_scale() noexcept;
Scale paper_scale() noexcept;

/// The self-describing record written as config.json in every artifact directory:
/// command, tool and library versions, options, and SHA-256 of every input.
nlohmann::json config_snapshot(const std::string& command, const nlohmann::json& options,
                               const std::vector<fs::path>& inputs);
/// A file hashes to {path, sha256}. A manifest also gets images_sha256, the digest
/// of its images' digests in row order. A directory hashes every regular file in it.
nlohmann::json hash_input(const fs::path& path);

struct SynthOptions {
  fs::path out;
  std::uint64_t seed = 0;
  int n_per_class = 100;
  int size = 128;
  double frequency = 0.045;
};

struct PreprocessOptions {
  fs::path manifest;
  fs::path out;
  int size = 128;
  int crop = 0;
  bool permissive = false;
};

struct TrainOptions {
  fs::path manifest;
  fs::path out;
  std::string variant = "a";
  int epochs = 200;
  double lr = 3e-4;
  int batch_size = 32;
  int latent = 128;
  std::uint64_t seed = 0;
  bool unit_ball = false;
  int checkpoint_every = 0;
};

struct EncodeOptions {
  fs::path manifest;
  fs::path model;  // unused for the resize baseline
  fs::path out;
  std::string variant;  // "resize" or empty (taken from the model)
  int resize_side = 32;
};

struct ClusterOptions {
  fs::path latents;
  fs::path out;
  std::vector<std::string> committee{"kmeans", "agg", "birch"};
  int k = 4;
  std::uint64_t seed = 0;
  bool standardize = false;
  std::string linkage = "ward";  // agg and BIRCH's global phase
};

struct ConsensusOptions {
  fs::path clusters;
  fs::path out;
  std::vector<std::string> committee;  // empty: the cluster stage's committee
};

struct EvaluateOptions {
  fs::path latents;
  fs::path clusters;
  fs::path consensus;  // optional
  fs::path manifest;   // optional label source, else the latents' labels
  fs::path out;
};

struct EmbedOptions {
  fs::path latents;
  fs::path consensus;  // optional: colors and rejected markers
  fs::path out;
  std::string method = "pca";
  std::uint64_t seed = 0;
};

struct ReportOptions {
  std::vector<fs::path> evaluations;
  fs::path out;
};

struct RunOptions {
  fs::path out;
  fs::path manifest;  // empty: generate a synthetic dataset
  std::vector<std::string> variants{"a"};
  SynthOptions synth;
  PreprocessOptions preprocess;
  TrainOptions train;
  ClusterOptions cluster;
  std::string embed = "pca";  // "none" skips the scatter
};

void cmd_synth(const SynthOptions& o);
void cmd_preprocess(const PreprocessOptions& o);
void cmd_train(const TrainOptions& o);
void cmd_encode(const EncodeOptions& o);
void cmd_cluster(const ClusterOptions& o);
void cmd_consensus(const ConsensusOptions& o);
/// Throws ErrorKind::data ("labels required") when any sample lacks a label.
void cmd_evaluate(const EvaluateOptions& o);
void cmd_embed(const EmbedOptions& o);
void cmd_report(const ReportOptions& o);
/// The whole chain under one seed: synth (unless a manifest is given), preprocess,
/// then per variant train, encode, cluster, consensus, evaluate, embed; then report.
void cmd_run(const RunOptions& o);

/// Parses argv and runs one subcommand. Errors go to stderr; returns the exit status.
int run_main(int argc, const char* const* argv);

}  // namespace pf::cli
