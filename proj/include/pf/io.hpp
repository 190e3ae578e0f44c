#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pf/cluster.hpp"
#include "pf/consensus.hpp"
#include "pf/evaluate.hpp"

namespace pf {

namespace fs = std::filesystem;

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);
nlohmann::json read_json(const fs::path& path);
/// Two-space indented, trailing newline.
void write_json(const fs::path& path, const nlohmann::json& j);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
std::vector<std::string> split_csv_line(std::string_view line);
/// Rows of a CSV file after the header; the header must equal `header` exactly
/// when given, otherwise it is returned through `header_out`.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header,
                                               std::vector<std::string>* header_out = nullptr);

/// Latent rows keyed by sample id.
struct LatentTable {
  std::vector<std::string> ids;
  LatentMatrix values;
  nlohmann::json meta = nlohmann::json::object();
};

/// Writes `<stem>.pft` (container) and `<stem>.csv` (sample_id,f0,...).
void write_latents(const fs::path& stem, const LatentTable& t);
/// Reads a `.pft` latent container.
LatentTable read_latents(const fs::path& path);

/// epoch,loss with 1-based epochs.
void write_loss_curve(const fs::path& path, const std::vector<double>& loss);

/// `<stem>.csv` (sample_id,cluster) and `<stem>.json` {clusterer, params, objective,
/// seed, standardized, k}.
void write_assignment(const fs::path& stem, const std::vector<std::string>& ids, const ClusterAssignment& a,
                      std::uint64_t seed, bool standardized);
ClusterAssignment read_assignment(const fs::path& stem, std::vector<std::string>* ids = nullptr);

/// `<stem>.csv` (sample_id,consensus_label,status) and `<stem>.json` summary.
void write_consensus(const fs::path& stem, const std::vector<std::string>& ids, const ConsensusResult& c);
ConsensusResult read_consensus(const fs::path& stem, std::vector<std::string>* ids = nullptr);

/// Rows are true classes, columns mapped clusters, first column the class name.
void write_confusion(const fs::path& path, const ConfusionMatrix& cm);

/// sample_id,x,y,label,status
void write_embedding(const fs::path& path, const std::vector<std::string>& ids, const Tensor<double>& xy,
                     const std::vector<std::string>& labels, const std::vector<std::string>& status);

}  // namespace pf
