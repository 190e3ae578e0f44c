#include "pf/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "pf/checkpoint.hpp"

namespace pf {

namespace {

std::string with_ext(const fs::path& stem, const char* ext) { return stem.string() + ext; }

void check_ids(const std::vector<std::string>& ids, std::size_t rows, const char* what) {
  require(ids.size() == rows, ErrorKind::dimension,
          std::string(what) + ": " + std::to_string(ids.size()) + " ids for " + std::to_string(rows) + " rows");
  for (const auto& id : ids)
    require(id.find_first_of(",\n\r") == std::string::npos, ErrorKind::data,
            std::string(what) + ": sample id '" + id + "' contains a separator");
}

int parse_int(const std::string& s, const fs::path& path, std::size_t row) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(), ErrorKind::data,
          path.string() + ": row " + std::to_string(row) + ": '" + s + "' is not an integer");
  return v;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorKind::contract,
          "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::data, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header,
                                               std::vector<std::string>* header_out) {
  std::istringstream in(read_text(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::data, path.string() + ": empty CSV");
  const auto head = split_csv_line(line);
  if (!header.empty())
    require(head == header, ErrorKind::data, path.string() + ": unexpected CSV header '" + line + "'");
  if (header_out) *header_out = head;
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
    require(rows.back().size() == head.size(), ErrorKind::data,
            path.string() + ": row " + std::to_string(n) + " has " + std::to_string(rows.back().size()) +
                " fields, expected " + std::to_string(head.size()));
  }
  return rows;
}

void write_latents(const fs::path& stem, const LatentTable& t) {
  require(t.values.rank() == 2, ErrorKind::dimension, "latent table must be [M,N]");
  const std::size_t M = t.values.dim(0), N = t.values.dim(1);
  check_ids(t.ids, M, "latents");
  TensorContainer c;
  c.meta = t.meta;
  c.meta["kind"] = "latents";
  c.meta["ids"] = t.ids;
  c.tensors.push_back({"latents", t.values.shape(), std::vector<double>(t.values.data().begin(), t.values.data().end())});
  write_container(with_ext(stem, ".pft"), c);

  std::string csv = "sample_id";
  for (std::size_t j = 0; j < N; ++j) csv += ",f" + std::to_string(j);
  csv += "\n";
  for (std::size_t i = 0; i < M; ++i) {
    csv += t.ids[i];
    for (std::size_t j = 0; j < N; ++j) csv += "," + format_double(t.values[i * N + j]);
    csv += "\n";
  }
  write_text(with_ext(stem, ".csv"), csv);
}

LatentTable read_latents(const fs::path& path) {
  const TensorContainer c = read_container(path);
  require(c.meta.value("kind", "") == "latents", ErrorKind::data, path.string() + " is not a latent matrix");
  LatentTable t;
  const TensorRecord& r = c.find("latents");
  require(r.shape.size() == 2, ErrorKind::data, path.string() + ": latents must be 2-D");
  t.values = LatentMatrix(r.shape, r.values);
  t.ids = c.meta.at("ids").get<std::vector<std::string>>();
  check_ids(t.ids, r.shape[0], "latents");
  t.meta = c.meta;
  t.meta.erase("ids");
  return t;
}

void write_loss_curve(const fs::path& path, const std::vector<double>& loss) {
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < loss.size(); ++e) csv += std::to_string(e + 1) + "," + format_double(loss[e]) + "\n";
  write_text(path, csv);
}

void write_assignment(const fs::path& stem, const std::vector<std::string>& ids, const ClusterAssignment& a,
                      std::uint64_t seed, bool standardized) {
  a.validate();
  check_ids(ids, a.size(), "assignment");
  std::string csv = "sample_id,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) csv += ids[i] + "," + std::to_string(a.labels[i]) + "\n";
  write_text(with_ext(stem, ".csv"), csv);
  write_json(with_ext(stem, ".json"), {{"clusterer", a.clusterer},
                                        {"params", a.params},
                                        {"objective", a.objective},
                                        {"seed", seed},
                                        {"standardized", standardized},
                                        {"k", a.k}});
}

ClusterAssignment read_assignment(const fs::path& stem, std::vector<std::string>* ids) {
  const fs::path csv = with_ext(stem, ".csv");
  const auto rows = read_csv(csv, {"sample_id", "cluster"});
  const auto side = read_json(with_ext(stem, ".json"));
  ClusterAssignment a;
  try {
    a.clusterer = side.at("clusterer").get<std::string>();
    a.k = side.at("k").get<int>();
    a.objective = side.at("objective").get<double>();
    a.params = side.at("params");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, with_ext(stem, ".json") + ": " + e.what());
  }
  if (ids) ids->clear();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    a.labels.push_back(parse_int(rows[r][1], csv, r + 2));
    if (ids) ids->push_back(rows[r][0]);
  }
  a.validate();
  return a;
}

void write_consensus(const fs::path& stem, const std::vector<std::string>& ids, const ConsensusResult& c) {
  check_ids(ids, c.size(), "consensus");
  std::string csv = "sample_id,consensus_label,status\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    csv += ids[i] + "," + std::to_string(c.labels[i]) + "," + (c.accepted(i) ? "accepted" : "rejected") + "\n";
  write_text(with_ext(stem, ".csv"), csv);
  write_json(with_ext(stem, ".json"), c.summary());
}

ConsensusResult read_consensus(const fs::path& stem, std::vector<std::string>* ids) {
  const fs::path csv = with_ext(stem, ".csv");
  const auto rows = read_csv(csv, {"sample_id", "consensus_label", "status"});
  const auto s = read_json(with_ext(stem, ".json"));
  ConsensusResult c;
  try {
    c.k = s.at("k").get<int>();
    c.reject_rate = s.at("reject_rate").get<double>();
    c.committee = s.at("committee").get<std::vector<std::string>>();
    c.alignments = s.at("alignments").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, with_ext(stem, ".json") + ": " + e.what());
  }
  if (ids) ids->clear();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int label = parse_int(rows[r][1], csv, r + 2);
    const bool accepted = rows[r][2] == "accepted";
    require(accepted || rows[r][2] == "rejected", ErrorKind::data,
            csv.string() + ": row " + std::to_string(r + 2) + ": unknown status '" + rows[r][2] + "'");
    require(accepted == (label >= 0) && label < c.k, ErrorKind::data,
            csv.string() + ": row " + std::to_string(r + 2) + ": label and status disagree");
    c.labels.push_back(label);
    if (ids) ids->push_back(rows[r][0]);
  }
  return c;
}

void write_confusion(const fs::path& path, const ConfusionMatrix& cm) {
  cm.validate();
  std::string csv = "class";
  for (const auto& name : cm.classes) csv += "," + name;
  csv += "\n";
  for (std::size_t i = 0; i < cm.k(); ++i) {
    csv += cm.classes[i];
    for (long v : cm.counts[i]) csv += "," + std::to_string(v);
    csv += "\n";
  }
  write_text(path, csv);
}

void write_embedding(const fs::path& path, const std::vector<std::string>& ids, const Tensor<double>& xy,
                     const std::vector<std::string>& labels, const std::vector<std::string>& status) {
  require(xy.rank() == 2 && xy.dim(1) == 2, ErrorKind::dimension, "embedding must be [M,2]");
  check_ids(ids, xy.dim(0), "embedding");
  require(labels.size() == ids.size() && status.size() == ids.size(), ErrorKind::dimension,
          "embedding: one label and status per sample");
  std::string csv = "sample_id,x,y,label,status\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    csv += ids[i] + "," + format_double(xy[2 * i]) + "," + format_double(xy[2 * i + 1]) + "," + labels[i] + "," +
           status[i] + "\n";
  write_text(path, csv);
}

}  // namespace pf
