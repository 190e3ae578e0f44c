#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pf/tensor.hpp"

namespace pf {

/// One named tensor in a container. Values are always stored as float64.
struct TensorRecord {
  std::string id;
  Shape shape;
  std::vector<double> values;
};

/// Flat binary tensor container (checkpoints, latent matrices). Layout:
///   bytes 0..7   magic "PFTENSOR"
///   bytes 8..15  header length H, uint64 little-endian
///   next H bytes JSON header, space-padded to a multiple of 8
///   remainder    float64 little-endian data; each tensor at header "offset"
///                (bytes from the start of the data section)
struct TensorContainer {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  const TensorRecord& find(const std::string& id) const;
};

void write_container(const std::filesystem::path& path, const TensorContainer& c);
TensorContainer read_container(const std::filesystem::path& path);

// In-memory forms, used by the file functions and by tests.
std::string encode_container(const TensorContainer& c);
TensorContainer decode_container(const std::string& bytes);

}  // namespace pf
