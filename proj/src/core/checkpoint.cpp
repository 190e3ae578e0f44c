#include "pf/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pf {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'T', 'E', 'N', 'S', 'O', 'R'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

const TensorRecord& TensorContainer::find(const std::string& id) const {
  for (const auto& t : tensors)
    if (t.id == id) return t;
  fail(ErrorKind::data, "tensor container has no entry '" + id + "'");
}

std::string encode_container(const TensorContainer& c) {
  nlohmann::json header;
  header["format"] = "pf-tensor-container";
  header["version"] = 1;
  header["dtype"] = "float64";
  header["byte_order"] = "little";
  header["meta"] = c.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    require(t.values.size() == shape_size(t.shape), ErrorKind::dimension,
            "tensor '" + t.id + "' has " + std::to_string(t.values.size()) + " values for shape " + shape_string(t.shape));
    header["tensors"].push_back({{"id", t.id}, {"shape", t.shape}, {"offset", offset}});
    offset += 8 * t.values.size();
  }
  std::string text = header.dump();
  while (text.size() % 8) text.push_back(' ');

  std::string out(kMagic, 8);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& t : c.tensors)
    for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

TensorContainer decode_container(const std::string& bytes) {
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 8) == 0, ErrorKind::data,
          "not a tensor container (bad magic)");
  const std::uint64_t hlen = get_u64(bytes.data() + 8);
  require(16 + hlen <= bytes.size(), ErrorKind::data, "tensor container header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(hlen));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("tensor container header: ") + e.what());
  }
  require(header.value("dtype", "") == "float64", ErrorKind::data, "tensor container dtype must be float64");
  const std::size_t data_start = 16 + hlen;
  TensorContainer c;
  c.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    TensorRecord t;
    t.id = entry.at("id").get<std::string>();
    t.shape = entry.at("shape").get<Shape>();
    const std::uint64_t off = entry.at("offset").get<std::uint64_t>();
    const std::size_t n = shape_size(t.shape);
    require(data_start + off + 8 * n <= bytes.size(), ErrorKind::data, "tensor '" + t.id + "' data truncated");
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      t.values[i] = std::bit_cast<double>(get_u64(bytes.data() + data_start + off + 8 * i));
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void write_container(const std::filesystem::path& path, const TensorContainer& c) {
  const std::string bytes = encode_container(c);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path.string());
}

TensorContainer read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return decode_container(ss.str());
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace pf
