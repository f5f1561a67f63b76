#include "sedrl/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace sedrl::nn {

void save_checkpoint(const std::string& path, const ParamRefs& params,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    header["tensors"].push_back({{"name", p.name},
                                 {"rows", p.tensor->rows()},
                                 {"cols", p.tensor->cols()},
                                 {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.tensor->size()) * sizeof(float);
  }
  header["meta"] = meta;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, 8);
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  unsigned char len_le[4] = {static_cast<unsigned char>(len & 0xff),
                             static_cast<unsigned char>((len >> 8) & 0xff),
                             static_cast<unsigned char>((len >> 16) & 0xff),
                             static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(len_le), 4);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& p : params)
    out.write(reinterpret_cast<const char*>(p.tensor->data()),
              static_cast<std::streamsize>(p.tensor->size() * sizeof(float)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointFormatError("checkpoint: cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw CheckpointFormatError("checkpoint: bad magic in " + path);
  unsigned char len_le[4];
  if (!in.read(reinterpret_cast<char*>(len_le), 4))
    throw CheckpointFormatError("checkpoint: truncated header length in " + path);
  const std::uint32_t len = static_cast<std::uint32_t>(len_le[0]) |
                            (static_cast<std::uint32_t>(len_le[1]) << 8) |
                            (static_cast<std::uint32_t>(len_le[2]) << 16) |
                            (static_cast<std::uint32_t>(len_le[3]) << 24);
  std::string header_str(len, '\0');
  if (!in.read(header_str.data(), len))
    throw CheckpointFormatError("checkpoint: truncated header in " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception&) {
    throw CheckpointFormatError("checkpoint: malformed JSON header in " + path);
  }

  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  const std::streampos payload_start = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name");
    const long rows = entry.at("rows");
    const long cols = entry.at("cols");
    const std::uint64_t offset = entry.at("offset");
    if (rows < 0 || cols < 0)
      throw CheckpointSchemaError("checkpoint: negative shape for " + name);
    Mat m(rows, cols);
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(float))))
      throw CheckpointFormatError("checkpoint: truncated payload for " + name);
    ckpt.tensors.emplace(name, std::move(m));
  }
  return ckpt;
}

void load_into(const Checkpoint& ckpt, ParamRefs params) {
  for (auto& p : params) {
    auto it = ckpt.tensors.find(p.name);
    if (it == ckpt.tensors.end())
      throw CheckpointSchemaError("checkpoint: missing tensor " + p.name);
    if (it->second.rows() != p.tensor->rows() || it->second.cols() != p.tensor->cols())
      throw CheckpointSchemaError("checkpoint: shape mismatch for " + p.name);
    *p.tensor = it->second;
  }
}

}  // namespace sedrl::nn
