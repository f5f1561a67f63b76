#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "sedrl/nn/types.hpp"

namespace sedrl::nn {

// Checkpoint file layout: magic "DRLCKPT1", little-endian uint32 header
// length, UTF-8 JSON header {"tensors": [{name, rows, cols, offset}...],
// "meta": {...}}, then the raw little-endian float32 payloads in header
// order. Offsets are payload-relative bytes; matrices are column-major.
inline constexpr char kCheckpointMagic[8] = {'D', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

struct CheckpointFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointSchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, const ParamRefs& params,
                     const nlohmann::json& meta = nlohmann::json::object());

struct Checkpoint {
  std::map<std::string, Mat> tensors;
  nlohmann::json meta;
};

Checkpoint load_checkpoint(const std::string& path);

// Copies tensors into an existing parameter set; every name must be present
// with a matching shape.
void load_into(const Checkpoint& ckpt, ParamRefs params);

}  // namespace sedrl::nn
