// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/nn/tape.hpp"

#include <map>
#include <string>

namespace isirx::nn {

/// Checkpoint container: a text manifest (version, meta key/value lines and
/// one line per tensor with name, shape, dtype and byte offset) followed by
/// little-endian 32-bit float payloads.
void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::map<std::string, std::string>& meta);

/// Reads meta entries without touching tensor data.
std::map<std::string, std::string> read_checkpoint_meta(const std::string& path);

/// Loads tensor values into an existing store. Every tensor in the file must
/// match a parameter by name and shape, and vice versa.
std::map<std::string, std::string> load_checkpoint(const std::string& path, ParamStore& params);

}  // namespace isirx::nn
