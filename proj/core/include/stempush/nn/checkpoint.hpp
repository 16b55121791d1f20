#pragma once

#include "stempush/nn/tensor.hpp"

#include <cstdint>
#include <string>

namespace stempush::nn {

// Versioned binary checkpoint: named parameter tensors plus the hash of the
// config subtree the architecture was built from. Loading refuses both version
// and config-hash mismatches, so a model can never silently run against a
// different architecture configuration.
void save_checkpoint(const std::string& path, uint64_t config_hash,
                     const std::vector<ParamRef>& params);

// Fills the tensors referenced by `params`; shapes and names must match.
void load_checkpoint(const std::string& path, uint64_t expected_config_hash,
                     const std::vector<ParamRef>& params);

uint64_t checkpoint_config_hash(const std::string& path);

}  // namespace stempush::nn
