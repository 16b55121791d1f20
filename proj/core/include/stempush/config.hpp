#pragma once

#include "stempush/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace stempush {

using Json = nlohmann::json;

// Whole-program configuration: one JSON tree validated against the built-in
// defaults. Unknown keys and type changes are rejected, so the default tree is
// the schema. Precedence: flags > environment > file > defaults; environment
// overrides use STEMPUSH_ + the dotted path with "__" separators, e.g.
// STEMPUSH_SIM__MU_K=0.4 sets sim.mu_k.
class Config {
 public:
  static const Json& default_tree();
  static Config defaults();
  static Config from_file(const std::string& path);
  static Config from_json(const Json& overrides);

  void apply_env();
  void apply_override(const std::string& dotted_key, const std::string& raw_value);

  const Json& tree() const { return tree_; }
  const Json& at(const std::string& dotted) const;
  double num(const std::string& dotted) const;
  int integer(const std::string& dotted) const;
  bool boolean(const std::string& dotted) const;
  std::string str(const std::string& dotted) const;
  std::vector<double> nums(const std::string& dotted) const;
  std::vector<std::string> strs(const std::string& dotted) const;

  // FNV-1a over the canonical (sorted-key) dump.
  uint64_t hash() const;
  std::string hash_hex() const;
  uint64_t subtree_hash(const std::vector<std::string>& dotted_paths) const;

 private:
  Json tree_ = default_tree();
};

}  // namespace stempush
