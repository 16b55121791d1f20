#include "stempush/config.hpp"

#include "stempush/strfmt.hpp"

#include <cstdlib>
#include <fstream>

extern "C" char** environ;

namespace stempush {
namespace {

const char* kDefaultConfig = R"JSON({
  "seed": 0,
  "workers": 0,
  "core": {
    "sync_tolerance_s": 0.01
  },
  "sim": {
    "physics_dt_s": 0.001,
    "frame_hz": 60.0,
    "gravity": 9.81,
    "mu_s": 0.6,
    "mu_k": 0.3,
    "stem": {
      "anchor": [0.45, 0.0, 0.55],
      "rest_direction": [0.0, 0.0, -1.0],
      "length_m": 0.35,
      "tip_mass_kg": 0.025,
      "k1": 4.7,
      "k3": 60.0,
      "damping": 0.03,
      "radius_m": 0.0015
    },
    "finger": {
      "length_m": 0.06,
      "radius_base_m": 0.022,
      "radius_tip_m": 0.01,
      "compliance_base_m_per_n": 0.004,
      "compliance_tip_m_per_n": 0.001,
      "deform_limit_base_m": 0.024,
      "deform_limit_tip_m": 0.015,
      "stiffen_factor": 20.0
    },
    "cluster": {
      "n": 3,
      "spacing_m": 0.035,
      "stiffness_jitter": 0.3
    }
  },
  "tactile": {
    "resolution": 64,
    "marker_rows": 8,
    "marker_cols": 8,
    "dot_radius_px": 2.0,
    "bump_sigma": 0.15,
    "px_per_m": 800.0,
    "heat_norm_px": 12.0,
    "noise_std": 0.0,
    "eval_noise_std": 0.02,
    "contact_energy_min": 0.5,
    "clm": {
      "conv1_channels": 8,
      "conv2_channels": 16,
      "dense1": 40,
      "dense2": 24,
      "epochs": 80,
      "batch": 16,
      "lr": 0.003,
      "momentum": 0.9,
      "val_fraction": 0.2
    }
  },
  "clm_dataset": {
    "n_locations": 10,
    "location_step_m": 0.005,
    "penetration_step_m": 0.001,
    "penetrations_per_location": 15,
    "total_target": 150,
    "noise_std": 0.0
  },
  "forecast": {
    "context": 10,
    "horizon": 10,
    "backend": "state",
    "window_stride": 5,
    "val_fraction": 0.2,
    "state_tfm": {
      "hidden1": 64,
      "hidden2": 64,
      "epochs": 200,
      "batch": 32,
      "lr": 0.02,
      "momentum": 0.9
    },
    "image_tfm": {
      "resolution": 32,
      "enc1_channels": 8,
      "enc2_channels": 12,
      "lstm_channels": 12,
      "epochs": 12,
      "batch": 2,
      "lr": 0.003,
      "momentum": 0.9,
      "teacher_forcing_fraction": 0.3333333333333333,
      "max_windows": 160
    }
  },
  "control": {
    "controller": "dfpc",
    "residual_limit": 0.5,
    "gains": { "kp": 0.4, "kd": 0.02 },
    "pd": { "kp": 4.0, "kd": 0.2 }
  },
  "scenario": {
    "yaw_rad": 0.8,
    "speed_mps": 0.02,
    "accel_mps2": 0.08,
    "approach_m": 0.03,
    "push_m": 0.05,
    "settle_s": 0.5,
    "contact_height_m": 0.25,
    "zone_jitter": 0.04,
    "arc_rise_m": 0.02,
    "arc_subtend_rad": 1.0471975511965976
  },
  "bench": {
    "gamma": 0.02,
    "n_seeds": 5,
    "include_timings": false,
    "push_dataset": {
      "n_tasks": 200,
      "linear_ratio": 0.5,
      "frames_subset": 12,
      "frames_resolution": 32
    },
    "matrices": {
      "table1": {
        "controllers": ["openloop", "pd", "dfpc"],
        "zones": [1, 2, 3],
        "kinds": ["linear"],
        "cluster": [false]
      },
      "table2": {
        "controllers": ["openloop", "pd", "dfpc"],
        "zones": [1, 2, 3],
        "kinds": ["linear", "arc"],
        "cluster": [false]
      },
      "table3": {
        "controllers": ["openloop", "pd", "dfpc"],
        "zones": [1],
        "kinds": ["linear"],
        "cluster": [false, true]
      }
    }
  }
})JSON";

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;  // int/float interchange
  if (a.is_boolean() && b.is_boolean()) return true;
  if (a.is_string() && b.is_string()) return true;
  if (a.is_array() && b.is_array()) return true;
  if (a.is_object() && b.is_object()) return true;
  return false;
}

void merge_validated(Json& base, const Json& overrides, const std::string& path) {
  if (!overrides.is_object()) {
    throw ValidationError("config node '" + (path.empty() ? "<root>" : path) +
                          "' must be an object");
  }
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    const std::string child = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) {
      throw ValidationError("unknown config key '" + child + "'");
    }
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_validated(slot, it.value(), child);
      continue;
    }
    if (!same_kind(slot, it.value())) {
      throw ValidationError("config key '" + child + "' has the wrong type");
    }
    if (slot.is_array() && !slot.empty() && !it.value().empty()) {
      if (!same_kind(slot.front(), it.value().front())) {
        throw ValidationError("config key '" + child + "' has the wrong element type");
      }
    }
    slot = it.value();
  }
}

std::vector<std::string> split_dotted(const std::string& dotted) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = dotted.find('.', start);
    if (pos == std::string::npos) {
      parts.push_back(dotted.substr(start));
      return parts;
    }
    parts.push_back(dotted.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

const Json& Config::default_tree() {
  static const Json tree = Json::parse(kDefaultConfig);
  return tree;
}

Config Config::defaults() { return Config{}; }

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  Json overrides;
  try {
    in >> overrides;
  } catch (const std::exception& e) {
    throw ValidationError("config file '" + path + "': " + e.what());
  }
  return from_json(overrides);
}

Config Config::from_json(const Json& overrides) {
  Config cfg;
  merge_validated(cfg.tree_, overrides, "");
  return cfg;
}

void Config::apply_env() {
  static const std::string prefix = "STEMPUSH_";
  for (char** env = environ; *env != nullptr; ++env) {
    const std::string entry(*env);
    if (entry.rfind(prefix, 0) != 0) continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    const std::string value = entry.substr(eq + 1);
    // SIM__MU_K -> sim.mu_k
    std::string dotted;
    for (size_t i = 0; i < key.size(); ++i) {
      if (key[i] == '_' && i + 1 < key.size() && key[i + 1] == '_') {
        dotted += '.';
        ++i;
      } else {
        dotted += static_cast<char>(std::tolower(static_cast<unsigned char>(key[i])));
      }
    }
    apply_override(dotted, value);
  }
}

void Config::apply_override(const std::string& dotted_key, const std::string& raw_value) {
  Json* node = &tree_;
  for (const auto& part : split_dotted(dotted_key)) {
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError("unknown config key '" + dotted_key + "'");
    }
    node = &(*node)[part];
  }
  if (node->is_object()) {
    throw ValidationError("config key '" + dotted_key + "' is not a leaf value");
  }
  Json value;
  try {
    value = Json::parse(raw_value);
  } catch (const std::exception&) {
    value = raw_value;  // unquoted strings stay strings
  }
  if (value.is_string() && !node->is_string()) {
    throw ValidationError("config key '" + dotted_key + "' has the wrong type");
  }
  if (!same_kind(*node, value)) {
    throw ValidationError("config key '" + dotted_key + "' has the wrong type");
  }
  *node = value;
}

const Json& Config::at(const std::string& dotted) const {
  const Json* node = &tree_;
  for (const auto& part : split_dotted(dotted)) {
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError("missing config key '" + dotted + "'");
    }
    node = &(*node)[part];
  }
  return *node;
}

double Config::num(const std::string& dotted) const {
  const Json& v = at(dotted);
  if (!v.is_number()) throw ValidationError("config key '" + dotted + "' is not a number");
  return v.get<double>();
}

int Config::integer(const std::string& dotted) const {
  const Json& v = at(dotted);
  if (!v.is_number_integer()) {
    throw ValidationError("config key '" + dotted + "' is not an integer");
  }
  return v.get<int>();
}

bool Config::boolean(const std::string& dotted) const {
  const Json& v = at(dotted);
  if (!v.is_boolean()) throw ValidationError("config key '" + dotted + "' is not a bool");
  return v.get<bool>();
}

std::string Config::str(const std::string& dotted) const {
  const Json& v = at(dotted);
  if (!v.is_string()) throw ValidationError("config key '" + dotted + "' is not a string");
  return v.get<std::string>();
}

std::vector<double> Config::nums(const std::string& dotted) const {
  const Json& v = at(dotted);
  if (!v.is_array()) throw ValidationError("config key '" + dotted + "' is not an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ValidationError("config key '" + dotted + "' has non-numeric elements");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> Config::strs(const std::string& dotted) const {
  const Json& v = at(dotted);
  if (!v.is_array()) throw ValidationError("config key '" + dotted + "' is not an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw ValidationError("config key '" + dotted + "' has non-string elements");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

uint64_t Config::hash() const { return fnv1a64(tree_.dump()); }

std::string Config::hash_hex() const { return hex64(hash()); }

uint64_t Config::subtree_hash(const std::vector<std::string>& dotted_paths) const {
  uint64_t h = 1469598103934665603ull;
  for (const auto& path : dotted_paths) {
    h = fnv1a64(path, h);
    h = fnv1a64(std::string("="), h);
    h = fnv1a64(at(path).dump(), h);
    h = fnv1a64(std::string("\n"), h);
  }
  return h;
}

}  // namespace stempush
