#include "stempush/tactile/dataset.hpp"

#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace stempush::tactile {

void ClmDatasetSpec::validate() const {
  if (n_locations <= 0) throw ValidationError("clm dataset: n_locations must be positive");
  if (!(location_step > 0.0)) throw ValidationError("clm dataset: location step must be positive");
  if (!(penetration_step > 0.0))
    throw ValidationError("clm dataset: penetration step must be positive");
  if (penetrations_per_location <= 0)
    throw ValidationError("clm dataset: penetrations per location must be positive");
  if (total_target <= 0) throw ValidationError("clm dataset: total target must be positive");
  if (static_cast<long long>(n_locations) * penetrations_per_location < total_target)
    throw ValidationError("clm dataset: locations x penetrations cannot reach the total target");
  if (!(noise_std >= 0.0)) throw ValidationError("clm dataset: noise std must be non-negative");
}

ClmDatasetSpec clm_dataset_spec_from_config(const Config& cfg) {
  ClmDatasetSpec spec;
  spec.n_locations = static_cast<int>(cfg.integer("clm_dataset.n_locations"));
  spec.location_step = cfg.num("clm_dataset.location_step_m");
  spec.penetration_step = cfg.num("clm_dataset.penetration_step_m");
  spec.penetrations_per_location = static_cast<int>(cfg.integer("clm_dataset.penetrations_per_location"));
  spec.total_target = static_cast<int>(cfg.integer("clm_dataset.total_target"));
  spec.noise_std = cfg.num("clm_dataset.noise_std");
  spec.validate();
  return spec;
}

std::vector<double> press_locations(const ClmDatasetSpec& spec,
                                    const simworld::FingerModel& finger) {
  spec.validate();
  const double span = (spec.n_locations - 1) * spec.location_step;
  if (span > finger.length + 1e-12)
    throw ValidationError("clm dataset: location grid spans " + fmt_double(span) +
                          " m but the finger is only " + fmt_double(finger.length) + " m long");
  const double margin = (finger.length - span) / 2.0;
  std::vector<double> locations(static_cast<size_t>(spec.n_locations));
  for (int i = 0; i < spec.n_locations; ++i)
    locations[static_cast<size_t>(i)] = (margin + i * spec.location_step) / finger.length;
  return locations;
}

std::vector<ClmSample> generate_clm_dataset(const ClmDatasetSpec& spec,
                                            const simworld::FingerModel& finger,
                                            const MarkerLayout& layout,
                                            const RenderParams& params, Rng& rng) {
  const std::vector<double> locations = press_locations(spec, finger);
  RenderParams sample_params = params;
  sample_params.noise_std = spec.noise_std;

  std::vector<ClmSample> samples;
  samples.reserve(static_cast<size_t>(spec.n_locations) * spec.penetrations_per_location);
  uint64_t stream = 0;
  for (const double u : locations) {
    const double limit = finger.deform_limit(u);
    const int fit = static_cast<int>(std::floor(limit / spec.penetration_step + 1e-12));
    const int presses = std::max(1, std::min(spec.penetrations_per_location, fit));
    const double compliance_ratio = finger.compliance_profile(u) / finger.compliance_base;
    for (int k = 1; k <= presses; ++k) {
      const ActiveContact contact{u, k * spec.penetration_step, compliance_ratio};
      Rng noise = rng.split(stream);
      ClmSample sample;
      sample.frame = render({contact}, layout, sample_params,
                            spec.noise_std > 0.0 ? &noise : nullptr);
      sample.u = u;
      sample.penetration = contact.penetration;
      sample.seed = stream;
      samples.push_back(std::move(sample));
      ++stream;
    }
  }
  return samples;
}

void write_frame_blob(const std::string& path, const TactileFrame& frame) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot write frame blob: " + path);
  const uint32_t header[3] = {static_cast<uint32_t>(frame.resolution),
                              static_cast<uint32_t>(frame.resolution),
                              static_cast<uint32_t>(TactileFrame::kChannels)};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  os.write(reinterpret_cast<const char*>(frame.pixels.data()),
           static_cast<std::streamsize>(frame.pixels.size() * sizeof(float)));
  if (!os) throw ValidationError("short write on frame blob: " + path);
}

TactileFrame read_frame_blob(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read frame blob: " + path);
  uint32_t header[3] = {0, 0, 0};
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!is || header[0] != header[1] || header[2] != TactileFrame::kChannels || header[0] == 0)
    throw ValidationError("frame blob has a malformed header: " + path);
  TactileFrame frame = make_frame(static_cast<int>(header[0]));
  is.read(reinterpret_cast<char*>(frame.pixels.data()),
          static_cast<std::streamsize>(frame.pixels.size() * sizeof(float)));
  if (!is) throw ValidationError("frame blob truncated: " + path);
  return frame;
}

void save_clm_dataset(const std::string& dir, const std::vector<ClmSample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream index(fs::path(dir) / "index.csv");
  if (!index) throw ValidationError("cannot write dataset index in " + dir);
  index << "index,label,penetration_m,seed,file\n";
  for (size_t i = 0; i < samples.size(); ++i) {
    std::string name = "sample_" + fmt_int(static_cast<long long>(i)) + ".bin";
    write_frame_blob((fs::path(dir) / name).string(), samples[i].frame);
    index << join_csv({fmt_int(static_cast<long long>(i)), fmt_double(samples[i].u),
                       fmt_double(samples[i].penetration),
                       fmt_int(static_cast<long long>(samples[i].seed)), name})
          << "\n";
  }
  if (!index) throw ValidationError("short write on dataset index in " + dir);
}

std::vector<ClmSample> load_clm_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream index(fs::path(dir) / "index.csv");
  if (!index) throw ValidationError("dataset index missing in " + dir);
  std::string line;
  if (!std::getline(index, line) || line != "index,label,penetration_m,seed,file")
    throw ValidationError("dataset index has an unexpected header in " + dir);
  std::vector<ClmSample> samples;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 5)
      throw ValidationError("dataset index row has " + fmt_int(static_cast<long long>(fields.size())) +
                            " fields, expected 5");
    ClmSample sample;
    sample.u = parse_double(fields[1]);
    sample.penetration = parse_double(fields[2]);
    sample.seed = static_cast<uint64_t>(std::stoull(fields[3]));
    sample.frame = read_frame_blob((fs::path(dir) / fields[4]).string());
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace stempush::tactile
