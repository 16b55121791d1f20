#pragma once

#include "stempush/tactile/render.hpp"

#include <string>
#include <vector>

namespace stempush::tactile {

// Calibration protocol for the localisation model: press the membrane at a
// grid of axial locations, stepping the penetration until the local
// deformation limit, and label every frame with the normalized location.
struct ClmDatasetSpec {
  int n_locations = 10;
  double location_step = 0.005;    // m between press locations
  double penetration_step = 0.001; // m per press increment
  int penetrations_per_location = 15;
  int total_target = 150;
  double noise_std = 0.0;          // pixel noise during collection, 0 = clean

  void validate() const;
};

ClmDatasetSpec clm_dataset_spec_from_config(const Config& cfg);

struct ClmSample {
  TactileFrame frame;
  double u = 0.0;           // label, normalized axial location
  double penetration = 0.0; // m
  uint64_t seed = 0;        // noise stream id used for this frame
};

// Presses are centered on the axis: location i sits at
// (margin + i * location_step) / finger.length with the grid margin splitting
// the leftover length evenly. Throws when the grid does not fit the finger.
std::vector<double> press_locations(const ClmDatasetSpec& spec,
                                    const simworld::FingerModel& finger);

std::vector<ClmSample> generate_clm_dataset(const ClmDatasetSpec& spec,
                                            const simworld::FingerModel& finger,
                                            const MarkerLayout& layout,
                                            const RenderParams& params, Rng& rng);

// Directory layout: index.csv (index,label,penetration_m,seed,file) plus one
// little-endian blob per frame: uint32 H, W, C, then float32 pixels.
void save_clm_dataset(const std::string& dir, const std::vector<ClmSample>& samples);
std::vector<ClmSample> load_clm_dataset(const std::string& dir);

void write_frame_blob(const std::string& path, const TactileFrame& frame);
TactileFrame read_frame_blob(const std::string& path);

}  // namespace stempush::tactile
