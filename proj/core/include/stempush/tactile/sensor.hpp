#pragma once

#include "stempush/simworld/world.hpp"
#include "stempush/tactile/clm.hpp"
#include "stempush/tactile/render.hpp"

#include <memory>

namespace stempush::tactile {

// Tactile sensing for rollouts: renders the marker image from the world
// snapshot and decodes the contact location from it, either analytically or
// through a trained localisation model. Both backends share the heat-energy
// gate, so "no measurable contact" means the same thing everywhere.
class SyntheticSensor : public simworld::Sensor {
 public:
  SyntheticSensor(MarkerLayout layout, RenderParams params)
      : layout_(std::move(layout)), params_(params) {}
  SyntheticSensor(MarkerLayout layout, RenderParams params, std::shared_ptr<const ClmModel> clm)
      : layout_(std::move(layout)), params_(params), clm_(std::move(clm)) {}

  TactileFrame render(const simworld::WorldState& world, const simworld::Models& models,
                      double t, Rng& rng) override;
  std::optional<double> measure(const TactileFrame& frame) override;

  const MarkerLayout& layout() const { return layout_; }
  const RenderParams& render_params() const { return params_; }

 private:
  MarkerLayout layout_;
  RenderParams params_;
  std::shared_ptr<const ClmModel> clm_;  // analytic decode when null
};

SyntheticSensor sensor_from_config(const Config& cfg);

}  // namespace stempush::tactile
