#include "stempush/tactile/sensor.hpp"

namespace stempush::tactile {

TactileFrame SyntheticSensor::render(const simworld::WorldState& world,
                                     const simworld::Models& models, double t, Rng& rng) {
  return tactile::render(contacts_from_world(world, models), layout_, params_, &rng, t);
}

std::optional<double> SyntheticSensor::measure(const TactileFrame& frame) {
  // The gate runs on the analytic decoder either way; the model only refines
  // the location once the image shows enough deformation to trust.
  const std::optional<double> decoded = oracle_decode(frame, params_);
  if (!decoded.has_value()) return std::nullopt;
  if (clm_ != nullptr) return clm_predict(*clm_, frame);
  return decoded;
}

SyntheticSensor sensor_from_config(const Config& cfg) {
  return SyntheticSensor(layout_from_config(cfg), render_params_from_config(cfg));
}

}  // namespace stempush::tactile
