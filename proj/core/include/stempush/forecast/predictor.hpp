#pragma once

#include "stempush/config.hpp"
#include "stempush/simworld/world.hpp"
#include "stempush/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stempush::forecast {

// Shared timing contract for every forward-model backend: given c context
// frames it forecasts the contact location for the next `horizon` frames.
struct PredictorConfig {
  int context = 10;
  int horizon = 10;
  double frame_hz = 60.0;

  void validate() const;
};

PredictorConfig predictor_config_from_config(const Config& cfg);

struct ForecastResult {
  std::vector<double> s_hat;  // one value per horizon frame, each in [0, 1]
  std::optional<std::vector<TactileFrame>> frames_hat;
  std::string backend;
};

// Everything a backend may consume, oldest entry first. Poses are flattened
// end-effector poses aligned with the context frames; planned entries describe
// the next `horizon` control frames of the reference motion, both as poses
// (for the learned backends) and as the commanded twists (for replay).
struct PredictorInput {
  std::vector<double> s;             // c measured locations
  std::vector<Vec6> poses;           // c executed poses
  std::vector<Vec6> planned_poses;   // horizon reference poses
  std::vector<Vec6> planned_twists;  // horizon commanded twists
  std::vector<TactileFrame> frames;  // c tactile images (image backend only)
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  // False until the backend has what it needs (training, a world snapshot).
  virtual bool ready() const { return true; }
  // Called once per control frame before predict; backends that track the
  // world (the replay oracle) snapshot what they need here.
  virtual void observe(const simworld::FrameObs& obs) { (void)obs; }
  virtual ForecastResult predict(const PredictorInput& in) = 0;
};

// Trivial baseline: the last measured location, held over the horizon.
class PersistencePredictor : public Predictor {
 public:
  explicit PersistencePredictor(const PredictorConfig& cfg) : cfg_(cfg) { cfg_.validate(); }
  std::string name() const override { return "persistence"; }
  ForecastResult predict(const PredictorInput& in) override;

 private:
  PredictorConfig cfg_;
};

// Ground-truth forward model: replays the simulator from the frame snapshot
// under the planned twists, with the same tick layout the rollout itself uses,
// and reads off the true attachment coordinate. Exact by construction when the
// executed commands equal the planned ones.
class PhysicsOracle : public Predictor {
 public:
  PhysicsOracle(const PredictorConfig& cfg, double physics_dt, double duration_s);

  std::string name() const override { return "physics"; }
  bool ready() const override { return snapshot_.has_value(); }
  void observe(const simworld::FrameObs& obs) override;
  ForecastResult predict(const PredictorInput& in) override;

 private:
  PredictorConfig cfg_;
  double physics_dt_;
  simworld::FrameSchedule sched_;
  std::optional<simworld::WorldState> snapshot_;
  simworld::Models models_;
  int frame_index_ = 0;
};

}  // namespace stempush::forecast
