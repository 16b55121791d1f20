#include "stempush/simworld/models.hpp"

#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>

namespace stempush::simworld {

namespace {

double lerp(double a, double b, double u) { return a + (b - a) * u; }

Vec3 vec3_field(const Config& cfg, const std::string& key) {
  const auto v = cfg.nums(key);
  if (v.size() != 3) {
    throw ValidationError("config field " + key + " must have 3 entries");
  }
  return Vec3(v[0], v[1], v[2]);
}

}  // namespace

void StemModel::validate() const {
  if (std::abs(rest_direction.norm() - 1.0) > 1e-6) {
    throw ValidationError("stem: rest_direction must be a unit vector");
  }
  if (!(length > 0.0) || !(tip_mass > 0.0) || !(radius > 0.0)) {
    throw ValidationError("stem: length, tip_mass and radius must be positive");
  }
  if (!(k1 > 0.0) || k3 < 0.0 || !(damping > 0.0)) {
    throw ValidationError("stem: require k1 > 0, k3 >= 0, damping > 0");
  }
}

double FingerModel::radius_profile(double u) const { return lerp(radius_base, radius_tip, u); }

double FingerModel::compliance_profile(double u) const {
  return lerp(compliance_base, compliance_tip, u);
}

double FingerModel::deform_limit(double u) const {
  return lerp(deform_limit_base, deform_limit_tip, u);
}

double FingerModel::normal_force(double penetration, double u) const {
  if (penetration <= 0.0) return 0.0;
  const double c = compliance_profile(u);
  const double limit = deform_limit(u);
  if (penetration <= limit) return penetration / c;
  return limit / c + (penetration - limit) * stiffen_factor / c;
}

void FingerModel::validate() const {
  if (!(length > 0.0)) throw ValidationError("finger: length must be positive");
  if (!(radius_base > 0.0) || !(radius_tip > 0.0)) {
    throw ValidationError("finger: radius profile must be positive");
  }
  if (!(compliance_base > compliance_tip) || !(compliance_tip > 0.0)) {
    throw ValidationError("finger: compliance must decrease from base to tip and stay positive");
  }
  if (!(deform_limit_base > 0.0) || !(deform_limit_tip > 0.0) || !(stiffen_factor >= 1.0)) {
    throw ValidationError("finger: deformation limits must be positive, stiffen_factor >= 1");
  }
}

void Models::validate() const {
  stem.validate();
  finger.validate();
  for (const auto& d : distractors) d.validate();
  if (!(mu_s >= mu_k) || mu_k < 0.0) {
    throw ValidationError("models: require mu_s >= mu_k >= 0");
  }
  if (gravity < 0.0) throw ValidationError("models: gravity must be >= 0");
}

Models models_from_config(const Config& cfg) {
  Models m;
  m.stem.anchor = vec3_field(cfg, "sim.stem.anchor");
  m.stem.rest_direction = vec3_field(cfg, "sim.stem.rest_direction").normalized();
  m.stem.length = cfg.num("sim.stem.length_m");
  m.stem.tip_mass = cfg.num("sim.stem.tip_mass_kg");
  m.stem.k1 = cfg.num("sim.stem.k1");
  m.stem.k3 = cfg.num("sim.stem.k3");
  m.stem.damping = cfg.num("sim.stem.damping");
  m.stem.radius = cfg.num("sim.stem.radius_m");

  m.finger.length = cfg.num("sim.finger.length_m");
  m.finger.radius_base = cfg.num("sim.finger.radius_base_m");
  m.finger.radius_tip = cfg.num("sim.finger.radius_tip_m");
  m.finger.compliance_base = cfg.num("sim.finger.compliance_base_m_per_n");
  m.finger.compliance_tip = cfg.num("sim.finger.compliance_tip_m_per_n");
  m.finger.deform_limit_base = cfg.num("sim.finger.deform_limit_base_m");
  m.finger.deform_limit_tip = cfg.num("sim.finger.deform_limit_tip_m");
  m.finger.stiffen_factor = cfg.num("sim.finger.stiffen_factor");

  m.mu_s = cfg.num("sim.mu_s");
  m.mu_k = cfg.num("sim.mu_k");
  m.gravity = cfg.num("sim.gravity");
  m.validate();
  return m;
}

Models make_cluster(const Models& base, int n, double spacing, double stiffness_jitter, Rng& rng) {
  if (n < 2) throw ValidationError("cluster: n must be >= 2, got " + fmt_int(n));
  if (!(spacing > 0.0)) throw ValidationError("cluster: spacing must be positive");
  if (stiffness_jitter < 0.0 || stiffness_jitter >= 1.0) {
    throw ValidationError("cluster: stiffness_jitter must lie in [0, 1)");
  }

  Models out = base;
  out.distractors.clear();
  std::vector<Vec3> anchors = {base.stem.anchor};
  for (int i = 1; i < n; ++i) {
    Vec3 candidate;
    for (int attempt = 0;; ++attempt) {
      const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const double dist = spacing * rng.uniform(0.8, 1.6);
      candidate = base.stem.anchor + Vec3(dist * std::cos(angle), dist * std::sin(angle),
                                          rng.uniform(-0.2, 0.2) * spacing);
      const bool ok = std::all_of(anchors.begin(), anchors.end(), [&](const Vec3& a) {
        return (a - candidate).norm() >= 0.5 * spacing;
      });
      if (ok) break;
      if (attempt > 1000) {
        throw ValidationError("cluster: could not place distractor anchors at this spacing");
      }
    }
    anchors.push_back(candidate);

    StemModel d = base.stem;
    d.anchor = candidate;
    const double scale = 1.0 + stiffness_jitter * rng.uniform(-1.0, 1.0);
    d.k1 *= scale;
    d.k3 *= scale;
    d.length *= 1.0 + 0.1 * rng.uniform(-1.0, 1.0);
    out.distractors.push_back(d);
  }
  out.validate();
  return out;
}

}  // namespace stempush::simworld
