#pragma once

#include "stempush/config.hpp"
#include "stempush/rng.hpp"
#include "stempush/simworld/world.hpp"
#include "stempush/types.hpp"

#include <optional>
#include <vector>

namespace stempush::tactile {

// Dot grid printed on the unrolled inner membrane of the conic finger. Image
// rows run along the finger axis (row 0 at the camera lens, u = 0), columns
// run around the circumference. Axial coordinate of a pixel row y is y / H.
struct MarkerLayout {
  int resolution = 64;
  int rows = 8;
  int cols = 8;
  double dot_radius_px = 2.0;
  std::vector<Vec2> rest_px;  // (x, y) centers, row-major

  // Axial coordinate of marker row i.
  double row_u(int i) const { return (i + 0.5) / rows; }
  void validate() const;  // in-bounds and pairwise non-overlapping at rest
};

MarkerLayout make_layout(int resolution, int rows, int cols, double dot_radius_px);
MarkerLayout layout_from_config(const Config& cfg);

// One pressing contact as the membrane sees it.
struct ActiveContact {
  double u_c = 0.0;              // normalized axial center
  double penetration = 0.0;      // m, >= 0
  double compliance_ratio = 1.0; // local compliance / base compliance, (0, 1]
};

// Gaussian bulge along the axis: markers shift circumferentially by
// amplitude * exp(-((u - u_c)/sigma)^2 / 2) pixels.
struct DeformationField {
  double u_c = 0.0;
  double amplitude_px = 0.0;
  double sigma = 0.15;

  double eval(double u) const;
};

struct RenderParams {
  int resolution = 64;
  double px_per_m = 800.0;       // penetration -> marker shift gain (at 64 px)
  double bump_sigma = 0.15;      // axial width of the bulge, normalized
  double heat_norm_px = 12.0;    // shift that saturates the heat channel
  double noise_std = 0.0;        // Gaussian pixel noise, 0 disables
  double contact_energy_min = 0.5;  // heat energy below this reads as no contact
};

RenderParams render_params_from_config(const Config& cfg);

// Marker shift amplitude in pixels for one contact. Strictly increasing in
// penetration and in the local compliance ratio; scales with resolution.
double bump_amplitude_px(const ActiveContact& contact, const RenderParams& params);

DeformationField field_from_contact(const ActiveContact& contact, const RenderParams& params);

// Total circumferential marker shift (pixels) at axial coordinate u.
double total_shift_px(const std::vector<DeformationField>& fields, double u);

// Channels: 0 = markers at rest, 1 = markers displaced by the deformation
// fields, 2 = shift magnitude profile normalized by heat_norm_px. Optional
// noise is added to every pixel and the result clamped to [0, 1].
TactileFrame render(const std::vector<ActiveContact>& contacts, const MarkerLayout& layout,
                    const RenderParams& params, Rng* noise = nullptr, double timestamp = 0.0);

TactileFrame rest_frame(const MarkerLayout& layout);

// Heat-channel energy: mean column sum. The no-contact gate compares this
// against contact_energy_min.
double heat_energy(const TactileFrame& frame);

// Analytic inverse of render on noiseless frames: heat-weighted row centroid
// mapped back to u. Returns nothing when the heat energy is below the gate.
std::optional<double> oracle_decode(const TactileFrame& frame, const RenderParams& params);

// Contacts as seen from a world snapshot: the target stem's live contact plus
// any attached distractor, each re-resolved against the finger geometry.
std::vector<ActiveContact> contacts_from_world(const simworld::WorldState& world,
                                               const simworld::Models& models);

}  // namespace stempush::tactile
