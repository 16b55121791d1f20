#include "stempush/tactile/render.hpp"

#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>

namespace stempush::tactile {

void MarkerLayout::validate() const {
  if (resolution <= 0) throw ValidationError("marker layout: resolution must be positive");
  if (rows <= 0 || cols <= 0) throw ValidationError("marker layout: grid dims must be positive");
  if (dot_radius_px <= 0.0) throw ValidationError("marker layout: dot radius must be positive");
  if (rest_px.size() != static_cast<size_t>(rows) * cols)
    throw ValidationError("marker layout: center count does not match grid dims");
  for (const Vec2& p : rest_px) {
    if (p.x() - dot_radius_px < 0.0 || p.x() + dot_radius_px > resolution ||
        p.y() - dot_radius_px < 0.0 || p.y() + dot_radius_px > resolution)
      throw ValidationError("marker layout: dot at (" + fmt_double(p.x()) + ", " +
                            fmt_double(p.y()) + ") leaves the " + fmt_int(resolution) +
                            "px image");
  }
  for (size_t i = 0; i < rest_px.size(); ++i)
    for (size_t j = i + 1; j < rest_px.size(); ++j)
      if ((rest_px[i] - rest_px[j]).norm() < 2.0 * dot_radius_px)
        throw ValidationError("marker layout: dots overlap at rest");
}

MarkerLayout make_layout(int resolution, int rows, int cols, double dot_radius_px) {
  MarkerLayout layout;
  layout.resolution = resolution;
  layout.rows = rows;
  layout.cols = cols;
  layout.dot_radius_px = dot_radius_px;
  layout.rest_px.reserve(static_cast<size_t>(rows) * cols);
  const double pitch_y = static_cast<double>(resolution) / rows;
  const double pitch_x = static_cast<double>(resolution) / cols;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      layout.rest_px.emplace_back((j + 0.5) * pitch_x, (i + 0.5) * pitch_y);
  layout.validate();
  return layout;
}

MarkerLayout layout_from_config(const Config& cfg) {
  return make_layout(static_cast<int>(cfg.integer("tactile.resolution")),
                     static_cast<int>(cfg.integer("tactile.marker_rows")),
                     static_cast<int>(cfg.integer("tactile.marker_cols")),
                     cfg.num("tactile.dot_radius_px"));
}

double DeformationField::eval(double u) const {
  const double z = (u - u_c) / sigma;
  return amplitude_px * std::exp(-0.5 * z * z);
}

RenderParams render_params_from_config(const Config& cfg) {
  RenderParams p;
  p.resolution = static_cast<int>(cfg.integer("tactile.resolution"));
  p.px_per_m = cfg.num("tactile.px_per_m");
  p.bump_sigma = cfg.num("tactile.bump_sigma");
  p.heat_norm_px = cfg.num("tactile.heat_norm_px");
  p.noise_std = cfg.num("tactile.noise_std");
  p.contact_energy_min = cfg.num("tactile.contact_energy_min");
  return p;
}

double bump_amplitude_px(const ActiveContact& contact, const RenderParams& params) {
  if (contact.penetration <= 0.0) return 0.0;
  // A softer membrane patch deflects more for the same penetration; keep the
  // dependence affine so the amplitude never vanishes toward the stiff tip.
  const double compliance_gain = 0.5 + 0.5 * contact.compliance_ratio;
  return params.px_per_m * contact.penetration * compliance_gain * (params.resolution / 64.0);
}

DeformationField field_from_contact(const ActiveContact& contact, const RenderParams& params) {
  DeformationField f;
  f.u_c = contact.u_c;
  f.amplitude_px = bump_amplitude_px(contact, params);
  f.sigma = params.bump_sigma;
  return f;
}

double total_shift_px(const std::vector<DeformationField>& fields, double u) {
  double s = 0.0;
  for (const DeformationField& f : fields) s += f.eval(u);
  return s;
}

namespace {

// Soft-edged disc: full coverage inside radius - 0.5, linear falloff over one
// pixel. Sub-pixel center motion changes the rasterized dot smoothly, which is
// what lets millimetre-scale pushes register at 64 px.
void draw_dot(TactileFrame& frame, int channel, const Vec2& center, double radius) {
  const int res = frame.resolution;
  const int x0 = std::max(0, static_cast<int>(std::floor(center.x() - radius - 1.0)));
  const int x1 = std::min(res - 1, static_cast<int>(std::ceil(center.x() + radius + 1.0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(center.y() - radius - 1.0)));
  const int y1 = std::min(res - 1, static_cast<int>(std::ceil(center.y() + radius + 1.0)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = (Vec2(x + 0.5, y + 0.5) - center).norm();
      const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      if (cov > 0.0) {
        float& px = frame.at(y, x, channel);
        px = std::max(px, static_cast<float>(cov));
      }
    }
  }
}

}  // namespace

TactileFrame rest_frame(const MarkerLayout& layout) {
  return render({}, layout, RenderParams{.resolution = layout.resolution});
}

TactileFrame render(const std::vector<ActiveContact>& contacts, const MarkerLayout& layout,
                    const RenderParams& params, Rng* noise, double timestamp) {
  layout.validate();
  if (layout.resolution != params.resolution)
    throw ValidationError("render: layout is " + fmt_int(layout.resolution) +
                          "px but params expect " + fmt_int(params.resolution) + "px");
  for (const ActiveContact& c : contacts) {
    if (!(c.u_c >= 0.0 && c.u_c <= 1.0) || !(c.penetration >= 0.0) ||
        !(c.compliance_ratio > 0.0 && c.compliance_ratio <= 1.0))
      throw ValidationError("render: contact outside its admissible ranges");
  }

  std::vector<DeformationField> fields;
  fields.reserve(contacts.size());
  for (const ActiveContact& c : contacts) fields.push_back(field_from_contact(c, params));

  const int res = layout.resolution;
  TactileFrame frame = make_frame(res, timestamp);
  for (const Vec2& p : layout.rest_px) draw_dot(frame, 0, p, layout.dot_radius_px);
  for (size_t m = 0; m < layout.rest_px.size(); ++m) {
    const Vec2& p = layout.rest_px[m];
    const double shift = total_shift_px(fields, layout.row_u(static_cast<int>(m) / layout.cols));
    draw_dot(frame, 1, p + Vec2(shift, 0.0), layout.dot_radius_px);
  }
  for (int y = 0; y < res; ++y) {
    const double shift = total_shift_px(fields, (y + 0.5) / res);
    const float heat =
        static_cast<float>(std::clamp(shift / params.heat_norm_px, 0.0, 1.0));
    for (int x = 0; x < res; ++x) frame.at(y, x, 2) = heat;
  }

  if (noise != nullptr && params.noise_std > 0.0) {
    for (float& px : frame.pixels)
      px = static_cast<float>(
          std::clamp(static_cast<double>(px) + params.noise_std * noise->normal(), 0.0, 1.0));
  }
  return frame;
}

double heat_energy(const TactileFrame& frame) {
  double total = 0.0;
  for (int y = 0; y < frame.resolution; ++y)
    for (int x = 0; x < frame.resolution; ++x) total += frame.at(y, x, 2);
  return total / std::max(1, frame.resolution);
}

std::optional<double> oracle_decode(const TactileFrame& frame, const RenderParams& params) {
  if (frame.resolution <= 0) throw ValidationError("oracle_decode: empty frame");
  // Scale-free gate: energy of a unit-amplitude bump grows linearly with the
  // resolution, so normalize to the 64 px reference before comparing.
  if (heat_energy(frame) * (64.0 / frame.resolution) < params.contact_energy_min)
    return std::nullopt;
  double weight_total = 0.0;
  double centroid = 0.0;
  for (int y = 0; y < frame.resolution; ++y) {
    double row = 0.0;
    for (int x = 0; x < frame.resolution; ++x) row += frame.at(y, x, 2);
    weight_total += row;
    centroid += row * ((y + 0.5) / frame.resolution);
  }
  return centroid / weight_total;
}

std::vector<ActiveContact> contacts_from_world(const simworld::WorldState& world,
                                               const simworld::Models& models) {
  std::vector<ActiveContact> contacts;
  const auto add = [&](const ContactState& c) {
    if (!c.in_contact || c.penetration <= 0.0) return;
    contacts.push_back({c.u, c.penetration,
                        models.finger.compliance_profile(c.u) / models.finger.compliance_base});
  };
  add(world.contact);
  for (size_t i = 0; i < world.distractors.size() && i < models.distractors.size(); ++i) {
    const simworld::StemState& s = world.distractors[i];
    if (!s.u_att.has_value()) continue;
    const simworld::ContactSolution sol =
        simworld::resolve_contact(models.distractors[i], s.theta, s.u_att, s.sticking,
                                  models.finger, world.ee_pose, models.mu_s, models.mu_k);
    add(sol.contact);
  }
  return contacts;
}

}  // namespace stempush::tactile
