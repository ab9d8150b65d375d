#include "gscale/io.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace gscale {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string rect(const char* cls, std::size_t index, double x0, double y0, double x1, double y1,
                 const char* stroke) {
  return "  <rect class=\"" + std::string(cls) + "\" data-index=\"" + std::to_string(index) +
         "\" x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) +
         "\" height=\"" + fmt(y1 - y0) + "\" fill=\"none\" stroke=\"" + stroke +
         "\" stroke-width=\"2\"/>\n";
}

}  // namespace

std::string emit_overlay(const DetectionDocument& doc, const SceneEstimate& estimate,
                         const OverlayOptions& options) {
  const double w = doc.image_w_px;
  const double h = doc.image_h_px;
  const double v0 = doc.horizon();

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fmt(w) +
         "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
  svg += "  <rect class=\"frame\" x=\"0\" y=\"0\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "  <line class=\"horizon\" x1=\"0\" y1=\"" + fmt(v0 * h) + "\" x2=\"" + fmt(w) +
         "\" y2=\"" + fmt(v0 * h) + "\" stroke=\"orange\" stroke-width=\"2\"/>\n";

  for (std::size_t i = 0; i < doc.detections.size(); ++i) {
    const auto& b = doc.detections[i];
    svg += rect("detection", i, b.u_left * h, b.v_top * h, b.u_right * h, b.v_bottom * h, "lime");
  }

  const LayerState* last = estimate.layers.empty() ? nullptr : &estimate.layers.back();
  CameraParams cam;
  bool have_camera = estimate.cam_height_m > 0;
  if (have_camera) {
    cam = camera_from_horizon(v0, doc.calibration.fov_rad, estimate.cam_height_m, w, h,
                              doc.principal_v() * h);
  }
  const double c = std::cos(cam.pitch_rad), s = std::sin(cam.pitch_rad);

  for (std::size_t j = 0; j < estimate.object_indices.size(); ++j) {
    const std::size_t k = estimate.object_indices[j];
    if (k >= doc.detections.size()) continue;
    const auto& b = doc.detections[k];
    if (last && j < last->v_top.size() && std::isfinite(last->v_top[j]))
      svg += rect("reprojected", k, b.u_left * h, last->v_top[j] * h, b.u_right * h,
                  b.v_bottom * h, "magenta");
    if (!have_camera) continue;
    try {
      const double depth = depth_from_bottom(cam, b.v_bottom);
      const auto span =
          project_vertical(cam, GroundObject{depth, 0.0, options.reference_height_m});
      const double optical_depth = depth * c - cam.cam_height_m * s;
      const double width_px = options.reference_width_m * cam.focal_px / optical_depth;
      svg += rect("reference", k, b.u_right * h, span.v_top * h, b.u_right * h + width_px,
                  span.v_bottom * h, "cyan");
    } catch (const GeometryError&) {
      // No reference where the object's depth is undefined.
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace gscale
