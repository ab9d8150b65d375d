#include "gscale/io.hpp"

namespace gscale {

FilterResult filter_detections(const std::vector<DetectionBox>& boxes, double v0,
                               const FilterThresholds& t) {
  FilterResult out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const bool person = b.category == Category::Person;
    const char* reason = nullptr;
    if (t.require_amodal && person && b.keypoints &&
        !(b.keypoints->head_visible() && b.keypoints->any_ankle_visible())) {
      reason = "amodal";
    } else if (person && b.width() > 0 &&
               !(b.height() / b.width() >= t.person_aspect_min &&
                 b.height() / b.width() <= t.person_aspect_max)) {
      reason = "aspect";
    } else if (!(b.height() >= t.box_height_min && b.height() <= t.box_height_max)) {
      reason = "box-height";
    } else if (!(b.v_bottom - v0 > kHorizonMargin)) {
      reason = "above-horizon";
    }
    if (reason) {
      out.rejected.push_back({i, reason});
    } else {
      out.kept.push_back(b);
      out.kept_indices.push_back(i);
    }
  }
  return out;
}

}  // namespace gscale
