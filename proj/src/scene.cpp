#include "gscale/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gscale {

void validate(const DetectionBox& box) {
  for (double x : {box.u_left, box.u_right, box.v_top, box.v_bottom, box.weight}) {
    if (!std::isfinite(x)) throw InputError("detection box has non-finite coordinates");
  }
  if (!(box.u_left < box.u_right)) throw InputError("detection box needs u_left < u_right");
  if (!(box.v_top < box.v_bottom)) throw InputError("detection box needs v_top < v_bottom");
  if (!(box.weight > 0)) throw InputError("detection weight must be positive");
}

double weighted_median(std::vector<double> values, std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw std::invalid_argument("weighted_median needs matching non-empty inputs");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && weights[a] < weights[b]);
  });
  // Sum in sorted order so the result does not depend on input order.
  double total = 0.0;
  for (std::size_t k : order) total += weights[k];
  double cumulative = 0.0;
  for (std::size_t k : order) {
    cumulative += weights[k];
    if (cumulative >= 0.5 * total) return values[k];
  }
  return values[order.back()];
}

}  // namespace gscale
