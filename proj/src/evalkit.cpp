#include "gscale/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gscale {

Summary summarize(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("cannot summarize an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Sorted order makes the sums independent of input order.
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0;
  for (double x : sorted) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n), sorted[(sorted.size() - 1) / 2]};
}

MetricReport compute_metrics(const SceneEstimate& estimate, const GroundTruth& truth,
                             std::optional<std::span<const double>> upright_ratios) {
  const std::size_t n = estimate.heights_m.size();
  if (estimate.object_indices.size() != n)
    throw std::invalid_argument("estimate has " + std::to_string(n) + " heights but " +
                                std::to_string(estimate.object_indices.size()) +
                                " object indices");
  if (upright_ratios && upright_ratios->size() != n)
    throw std::invalid_argument("one upright ratio per estimated object is required");

  MetricReport r;
  r.e_hcam = std::abs(estimate.cam_height_m - truth.cam_height_m);
  if (!truth.heights_m.empty()) {
    const std::size_t total = n + estimate.excluded.size();
    if (truth.heights_m.size() != total)
      throw std::invalid_argument("truth lists " + std::to_string(truth.heights_m.size()) +
                                  " objects but the estimate covers " + std::to_string(total));
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = estimate.object_indices[i];
      if (k >= truth.heights_m.size())
        throw std::invalid_argument("object index " + std::to_string(k) + " has no truth");
      double h = estimate.heights_m[i];
      if (upright_ratios) h /= (*upright_ratios)[i];
      r.e_hobj.push_back(std::abs(h - truth.heights_m[k]));
      sum += r.e_hobj.back();
    }
    if (n > 0) r.e_hobj_mean = sum / static_cast<double>(n);
  }
  if (!estimate.layers.empty()) {
    for (double res : estimate.layers.back().residuals) r.abs_residuals.push_back(std::abs(res));
    if (!r.abs_residuals.empty()) r.lvt = summarize(r.abs_residuals).mean;
  }
  return r;
}

std::vector<std::pair<double, double>> threshold_curve(std::span<const double> residuals,
                                                       std::span<const double> thresholds) {
  if (residuals.empty()) throw std::invalid_argument("threshold curve needs residuals");
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    out.emplace_back(t, static_cast<double>(count) / static_cast<double>(sorted.size()));
  }
  return out;
}

AggregateReport aggregate(std::span<const MetricReport> reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to aggregate");
  std::vector<double> hcam, hobj, res;
  for (const auto& r : reports) {
    hcam.push_back(r.e_hcam);
    if (r.e_hobj_mean) hobj.push_back(*r.e_hobj_mean);
    res.insert(res.end(), r.abs_residuals.begin(), r.abs_residuals.end());
  }
  AggregateReport a;
  a.scenes = reports.size();
  a.e_hcam = summarize(hcam);
  if (!hobj.empty()) a.e_hobj = summarize(hobj);
  if (!res.empty()) a.lvt = summarize(res);
  return a;
}

}  // namespace gscale
