#include "rangecd/losses.hpp"

namespace rangecd {

LossTerm chamfer_loss(const PointCloud& scan, const SpatialIndex& map_index,
                      const ChangeProbabilities& p) {
  if (map_index.empty()) throw std::runtime_error("chamfer_loss: empty map");
  if (p.size() != scan.size()) {
    throw std::invalid_argument("chamfer_loss: probability size mismatch");
  }
  const std::size_t n = scan.size();
  LossTerm out;
  out.gradient.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = map_index.nearest(scan.points[i]).distance;
    out.value += (1.0 - p[i]) * d;
    out.gradient[i] = -d / static_cast<double>(n);
  }
  out.value /= static_cast<double>(n);
  return out;
}

LossTerm class_balance_loss(const ChangeProbabilities& p) {
  if (p.empty()) throw std::invalid_argument("class_balance_loss: empty scan");
  const double n = static_cast<double>(p.size());
  LossTerm out;
  out.gradient.assign(p.size(), 1.0 / n);
  for (double pi : p) out.value += pi;
  out.value /= n;
  return out;
}

TemporalLossResult temporal_loss(const PointCloud& scan0, const ChangeProbabilities& p0,
                                 const PointCloud& scan1, const ChangeProbabilities& p1) {
  if (scan0.empty() || scan1.empty()) {
    throw std::invalid_argument("temporal_loss: scans must be non-empty");
  }
  if (p0.size() != scan0.size() || p1.size() != scan1.size()) {
    throw std::invalid_argument("temporal_loss: probability size mismatch");
  }
  SpatialIndex index0(scan0);
  SpatialIndex index1(scan1);
  const double n0 = static_cast<double>(scan0.size());
  const double n1 = static_cast<double>(scan1.size());

  TemporalLossResult out;
  out.gradient0.resize(scan0.size());
  out.gradient1.resize(scan1.size());
  for (std::size_t i = 0; i < scan0.size(); ++i) {
    const double d = index1.nearest(scan0.points[i]).distance;
    out.value += p0[i] * d / n0;
    out.gradient0[i] = d / n0;
  }
  for (std::size_t i = 0; i < scan1.size(); ++i) {
    const double d = index0.nearest(scan1.points[i]).distance;
    out.value += p1[i] * d / n1;
    out.gradient1[i] = d / n1;
  }
  return out;
}

LossBreakdown total_loss(const PointCloud& scan0, const SpatialIndex& map0,
                         const ChangeProbabilities& p0, const PointCloud& scan1,
                         const SpatialIndex& map1, const ChangeProbabilities& p1,
                         const LossWeights& weights) {
  weights.validate();
  const LossTerm cham0 = chamfer_loss(scan0, map0, p0);
  const LossTerm cham1 = chamfer_loss(scan1, map1, p1);
  const LossTerm cls0 = class_balance_loss(p0);
  const LossTerm cls1 = class_balance_loss(p1);
  const TemporalLossResult temp = temporal_loss(scan0, p0, scan1, p1);

  LossBreakdown out;
  out.chamfer = 0.5 * (cham0.value + cham1.value);
  out.class_balance = 0.5 * (cls0.value + cls1.value);
  out.temporal = temp.value;
  out.total = out.chamfer + weights.lambda1 * out.class_balance + weights.lambda2 * out.temporal;

  out.gradient0.resize(p0.size());
  out.gradient1.resize(p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) {
    out.gradient0[i] = 0.5 * cham0.gradient[i] + weights.lambda1 * 0.5 * cls0.gradient[i] +
                       weights.lambda2 * temp.gradient0[i];
  }
  for (std::size_t i = 0; i < p1.size(); ++i) {
    out.gradient1[i] = 0.5 * cham1.gradient[i] + weights.lambda1 * 0.5 * cls1.gradient[i] +
                       weights.lambda2 * temp.gradient1[i];
  }
  return out;
}

}  // namespace rangecd
