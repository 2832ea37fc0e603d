#include "rangecd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rangecd {

ConfusionCounts confusion(const std::vector<Label>& pred, const std::vector<Label>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("label length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == Label::Changed;
    const bool t = truth[i] == Label::Changed;
    if (p && t) ++c.tp;
    else if (p && !t) ++c.fp;
    else if (!p && t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ConfusionCounts confusion_masked(const std::vector<Label>& pred, const std::vector<Label>& truth,
                                 const std::vector<bool>& mask) {
  if (pred.size() != truth.size() || pred.size() != mask.size()) {
    throw std::invalid_argument("label/mask length mismatch");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const bool p = pred[i] == Label::Changed;
    const bool t = truth[i] == Label::Changed;
    if (p && t) ++c.tp;
    else if (p && !t) ++c.fp;
    else if (!p && t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double iou_changed(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double iou_consistent(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tn + c.fp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tn) / static_cast<double>(denom);
}

double miou(const ConfusionCounts& c) { return 0.5 * (iou_changed(c) + iou_consistent(c)); }

double iou(const std::vector<Label>& pred, const std::vector<Label>& truth, Label cls) {
  const ConfusionCounts c = confusion(pred, truth);
  return cls == Label::Changed ? iou_changed(c) : iou_consistent(c);
}

double point_polyline_distance(const Eigen::Vector2d& p,
                               const std::vector<Eigen::Vector2d>& polyline) {
  if (polyline.empty()) throw std::invalid_argument("empty polyline");
  if (polyline.size() == 1) return (p - polyline[0]).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Eigen::Vector2d a = polyline[i];
    const Eigen::Vector2d d = polyline[i + 1] - a;
    const double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (a + t * d)).norm());
  }
  return best;
}

std::vector<bool> corridor_filter(const PointCloud& world_points, const Point3& sensor_position,
                                  const Corridor& corridor) {
  corridor.validate();
  std::vector<bool> mask(world_points.size(), false);
  for (std::size_t i = 0; i < world_points.size(); ++i) {
    const Point3& p = world_points.points[i];
    if ((p - sensor_position).norm() > corridor.range_limit) continue;
    const double lateral = point_polyline_distance({p.x(), p.y()}, corridor.path);
    mask[i] = lateral <= 0.5 * corridor.width;
  }
  return mask;
}

}  // namespace rangecd
