#ifndef RANGECD_EVAL_HPP
#define RANGECD_EVAL_HPP

#include <vector>

#include "rangecd/geometry.hpp"

namespace rangecd {

/// Planning corridor around the taught path, in the world frame.
struct Corridor {
  std::vector<Eigen::Vector2d> path;  // taught path polyline, xy
  double width = 5.0;                 // metres
  double range_limit = 10.0;          // metres from the sensor

  void validate() const {
    if (!(width > 0.0)) throw std::invalid_argument("corridor width must be positive");
    if (path.size() < 2) throw std::invalid_argument("corridor path needs >= 2 vertices");
  }
};

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

struct EvalReport {
  ConfusionCounts full;
  ConfusionCounts corridor;
  double iou_changed = 0.0;
  double corridor_iou_changed = 0.0;
  double miou = 0.0;
  double runtime_mean_ms = 0.0;
  double runtime_std_ms = 0.0;
  std::uint64_t frames = 0;
};

ConfusionCounts confusion(const std::vector<Label>& pred, const std::vector<Label>& truth);
ConfusionCounts confusion_masked(const std::vector<Label>& pred, const std::vector<Label>& truth,
                                 const std::vector<bool>& mask);

/// IoU of one class; defined as 1 when both prediction and truth sets for
/// the class are empty.
double iou(const std::vector<Label>& pred, const std::vector<Label>& truth, Label cls);

double iou_changed(const ConfusionCounts& c);
double iou_consistent(const ConfusionCounts& c);
double miou(const ConfusionCounts& c);

/// Distance from a point to a polyline (closest segment), in xy.
double point_polyline_distance(const Eigen::Vector2d& p,
                               const std::vector<Eigen::Vector2d>& polyline);

/// Selects points within width/2 lateral distance of the taught path and
/// within range_limit of the sensor position. Points are world-frame.
std::vector<bool> corridor_filter(const PointCloud& world_points, const Point3& sensor_position,
                                  const Corridor& corridor);

}  // namespace rangecd

#endif
