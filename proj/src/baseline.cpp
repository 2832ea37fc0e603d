#include "rangecd/baseline.hpp"

namespace rangecd {

std::vector<Label> nn_classify(const PointCloud& scan, const SpatialIndex& map_index,
                               const BaselineConfig& cfg) {
  cfg.validate();
  if (map_index.empty()) throw std::runtime_error("nn_classify: empty map");
  std::vector<Label> labels(scan.size(), Label::Consistent);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (map_index.nearest(scan.points[i]).distance > cfg.distance_threshold) {
      labels[i] = Label::Changed;
    }
  }
  return labels;
}

}  // namespace rangecd
