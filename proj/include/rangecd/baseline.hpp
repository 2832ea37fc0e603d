#ifndef RANGECD_BASELINE_HPP
#define RANGECD_BASELINE_HPP

#include <vector>

#include "rangecd/geometry.hpp"

namespace rangecd {

struct BaselineConfig {
  double distance_threshold = 0.3;  // metres

  void validate() const {
    if (!(distance_threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  }
};

/// Classical nearest-neighbour change detector: a live point is Changed
/// iff its exact NN distance to the map exceeds the threshold.
std::vector<Label> nn_classify(const PointCloud& scan, const SpatialIndex& map_index,
                               const BaselineConfig& cfg);

}  // namespace rangecd

#endif
