#ifndef RANGECD_COSTMAP_HPP
#define RANGECD_COSTMAP_HPP

#include <deque>
#include <vector>

#include "rangecd/geometry.hpp"

namespace rangecd {

struct CostMapConfig {
  double cell_size = 0.1;     // metres per cell
  double half_extent = 12.8;  // covers the 10 m planning horizon with margin

  int cells() const { return static_cast<int>(std::ceil(2.0 * half_extent / cell_size)); }

  void validate() const {
    if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
    if (half_extent < 10.0) throw std::invalid_argument("grid must cover the 10 m horizon");
  }
};

/// Planar occupancy cost grid, binary costs in {0,1}. `origin` places the
/// grid centre (the robot) in the world frame; cells are axis-aligned with
/// the world after projecting onto the xy plane.
struct CostMap {
  CostMapConfig config;
  RigidTransform origin;  // world_T_robot of the frame the map was built in
  std::vector<double> cells;  // row-major, size cells()^2

  int size() const { return config.cells(); }
  double& at(int row, int col) { return cells[static_cast<std::size_t>(row) * size() + col]; }
  double at(int row, int col) const { return cells[static_cast<std::size_t>(row) * size() + col]; }

  /// World xy of a cell centre.
  Eigen::Vector2d cell_center(int row, int col) const;
  /// Cell containing a world xy position; false when outside the grid.
  bool world_to_cell(const Eigen::Vector2d& xy, int& row, int& col) const;
};

/// Projects changed points into the grid and dilates by the robot radius:
/// every cell whose centre lies within `robot_radius` of a marked cell
/// centre is set to 1.
CostMap inflate(const PointCloud& changed_points, double robot_radius,
                const CostMapConfig& cfg, const RigidTransform& origin = {});

/// Cellwise maximum over the newest `depth` maps, each re-registered into
/// the newest map's frame using the stored origins.
CostMap queue_merge(const std::deque<CostMap>& queue, int depth);

}  // namespace rangecd

#endif
