#include "rangecd/costmap.hpp"

#include <cmath>

namespace rangecd {

Eigen::Vector2d CostMap::cell_center(int row, int col) const {
  const double x = origin.translation.x() - config.half_extent + (col + 0.5) * config.cell_size;
  const double y = origin.translation.y() - config.half_extent + (row + 0.5) * config.cell_size;
  return {x, y};
}

bool CostMap::world_to_cell(const Eigen::Vector2d& xy, int& row, int& col) const {
  const double fx = (xy.x() - (origin.translation.x() - config.half_extent)) / config.cell_size;
  const double fy = (xy.y() - (origin.translation.y() - config.half_extent)) / config.cell_size;
  const int c = static_cast<int>(std::floor(fx));
  const int r = static_cast<int>(std::floor(fy));
  if (r < 0 || c < 0 || r >= size() || c >= size()) return false;
  row = r;
  col = c;
  return true;
}

CostMap inflate(const PointCloud& changed_points, double robot_radius, const CostMapConfig& cfg,
                const RigidTransform& origin) {
  if (!(robot_radius > 0.0)) throw std::invalid_argument("robot radius must be positive");
  cfg.validate();
  CostMap map;
  map.config = cfg;
  map.origin = origin;
  const int n = map.size();
  map.cells.assign(static_cast<std::size_t>(n) * n, 0.0);

  std::vector<std::pair<int, int>> marked;
  for (const auto& p : changed_points.points) {
    int r, c;
    if (map.world_to_cell({p.x(), p.y()}, r, c)) {
      if (map.at(r, c) == 0.0) marked.emplace_back(r, c);
      map.at(r, c) = 1.0;
    }
  }

  const int reach = static_cast<int>(std::ceil(robot_radius / cfg.cell_size));
  const double radius_cells2 = (robot_radius / cfg.cell_size) * (robot_radius / cfg.cell_size);
  for (const auto& [mr, mc] : marked) {
    for (int dr = -reach; dr <= reach; ++dr) {
      const int r = mr + dr;
      if (r < 0 || r >= n) continue;
      for (int dc = -reach; dc <= reach; ++dc) {
        const int c = mc + dc;
        if (c < 0 || c >= n) continue;
        if (static_cast<double>(dr) * dr + static_cast<double>(dc) * dc <= radius_cells2) {
          map.at(r, c) = 1.0;
        }
      }
    }
  }
  return map;
}

CostMap queue_merge(const std::deque<CostMap>& queue, int depth) {
  if (queue.empty()) throw std::invalid_argument("queue_merge: empty queue");
  if (depth < 1) throw std::invalid_argument("queue_merge: depth must be >= 1");
  CostMap merged = queue.back();
  const int used = std::min<int>(depth, static_cast<int>(queue.size()));
  const int n = merged.size();
  for (int k = 1; k < used; ++k) {
    const CostMap& older = queue[queue.size() - 1 - k];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        int orow, ocol;
        if (older.world_to_cell(merged.cell_center(r, c), orow, ocol)) {
          merged.at(r, c) = std::max(merged.at(r, c), older.at(orow, ocol));
        }
      }
    }
  }
  return merged;
}

}  // namespace rangecd
