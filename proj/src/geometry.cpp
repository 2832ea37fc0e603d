#include "rangecd/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace rangecd {

bool RigidTransform::is_valid(double tol) const {
  Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform rotation_z(double angle) {
  RigidTransform T;
  const double c = std::cos(angle), s = std::sin(angle);
  T.rotation << c, -s, 0, s, c, 0, 0, 0, 1;
  return T;
}

PointCloud transform(const PointCloud& cloud, const RigidTransform& T) {
  cloud.check_consistent();
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.intensity = cloud.intensity;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(T.apply(p));
  return out;
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.x) * 73856093u;
    h ^= static_cast<std::size_t>(k.y) * 19349669u;
    h ^= static_cast<std::size_t>(k.z) * 83492791u;
    return h;
  }
};

VoxelKey key_of(const Point3& p, double voxel) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

}  // namespace

PointCloud voxel_downsample_with_map(const PointCloud& cloud, double voxel,
                                     std::vector<std::uint32_t>& point_to_rep) {
  if (!(voxel > 0.0)) throw std::invalid_argument("voxel size must be positive");
  cloud.check_consistent();

  struct Acc {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double intensity_sum = 0.0;
    std::uint32_t count = 0;
    std::uint32_t out_index = 0;
  };
  std::unordered_map<VoxelKey, Acc, VoxelKeyHash> grid;
  grid.reserve(cloud.points.size());

  point_to_rep.resize(cloud.points.size());
  std::uint32_t next_out = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    auto [it, inserted] = grid.try_emplace(key_of(cloud.points[i], voxel));
    if (inserted) it->second.out_index = next_out++;
    it->second.sum += cloud.points[i];
    if (cloud.intensity) it->second.intensity_sum += (*cloud.intensity)[i];
    ++it->second.count;
    point_to_rep[i] = it->second.out_index;
  }

  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.resize(next_out);
  if (cloud.intensity) out.intensity = std::vector<double>(next_out, 0.0);
  for (const auto& [key, acc] : grid) {
    out.points[acc.out_index] = acc.sum / acc.count;
    if (out.intensity) (*out.intensity)[acc.out_index] = acc.intensity_sum / acc.count;
  }
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  std::vector<std::uint32_t> unused;
  return voxel_downsample_with_map(cloud, voxel, unused);
}

SpatialIndex::SpatialIndex(const PointCloud& cloud) : pts_(cloud.points) {
  if (pts_.empty()) return;
  std::vector<std::uint32_t> order(pts_.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  nodes_.reserve(pts_.size());
  root_ = build(order.data(), order.data() + order.size(), 0);
}

std::int32_t SpatialIndex::build(std::uint32_t* begin, std::uint32_t* end, int depth) {
  if (begin == end) return -1;
  const int axis = depth % 3;
  std::uint32_t* mid = begin + (end - begin) / 2;
  std::nth_element(begin, mid, end, [&](std::uint32_t a, std::uint32_t b) {
    if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
    return a < b;
  });
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({-1, -1, *mid, static_cast<std::uint8_t>(axis)});
  std::int32_t l = build(begin, mid, depth + 1);
  std::int32_t r = build(mid + 1, end, depth + 1);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void SpatialIndex::search(std::int32_t node, const Point3& q, double& best_d2,
                          std::uint32_t& best_idx) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Point3& p = pts_[n.point];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && n.point < best_idx)) {
    best_d2 = d2;
    best_idx = n.point;
  }
  const double delta = q[n.axis] - p[n.axis];
  const std::int32_t near = delta < 0 ? n.left : n.right;
  const std::int32_t far = delta < 0 ? n.right : n.left;
  search(near, q, best_d2, best_idx);
  // The far side may still hold an equal-distance lower index.
  if (delta * delta <= best_d2) search(far, q, best_d2, best_idx);
}

SpatialIndex::Result SpatialIndex::nearest(const Point3& q) const {
  if (pts_.empty()) throw std::runtime_error("nearest() on empty map");
  double best_d2 = std::numeric_limits<double>::infinity();
  std::uint32_t best_idx = std::numeric_limits<std::uint32_t>::max();
  search(root_, q, best_d2, best_idx);
  return {std::sqrt(best_d2), best_idx};
}

}  // namespace rangecd
