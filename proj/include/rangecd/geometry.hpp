#ifndef RANGECD_GEOMETRY_HPP
#define RANGECD_GEOMETRY_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rangecd {

using Point3 = Eigen::Vector3d;

/// Per-point binary classification against the map.
enum class Label : std::uint8_t { Consistent = 0, Changed = 1 };

/// Point cloud with optional per-point intensity in [0,1] and a symbolic
/// frame tag. Intensity, when present, has exactly one value per point.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<double>> intensity;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool has_intensity() const { return intensity.has_value(); }

  void check_consistent() const {
    if (intensity && intensity->size() != points.size()) {
      throw std::invalid_argument("intensity size does not match point count");
    }
  }
};

/// Proper rigid transform (rotation orthonormal, det +1).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return rotation * p + translation; }

  RigidTransform compose(const RigidTransform& other) const {
    // this * other: apply `other` first.
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  /// Checks orthonormality and det(+1) to 1e-9.
  bool is_valid(double tol = 1e-9) const;
};

/// Rotation about +z by `angle` radians.
RigidTransform rotation_z(double angle);

/// Applies T to every point; intensity and order preserved.
PointCloud transform(const PointCloud& cloud, const RigidTransform& T);

/// Centroid-per-voxel downsampling. Voxel key is floor(coord/voxel) per
/// axis. Output order follows first appearance of each voxel, so the
/// result is deterministic for a fixed input order. Intensity, when
/// present, is averaged per voxel.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

/// As voxel_downsample, but also reports which output point each input
/// point collapsed into (used to propagate per-representative labels back
/// to the full-resolution cloud).
PointCloud voxel_downsample_with_map(const PointCloud& cloud, double voxel,
                                     std::vector<std::uint32_t>& point_to_rep);

/// Immutable exact nearest-neighbour index over a cloud's positions.
/// Queries from multiple threads are safe after construction.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);

  struct Result {
    double distance;
    std::uint32_t index;
  };

  /// Exact Euclidean nearest neighbour; ties broken by lowest point index.
  /// Throws if the indexed cloud is empty.
  Result nearest(const Point3& q) const;

  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }

 private:
  struct Node {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t point = 0;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::uint32_t* begin, std::uint32_t* end, int depth);
  void search(std::int32_t node, const Point3& q, double& best_d2,
              std::uint32_t& best_idx) const;

  std::vector<Point3> pts_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace rangecd

#endif
