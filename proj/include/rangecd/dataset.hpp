#ifndef RANGECD_DATASET_HPP
#define RANGECD_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rangecd/geometry.hpp"
#include "rangecd/projection.hpp"

namespace rangecd {

/// Axis-aligned box obstacle.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // full extents
};

/// Vertical cylinder standing on the ground plane.
struct Cylinder {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.3;
  double height = 2.0;
};

/// Object inserted between the teach and repeat passes.
struct ChangeObject {
  Box shape;
  bool reflective = true;
};

struct VegetationSpec {
  double density = 0.0;       // clutter points per m^2 of ground
  double jitter_sigma = 0.05; // per-repeat position resampling, metres
  double visibility = 1.0;    // per-frame fraction of clutter returned
  double height_max = 1.0;    // clutter z drawn uniformly in (0, height_max]
};

/// Synthetic teach-and-repeat scene description.
struct SceneSpec {
  double ground_extent = 30.0;  // square ground patch side length, centred at origin
  std::vector<Box> boxes;
  std::vector<Cylinder> cylinders;
  VegetationSpec vegetation;
  std::vector<ChangeObject> changes;

  std::vector<Eigen::Vector2d> path;  // sensor path polyline, xy
  double sensor_height = 0.8;         // metres above ground
  double frame_spacing = 0.3;         // metres of driving between stored frames
  double range_noise_sigma = 0.01;    // metres

  // Intensity model: background uniform in [0, background_intensity_max],
  // reflective surfaces uniform in [reflective_intensity_min, 1].
  double background_intensity_max = 0.4;
  double reflective_intensity_min = 0.9;

  ProjectionConfig projection;  // sampler ray grid and range limit

  void validate() const;
};

/// Reads the documented scene-spec TOML file.
SceneSpec load_scene_spec(const std::filesystem::path& path);

/// One repeat-pass observation.
struct Frame {
  PointCloud live;          // sensor frame, carries intensity
  RigidTransform pose;      // world_T_sensor
  PointCloud map_view;      // map cropped to max_range, sensor frame
  std::vector<Label> truth; // one label per live point
  double odometer = 0.0;    // metres travelled along the path
};

struct Sequence {
  PointCloud map;  // world frame, teach pass
  std::vector<Frame> frames;
  std::vector<Eigen::Vector2d> taught_path;  // for corridor evaluation
};

/// Teach pass (no change objects, base vegetation) builds the map; repeat
/// pass inserts change objects and jitters vegetation. Deterministic per
/// seed.
Sequence generate_sequence(const SceneSpec& spec, std::uint64_t seed);

/// Retroreflective auto-labeller: Changed iff intensity >= threshold.
/// Throws when the cloud carries no intensity.
std::vector<Label> reflective_label(const PointCloud& cloud, double intensity_threshold);

/// Returns the cloud with its intensity channel removed, so labelling
/// information cannot leak into model inputs.
PointCloud strip_intensity(const PointCloud& cloud);

/// Index pair (i, i + spacing) for every window position.
struct FramePair {
  std::size_t first = 0;
  std::size_t second = 0;
};

std::vector<FramePair> pair_frames(std::size_t frame_count, std::size_t spacing);

/// Sequence directory layout: map.ply, frames/NNNN.ply, poses.csv,
/// truth/NNNN.csv.
void save_sequence(const Sequence& seq, const std::filesystem::path& dir);

/// Map views are recomputed at load time by cropping the map to
/// `max_range` around each stored pose.
Sequence load_sequence(const std::filesystem::path& dir, double max_range = 10.0);

/// Map cropped to a ball around the sensor, expressed in the sensor frame.
PointCloud crop_map_view(const PointCloud& world_map, const RigidTransform& pose,
                         double max_range);

}  // namespace rangecd

#endif
