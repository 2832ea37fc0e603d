#ifndef RANGECD_PROJECTION_HPP
#define RANGECD_PROJECTION_HPP

#include <cstdint>
#include <vector>

#include "rangecd/geometry.hpp"

namespace rangecd {

/// Spherical range-image geometry. Angles are degrees; fov_down is the
/// vertical extent below the horizon.
struct ProjectionConfig {
  int height = 32;
  int width = 256;
  double fov_deg = 25.0;
  double fov_down_deg = 12.5;
  double max_range = 10.0;

  void validate() const {
    if (height < 1 || width < 1) throw std::invalid_argument("H,W must be >= 1");
    if (!(fov_deg > 0.0 && fov_deg <= 180.0)) throw std::invalid_argument("fov out of range");
    if (fov_down_deg < 0.0 || fov_down_deg > fov_deg) {
      throw std::invalid_argument("fov_down out of range");
    }
    if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be positive");
  }
};

/// Range raster plus pixel -> source-point index map. Empty pixels hold
/// range 0 and index -1; real returns always have r > 0.
struct RangeImage {
  static constexpr double kEmptyRange = 0.0;
  static constexpr std::int32_t kNoPoint = -1;

  ProjectionConfig config;  // geometry the image was rendered with
  int height = 0;
  int width = 0;
  std::vector<double> ranges;        // row-major H*W
  std::vector<std::int32_t> index_map;

  double range_at(int v, int u) const { return ranges[static_cast<std::size_t>(v) * width + u]; }
  std::int32_t index_at(int v, int u) const {
    return index_map[static_cast<std::size_t>(v) * width + u];
  }
  bool occupied(int v, int u) const { return index_at(v, u) != kNoPoint; }
};

struct PixelCoords {
  double u;  // continuous column; azimuth, periodic in W
  double v;  // continuous row
  double range;
};

/// Maps a 3D point into continuous image coordinates:
///   u = 0.5 * (1 - atan2(y,x)/pi) * W
///   v = (1 - (asin(z/r) + fov_down) / fov) * H
/// Throws on zero-norm input.
PixelCoords project_point(const Point3& p, const ProjectionConfig& cfg);

/// Inverse of project_point for a pixel centre: the unit ray direction of
/// pixel (v,u) sampled at its centre. Used by the synthetic scan sampler.
Point3 pixel_ray(int v, int u, const ProjectionConfig& cfg);

/// Renders the minimum-range point per pixel frustum. Points outside the
/// vertical fov or beyond max_range are dropped; azimuth wraps modulo W.
RangeImage render(const PointCloud& cloud, const ProjectionConfig& cfg);

/// Discrete pixel of a point, or false when it falls outside the raster.
bool point_pixel(const Point3& p, const ProjectionConfig& cfg, int& v, int& u);

/// Back-projects per-pixel labels to all n source points. A point takes
/// the label of the pixel it projects into when that pixel is populated
/// (including points occluded behind the pixel winner); otherwise
/// Consistent.
std::vector<Label> backproject_labels(const std::vector<Label>& pixel_labels,
                                      const RangeImage& img, const PointCloud& cloud);

/// Same diffusion rule for continuous per-pixel values (e.g. softmax
/// probabilities); points outside populated pixels receive `fill`.
std::vector<double> backproject_values(const std::vector<double>& pixel_values,
                                       const RangeImage& img, const PointCloud& cloud,
                                       double fill = 0.0);

}  // namespace rangecd

#endif
