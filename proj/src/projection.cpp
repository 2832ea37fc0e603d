#include "rangecd/projection.hpp"

#include <cmath>
#include <numbers>

namespace rangecd {

namespace {
constexpr double kDegPerRad = 180.0 / std::numbers::pi;
}

PixelCoords project_point(const Point3& p, const ProjectionConfig& cfg) {
  cfg.validate();
  const double r = p.norm();
  if (r <= 0.0) throw std::invalid_argument("cannot project zero-norm point");
  const double azimuth = std::atan2(p.y(), p.x());
  const double elevation_deg = std::asin(p.z() / r) * kDegPerRad;
  PixelCoords out;
  out.u = 0.5 * (1.0 - azimuth / std::numbers::pi) * cfg.width;
  out.v = (1.0 - (elevation_deg + cfg.fov_down_deg) / cfg.fov_deg) * cfg.height;
  out.range = r;
  return out;
}

Point3 pixel_ray(int v, int u, const ProjectionConfig& cfg) {
  const double azimuth = std::numbers::pi * (1.0 - 2.0 * (u + 0.5) / cfg.width);
  const double elevation_deg =
      cfg.fov_deg * (1.0 - (v + 0.5) / cfg.height) - cfg.fov_down_deg;
  const double elevation = elevation_deg / kDegPerRad;
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

bool point_pixel(const Point3& p, const ProjectionConfig& cfg, int& v, int& u) {
  const double r = p.norm();
  if (r <= 0.0 || r > cfg.max_range) return false;
  const PixelCoords c = project_point(p, cfg);
  const int vi = static_cast<int>(std::floor(c.v));
  if (vi < 0 || vi >= cfg.height) return false;
  long ui = static_cast<long>(std::floor(c.u)) % cfg.width;
  if (ui < 0) ui += cfg.width;
  v = vi;
  u = static_cast<int>(ui);
  return true;
}

RangeImage render(const PointCloud& cloud, const ProjectionConfig& cfg) {
  cfg.validate();
  RangeImage img;
  img.config = cfg;
  img.height = cfg.height;
  img.width = cfg.width;
  img.ranges.assign(static_cast<std::size_t>(cfg.height) * cfg.width, RangeImage::kEmptyRange);
  img.index_map.assign(img.ranges.size(), RangeImage::kNoPoint);

  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    int v, u;
    if (!point_pixel(cloud.points[i], cfg, v, u)) continue;
    const double r = cloud.points[i].norm();
    const std::size_t k = static_cast<std::size_t>(v) * cfg.width + u;
    if (img.index_map[k] == RangeImage::kNoPoint || r < img.ranges[k]) {
      img.ranges[k] = r;
      img.index_map[k] = static_cast<std::int32_t>(i);
    }
  }
  return img;
}

std::vector<Label> backproject_labels(const std::vector<Label>& pixel_labels,
                                      const RangeImage& img, const PointCloud& cloud) {
  if (pixel_labels.size() != img.ranges.size()) {
    throw std::invalid_argument("label raster does not match range image dimensions");
  }
  const ProjectionConfig& cfg = img.config;
  std::vector<Label> out(cloud.points.size(), Label::Consistent);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    int v, u;
    if (!point_pixel(cloud.points[i], cfg, v, u)) continue;
    const std::size_t k = static_cast<std::size_t>(v) * img.width + u;
    if (img.index_map[k] != RangeImage::kNoPoint) out[i] = pixel_labels[k];
  }
  return out;
}

std::vector<double> backproject_values(const std::vector<double>& pixel_values,
                                       const RangeImage& img, const PointCloud& cloud,
                                       double fill) {
  if (pixel_values.size() != img.ranges.size()) {
    throw std::invalid_argument("value raster does not match range image dimensions");
  }
  const ProjectionConfig& cfg = img.config;
  std::vector<double> out(cloud.points.size(), fill);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    int v, u;
    if (!point_pixel(cloud.points[i], cfg, v, u)) continue;
    const std::size_t k = static_cast<std::size_t>(v) * img.width + u;
    if (img.index_map[k] != RangeImage::kNoPoint) out[i] = pixel_values[k];
  }
  return out;
}

}  // namespace rangecd
