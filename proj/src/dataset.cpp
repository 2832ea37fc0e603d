#include "rangecd/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "rangecd/io.hpp"
#include "rangecd/toml_lite.hpp"

namespace rangecd {

void SceneSpec::validate() const {
  projection.validate();
  if (path.size() < 2) throw std::invalid_argument("sensor path needs >= 2 vertices");
  double length = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) length += (path[i + 1] - path[i]).norm();
  if (!(length > 0.0)) throw std::invalid_argument("sensor path has zero length");
  if (!(frame_spacing > 0.0)) throw std::invalid_argument("frame spacing must be positive");
  if (vegetation.jitter_sigma < 0.0) throw std::invalid_argument("jitter sigma must be >= 0");
  if (vegetation.visibility < 0.0 || vegetation.visibility > 1.0) {
    throw std::invalid_argument("vegetation visibility must be in [0,1]");
  }
  if (!(ground_extent > 0.0)) throw std::invalid_argument("ground extent must be positive");
}

namespace {

constexpr double kRayEps = 1e-9;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  bool is_change = false;
  bool reflective = false;
};

bool ray_ground(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double extent, double& t) {
  if (std::abs(d.z()) < kRayEps) return false;
  const double tt = -o.z() / d.z();
  if (tt <= kRayEps) return false;
  const Eigen::Vector3d hit = o + tt * d;
  if (std::abs(hit.x()) > 0.5 * extent || std::abs(hit.y()) > 0.5 * extent) return false;
  t = tt;
  return true;
}

bool ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box& box, double& t) {
  double tmin = kRayEps, tmax = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = box.center[axis] - 0.5 * box.size[axis];
    const double hi = box.center[axis] + 0.5 * box.size[axis];
    if (std::abs(d[axis]) < kRayEps) {
      if (o[axis] < lo || o[axis] > hi) return false;
      continue;
    }
    double t0 = (lo - o[axis]) / d[axis];
    double t1 = (hi - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  t = tmin;
  return true;
}

bool ray_cylinder(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Cylinder& cyl,
                  double& t) {
  const double ox = o.x() - cyl.center.x();
  const double oy = o.y() - cyl.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a < kRayEps) return false;
  const double b = 2.0 * (ox * d.x() + oy * d.y());
  const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  for (double tt : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (tt <= kRayEps) continue;
    const double z = o.z() + tt * d.z();
    if (z < 0.0 || z > cyl.height) continue;
    t = tt;
    return true;
  }
  return false;
}

Hit cast_ray(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const SceneSpec& spec,
             bool with_changes) {
  Hit best;
  double t;
  if (ray_ground(o, d, spec.ground_extent, t) && t < best.t) best = {t, false, false};
  for (const auto& box : spec.boxes) {
    if (ray_box(o, d, box, t) && t < best.t) best = {t, false, false};
  }
  for (const auto& cyl : spec.cylinders) {
    if (ray_cylinder(o, d, cyl, t) && t < best.t) best = {t, false, false};
  }
  if (with_changes) {
    for (const auto& change : spec.changes) {
      if (ray_box(o, d, change.shape, t) && t < best.t) best = {t, true, change.reflective};
    }
  }
  return best;
}

struct PathPose {
  RigidTransform pose;  // world_T_sensor
  double odometer = 0.0;
};

std::vector<PathPose> sample_path(const SceneSpec& spec) {
  std::vector<PathPose> poses;
  double segment_start_s = 0.0;
  double next_s = 0.0;
  for (std::size_t i = 0; i + 1 < spec.path.size(); ++i) {
    const Eigen::Vector2d a = spec.path[i];
    const Eigen::Vector2d b = spec.path[i + 1];
    const double len = (b - a).norm();
    if (len <= 0.0) continue;
    const Eigen::Vector2d dir = (b - a) / len;
    while (next_s <= segment_start_s + len + 1e-12) {
      const double local = next_s - segment_start_s;
      if (local < -1e-12) break;
      const Eigen::Vector2d xy = a + local * dir;
      PathPose pp;
      pp.odometer = next_s;
      pp.pose = rotation_z(std::atan2(dir.y(), dir.x()));
      pp.pose.translation = {xy.x(), xy.y(), spec.sensor_height};
      poses.push_back(pp);
      next_s += spec.frame_spacing;
    }
    segment_start_s += len;
  }
  return poses;
}

std::vector<Eigen::Vector3d> sample_vegetation(const SceneSpec& spec, std::mt19937_64& rng) {
  const double area = spec.ground_extent * spec.ground_extent;
  const auto count = static_cast<std::size_t>(std::llround(spec.vegetation.density * area));
  std::uniform_real_distribution<double> uxy(-0.5 * spec.ground_extent, 0.5 * spec.ground_extent);
  std::uniform_real_distribution<double> uz(0.02, std::max(0.021, spec.vegetation.height_max));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = uxy(rng), y = uxy(rng), z = uz(rng);
    pts.emplace_back(x, y, z);
  }
  return pts;
}

}  // namespace

PointCloud crop_map_view(const PointCloud& world_map, const RigidTransform& pose,
                         double max_range) {
  const RigidTransform sensor_T_world = pose.inverse();
  PointCloud view;
  view.frame_id = "sensor";
  for (const auto& p : world_map.points) {
    if ((p - pose.translation).norm() <= max_range) {
      view.points.push_back(sensor_T_world.apply(p));
    }
  }
  return view;
}

Sequence generate_sequence(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 master(seed);
  std::mt19937_64 veg_rng(master());
  std::mt19937_64 teach_rng(master());
  std::mt19937_64 repeat_rng(master());

  const std::vector<PathPose> poses = sample_path(spec);
  if (poses.empty()) throw std::invalid_argument("path shorter than one frame spacing");

  const std::vector<Eigen::Vector3d> veg_base = sample_vegetation(spec, veg_rng);
  std::normal_distribution<double> jitter(0.0, spec.vegetation.jitter_sigma);
  std::vector<Eigen::Vector3d> veg_repeat = veg_base;
  if (spec.vegetation.jitter_sigma > 0.0) {
    for (auto& p : veg_repeat) {
      p += Eigen::Vector3d(jitter(veg_rng), jitter(veg_rng), jitter(veg_rng));
    }
  }

  std::normal_distribution<double> range_noise(0.0, spec.range_noise_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ProjectionConfig& proj = spec.projection;

  // A vegetation point enters a scan when it is inside the vertical fov
  // and the range limit of the sampler at the given pose.
  auto veg_in_scan = [&](const Eigen::Vector3d& world_pt, const RigidTransform& pose,
                         Eigen::Vector3d& sensor_pt) {
    sensor_pt = pose.inverse().apply(world_pt);
    int v, u;
    return point_pixel(sensor_pt, proj, v, u);
  };

  Sequence seq;
  seq.map.frame_id = "world";
  for (const auto& pp : poses) {
    seq.taught_path.emplace_back(pp.pose.translation.x(), pp.pose.translation.y());
  }

  // Teach pass: no change objects, base vegetation; accumulate the map.
  for (const auto& pp : poses) {
    const Eigen::Vector3d origin = pp.pose.translation;
    for (int v = 0; v < proj.height; ++v) {
      for (int u = 0; u < proj.width; ++u) {
        const Point3 dir_sensor = pixel_ray(v, u, proj);
        const Eigen::Vector3d dir_world = pp.pose.rotation * dir_sensor;
        const Hit hit = cast_ray(origin, dir_world, spec, /*with_changes=*/false);
        const double t = hit.t + range_noise(teach_rng);
        if (!std::isfinite(hit.t) || t <= 0.0 || t > proj.max_range) continue;
        seq.map.points.push_back(origin + t * dir_world);
      }
    }
    for (const auto& veg : veg_base) {
      if (unit(teach_rng) > spec.vegetation.visibility) continue;
      Eigen::Vector3d sensor_pt;
      if (!veg_in_scan(veg, pp.pose, sensor_pt)) continue;
      const double r = sensor_pt.norm();
      const Eigen::Vector3d noisy = veg + range_noise(teach_rng) / r * (veg - origin);
      seq.map.points.push_back(noisy);
    }
  }

  // Repeat pass: change objects present, vegetation jittered per repeat.
  for (const auto& pp : poses) {
    Frame frame;
    frame.pose = pp.pose;
    frame.odometer = pp.odometer;
    frame.live.frame_id = "sensor";
    frame.live.intensity = std::vector<double>();

    std::uniform_real_distribution<double> bg_intensity(0.0, spec.background_intensity_max);
    std::uniform_real_distribution<double> refl_intensity(spec.reflective_intensity_min, 1.0);

    const Eigen::Vector3d origin = pp.pose.translation;
    for (int v = 0; v < proj.height; ++v) {
      for (int u = 0; u < proj.width; ++u) {
        const Point3 dir_sensor = pixel_ray(v, u, proj);
        const Eigen::Vector3d dir_world = pp.pose.rotation * dir_sensor;
        const Hit hit = cast_ray(origin, dir_world, spec, /*with_changes=*/true);
        const double t = hit.t + range_noise(repeat_rng);
        if (!std::isfinite(hit.t) || t <= 0.0 || t > proj.max_range) continue;
        frame.live.points.push_back(t * dir_sensor);
        frame.live.intensity->push_back(hit.reflective ? refl_intensity(repeat_rng)
                                                       : bg_intensity(repeat_rng));
        frame.truth.push_back(hit.is_change ? Label::Changed : Label::Consistent);
      }
    }
    for (const auto& veg : veg_repeat) {
      if (unit(repeat_rng) > spec.vegetation.visibility) continue;
      Eigen::Vector3d sensor_pt;
      if (!veg_in_scan(veg, pp.pose, sensor_pt)) continue;
      const double r = sensor_pt.norm();
      frame.live.points.push_back(sensor_pt + range_noise(repeat_rng) / r * sensor_pt);
      frame.live.intensity->push_back(bg_intensity(repeat_rng));
      frame.truth.push_back(Label::Consistent);
    }

    frame.map_view = crop_map_view(seq.map, pp.pose, proj.max_range);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<Label> reflective_label(const PointCloud& cloud, double intensity_threshold) {
  if (!cloud.has_intensity()) {
    throw std::invalid_argument("reflective_label requires an intensity channel");
  }
  cloud.check_consistent();
  std::vector<Label> labels(cloud.size(), Label::Consistent);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if ((*cloud.intensity)[i] >= intensity_threshold) labels[i] = Label::Changed;
  }
  return labels;
}

PointCloud strip_intensity(const PointCloud& cloud) {
  PointCloud out = cloud;
  out.intensity.reset();
  return out;
}

std::vector<FramePair> pair_frames(std::size_t frame_count, std::size_t spacing) {
  if (frame_count < 2) throw std::invalid_argument("pair_frames needs >= 2 frames");
  if (spacing == 0) throw std::invalid_argument("pair spacing must be >= 1");
  std::vector<FramePair> pairs;
  if (spacing >= frame_count) return pairs;
  for (std::size_t i = 0; i + spacing < frame_count; ++i) pairs.push_back({i, i + spacing});
  return pairs;
}

namespace {

std::string frame_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

}  // namespace

void save_sequence(const Sequence& seq, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "truth");
  write_ply(seq.map, dir / "map.ply");

  std::ofstream poses(dir / "poses.csv");
  poses.precision(17);
  poses << "frame,r00,r01,r02,tx,r10,r11,r12,ty,r20,r21,r22,tz,odometer\n";
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Frame& f = seq.frames[i];
    poses << i;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) poses << "," << f.pose.rotation(row, col);
      poses << "," << f.pose.translation[row];
    }
    poses << "," << f.odometer << "\n";

    write_ply(f.live, dir / "frames" / (frame_name(i) + ".ply"));
    std::ofstream truth(dir / "truth" / (frame_name(i) + ".csv"));
    truth << "index,label\n";
    for (std::size_t k = 0; k < f.truth.size(); ++k) {
      truth << k << "," << static_cast<int>(f.truth[k]) << "\n";
    }
  }
}

Sequence load_sequence(const std::filesystem::path& dir, double max_range) {
  namespace fs = std::filesystem;
  Sequence seq;
  seq.map = read_ply(dir / "map.ply");
  seq.map.frame_id = "world";

  std::ifstream poses(dir / "poses.csv");
  if (!poses) throw std::runtime_error("cannot open " + (dir / "poses.csv").string());
  std::string line;
  std::getline(poses, line);  // header
  while (std::getline(poses, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 14) throw std::runtime_error("malformed poses.csv row");

    Frame frame;
    const auto idx = static_cast<std::size_t>(row[0]);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) frame.pose.rotation(r, c) = row[1 + 4 * r + c];
      frame.pose.translation[r] = row[1 + 4 * r + 3];
    }
    frame.odometer = row[13];
    frame.live = read_ply(dir / "frames" / (frame_name(idx) + ".ply"));
    frame.live.frame_id = "sensor";

    std::ifstream truth(dir / "truth" / (frame_name(idx) + ".csv"));
    if (!truth) throw std::runtime_error("missing truth file for frame " + std::to_string(idx));
    std::string tline;
    std::getline(truth, tline);  // header
    frame.truth.assign(frame.live.size(), Label::Consistent);
    while (std::getline(truth, tline)) {
      if (tline.empty()) continue;
      const std::size_t comma = tline.find(',');
      const auto k = static_cast<std::size_t>(std::stoull(tline.substr(0, comma)));
      const int lab = std::stoi(tline.substr(comma + 1));
      if (k >= frame.truth.size()) throw std::runtime_error("truth index out of range");
      frame.truth[k] = lab == 1 ? Label::Changed : Label::Consistent;
    }
    frame.map_view = crop_map_view(seq.map, frame.pose, max_range);
    seq.taught_path.emplace_back(frame.pose.translation.x(), frame.pose.translation.y());
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  const toml::Table root = toml::parse_file(path.string());
  SceneSpec spec;

  auto vec2 = [](const toml::Array& a) {
    if (a.size() != 2) throw std::runtime_error("expected a 2-element array");
    return Eigen::Vector2d(a[0].number(), a[1].number());
  };
  auto vec3 = [](const toml::Array& a) {
    if (a.size() != 3) throw std::runtime_error("expected a 3-element array");
    return Eigen::Vector3d(a[0].number(), a[1].number(), a[2].number());
  };

  if (auto it = root.tables.find("ground"); it != root.tables.end()) {
    spec.ground_extent = it->second.number_or("extent", spec.ground_extent);
  }
  if (auto it = root.tables.find("sensor"); it != root.tables.end()) {
    const toml::Table& s = it->second;
    spec.sensor_height = s.number_or("height", spec.sensor_height);
    spec.frame_spacing = s.number_or("frame_spacing", spec.frame_spacing);
    spec.range_noise_sigma = s.number_or("range_noise_sigma", spec.range_noise_sigma);
    if (s.has("path")) {
      spec.path.clear();
      for (const auto& v : s.at("path").array()) spec.path.push_back(vec2(v.array()));
    }
  }
  if (auto it = root.tables.find("projection"); it != root.tables.end()) {
    const toml::Table& p = it->second;
    spec.projection.height = static_cast<int>(p.number_or("height", spec.projection.height));
    spec.projection.width = static_cast<int>(p.number_or("width", spec.projection.width));
    spec.projection.fov_deg = p.number_or("fov", spec.projection.fov_deg);
    spec.projection.fov_down_deg = p.number_or("fov_down", spec.projection.fov_down_deg);
    spec.projection.max_range = p.number_or("max_range", spec.projection.max_range);
  }
  if (auto it = root.tables.find("vegetation"); it != root.tables.end()) {
    const toml::Table& v = it->second;
    spec.vegetation.density = v.number_or("density", spec.vegetation.density);
    spec.vegetation.jitter_sigma = v.number_or("jitter_sigma", spec.vegetation.jitter_sigma);
    spec.vegetation.visibility = v.number_or("visibility", spec.vegetation.visibility);
    spec.vegetation.height_max = v.number_or("height_max", spec.vegetation.height_max);
  }
  if (auto it = root.tables.find("intensity"); it != root.tables.end()) {
    const toml::Table& t = it->second;
    spec.background_intensity_max = t.number_or("background_max", spec.background_intensity_max);
    spec.reflective_intensity_min = t.number_or("reflective_min", spec.reflective_intensity_min);
  }
  if (auto it = root.table_arrays.find("structures"); it != root.table_arrays.end()) {
    for (const toml::Table& s : it->second) {
      const std::string type = s.at("type").string();
      if (type == "box") {
        Box box;
        box.center = vec3(s.at("center").array());
        box.size = vec3(s.at("size").array());
        spec.boxes.push_back(box);
      } else if (type == "cylinder") {
        Cylinder cyl;
        cyl.center = vec2(s.at("center").array());
        cyl.radius = s.at("radius").number();
        cyl.height = s.at("height").number();
        spec.cylinders.push_back(cyl);
      } else {
        throw std::runtime_error("unknown structure type: " + type);
      }
    }
  }
  if (auto it = root.table_arrays.find("changes"); it != root.table_arrays.end()) {
    for (const toml::Table& c : it->second) {
      ChangeObject obj;
      obj.shape.center = vec3(c.at("center").array());
      obj.shape.size = vec3(c.at("size").array());
      obj.reflective = c.bool_or("reflective", true);
      spec.changes.push_back(obj);
    }
  }
  spec.validate();
  return spec;
}

}  // namespace rangecd
