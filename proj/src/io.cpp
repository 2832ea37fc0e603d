#include "rangecd/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rangecd {

namespace {

std::string next_meaningful_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("comment", 0) == 0) continue;
    return line;
  }
  throw std::runtime_error("unexpected end of PLY header");
}

}  // namespace

PointCloud read_ply(std::istream& in) {
  if (next_meaningful_line(in) != "ply") throw std::runtime_error("not a PLY file");
  std::string format = next_meaningful_line(in);
  if (format.rfind("format ascii", 0) != 0) {
    throw std::runtime_error("only ascii PLY is supported");
  }

  std::size_t vertex_count = 0;
  std::vector<std::string> properties;
  bool in_vertex = false;
  for (;;) {
    std::string line = next_meaningful_line(in);
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "element") {
      std::string name;
      ls >> name >> vertex_count;
      in_vertex = (name == "vertex");
      if (!in_vertex) throw std::runtime_error("unsupported PLY element: " + name);
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      properties.push_back(name);
    }
  }

  int ix = -1, iy = -1, iz = -1, ii = -1;
  for (int k = 0; k < static_cast<int>(properties.size()); ++k) {
    if (properties[k] == "x") ix = k;
    else if (properties[k] == "y") iy = k;
    else if (properties[k] == "z") iz = k;
    else if (properties[k] == "intensity") ii = k;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error("PLY lacks x/y/z properties");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  if (ii >= 0) cloud.intensity = std::vector<double>();
  std::vector<double> row(properties.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    for (double& value : row) {
      if (!(in >> value)) throw std::runtime_error("truncated PLY vertex data");
    }
    cloud.points.emplace_back(row[ix], row[iy], row[iz]);
    if (ii >= 0) cloud.intensity->push_back(row[ii]);
  }
  return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_ply(in);
}

void write_ply(const PointCloud& cloud, std::ostream& out) {
  cloud.check_consistent();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.intensity) out << "property double intensity\n";
  out << "end_header\n";
  out.precision(17);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    out << p.x() << " " << p.y() << " " << p.z();
    if (cloud.intensity) out << " " << (*cloud.intensity)[i];
    out << "\n";
  }
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_ply(cloud, out);
}

void write_pgm16(const std::vector<std::uint16_t>& pixels, int width, int height,
                 const std::filesystem::path& path) {
  if (static_cast<std::size_t>(width) * height != pixels.size()) {
    throw std::invalid_argument("pixel buffer does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "P5\n" << width << " " << height << "\n65535\n";
  for (std::uint16_t v : pixels) {
    // PGM is big-endian for maxval > 255.
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
}

}  // namespace rangecd
