#ifndef RANGECD_IO_HPP
#define RANGECD_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "rangecd/geometry.hpp"

namespace rangecd {

/// ASCII PLY reader for `element vertex` with properties x,y,z and optional
/// `intensity`. Unknown properties are parsed and ignored.
PointCloud read_ply(const std::filesystem::path& path);
PointCloud read_ply(std::istream& in);

/// ASCII PLY writer; emits intensity only when the cloud carries it.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);
void write_ply(const PointCloud& cloud, std::ostream& out);

/// 16-bit binary PGM (P5). Values are clamped to [0, 65535].
void write_pgm16(const std::vector<std::uint16_t>& pixels, int width, int height,
                 const std::filesystem::path& path);

}  // namespace rangecd

#endif
