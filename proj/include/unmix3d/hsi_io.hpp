#pragma once

#include <filesystem>
#include <string>

#include "unmix3d/cube.hpp"

namespace unmix3d::io {

// HSC container: "HSC1", then u32 L, H, W (little endian), then L*H*W
// little-endian float32 values, band-major then row-major.
void store_cube(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_cube(const std::filesystem::path& path);

// Same container holding P x H x W abundance maps (L := P).
void store_abundances(const AbundanceMaps& maps, const std::filesystem::path& path);
AbundanceMaps load_abundances(const std::filesystem::path& path);

// Endmember CSV: header "band,em1,...,emP", one row per band.
void store_endmembers_csv(const EndmemberMatrix& endmembers, const std::filesystem::path& path);
EndmemberMatrix load_endmembers_csv(const std::filesystem::path& path);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples). Values are
// clamped to [0, 1] and scaled to [0, 65535] with rounding.
void store_pgm16(std::span<const double> values, int height, int width,
                 const std::filesystem::path& path);
// Returns values rescaled to [0, 1].
std::vector<double> load_pgm16(const std::filesystem::path& path, int& height, int& width);

// Writes one PGM per material: <prefix><p>.pgm, p = 1..P.
void store_abundance_pgms(const AbundanceMaps& maps, const std::filesystem::path& dir,
                          const std::string& prefix);
// Reads <prefix>1.pgm, <prefix>2.pgm, ... until the next index is missing.
AbundanceMaps load_abundance_pgms(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace unmix3d::io
