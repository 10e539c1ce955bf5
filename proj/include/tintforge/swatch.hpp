#pragma once

// Swatch strips for color interpolation sweeps, written as binary PPM (P6).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tintforge/colorspace.hpp"

namespace tintforge {

struct SweepStep {
  double alpha = 0.0;  // weight of the `to` endpoint
  SrgbColor color;
  bool clamped = false;
};

/// `steps` colors interpolated linearly in CIELab from `from` (alpha 0) to
/// `to` (alpha 1).
inline std::vector<SweepStep> lab_sweep(const SrgbColor& from, const SrgbColor& to, std::size_t steps) {
  if (steps < 2) throw input_error("a sweep needs at least two steps");
  const LabColor a = srgb_to_lab(from);
  const LabColor b = srgb_to_lab(to);
  std::vector<SweepStep> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
    const LabColor mix((1.0 - t) * a.L() + t * b.L(), (1.0 - t) * a.a() + t * b.a(),
                       (1.0 - t) * a.b() + t * b.b());
    const auto rgb = lab_to_srgb(mix);
    out.push_back({t, rgb.color, rgb.clamped});
  }
  return out;
}

/// One row of `cell` x `cell` squares, one square per color.
inline void write_ppm_strip(std::ostream& out, std::span<const SrgbColor> colors, std::size_t cell = 32) {
  if (colors.empty() || cell == 0) throw input_error("empty swatch strip");
  const std::size_t width = colors.size() * cell;
  out << "P6\n" << width << ' ' << cell << "\n255\n";
  std::vector<std::uint8_t> row;
  row.reserve(width * 3);
  for (const auto& c : colors)
    for (std::size_t x = 0; x < cell; ++x)
      for (double v : c.channels()) row.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  for (std::size_t y = 0; y < cell; ++y)
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
}

inline void save_ppm_strip(const std::filesystem::path& path, std::span<const SrgbColor> colors,
                           std::size_t cell = 32) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot write '" + path.string() + "'");
  write_ppm_strip(out, colors, cell);
}

}  // namespace tintforge
