#pragma once

// Color representations, conversions between the studied color spaces, and
// perceptual distance metrics.
//
// All RGB values are sRGB (IEC 61966-2-1) with the D65 white point and the
// standard piecewise transfer function. Channels are unit-interval reals;
// 8-bit codes are divided by 255 on ingest.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tintforge/distance_matrix.hpp"
#include "tintforge/error.hpp"

namespace tintforge {

class SrgbColor {
 public:
  constexpr SrgbColor() = default;
  SrgbColor(double r, double g, double b) : r_(r), g_(g), b_(b) {
    if (!in_unit(r) || !in_unit(g) || !in_unit(b))
      throw input_error("sRGB channels must lie in [0, 1]");
  }

  static SrgbColor from_bytes(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return {r / 255.0, g / 255.0, b / 255.0};
  }

  double r() const noexcept { return r_; }
  double g() const noexcept { return g_; }
  double b() const noexcept { return b_; }
  std::array<double, 3> channels() const noexcept { return {r_, g_, b_}; }

  friend bool operator==(const SrgbColor&, const SrgbColor&) = default;

 private:
  static bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

  double r_ = 0.0;
  double g_ = 0.0;
  double b_ = 0.0;
};

class LabColor {
 public:
  constexpr LabColor() = default;
  LabColor(double L, double a, double b) : L_(L), a_(a), b_(b) {
    if (!(L >= 0.0 && L <= 100.0)) throw input_error("Lab lightness must lie in [0, 100]");
    if (!std::isfinite(a) || !std::isfinite(b)) throw input_error("Lab a/b must be finite");
  }

  double L() const noexcept { return L_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  friend bool operator==(const LabColor&, const LabColor&) = default;

 private:
  double L_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
};

struct XyzColor {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Hue in degrees [0, 360); saturation and value in [0, 1].
struct HsvColor {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

/// Full-range BT.601 with chroma centred on 0.5 (JPEG convention).
struct YCbCrColor {
  double y = 0.0;
  double cb = 0.5;
  double cr = 0.5;
};

/// Analog BT.601 YUV.
struct YuvColor {
  double y = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// CIE 1931 xyY chromaticity with luminance Y relative to the white point.
struct Xy1931Color {
  double x = 0.0;
  double y = 0.0;
  double Y = 0.0;
};

struct DeltaEParams {
  double kL = 1.0;
  double kC = 1.0;
  double kH = 1.0;

  void validate() const {
    if (!(kL > 0.0) || !(kC > 0.0) || !(kH > 0.0))
      throw input_error("CIEDE2000 weights kL, kC, kH must be strictly positive");
  }
};

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr Mat3 kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

constexpr Mat3 invert(const Mat3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  return {{
      {c00 / det, (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
       (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det},
      {c01 / det, (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
       (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det},
      {c02 / det, (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
       (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det},
  }};
}

inline constexpr Mat3 kXyzToRgb = invert(kRgbToXyz);

// D65 reference white as the image of RGB (1, 1, 1), so white maps to
// L = 100, a = b = 0 without rounding residue.
inline constexpr XyzColor kD65{kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
                               kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
                               kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2]};
inline constexpr double kD65ChromaX = 0.3127;
inline constexpr double kD65ChromaY = 0.3290;

inline constexpr double kLabEpsilon = 216.0 / 24389.0;  // (6/29)^3
inline constexpr double kLabKappa = 24389.0 / 27.0;

// Out-of-range excursions below this are rounding noise, not gamut misses.
inline constexpr double kGamutSlack = 1e-9;

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

inline double lab_f(double t) {
  return t > kLabEpsilon ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0;
}

inline double lab_f_inverse(double f) {
  const double f3 = f * f * f;
  return f3 > kLabEpsilon ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

inline double wrap_degrees(double h) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

inline int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hex codes

/// Parses `RRGGBB` or `#RRGGBB`, case-insensitive.
inline SrgbColor parse_hex(std::string_view text) {
  std::string_view digits = text;
  if (!digits.empty() && digits.front() == '#') digits.remove_prefix(1);
  if (digits.size() != 6) throw input_error("invalid hex color '" + std::string(text) + "'");
  std::array<std::uint8_t, 3> bytes{};
  for (std::size_t i = 0; i < 3; ++i) {
    const int hi = detail::hex_digit(digits[2 * i]);
    const int lo = detail::hex_digit(digits[2 * i + 1]);
    if (hi < 0 || lo < 0) throw input_error("invalid hex color '" + std::string(text) + "'");
    bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return SrgbColor::from_bytes(bytes[0], bytes[1], bytes[2]);
}

inline bool is_hex_color(std::string_view text) {
  try {
    parse_hex(text);
    return true;
  } catch (const Error&) {
    return false;
  }
}

/// `#RRGGBB`, uppercase, channels rounded to the nearest 8-bit code.
inline std::string to_hex(const SrgbColor& c) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out = "#";
  for (double v : c.channels()) {
    const int byte = static_cast<int>(std::lround(v * 255.0));
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// sRGB <-> XYZ <-> Lab

inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

inline XyzColor srgb_to_xyz(const SrgbColor& c) {
  const std::array<double, 3> lin{srgb_to_linear(c.r()), srgb_to_linear(c.g()),
                                  srgb_to_linear(c.b())};
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = detail::kRgbToXyz[i][0] * lin[0] + detail::kRgbToXyz[i][1] * lin[1] +
             detail::kRgbToXyz[i][2] * lin[2];
  return {out[0], out[1], out[2]};
}

inline LabColor xyz_to_lab(const XyzColor& xyz) {
  const double fx = detail::lab_f(xyz.x / detail::kD65.x);
  const double fy = detail::lab_f(xyz.y / detail::kD65.y);
  const double fz = detail::lab_f(xyz.z / detail::kD65.z);
  const double L = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
  return {L, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline XyzColor lab_to_xyz(const LabColor& lab) {
  const double fy = (lab.L() + 16.0) / 116.0;
  const double fx = fy + lab.a() / 500.0;
  const double fz = fy - lab.b() / 200.0;
  return {detail::kD65.x * detail::lab_f_inverse(fx), detail::kD65.y * detail::lab_f_inverse(fy),
          detail::kD65.z * detail::lab_f_inverse(fz)};
}

inline LabColor srgb_to_lab(const SrgbColor& c) { return xyz_to_lab(srgb_to_xyz(c)); }

struct SrgbConversion {
  SrgbColor color;
  bool clamped = false;  // true when some channel left [0, 1] before clamping
};

inline SrgbConversion xyz_to_srgb(const XyzColor& xyz) {
  const std::array<double, 3> in{xyz.x, xyz.y, xyz.z};
  std::array<double, 3> out{};
  bool clamped = false;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lin = detail::kXyzToRgb[i][0] * in[0] + detail::kXyzToRgb[i][1] * in[1] +
                       detail::kXyzToRgb[i][2] * in[2];
    double v = linear_to_srgb(std::max(lin, 0.0));
    if (lin < -detail::kGamutSlack || v > 1.0 + detail::kGamutSlack) clamped = true;
    out[i] = std::clamp(v, 0.0, 1.0);
  }
  return {SrgbColor(out[0], out[1], out[2]), clamped};
}

inline SrgbConversion lab_to_srgb(const LabColor& lab) { return xyz_to_srgb(lab_to_xyz(lab)); }

// ---------------------------------------------------------------------------
// Other spaces

inline HsvColor srgb_to_hsv(const SrgbColor& c) {
  const double mx = std::max({c.r(), c.g(), c.b()});
  const double mn = std::min({c.r(), c.g(), c.b()});
  const double delta = mx - mn;
  HsvColor out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) return out;  // achromatic: hue pinned to 0
  double h;
  if (mx == c.r())
    h = 60.0 * std::fmod((c.g() - c.b()) / delta, 6.0);
  else if (mx == c.g())
    h = 60.0 * ((c.b() - c.r()) / delta + 2.0);
  else
    h = 60.0 * ((c.r() - c.g()) / delta + 4.0);
  out.h = detail::wrap_degrees(h);
  return out;
}

inline YCbCrColor srgb_to_ycbcr(const SrgbColor& c) {
  const double y = 0.299 * c.r() + 0.587 * c.g() + 0.114 * c.b();
  return {y, 0.5 - 0.168736 * c.r() - 0.331264 * c.g() + 0.5 * c.b(),
          0.5 + 0.5 * c.r() - 0.418688 * c.g() - 0.081312 * c.b()};
}

inline YuvColor srgb_to_yuv(const SrgbColor& c) {
  const double y = 0.299 * c.r() + 0.587 * c.g() + 0.114 * c.b();
  return {y, 0.492111 * (c.b() - y), 0.877283 * (c.r() - y)};
}

inline Xy1931Color xyz_to_xyy(const XyzColor& xyz) {
  const double sum = xyz.x + xyz.y + xyz.z;
  if (sum <= 0.0) return {detail::kD65ChromaX, detail::kD65ChromaY, 0.0};
  return {xyz.x / sum, xyz.y / sum, xyz.y};
}

inline Xy1931Color srgb_to_xyy(const SrgbColor& c) { return xyz_to_xyy(srgb_to_xyz(c)); }

// ---------------------------------------------------------------------------
// CIEDE2000

/// CIEDE2000 color difference, including the hue-chroma rotation term R_T.
///
/// When either chroma C' is zero the hue difference is taken as 0 and the
/// mean hue as the plain sum of the two hues, per the standard formulation.
inline double ciede2000(const LabColor& lab1, const LabColor& lab2,
                        const DeltaEParams& params = {}) {
  params.validate();
  using detail::deg_to_rad;
  using detail::rad_to_deg;
  constexpr double kPow25_7 = 6103515625.0;  // 25^7

  const double c1 = std::hypot(lab1.a(), lab1.b());
  const double c2 = std::hypot(lab2.a(), lab2.b());
  const double c_mean7 = std::pow((c1 + c2) / 2.0, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(c_mean7 / (c_mean7 + kPow25_7)));

  const double a1p = (1.0 + g) * lab1.a();
  const double a2p = (1.0 + g) * lab2.a();
  const double c1p = std::hypot(a1p, lab1.b());
  const double c2p = std::hypot(a2p, lab2.b());

  auto hue = [](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    return detail::wrap_degrees(rad_to_deg(std::atan2(b, ap)));
  };
  const double h1p = hue(lab1.b(), a1p);
  const double h2p = hue(lab2.b(), a2p);

  const double dLp = lab2.L() - lab1.L();
  const double dCp = c2p - c1p;
  const double cprod = c1p * c2p;

  double dhp = 0.0;
  if (cprod != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0)
      dhp -= 360.0;
    else if (dhp < -180.0)
      dhp += 360.0;
  }
  const double dHp = 2.0 * std::sqrt(cprod) * std::sin(deg_to_rad(dhp / 2.0));

  const double Lp_mean = (lab1.L() + lab2.L()) / 2.0;
  const double Cp_mean = (c1p + c2p) / 2.0;

  double hp_mean = h1p + h2p;
  if (cprod != 0.0) {
    if (std::abs(h1p - h2p) <= 180.0)
      hp_mean /= 2.0;
    else if (hp_mean < 360.0)
      hp_mean = (hp_mean + 360.0) / 2.0;
    else
      hp_mean = (hp_mean - 360.0) / 2.0;
  }

  const double t = 1.0 - 0.17 * std::cos(deg_to_rad(hp_mean - 30.0)) +
                   0.24 * std::cos(deg_to_rad(2.0 * hp_mean)) +
                   0.32 * std::cos(deg_to_rad(3.0 * hp_mean + 6.0)) -
                   0.20 * std::cos(deg_to_rad(4.0 * hp_mean - 63.0));

  const double dtheta = 30.0 * std::exp(-std::pow((hp_mean - 275.0) / 25.0, 2.0));
  const double cp_mean7 = std::pow(Cp_mean, 7.0);
  const double rc = 2.0 * std::sqrt(cp_mean7 / (cp_mean7 + kPow25_7));
  const double l50 = (Lp_mean - 50.0) * (Lp_mean - 50.0);
  const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
  const double sc = 1.0 + 0.045 * Cp_mean;
  const double sh = 1.0 + 0.015 * Cp_mean * t;
  const double rt = -std::sin(deg_to_rad(2.0 * dtheta)) * rc;

  const double tl = dLp / (params.kL * sl);
  const double tc = dCp / (params.kC * sc);
  const double th = dHp / (params.kH * sh);
  return std::sqrt(std::max(0.0, tl * tl + tc * tc + th * th + rt * tc * th));
}

// ---------------------------------------------------------------------------
// Space-tagged points and distances

enum class ColorSpace { Rgb, Lab, Hsv, YCbCr, Yuv, Cie1931 };

inline constexpr std::array<ColorSpace, 6> kAllColorSpaces{
    ColorSpace::Rgb, ColorSpace::Lab, ColorSpace::Hsv,
    ColorSpace::YCbCr, ColorSpace::Yuv, ColorSpace::Cie1931};

inline std::string_view to_string(ColorSpace space) {
  switch (space) {
    case ColorSpace::Rgb: return "rgb";
    case ColorSpace::Lab: return "lab";
    case ColorSpace::Hsv: return "hsv";
    case ColorSpace::YCbCr: return "ycbcr";
    case ColorSpace::Yuv: return "yuv";
    case ColorSpace::Cie1931: return "cie1931";
  }
  throw input_error("unknown color space");
}

inline ColorSpace parse_color_space(std::string_view id) {
  std::string key(id);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "rgb" || key == "srgb") return ColorSpace::Rgb;
  if (key == "lab" || key == "cielab") return ColorSpace::Lab;
  if (key == "hsv") return ColorSpace::Hsv;
  if (key == "ycbcr") return ColorSpace::YCbCr;
  if (key == "yuv") return ColorSpace::Yuv;
  if (key == "cie1931" || key == "xyy") return ColorSpace::Cie1931;
  throw input_error("unknown color space '" + std::string(id) + "'");
}

/// A color expressed in one specific space.
struct ColorPoint {
  ColorSpace space = ColorSpace::Rgb;
  std::array<double, 3> coords{};
};

inline ColorPoint express(ColorSpace space, const SrgbColor& c) {
  switch (space) {
    case ColorSpace::Rgb: return {space, c.channels()};
    case ColorSpace::Lab: {
      const LabColor lab = srgb_to_lab(c);
      return {space, {lab.L(), lab.a(), lab.b()}};
    }
    case ColorSpace::Hsv: {
      const HsvColor hsv = srgb_to_hsv(c);
      return {space, {hsv.h, hsv.s, hsv.v}};
    }
    case ColorSpace::YCbCr: {
      const YCbCrColor y = srgb_to_ycbcr(c);
      return {space, {y.y, y.cb, y.cr}};
    }
    case ColorSpace::Yuv: {
      const YuvColor y = srgb_to_yuv(c);
      return {space, {y.y, y.u, y.v}};
    }
    case ColorSpace::Cie1931: {
      const Xy1931Color xyy = srgb_to_xyy(c);
      return {space, {xyy.x, xyy.y, xyy.Y}};
    }
  }
  throw input_error("unknown color space");
}

inline ColorPoint express(const LabColor& lab) {
  return {ColorSpace::Lab, {lab.L(), lab.a(), lab.b()}};
}

/// Circular distance between two hues in degrees; always within [0, 180].
inline double hue_distance(double h1, double h2) {
  const double d = std::abs(detail::wrap_degrees(h1) - detail::wrap_degrees(h2));
  return std::min(d, 360.0 - d);
}

/// Distance between two colors in `space`: CIEDE2000 for CIELab, circular hue
/// distance for HSV (saturation and value ignored), Euclidean otherwise.
inline double space_distance(ColorSpace space, const ColorPoint& a, const ColorPoint& b,
                             const DeltaEParams& params = {}) {
  if (a.space != space || b.space != space)
    throw input_error("color point is not expressed in space '" + std::string(to_string(space)) +
                      "'");
  switch (space) {
    case ColorSpace::Lab:
      return ciede2000(LabColor(a.coords[0], a.coords[1], a.coords[2]),
                       LabColor(b.coords[0], b.coords[1], b.coords[2]), params);
    case ColorSpace::Hsv: return hue_distance(a.coords[0], b.coords[0]);
    case ColorSpace::Rgb:
    case ColorSpace::YCbCr:
    case ColorSpace::Yuv:
    case ColorSpace::Cie1931: {
      const double dx = a.coords[0] - b.coords[0];
      const double dy = a.coords[1] - b.coords[1];
      const double dz = a.coords[2] - b.coords[2];
      return std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  }
  throw input_error("unknown color space");
}

inline double space_distance(std::string_view space_id, const ColorPoint& a, const ColorPoint& b,
                             const DeltaEParams& params = {}) {
  return space_distance(parse_color_space(space_id), a, b, params);
}

inline DistanceMatrix pairwise_distance_matrix(ColorSpace space, std::span<const ColorPoint> colors,
                                               const DeltaEParams& params = {}) {
  if (colors.size() < 2) throw input_error("pairwise distances need at least two colors");
  DistanceMatrix m(colors.size());
  for (std::size_t i = 0; i < colors.size(); ++i)
    for (std::size_t j = i + 1; j < colors.size(); ++j)
      m.set_symmetric(i, j, space_distance(space, colors[i], colors[j], params));
  return m;
}

inline DistanceMatrix pairwise_distance_matrix(ColorSpace space, std::span<const SrgbColor> colors,
                                               const DeltaEParams& params = {}) {
  std::vector<ColorPoint> points;
  points.reserve(colors.size());
  for (const auto& c : colors) points.push_back(express(space, c));
  return pairwise_distance_matrix(space, std::span<const ColorPoint>(points), params);
}

}  // namespace tintforge
