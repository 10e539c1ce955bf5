#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "tintforge/colorspace.hpp"

using namespace tintforge;

namespace {

struct DeltaEPair {
  int id;
  LabColor a, b;
  double expected;
};

std::vector<DeltaEPair> conformance_pairs() {
  std::ifstream in(fixtures::test_data_dir() / "ciede2000_pairs.csv");
  std::vector<DeltaEPair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("pair", 0) == 0) continue;
    std::stringstream ss(line);
    std::string f;
    std::vector<double> v;
    while (std::getline(ss, f, ',')) v.push_back(std::stod(f));
    out.push_back({static_cast<int>(v[0]), LabColor(v[1], v[2], v[3]), LabColor(v[4], v[5], v[6]), v[7]});
  }
  return out;
}

// Reference Lab values from scikit-image 0.25.2 rgb2lab. Its matrix and white
// point are rounded differently, hence the 2e-3 tolerance.
constexpr double kRefLabTol = 2e-3;

}  // namespace

TEST(Hex, ParsesWithAndWithoutHashCaseInsensitive) {
  EXPECT_EQ(parse_hex("#ff6f61"), parse_hex("FF6F61"));
  const auto c = parse_hex("ff6f61");
  EXPECT_DOUBLE_EQ(c.r(), 255 / 255.0);
  EXPECT_DOUBLE_EQ(c.g(), 0x6F / 255.0);
  EXPECT_DOUBLE_EQ(c.b(), 0x61 / 255.0);
  EXPECT_EQ(to_hex(c), "#FF6F61");
}

TEST(Hex, RejectsMalformed) {
  for (const char* bad : {"", "#", "12345", "1234567", "#GG0000", "##123456", "12 456"})
    EXPECT_THROW(parse_hex(bad), Error) << bad;
  EXPECT_FALSE(is_hex_color("#12345G"));
  EXPECT_TRUE(is_hex_color("#abcdef"));
}

TEST(Srgb, RejectsOutOfRangeChannels) {
  EXPECT_THROW(SrgbColor(1.01, 0, 0), Error);
  EXPECT_THROW(SrgbColor(0, -0.01, 0), Error);
  EXPECT_THROW(SrgbColor(0, 0, std::nan("")), Error);
  EXPECT_THROW(LabColor(100.5, 0, 0), Error);
  EXPECT_THROW(LabColor(50, std::numeric_limits<double>::infinity(), 0), Error);
}

TEST(SrgbToLab, WhiteIsFullLightnessNeutral) {
  const auto lab = srgb_to_lab(SrgbColor(1, 1, 1));
  EXPECT_NEAR(lab.L(), 100.0, 1e-12);
  EXPECT_NEAR(lab.a(), 0.0, 1e-9);
  EXPECT_NEAR(lab.b(), 0.0, 1e-9);
}

TEST(SrgbToLab, BlackIsOrigin) {
  const auto lab = srgb_to_lab(SrgbColor(0, 0, 0));
  EXPECT_EQ(lab.L(), 0.0);
  EXPECT_EQ(lab.a(), 0.0);
  EXPECT_EQ(lab.b(), 0.0);
}

TEST(SrgbToLab, MidGray) {
  const auto lab = srgb_to_lab(SrgbColor(0.5, 0.5, 0.5));
  EXPECT_NEAR(lab.L(), 53.388965, kRefLabTol);
  EXPECT_NEAR(lab.a(), 0.0, 1e-9);
  EXPECT_NEAR(lab.b(), 0.0, 1e-9);
}

TEST(SrgbToLab, MatchesReferenceConversions) {
  struct Case {
    const char* hex;
    double L, a, b;
  };
  for (const Case& c : {Case{"FF7F50", 67.294982, 45.353523, 47.494836}, Case{"00009C", 17.456795, 54.855765, -74.718073},
                        Case{"32CD32", 72.607007, -67.126035, 61.438279}, Case{"9B111E", 32.843887, 53.234733, 32.028638},
                        Case{"F97306", 63.688819, 46.889321, 70.643489}, Case{"FFFF14", 97.160024, -21.38859, 92.929627}}) {
    const auto lab = srgb_to_lab(parse_hex(c.hex));
    EXPECT_NEAR(lab.L(), c.L, kRefLabTol) << c.hex;
    EXPECT_NEAR(lab.a(), c.a, kRefLabTol) << c.hex;
    EXPECT_NEAR(lab.b(), c.b, kRefLabTol) << c.hex;
  }
}

TEST(LabToSrgb, Endpoints) {
  const auto black = lab_to_srgb(LabColor(0, 0, 0));
  EXPECT_FALSE(black.clamped);
  for (double v : black.color.channels()) EXPECT_NEAR(v, 0.0, 1e-12);
  const auto white = lab_to_srgb(LabColor(100, 0, 0));
  EXPECT_FALSE(white.clamped);
  for (double v : white.color.channels()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(LabToSrgb, MidGrayInverse) {
  const auto g = lab_to_srgb(LabColor(53.39, 0, 0));
  EXPECT_FALSE(g.clamped);
  for (double v : g.color.channels()) EXPECT_NEAR(v, 0.5, 1e-4);
}

TEST(LabToSrgb, FlagsOutOfGamut) {
  const auto c = lab_to_srgb(LabColor(50, 120, -120));
  EXPECT_TRUE(c.clamped);
  for (double v : c.color.channels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Roundtrip, Grid16) {
  double worst = 0.0;
  int clamps = 0;
  for (int r = 0; r < 16; ++r)
    for (int g = 0; g < 16; ++g)
      for (int b = 0; b < 16; ++b) {
        const SrgbColor c(r / 15.0, g / 15.0, b / 15.0);
        const auto back = lab_to_srgb(srgb_to_lab(c));
        clamps += back.clamped ? 1 : 0;
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(back.color.channels()[i] - c.channels()[i]));
      }
  EXPECT_LT(worst, 1e-3);
  EXPECT_LT(worst, 1e-9) << "roundtrip should be near machine precision";
  EXPECT_EQ(clamps, 0);
}

TEST(OtherSpaces, HsvYuvXyyReference) {
  const auto c = parse_hex("FF7F50");
  const auto hsv = srgb_to_hsv(c);
  EXPECT_NEAR(hsv.h, 0.0447619 * 360.0, 1e-4);
  EXPECT_NEAR(hsv.s, 0.68627451, 1e-7);
  EXPECT_NEAR(hsv.v, 1.0, 1e-12);
  const auto yuv = srgb_to_yuv(c);
  EXPECT_NEAR(yuv.y, 0.62711373, 1e-6);
  EXPECT_NEAR(yuv.u, -0.1542218, 1e-4);
  EXPECT_NEAR(yuv.v, 0.32712679, 1e-4);
  const auto xyz = srgb_to_xyz(c);
  EXPECT_NEAR(xyz.x, 0.50281597, 1e-4);
  EXPECT_NEAR(xyz.y, 0.37023933, 1e-4);
  EXPECT_NEAR(xyz.z, 0.12085746, 1e-4);
  const auto xyy = srgb_to_xyy(c);
  EXPECT_NEAR(xyy.x, xyz.x / (xyz.x + xyz.y + xyz.z), 1e-12);
  EXPECT_NEAR(xyy.Y, xyz.y, 1e-12);
}

TEST(OtherSpaces, YCbCrFullRange) {
  const auto white = srgb_to_ycbcr(SrgbColor(1, 1, 1));
  EXPECT_NEAR(white.y, 1.0, 1e-12);
  EXPECT_NEAR(white.cb, 0.5, 1e-12);
  EXPECT_NEAR(white.cr, 0.5, 1e-12);
  const auto red = srgb_to_ycbcr(SrgbColor(1, 0, 0));
  EXPECT_NEAR(red.y, 0.299, 1e-12);
  EXPECT_NEAR(red.cr, 1.0, 1e-9);
}

TEST(OtherSpaces, BlackChromaticityIsWhitePoint) {
  const auto k = srgb_to_xyy(SrgbColor(0, 0, 0));
  EXPECT_DOUBLE_EQ(k.x, 0.3127);
  EXPECT_DOUBLE_EQ(k.y, 0.3290);
  EXPECT_EQ(k.Y, 0.0);
}

TEST(Ciede2000, ConformancePairs) {
  const auto pairs = conformance_pairs();
  ASSERT_EQ(pairs.size(), 34u);
  for (const auto& p : pairs) {
    EXPECT_NEAR(ciede2000(p.a, p.b), p.expected, 1e-4) << "pair " << p.id;
    EXPECT_NEAR(ciede2000(p.b, p.a), p.expected, 1e-4) << "pair " << p.id << " reversed";
  }
}

TEST(Ciede2000, IdentityAndSymmetryOnRandomSamples) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> L(0, 100), ab(-128, 128);
  for (int i = 0; i < 2000; ++i) {
    const LabColor x(L(rng), ab(rng), ab(rng)), y(L(rng), ab(rng), ab(rng));
    EXPECT_EQ(ciede2000(x, x), 0.0);
    const double d = ciede2000(x, y);
    EXPECT_GT(d, 0.0);
    EXPECT_DOUBLE_EQ(d, ciede2000(y, x));
  }
}

TEST(Ciede2000, ZeroChromaHueEdgeCase) {
  // Both neutral: only lightness contributes.
  const double d = ciede2000(LabColor(40, 0, 0), LabColor(60, 0, 0));
  const double sl = 1.0 + 0.015 * 0.0 / std::sqrt(20.0);
  EXPECT_NEAR(d, 20.0 / sl, 1e-12);
  EXPECT_GT(ciede2000(LabColor(50, 0, 0), LabColor(50, 10, 0)), 0.0);
}

TEST(Ciede2000, ParametricWeights) {
  const LabColor a(50, 0, 0), b(70, 0, 0);
  EXPECT_NEAR(ciede2000(a, b, {2.0, 1.0, 1.0}), ciede2000(a, b) / 2.0, 1e-12);
  EXPECT_THROW(ciede2000(a, b, {0.0, 1.0, 1.0}), Error);
}

TEST(SpaceDistance, HueWraparound) {
  EXPECT_DOUBLE_EQ(hue_distance(350, 10), 20.0);
  EXPECT_DOUBLE_EQ(hue_distance(10, 350), 20.0);
  const ColorPoint a{ColorSpace::Hsv, {350, 0.2, 0.9}}, b{ColorSpace::Hsv, {10, 0.9, 0.1}};
  EXPECT_DOUBLE_EQ(space_distance(ColorSpace::Hsv, a, b), 20.0);
}

TEST(SpaceDistance, HueProperties) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> h(0, 360);
  for (int i = 0; i < 1000; ++i) {
    const double x = h(rng), y = h(rng);
    EXPECT_LE(hue_distance(x, y), 180.0);
    EXPECT_NEAR(hue_distance(x + 360.0, y), hue_distance(x, y), 1e-9);
    EXPECT_NEAR(hue_distance(x, y + 720.0), hue_distance(x, y), 1e-9);
  }
}

TEST(SpaceDistance, RgbDiagonal) {
  EXPECT_DOUBLE_EQ(space_distance("rgb", express(ColorSpace::Rgb, SrgbColor(0, 0, 0)),
                                   express(ColorSpace::Rgb, SrgbColor(1, 1, 1))),
                   std::sqrt(3.0));
}

TEST(SpaceDistance, IdenticalColorsAreZeroInEverySpace) {
  const auto c = parse_hex("#3A7F22");
  for (auto s : kAllColorSpaces) EXPECT_EQ(space_distance(s, express(s, c), express(s, c)), 0.0) << to_string(s);
}

TEST(SpaceDistance, LabUsesCiede2000) {
  const auto a = parse_hex("#112233"), b = parse_hex("#334455");
  EXPECT_DOUBLE_EQ(space_distance(ColorSpace::Lab, express(ColorSpace::Lab, a), express(ColorSpace::Lab, b)),
                   ciede2000(srgb_to_lab(a), srgb_to_lab(b)));
}

TEST(SpaceDistance, UnknownSpaceAndMismatchedPoints) {
  EXPECT_THROW(parse_color_space("cmyk"), Error);
  const auto c = SrgbColor(0.1, 0.2, 0.3);
  EXPECT_THROW(space_distance(ColorSpace::Lab, express(ColorSpace::Rgb, c), express(ColorSpace::Lab, c)), Error);
  EXPECT_EQ(parse_color_space("CIELab"), ColorSpace::Lab);
  EXPECT_EQ(parse_color_space("srgb"), ColorSpace::Rgb);
  EXPECT_EQ(parse_color_space("xyY"), ColorSpace::Cie1931);
}

TEST(PairwiseMatrix, IdenticalColors) {
  const std::vector<SrgbColor> c{SrgbColor(0.2, 0.4, 0.6), SrgbColor(0.2, 0.4, 0.6)};
  const auto m = pairwise_distance_matrix(ColorSpace::Lab, std::span<const SrgbColor>(c));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(m(i, j), 0.0);
}

TEST(PairwiseMatrix, ThreeColorRgbMatchesElementwise) {
  const std::vector<SrgbColor> c{parse_hex("#FF0000"), parse_hex("#00FF00"), parse_hex("#808080")};
  const auto m = pairwise_distance_matrix(ColorSpace::Rgb, std::span<const SrgbColor>(c));
  EXPECT_DOUBLE_EQ(m(0, 1), std::sqrt(2.0));
  const double g = 128.0 / 255.0;
  EXPECT_DOUBLE_EQ(m(0, 2), std::sqrt((1 - g) * (1 - g) + 2 * g * g));
  EXPECT_DOUBLE_EQ(m(1, 2), m(0, 2));
  EXPECT_TRUE(m.is_symmetric());
  EXPECT_TRUE(m.has_zero_diagonal());
}

TEST(PairwiseMatrix, SymmetricForRandomInputsInAllSpaces) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<SrgbColor> c;
  for (int i = 0; i < 12; ++i) c.emplace_back(u(rng), u(rng), u(rng));
  for (auto s : kAllColorSpaces) {
    const auto m = pairwise_distance_matrix(s, std::span<const SrgbColor>(c));
    EXPECT_TRUE(m.is_symmetric()) << to_string(s);
    EXPECT_TRUE(m.has_zero_diagonal()) << to_string(s);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        EXPECT_DOUBLE_EQ(m(i, j), space_distance(s, express(s, c[i]), express(s, c[j])));
  }
}

TEST(PairwiseMatrix, NeedsTwoColors) {
  const std::vector<SrgbColor> one{SrgbColor(0, 0, 0)};
  EXPECT_THROW(pairwise_distance_matrix(ColorSpace::Rgb, std::span<const SrgbColor>(one)), Error);
}
