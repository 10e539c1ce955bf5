#pragma once

// The eleven basic color terms, their hue groups, the compound-color
// database, and hue-group classification of arbitrary colors.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "tintforge/colorspace.hpp"
#include "tintforge/error.hpp"
#include "tintforge/text.hpp"

namespace tintforge {

enum class HueGroup { Warm, Cool, Neutral };

inline std::string_view to_string(HueGroup g) {
  switch (g) {
    case HueGroup::Warm: return "warm";
    case HueGroup::Cool: return "cool";
    case HueGroup::Neutral: return "neutral";
  }
  return "neutral";
}

enum class CompoundCategory { Blended, Modified, Object, Signature, Abstract };

inline constexpr std::array<CompoundCategory, 5> kAllCategories{
    CompoundCategory::Blended, CompoundCategory::Modified, CompoundCategory::Object,
    CompoundCategory::Signature, CompoundCategory::Abstract};

inline std::string_view to_string(CompoundCategory c) {
  switch (c) {
    case CompoundCategory::Blended: return "Blended";
    case CompoundCategory::Modified: return "Modified";
    case CompoundCategory::Object: return "Object";
    case CompoundCategory::Signature: return "Signature";
    case CompoundCategory::Abstract: return "Abstract";
  }
  return "Blended";
}

inline std::optional<CompoundCategory> parse_category(std::string_view text) {
  const std::string key = to_lower(trim(text));
  for (auto c : kAllCategories)
    if (to_lower(to_string(c)) == key) return c;
  return std::nullopt;
}

/// The eleven basic terms in alphabetical order; this order also breaks ties.
inline constexpr std::array<std::string_view, 11> kBasicColorNames{
    "black", "blue", "brown", "gray", "green", "orange",
    "pink", "purple", "red", "white", "yellow"};

inline bool is_basic_color_name(std::string_view name) {
  return std::find(kBasicColorNames.begin(), kBasicColorNames.end(), name) !=
         kBasicColorNames.end();
}

inline HueGroup hue_group_of(std::string_view basic_name) {
  if (basic_name == "red" || basic_name == "orange" || basic_name == "pink" ||
      basic_name == "yellow")
    return HueGroup::Warm;
  if (basic_name == "blue" || basic_name == "green" || basic_name == "purple")
    return HueGroup::Cool;
  if (basic_name == "black" || basic_name == "white" || basic_name == "gray" ||
      basic_name == "brown")
    return HueGroup::Neutral;
  throw input_error("'" + std::string(basic_name) + "' is not a basic color term");
}

/// Spelling variants accepted in prompts for a basic term.
inline std::optional<std::string_view> basic_alias_target(std::string_view word) {
  if (word == "grey") return "gray";
  return std::nullopt;
}

struct BasicColor {
  std::string name;
  SrgbColor srgb;
  LabColor lab;
  HueGroup group = HueGroup::Neutral;
};

struct CompoundColor {
  std::string name;
  CompoundCategory category = CompoundCategory::Blended;
  SrgbColor srgb;
  std::string hex;  // canonical #RRGGBB
  std::string basic_anchor;
};

namespace detail {

// Minimal CSV field splitter: commas separate, double quotes group, "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

// Iterates data lines of a commented CSV, calling fn(line_number, fields).
template <class Fn>
void for_each_csv_record(std::istream& in, const std::string& source,
                         std::string_view expected_header, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!seen_header) {
      if (to_lower(body) != expected_header)
        throw ParseError(source, line_no, "expected header '" + std::string(expected_header) + "'");
      seen_header = true;
      continue;
    }
    fn(line_no, split_csv_line(body));
  }
}

}  // namespace detail

/// The eleven basic anchors. Loaded from a file so anchors can be re-chosen
/// without touching code.
class BasicPalette {
 public:
  BasicPalette() = default;

  /// `entries` must name each basic term exactly once with mutually distinct colors.
  explicit BasicPalette(std::vector<std::pair<std::string, SrgbColor>> entries,
                        const std::string& source = "basic palette") {
    if (entries.size() != kBasicColorNames.size())
      throw ParseError(source, 0, "expected exactly 11 basic colors, got " +
                                      std::to_string(entries.size()));
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first != kBasicColorNames[i])
        throw ParseError(source, 0, "basic colors must be exactly: black, blue, brown, gray, "
                                    "green, orange, pink, purple, red, white, yellow");
      for (std::size_t j = 0; j < i; ++j)
        if (colors_[j].srgb == entries[i].second)
          throw ParseError(source, 0, "basic colors '" + colors_[j].name + "' and '" +
                                          entries[i].first + "' share the same code");
      colors_.push_back({entries[i].first, entries[i].second, srgb_to_lab(entries[i].second),
                         hue_group_of(entries[i].first)});
    }
  }

  std::span<const BasicColor> colors() const noexcept { return colors_; }
  bool empty() const noexcept { return colors_.empty(); }

  const BasicColor& at(std::string_view name) const {
    for (const auto& c : colors_)
      if (c.name == name) return c;
    throw input_error("unknown basic color '" + std::string(name) + "'");
  }

 private:
  std::vector<BasicColor> colors_;
};

/// Reads `name,hex` records.
inline BasicPalette parse_basic_palette(std::istream& in, const std::string& source = "basics") {
  std::vector<std::pair<std::string, SrgbColor>> entries;
  std::unordered_set<std::string> seen;
  detail::for_each_csv_record(in, source, "name,hex", [&](std::size_t line, const auto& fields) {
    if (fields.size() != 2) throw ParseError(source, line, "expected 2 fields");
    const std::string name = to_lower(fields[0]);
    if (!is_basic_color_name(name))
      throw ParseError(source, line, "'" + fields[0] + "' is not a basic color term");
    if (!seen.insert(name).second) throw ParseError(source, line, "duplicate basic color '" + name + "'");
    try {
      entries.emplace_back(name, parse_hex(fields[1]));
    } catch (const Error& e) {
      throw ParseError(source, line, e.what());
    }
  });
  return BasicPalette(std::move(entries), source);
}

inline BasicPalette load_basic_palette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open basic palette '" + path.string() + "'");
  return parse_basic_palette(in, path.string());
}

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(BasicPalette basics, std::vector<CompoundColor> compounds)
      : basics_(std::move(basics)), compounds_(std::move(compounds)) {}

  const BasicPalette& basics() const noexcept { return basics_; }
  std::span<const CompoundColor> compounds() const noexcept { return compounds_; }
  bool empty() const noexcept { return compounds_.empty(); }
  std::size_t size() const noexcept { return compounds_.size(); }

  /// Case-insensitive lookup by compound name.
  const CompoundColor* find(std::string_view name) const {
    const std::string key = to_lower(name);
    for (const auto& c : compounds_)
      if (to_lower(c.name) == key) return &c;
    return nullptr;
  }

  std::vector<const CompoundColor*> compounds_for(std::string_view anchor,
                                                  std::optional<CompoundCategory> category = {}) const {
    std::vector<const CompoundColor*> out;
    for (const auto& c : compounds_)
      if (c.basic_anchor == anchor && (!category || c.category == *category)) out.push_back(&c);
    return out;
  }

 private:
  BasicPalette basics_;
  std::vector<CompoundColor> compounds_;
};

/// Reads the compound-color database (`name,category,hex,anchor`). An empty
/// file yields an empty vocabulary.
inline Vocabulary parse_vocab(std::istream& in, BasicPalette basics,
                              const std::string& source = "vocab") {
  std::vector<CompoundColor> compounds;
  std::unordered_set<std::string> seen;
  detail::for_each_csv_record(
      in, source, "name,category,hex,anchor", [&](std::size_t line, const auto& fields) {
        if (fields.size() != 4) throw ParseError(source, line, "expected 4 fields");
        CompoundColor c;
        c.name = fields[0];
        if (c.name.empty()) throw ParseError(source, line, "empty color name");
        if (!seen.insert(to_lower(c.name)).second)
          throw ParseError(source, line, "duplicate color name '" + c.name + "'");
        const auto category = parse_category(fields[1]);
        if (!category) throw ParseError(source, line, "unknown category '" + fields[1] + "'");
        c.category = *category;
        try {
          c.srgb = parse_hex(fields[2]);
        } catch (const Error&) {
          throw ParseError(source, line, "invalid hex '" + fields[2] + "'");
        }
        c.hex = to_hex(c.srgb);
        c.basic_anchor = to_lower(fields[3]);
        if (!is_basic_color_name(c.basic_anchor))
          throw ParseError(source, line, "unknown anchor '" + fields[3] + "'");
        compounds.push_back(std::move(c));
      });
  return Vocabulary(std::move(basics), std::move(compounds));
}

inline Vocabulary load_vocab(const std::filesystem::path& path, BasicPalette basics) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open color vocabulary '" + path.string() + "'");
  return parse_vocab(in, std::move(basics), path.string());
}

inline Vocabulary load_vocab(const std::filesystem::path& compounds_path,
                             const std::filesystem::path& basics_path) {
  return load_vocab(compounds_path, load_basic_palette(basics_path));
}

// ---------------------------------------------------------------------------
// Classification and retrieval

struct RankedAnchor {
  BasicColor anchor;
  double delta_e = 0.0;
};

/// ΔE₀₀-nearest basic anchor; its group is the color's hue group. Ties go to
/// the alphabetically first basic name.
inline RankedAnchor nearest_basic(const BasicPalette& palette, const SrgbColor& color) {
  if (palette.empty()) throw input_error("basic palette is empty");
  const LabColor lab = srgb_to_lab(color);
  const BasicColor* best = nullptr;
  double best_d = 0.0;
  for (const auto& b : palette.colors()) {
    const double d = ciede2000(lab, b.lab);
    if (best == nullptr || d < best_d) {
      best = &b;
      best_d = d;
    }
  }
  return {*best, best_d};
}

struct HueClassification {
  HueGroup group = HueGroup::Neutral;
  BasicColor nearest;
  double delta_e = 0.0;
};

inline HueClassification classify_hue_group(const BasicPalette& palette, const SrgbColor& color) {
  RankedAnchor n = nearest_basic(palette, color);
  return {n.anchor.group, std::move(n.anchor), n.delta_e};
}

/// Up to k basic anchors from the color's hue group, ascending ΔE₀₀.
inline std::vector<RankedAnchor> topk_basic_in_group(const BasicPalette& palette,
                                                     const SrgbColor& color, std::size_t k) {
  if (k < 1) throw input_error("k must be at least 1");
  const HueGroup group = classify_hue_group(palette, color).group;
  const LabColor lab = srgb_to_lab(color);
  std::vector<RankedAnchor> ranked;
  for (const auto& b : palette.colors())
    if (b.group == group) ranked.push_back({b, ciede2000(lab, b.lab)});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedAnchor& a, const RankedAnchor& b) { return a.delta_e < b.delta_e; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

}  // namespace tintforge
