#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "tintforge/color_vocab.hpp"

namespace tintforge::fixtures {

inline std::filesystem::path data_dir() { return TINTFORGE_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return TINTFORGE_TEST_DATA; }

inline const BasicPalette& palette() {
  static const BasicPalette p = load_basic_palette(data_dir() / "basic_colors.csv");
  return p;
}

inline const Vocabulary& vocab() {
  static const Vocabulary v = load_vocab(data_dir() / "compound_colors.csv", palette());
  return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tintforge-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace tintforge::fixtures
