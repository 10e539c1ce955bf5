#pragma once

#include <cstddef>
#include <vector>

namespace tintforge {

/// Dense square matrix of pairwise distances, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }

  /// Sets (i, j) and (j, i) together.
  void set_symmetric(std::size_t i, std::size_t j, double value) {
    (*this)(i, j) = value;
    (*this)(j, i) = value;
  }

  bool is_symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  bool has_zero_diagonal() const {
    for (std::size_t i = 0; i < n_; ++i)
      if ((*this)(i, i) != 0.0) return false;
    return true;
  }

  /// Upper-triangle entries (i < j) in row order.
  std::vector<double> upper_triangle() const {
    std::vector<double> out;
    out.reserve(n_ * (n_ > 0 ? n_ - 1 : 0) / 2);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) out.push_back((*this)(i, j));
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

}  // namespace tintforge
