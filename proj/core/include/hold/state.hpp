#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hold {

/// Phase-space point x = (q, p, s), each block of length d, stored contiguously.
class PhaseState {
 public:
  PhaseState() = default;
  explicit PhaseState(std::size_t d) : d_(d), x_(3 * d, 0.0) {
    if (d == 0) throw std::invalid_argument("PhaseState: d must be >= 1");
  }
  PhaseState(std::size_t d, std::vector<double> x) : d_(d), x_(std::move(x)) {
    if (d == 0 || x_.size() != 3 * d) throw std::invalid_argument("PhaseState: size must be 3d");
  }

  std::size_t dim() const { return d_; }

  std::span<double> q() { return {x_.data(), d_}; }
  std::span<double> p() { return {x_.data() + d_, d_}; }
  std::span<double> s() { return {x_.data() + 2 * d_, d_}; }
  std::span<const double> q() const { return {x_.data(), d_}; }
  std::span<const double> p() const { return {x_.data() + d_, d_}; }
  std::span<const double> s() const { return {x_.data() + 2 * d_, d_}; }

  std::span<double> data() { return x_; }
  std::span<const double> data() const { return x_; }

  /// Block b (0 = q, 1 = p, 2 = s), coordinate i.
  double& at(std::size_t b, std::size_t i) { return x_[b * d_ + i]; }
  double at(std::size_t b, std::size_t i) const { return x_[b * d_ + i]; }

 private:
  std::size_t d_ = 0;
  std::vector<double> x_;
};

/// n phase-space points, row-major (n x 3d). Row layout matches PhaseState.
class StateBatch {
 public:
  StateBatch() = default;
  StateBatch(std::size_t n, std::size_t d) : n_(n), d_(d), x_(n * 3 * d, 0.0) {}

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }
  std::size_t row_width() const { return 3 * d_; }

  std::span<double> row(std::size_t i) { return {x_.data() + i * 3 * d_, 3 * d_}; }
  std::span<const double> row(std::size_t i) const { return {x_.data() + i * 3 * d_, 3 * d_}; }

  double& at(std::size_t i, std::size_t block, std::size_t k) { return x_[i * 3 * d_ + block * d_ + k]; }
  double at(std::size_t i, std::size_t block, std::size_t k) const {
    return x_[i * 3 * d_ + block * d_ + k];
  }

  std::span<double> data() { return x_; }
  std::span<const double> data() const { return x_; }

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> x_;
};

}  // namespace hold
