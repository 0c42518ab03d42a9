#pragma once

#include <cstdint>
#include <cmath>
#include <deque>
#include <optional>
#include <string>

#include "pens/core.hpp"

namespace pens {

enum class DriftState { stable, warning, drift };

std::string to_string(DriftState s);

/// Hoeffding bound for the gap between the mean of a full window of n = cut + m
/// samples and the mean of its first `cut` samples, at significance alpha.
inline Scalar hoeffding_gap_bound(Scalar range, std::int64_t cut, std::int64_t m, Scalar alpha) {
  const Scalar c = static_cast<Scalar>(cut);
  const Scalar mm = static_cast<Scalar>(m);
  return range * std::sqrt(mm / (2.0 * c * (mm + c)) * std::log(1.0 / alpha));
}

/// One-sample-group Hoeffding radius sqrt(ln(1/alpha) / 2n).
inline Scalar hoeffding_radius(Scalar range, std::int64_t n, Scalar alpha) {
  return range * std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<Scalar>(n)));
}

/// Mean-increase detector over a bounded window of a [0,1] statistic.
///
/// Each step rescans the window for the cut point: the prefix Z whose mean
/// plus Hoeffding radius is smallest (earliest on ties), i.e. the latest prefix
/// Z for which Z + eps_Z <= X + eps_X still holds against every later prefix X.
/// The test then asks whether the whole-window mean exceeds the prefix mean by
/// the two-group bound at alpha_d (drift) or alpha_w (warning). Cuts leave at
/// least kMinSuffix samples after them. A drift clears the window.
class DriftDetector {
 public:
  static constexpr std::size_t kMinSuffix = 50;

  DriftDetector() = default;
  DriftDetector(Scalar alpha_w, Scalar alpha_d, std::size_t capacity);

  DriftState step(Scalar value);

  DriftState state() const { return state_; }
  std::optional<std::size_t> cut() const { return cut_; }
  const std::deque<Scalar>& window() const { return window_; }
  std::size_t capacity() const { return capacity_; }
  Scalar alpha_w() const { return alpha_w_; }
  Scalar alpha_d() const { return alpha_d_; }
  Scalar lower() const { return a_; }
  Scalar upper() const { return b_; }

  void clear();
  void restore(std::deque<Scalar> window, DriftState state, std::optional<std::size_t> cut);

 private:
  Scalar a_ = 0.0;
  Scalar b_ = 1.0;
  Scalar alpha_w_ = 0.005;
  Scalar alpha_d_ = 0.001;
  std::size_t capacity_ = 1000;
  std::deque<Scalar> window_;
  DriftState state_ = DriftState::stable;
  std::optional<std::size_t> cut_;
};

}  // namespace pens
