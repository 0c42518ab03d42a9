#include "pens/drift.hpp"

#include <cmath>
#include <limits>

namespace pens {

std::string to_string(DriftState s) {
  switch (s) {
    case DriftState::stable: return "stable";
    case DriftState::warning: return "warning";
    case DriftState::drift: return "drift";
  }
  return "stable";
}

DriftDetector::DriftDetector(Scalar alpha_w, Scalar alpha_d, std::size_t capacity)
    : alpha_w_(alpha_w), alpha_d_(alpha_d), capacity_(capacity) {
  if (!(alpha_d > 0 && alpha_d < alpha_w && alpha_w < 1))
    throw config_error("drift detector needs 0 < alpha_d < alpha_w < 1");
  if (capacity < 2) throw config_error("drift detector capacity must be >= 2");
}

void DriftDetector::clear() {
  window_.clear();
  cut_.reset();
  state_ = DriftState::stable;
}

void DriftDetector::restore(std::deque<Scalar> window, DriftState state,
                            std::optional<std::size_t> cut) {
  window_ = std::move(window);
  state_ = state;
  cut_ = cut;
}

DriftState DriftDetector::step(Scalar value) {
  if (!(value >= a_ && value <= b_)) throw data_error("drift statistic outside [a,b]");
  window_.push_back(value);
  if (window_.size() > capacity_) window_.pop_front();

  const Scalar range = b_ - a_;
  const std::size_t n = window_.size();
  Scalar total = 0;
  for (Scalar v : window_) total += v;
  Scalar sum = 0;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  std::size_t cut = 0;
  Scalar cut_sum = 0;
  // Leave at least kMinSuffix samples after the cut; shorter suffixes only
  // see error bursts that the repeated per-sample test would flag.
  const std::size_t last = n > kMinSuffix ? n - kMinSuffix : 0;
  for (std::size_t k = 1; k <= last; ++k) {
    sum += window_[k - 1];
    const Scalar bound =
        sum / static_cast<Scalar>(k) + hoeffding_radius(range, static_cast<std::int64_t>(k), alpha_d_);
    if (bound < best) {
      best = bound;
      cut = k;
      cut_sum = sum;
    }
  }
  state_ = DriftState::stable;
  if (cut == 0) {
    cut_.reset();
    return state_;
  }
  cut_ = cut;

  const Scalar prefix_mean = cut_sum / static_cast<Scalar>(cut);
  const Scalar window_mean = total / static_cast<Scalar>(n);
  const Scalar gap = window_mean - prefix_mean;
  const auto m = static_cast<std::int64_t>(n - cut);
  const auto c = static_cast<std::int64_t>(cut);
  if (gap >= hoeffding_gap_bound(range, c, m, alpha_d_)) {
    clear();
    state_ = DriftState::drift;
  } else if (gap >= hoeffding_gap_bound(range, c, m, alpha_w_)) {
    state_ = DriftState::warning;
  }
  return state_;
}

}  // namespace pens
