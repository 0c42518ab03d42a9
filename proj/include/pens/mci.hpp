#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pens/core.hpp"

namespace pens {

struct insufficient_data : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Maximal compression index: the smallest eigenvalue of the 2x2 covariance
/// of (y1, y2). Written as 2D / (S + sqrt(S^2 - 4D)) with S = v1 + v2 and
/// D = v1 v2 (1 - rho^2), which is exact at rho = +-1.
template <typename S>
S mci(S var1, S var2, S cov) {
  using std::sqrt;
  if (!(var1 > 0) || !(var2 > 0)) return S(0);
  const S sum = var1 + var2;
  const S det = std::max(var1 * var2 - cov * cov, S(0));
  const S disc = std::max(sum * sum - S(4) * det, S(0));
  const S xi = S(2) * det / (sum + sqrt(disc));
  return std::clamp(xi, S(0), S(0.5) * sum);
}

/// Running population moments of a pair of series. The update is symmetric in
/// its two arguments so that swapping them gives bit-identical statistics.
struct PairMoments {
  std::int64_t count = 0;
  Scalar mean1 = 0, mean2 = 0;
  Scalar m2_1 = 0, m2_2 = 0;
  Scalar co = 0;

  void push(Scalar y1, Scalar y2) {
    ++count;
    const Scalar n = static_cast<Scalar>(count);
    const Scalar d1 = y1 - mean1;
    const Scalar d2 = y2 - mean2;
    const Scalar w = (n - 1.0) / n;
    mean1 += d1 / n;
    mean2 += d2 / n;
    m2_1 += (d1 * d1) * w;
    m2_2 += (d2 * d2) * w;
    co += (d1 * d2) * w;
  }
  Scalar var1() const { return count ? m2_1 / static_cast<Scalar>(count) : 0.0; }
  Scalar var2() const { return count ? m2_2 / static_cast<Scalar>(count) : 0.0; }
  Scalar cov() const { return count ? co / static_cast<Scalar>(count) : 0.0; }
};

/// Throws insufficient_data when fewer than two pairs were seen.
Scalar mci(const PairMoments& m);

/// Per member pair (i < j) and per output dimension moments over one chunk.
class MciState {
 public:
  MciState() = default;
  MciState(std::size_t members, int outputs) { reset(members, outputs); }

  void reset(std::size_t members, int outputs);
  /// Grows the member count by one, keeping the statistics of existing pairs.
  void add_member();
  std::size_t members() const { return members_; }
  int outputs() const { return outputs_; }

  PairMoments& at(std::size_t i, std::size_t j, int o);
  const PairMoments& at(std::size_t i, std::size_t j, int o) const;

  /// Accumulate one sample; `outputs[i]` is empty for members that did not vote.
  void accumulate(const std::vector<const Vec*>& outputs);

  /// Mean MCI and mean variance over output dimensions for a pair.
  struct PairSummary {
    std::int64_t count = 0;
    Scalar xi = 0;
    Scalar var1 = 0;
    Scalar var2 = 0;
  };
  PairSummary summarize(std::size_t i, std::size_t j) const;

 private:
  std::size_t index(std::size_t i, std::size_t j) const;

  std::size_t members_ = 0;
  int outputs_ = 0;
  std::vector<PairMoments> moments_;  // [pair][output]
};

}  // namespace pens
