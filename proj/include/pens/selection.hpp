#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pens/core.hpp"
#include "pens/pclass.hpp"

namespace pens {

// ---------------------------------------------------------------------------
// Conflict-based online active learning
// ---------------------------------------------------------------------------

struct ConflictScores {
  Scalar p_input = 1.0;
  Scalar p_output = 1.0;
};

/// Posterior of the winning class under the pooled rule base of every model:
/// sum_i P(y|R_i) P(x|R_i) P(R_i), normalized over classes. P(y|R_i) is
/// Laplace smoothed. Returns 1/O when every likelihood underflows 1e-300.
Scalar conflict_input(const std::vector<const PClassModel*>& models, const Vec& x);

/// Truncated preference degree y1 / (y1 + y2) of the two largest scores.
Scalar conflict_output(const Vec& scores);

enum class Decision { accept, reject };

struct ActiveLearnParams {
  Scalar theta0 = 0.7;
  Scalar step = 0.01;         // multiplicative step applied on accept
  Scalar theta_min = 0.5;
  Scalar theta_max = 0.95;
  // Long-run acceptance share the threshold walk settles at when unclamped.
  // The reject step is step * r / (1 - r); r = 0.5 gives symmetric steps.
  Scalar target_rate = 0.25;
  // The walk runs on an unclamped level that may overshoot the clamp range by
  // this much; theta is the level clamped to [theta_min, theta_max]. Without
  // the slack, truncated steps at the floor bias the walk toward accepting.
  Scalar slack = 0.1;
  bool conjunction = false;   // AND instead of OR over the two conflict tests
  // Not supported; validate() rejects them when set.
  std::optional<Scalar> budget;
  bool class_imbalance = false;

  Scalar reject_step() const { return step * target_rate / (1.0 - target_rate); }
  void validate() const;
};

struct ActiveLearnState {
  Scalar theta = 0.7;
  Scalar level = 0.7;
  Scalar step_accept = 0.01;
  Scalar step_reject = 0.01 / 3.0;
  Scalar theta_min = 0.5;
  Scalar theta_max = 0.95;
  Scalar slack = 0.1;
  bool conjunction = false;
  std::int64_t accepted = 0;
  std::int64_t seen = 0;

  ActiveLearnState() = default;
  explicit ActiveLearnState(const ActiveLearnParams& p);
};

/// Accept/reject a sample against theta, then move the level: down on accept,
/// up on reject. theta follows the level clamped to [theta_min, theta_max].
Decision decide(ActiveLearnState& state, const ConflictScores& scores);

// ---------------------------------------------------------------------------
// Online feature selection over the pooled rule base
// ---------------------------------------------------------------------------

struct OfsParams {
  Scalar learning_rate = 0.05;
  Scalar chi = 0.01;

  Scalar radius() const { return 1.0 / std::sqrt(chi); }
  void validate() const;
};

/// Every rule of every member viewed as one TSK model. Holds non-owning
/// pointers, so updates write through to the owning rules.
struct OfsVirtualModel {
  std::vector<FuzzyRule*> rules;
  Vec mask;  // empty = all features active
  OfsParams params;

  int dim() const;
  Vec extend(const Vec& x) const;
  Vec firing(const Vec& x) const;
  Vec predict(const Vec& x) const;
  /// dE/dW_i for E = 0.5 ||y - t||^2.
  std::vector<Mat> gradient(const Vec& x, const Vec& target) const;
};

/// Regularized SGD step on every pooled consequent followed by projection of
/// each W_i onto the Frobenius ball of radius 1/sqrt(chi).
void ofs_step(OfsVirtualModel& vm, const Vec& x, const Vec& target);

/// Normalized absolute consequent mass per input (intercept row excluded).
Vec feature_scores(const OfsVirtualModel& vm);

struct FeatureMask {
  Vec active;  // 0/1
  Vec scores;
  int B = 0;
};

/// Keeps the B largest scores (lowest index on ties).
FeatureMask apply_mask(const Vec& scores, int B);

}  // namespace pens
