#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pens/core.hpp"

namespace pens {

/// Structure-learning thresholds of the evolving base classifier.
struct GrowPruneParams {
  Scalar err_grow = 0.5;          // DS gate on ||t - y||
  Scalar novelty_quantile = 0.95; // chi-square level for the Mahalanobis gate
  Scalar density_sigmas = 2.0;    // DQ gate: density below mean - n*std
  Scalar volume_cap = 0.25;       // fraction of the (6)^u standardized box
  Scalar prune_frac = 0.1;        // ERS: activity below frac * mean activity
  Scalar decay = 0.99;            // activity smoothing
  Scalar potential_frac = 0.2;    // P+: potential below frac * peak
  int age_min = 500;
  Scalar weight_decay = 1e-7;     // quadratic decay strength in FWGRLS
  Scalar init_spread = 1.0;       // dispersion of the very first rule
  Scalar min_spread = 0.1;
  Scalar rls_init = 1e5;          // Psi = rls_init * I for new rules

  void validate() const;
};

struct FuzzyRule {
  Vec center;
  Mat inv_cov;                 // diagonal for axis-parallel rules
  std::int64_t support = 1;
  std::vector<std::int64_t> class_support;
  Mat weights;                 // (u+1) x O, row 0 is the intercept
  Mat rls_cov;                 // (u+1) x (u+1)
  Scalar activity = 1.0;
  Scalar peak_potential = 0.0;
  std::int64_t age = 0;

  int dim() const { return static_cast<int>(center.size()); }
  int classes() const { return static_cast<int>(class_support.size()); }
};

/// Unmasked firing strength exp(-(x-C) inv_cov (x-C)^T).
Scalar fire(const FuzzyRule& rule, const Vec& x);

/// Mahalanobis distance with masked-out inputs contributing nothing. An empty
/// mask keeps every input.
Scalar masked_distance(const FuzzyRule& rule, const Vec& x, const Vec& mask);

/// det(Sigma) = 1 / det(inv_cov). Throws invariant_violation if not positive.
Scalar rule_volume(const FuzzyRule& rule);

/// Firing-weighted recursive least squares step with quadratic weight decay.
void fwgrls_update(FuzzyRule& rule, Scalar lambda, const Vec& xe, const Vec& target,
                   Scalar weight_decay);

/// Inverse CDF of the chi-square distribution.
Scalar chi_square_quantile(Scalar q, int dof);

/// Recursive density estimate of the input stream (Cauchy-type density around
/// the running mean) plus running statistics of the densities themselves.
struct RdeState {
  std::int64_t count = 0;
  Vec mean;
  Scalar mean_sq_norm = 0.0;
  std::int64_t density_count = 0;
  Scalar density_mean = 0.0;
  Scalar density_m2 = 0.0;
  Scalar last_density = 1.0;

  /// Folds x into the stream statistics and returns its density.
  Scalar observe(const Vec& x);
  /// Adds a density value to the density statistics.
  void record_density(Scalar d);
  Scalar density_std() const;
  /// Inverse multi-quadratic potential of a point against the stream.
  Scalar potential(const Vec& point) const;
};

enum class GrowDecision { grow, update_winner, grow_denied_by_volume };

enum class PruneReason { ers, potential };

struct PruneFlag {
  std::size_t index;
  PruneReason reason;
};

struct Inference {
  Vec scores;
  int predicted = 1;  // 1-based
};

class PClassModel {
 public:
  PClassModel() = default;
  PClassModel(int u, int O, BaseKind kind, GrowPruneParams params = {});

  int dim() const { return u_; }
  int classes() const { return O_; }
  BaseKind kind() const { return kind_; }
  const GrowPruneParams& params() const { return params_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  const std::vector<FuzzyRule>& rules() const { return rules_; }
  std::vector<FuzzyRule>& rules() { return rules_; }
  const std::vector<FuzzyRule>& archive() const { return archive_; }
  std::vector<FuzzyRule>& archive() { return archive_; }
  const RdeState& rde() const { return rde_; }
  RdeState& rde() { return rde_; }

  /// Active-feature mask (0/1 per input). Empty means every feature is active.
  void set_mask(Vec mask);
  const Vec& mask() const { return mask_; }

  /// Extended input [1, mask*x].
  Vec extend(const Vec& x) const;
  /// Masked Mahalanobis distance of x to a rule.
  Scalar distance(const FuzzyRule& rule, const Vec& x) const;
  Scalar masked_fire(const FuzzyRule& rule, const Vec& x) const;
  /// Normalized firing strengths; sums to one over the active rules.
  Vec normalized_firing(const Vec& x) const;
  /// log P(x|R) of the Gaussian likelihood with normalizer (2 pi V)^(-1/2).
  Scalar log_likelihood(const FuzzyRule& rule, const Vec& x) const;

  /// Throws invariant_violation("model is empty") when there are no rules.
  Inference infer(const Vec& x) const;

  /// Winner by log firing + log prior + log Laplace-smoothed class purity.
  std::size_t winner(const Vec& x, int label) const;

  /// Requires rde() to have observed x already (see train_sample).
  GrowDecision grow_check(const Vec& x, const Vec& target) const;
  /// New rules take half the distance to the nearest center as spread, within
  /// [min_spread, max_spread()].
  std::size_t add_rule(const Vec& x, int label);
  /// Spread whose isotropic rule fills half of the volume cap.
  Scalar max_spread() const;
  void update_winner(const Vec& x, int label);
  /// Updates activity/potential of every rule and returns the rules to prune.
  std::vector<PruneFlag> prune_check(const Vec& lambda);
  /// Moves flagged rules to the archive.
  void apply_prune(const std::vector<PruneFlag>& flags);
  /// Reactivates the best-firing archived rule if it beats a fresh rule.
  std::optional<std::size_t> recall_check(const Vec& x);

  void train_sample(const Vec& x, int label);

  /// Lifetime structural counters.
  struct Events {
    std::int64_t grown = 0;
    std::int64_t recalled = 0;
    std::int64_t pruned_ers = 0;
    std::int64_t pruned_potential = 0;
  };
  const Events& events() const { return events_; }
  void restore_events(const Events& e) { events_ = e; }

 private:
  void refresh_inverse_spd(FuzzyRule& rule) const;
  Scalar novelty_threshold_ = 0;

  int u_ = 0;
  int O_ = 2;
  BaseKind kind_ = BaseKind::axis_parallel;
  GrowPruneParams params_;
  std::vector<FuzzyRule> rules_;
  std::vector<FuzzyRule> archive_;
  RdeState rde_;
  Vec mask_;
  Events events_;
};

}  // namespace pens
