#include "pens/pclass.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "pens/linalg.hpp"

namespace pens {

namespace {

constexpr Scalar kEigenFloor = 1e-8;
constexpr Scalar kFiringFloor = 1e-6;

Scalar log_det_inv(const FuzzyRule& rule, BaseKind kind) {
  if (kind == BaseKind::axis_parallel) return rule.inv_cov.diagonal().array().log().sum();
  Eigen::LLT<Mat> llt(rule.inv_cov);
  if (llt.info() != Eigen::Success) throw invariant_violation("inverse covariance is not SPD");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

void GrowPruneParams::validate() const {
  auto fail = [](const char* what) { throw config_error(what); };
  if (!(err_grow > 0)) fail("err_grow must be > 0");
  if (!(novelty_quantile > 0 && novelty_quantile < 1)) fail("novelty quantile must lie in (0,1)");
  if (!(density_sigmas > 0)) fail("density_sigmas must be > 0");
  if (!(volume_cap > 0 && volume_cap <= 1)) fail("volume_cap must lie in (0,1]");
  if (!(prune_frac > 0 && prune_frac < 1)) fail("prune_frac must lie in (0,1)");
  if (!(decay > 0 && decay < 1)) fail("decay must lie in (0,1)");
  if (!(potential_frac > 0 && potential_frac < 1)) fail("potential_frac must lie in (0,1)");
  if (age_min < 0) fail("age_min must be >= 0");
  if (!(weight_decay >= 0)) fail("weight_decay must be >= 0");
  if (!(init_spread > 0) || !(min_spread > 0)) fail("spreads must be > 0");
  if (!(rls_init > 0)) fail("rls_init must be > 0");
}

Scalar fire(const FuzzyRule& rule, const Vec& x) {
  return gaussian_fire(x, rule.center, rule.inv_cov);
}

Scalar rule_volume(const FuzzyRule& rule) {
  const Scalar det = rule.inv_cov.determinant();
  if (!(det > 0)) throw invariant_violation("rule volume: det(inv_cov) <= 0");
  return 1.0 / det;
}

void fwgrls_update(FuzzyRule& rule, Scalar lambda, const Vec& xe, const Vec& target,
                   Scalar weight_decay) {
  const Vec psi_x = rule.rls_cov * xe;
  const Scalar denom = 1.0 / lambda + xe.dot(psi_x);
  if (!(denom > 0)) throw invariant_violation("FWGRLS gain denominator is not positive");
  const Vec gain = psi_x / denom;
  rule.rls_cov.noalias() -= gain * psi_x.transpose();
  rule.rls_cov = 0.5 * (rule.rls_cov + rule.rls_cov.transpose()).eval();
  const RowVec err = target.transpose() - xe.transpose() * rule.weights;
  rule.weights.noalias() += gain * err;
  if (weight_decay > 0) rule.weights -= (2.0 * weight_decay) * (rule.rls_cov * rule.weights);
}

Scalar chi_square_quantile(Scalar q, int dof) {
  boost::math::chi_squared_distribution<Scalar> dist(dof);
  return boost::math::quantile(dist, q);
}

Scalar RdeState::observe(const Vec& x) {
  if (count == 0) mean = Vec::Zero(x.size());
  ++count;
  const Scalar n = static_cast<Scalar>(count);
  mean += (x - mean) / n;
  mean_sq_norm += (x.squaredNorm() - mean_sq_norm) / n;
  last_density = potential(x);
  return last_density;
}

void RdeState::record_density(Scalar d) {
  ++density_count;
  const Scalar delta = d - density_mean;
  density_mean += delta / static_cast<Scalar>(density_count);
  density_m2 += delta * (d - density_mean);
}

Scalar RdeState::density_std() const {
  if (density_count < 2) return 0.0;
  return std::sqrt(std::max(density_m2 / static_cast<Scalar>(density_count), 0.0));
}

Scalar RdeState::potential(const Vec& point) const {
  if (count == 0) return 1.0;
  const Scalar spread = std::max(mean_sq_norm - mean.squaredNorm(), 0.0);
  return 1.0 / (1.0 + (point - mean).squaredNorm() + spread);
}

PClassModel::PClassModel(int u, int O, BaseKind kind, GrowPruneParams params)
    : u_(u), O_(O), kind_(kind), params_(params) {
  if (u < 1 || O < 2) throw config_error("pclass: need u >= 1 and O >= 2");
  params_.validate();
  novelty_threshold_ = chi_square_quantile(params_.novelty_quantile, u_);
}

void PClassModel::set_mask(Vec mask) {
  if (mask.size() != 0 && mask.size() != u_) throw data_error("mask dimension mismatch");
  mask_ = std::move(mask);
}

Vec PClassModel::extend(const Vec& x) const {
  Vec xe(u_ + 1);
  xe(0) = 1.0;
  xe.tail(u_) = mask_.size() ? x.cwiseProduct(mask_) : x;
  return xe;
}

Scalar masked_distance(const FuzzyRule& rule, const Vec& x, const Vec& mask) {
  if (mask.size() == 0) return mahalanobis(x, rule.center, rule.inv_cov);
  const Vec d = (x - rule.center).cwiseProduct(mask);
  return d.dot(rule.inv_cov * d);
}

Scalar PClassModel::distance(const FuzzyRule& rule, const Vec& x) const {
  return masked_distance(rule, x, mask_);
}

Scalar PClassModel::masked_fire(const FuzzyRule& rule, const Vec& x) const {
  return std::exp(-distance(rule, x));
}

Vec PClassModel::normalized_firing(const Vec& x) const {
  Vec logw(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) logw(i) = -distance(rules_[i], x);
  return softmax(logw);
}

Scalar PClassModel::log_likelihood(const FuzzyRule& rule, const Vec& x) const {
  const Scalar log_volume = -log_det_inv(rule, kind_);
  return -0.5 * (std::log(2.0 * std::numbers::pi) + log_volume) - distance(rule, x);
}

Inference PClassModel::infer(const Vec& x) const {
  if (rules_.empty()) throw invariant_violation("model is empty");
  const Vec lambda = normalized_firing(x);
  const Vec xe = extend(x);
  Vec scores = Vec::Zero(O_);
  for (std::size_t i = 0; i < rules_.size(); ++i)
    scores.noalias() += lambda(i) * (rules_[i].weights.transpose() * xe);
  Inference out;
  out.predicted = static_cast<int>(argmax_first(scores)) + 1;
  out.scores = std::move(scores);
  return out;
}

std::size_t PClassModel::winner(const Vec& x, int label) const {
  if (rules_.empty()) throw invariant_violation("model is empty");
  Scalar total = 0;
  for (const auto& r : rules_) total += static_cast<Scalar>(r.support);
  Vec score(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    const Scalar n = static_cast<Scalar>(r.support);
    const Scalar purity =
        (static_cast<Scalar>(r.class_support[label - 1]) + 1.0) / (n + static_cast<Scalar>(O_));
    score(i) = -distance(r, x) + std::log(n / total) + std::log(purity);
  }
  return static_cast<std::size_t>(argmax_first(score));
}

GrowDecision PClassModel::grow_check(const Vec& x, const Vec& target) const {
  if (rules_.empty()) return GrowDecision::grow;
  const int label = static_cast<int>(argmax_first(target)) + 1;
  const Scalar err = (target - infer(x).scores).norm();
  const auto& win = rules_[winner(x, label)];
  const bool significant = err > params_.err_grow;
  const bool novel = distance(win, x) > novelty_threshold_;
  const bool sparse = rde_.last_density <
                      rde_.density_mean - params_.density_sigmas * rde_.density_std();
  if (significant && novel && sparse) return GrowDecision::grow;
  if (rule_volume(win) > params_.volume_cap * std::pow(6.0, u_))
    return GrowDecision::grow_denied_by_volume;
  return GrowDecision::update_winner;
}

std::size_t PClassModel::add_rule(const Vec& x, int label) {
  if (x.size() != u_) throw data_error("pclass: input dimension mismatch");
  FuzzyRule rule;
  Scalar spread = params_.init_spread;
  if (!rules_.empty()) {
    Scalar nearest = std::numeric_limits<Scalar>::infinity();
    for (const auto& r : rules_) nearest = std::min(nearest, (r.center - x).norm());
    spread = std::max(0.5 * nearest, params_.min_spread);
  }
  // A newborn rule must sit well inside the volume cap, or the override in
  // grow_check would fire on every sample it wins.
  spread = std::min(spread, max_spread());
  rule.center = x;
  rule.inv_cov = Mat::Identity(u_, u_) / (spread * spread);
  rule.support = 1;
  rule.class_support.assign(O_, 0);
  rule.class_support[label - 1] = 1;
  rule.weights = rules_.empty() ? Mat::Zero(u_ + 1, O_) : rules_[winner(x, label)].weights;
  rule.rls_cov = params_.rls_init * Mat::Identity(u_ + 1, u_ + 1);
  rule.age = 0;
  rules_.push_back(std::move(rule));
  rules_.back().activity = 1.0 / static_cast<Scalar>(rules_.size());
  ++events_.grown;
  return rules_.size() - 1;
}

Scalar PClassModel::max_spread() const {
  const Scalar log_cap = std::log(0.5 * params_.volume_cap) + u_ * std::log(6.0);
  return std::exp(log_cap / (2.0 * u_));
}

void PClassModel::refresh_inverse_spd(FuzzyRule& rule) const {
  if (kind_ == BaseKind::axis_parallel) {
    rule.inv_cov.diagonal() = rule.inv_cov.diagonal().cwiseMax(kEigenFloor);
    return;
  }
  rule.inv_cov = (0.5 * (rule.inv_cov + rule.inv_cov.transpose())).eval();
  Eigen::LLT<Mat> llt(rule.inv_cov);
  if (llt.info() != Eigen::Success || !is_spd(rule.inv_cov))
    rule.inv_cov = spd_floor(rule.inv_cov, kEigenFloor);
}

void PClassModel::update_winner(const Vec& x, int label) {
  auto& r = rules_[winner(x, label)];
  r.support += 1;
  r.class_support[label - 1] += 1;
  const Scalar n = static_cast<Scalar>(r.support);
  const Vec a = x - r.center;
  r.center += a / n;
  // Sigma_new = (n-1)/n * (Sigma + a a^T / n), with a taken against the old center.
  if (kind_ == BaseKind::axis_parallel) {
    for (int j = 0; j < u_; ++j) {
      const Scalar var = 1.0 / r.inv_cov(j, j);
      const Scalar updated = (n - 1.0) / n * (var + a(j) * a(j) / n);
      r.inv_cov(j, j) = 1.0 / updated;
    }
  } else {
    const Vec pa = r.inv_cov * a;
    const Scalar denom = n + a.dot(pa);
    r.inv_cov = (n / (n - 1.0)) * (r.inv_cov - pa * pa.transpose() / denom);
  }
  refresh_inverse_spd(r);
}

std::vector<PruneFlag> PClassModel::prune_check(const Vec& lambda) {
  const std::size_t R = rules_.size();
  std::vector<Scalar> potential(R);
  for (std::size_t i = 0; i < R; ++i) {
    auto& r = rules_[i];
    r.activity = params_.decay * r.activity + (1.0 - params_.decay) * lambda(i);
    potential[i] = rde_.potential(r.center);
    // Peaks are tracked once the stream statistics have matured.
    if (rde_.count >= params_.age_min) r.peak_potential = std::max(r.peak_potential, potential[i]);
  }
  std::vector<PruneFlag> flags;
  if (R < 2) return flags;
  Scalar mean_activity = 0;
  for (const auto& r : rules_) mean_activity += r.activity;
  mean_activity /= static_cast<Scalar>(R);
  for (std::size_t i = 0; i < R; ++i) {
    const auto& r = rules_[i];
    if (r.age < params_.age_min) continue;
    if (r.activity < params_.prune_frac * mean_activity)
      flags.push_back({i, PruneReason::ers});
    else if (potential[i] < params_.potential_frac * r.peak_potential)
      flags.push_back({i, PruneReason::potential});
  }
  if (flags.size() == R) {
    // Keep the most active rule.
    std::size_t keep = 0;
    for (std::size_t i = 1; i < R; ++i)
      if (rules_[i].activity > rules_[keep].activity) keep = i;
    flags.erase(std::remove_if(flags.begin(), flags.end(),
                               [keep](const PruneFlag& f) { return f.index == keep; }),
                flags.end());
  }
  return flags;
}

void PClassModel::apply_prune(const std::vector<PruneFlag>& flags) {
  std::vector<PruneFlag> sorted = flags;
  std::sort(sorted.begin(), sorted.end(),
            [](const PruneFlag& a, const PruneFlag& b) { return a.index > b.index; });
  for (const auto& f : sorted) {
    archive_.push_back(std::move(rules_[f.index]));
    rules_.erase(rules_.begin() + static_cast<std::ptrdiff_t>(f.index));
    if (f.reason == PruneReason::ers)
      ++events_.pruned_ers;
    else
      ++events_.pruned_potential;
  }
}

std::optional<std::size_t> PClassModel::recall_check(const Vec& x) {
  if (archive_.empty()) return std::nullopt;
  std::size_t best = 0;
  Scalar best_fire = -1;
  for (std::size_t j = 0; j < archive_.size(); ++j) {
    const Scalar f = masked_fire(archive_[j], x);
    if (f > best_fire) {
      best_fire = f;
      best = j;
    }
  }
  const Scalar handicap = std::exp(-params_.novelty_quantile * u_ / 2.0);
  if (!(best_fire > handicap)) return std::nullopt;
  rules_.push_back(std::move(archive_[best]));
  archive_.erase(archive_.begin() + static_cast<std::ptrdiff_t>(best));
  rules_.back().activity = 1.0 / static_cast<Scalar>(rules_.size());
  ++events_.recalled;
  return rules_.size() - 1;
}

void PClassModel::train_sample(const Vec& x, int label) {
  if (x.size() != u_) throw data_error("pclass: input dimension mismatch");
  const Vec target = one_hot(label, O_);
  const Scalar density = rde_.observe(x);
  const GrowDecision decision = grow_check(x, target);
  if (decision == GrowDecision::update_winner) {
    update_winner(x, label);
  } else if (!recall_check(x)) {
    add_rule(x, label);
  }
  rde_.record_density(density);

  const Vec lambda = normalized_firing(x);
  const Vec xe = extend(x);
  for (std::size_t i = 0; i < rules_.size(); ++i)
    if (lambda(i) > kFiringFloor)
      fwgrls_update(rules_[i], lambda(i), xe, target, params_.weight_decay);

  apply_prune(prune_check(lambda));
  for (auto& r : rules_) ++r.age;
}

}  // namespace pens
