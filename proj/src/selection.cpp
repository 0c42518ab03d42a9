#include "pens/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pens/linalg.hpp"

namespace pens {

Scalar conflict_input(const std::vector<const PClassModel*>& models, const Vec& x) {
  int O = 0;
  Scalar total_support = 0;
  std::size_t R = 0;
  for (const auto* m : models) {
    if (!m) continue;
    O = m->classes();
    for (const auto& r : m->rules()) total_support += static_cast<Scalar>(r.support);
    R += m->size();
  }
  if (R == 0) throw invariant_violation("conflict_input needs at least one rule");

  // log P(y_o|R_i) + log P(x|R_i) + log P(R_i), stacked per class.
  Mat terms(O, R);
  Scalar max_loglik = -std::numeric_limits<Scalar>::infinity();
  std::size_t col = 0;
  for (const auto* m : models) {
    if (!m) continue;
    for (const auto& r : m->rules()) {
      const Scalar n = static_cast<Scalar>(r.support);
      const Scalar ll = m->log_likelihood(r, x);
      max_loglik = std::max(max_loglik, ll);
      const Scalar prior = std::log(n / total_support);
      for (int o = 0; o < O; ++o) {
        const Scalar purity = (static_cast<Scalar>(r.class_support[o]) + 1.0) / (n + O);
        terms(o, col) = std::log(purity) + ll + prior;
      }
      ++col;
    }
  }
  if (max_loglik < std::log(1e-300)) return 1.0 / O;
  Vec per_class(O);
  for (int o = 0; o < O; ++o) per_class(o) = log_sum_exp(terms.row(o).transpose());
  return softmax(per_class).maxCoeff();
}

Scalar conflict_output(const Vec& scores) {
  if (scores.size() < 2) throw config_error("conflict_output needs at least two classes");
  Scalar y1 = -std::numeric_limits<Scalar>::infinity();
  Scalar y2 = y1;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const Scalar v = scores(i);
    if (v > y1) {
      y2 = y1;
      y1 = v;
    } else if (v > y2) {
      y2 = v;
    }
  }
  const Scalar denom = y1 + y2;
  if (denom == 0) return 0.5;
  return std::clamp(y1 / denom, 0.0, 1.0);
}

void ActiveLearnParams::validate() const {
  if (budget) throw config_error("budget-constrained active learning is not supported");
  if (class_imbalance) throw config_error("class-imbalance active learning is not supported");
  if (!(theta_min > 0 && theta_min <= theta_max && theta_max <= 1))
    throw config_error("need 0 < theta_min <= theta_max <= 1");
  if (!(theta0 >= theta_min && theta0 <= theta_max))
    throw config_error("theta must lie within [theta_min, theta_max]");
  if (!(step > 0 && step < 1)) throw config_error("threshold step must lie in (0,1)");
  if (!(target_rate > 0 && target_rate < 1)) throw config_error("target rate must lie in (0,1)");
  if (!(slack >= 0 && slack < theta_min)) throw config_error("slack must lie in [0, theta_min)");
}

ActiveLearnState::ActiveLearnState(const ActiveLearnParams& p)
    : theta(p.theta0),
      level(p.theta0),
      step_accept(p.step),
      step_reject(p.reject_step()),
      theta_min(p.theta_min),
      theta_max(p.theta_max),
      slack(p.slack),
      conjunction(p.conjunction) {}

Decision decide(ActiveLearnState& state, const ConflictScores& scores) {
  const bool in = scores.p_input <= state.theta;
  const bool out = scores.p_output <= state.theta;
  const bool accept = state.conjunction ? (in && out) : (in || out);
  ++state.seen;
  if (accept) {
    ++state.accepted;
    state.level *= 1.0 - state.step_accept;
  } else {
    state.level *= 1.0 + state.step_reject;
  }
  state.level = std::clamp(state.level, state.theta_min - state.slack, state.theta_max + state.slack);
  state.theta = std::clamp(state.level, state.theta_min, state.theta_max);
  return accept ? Decision::accept : Decision::reject;
}

void OfsParams::validate() const {
  if (!(learning_rate > 0)) throw config_error("OFS learning rate must be > 0");
  if (!(chi > 0)) throw config_error("OFS regularizer must be > 0");
  if (!(learning_rate * chi < 1)) throw config_error("OFS shrinkage factor must stay positive");
}

int OfsVirtualModel::dim() const { return rules.empty() ? 0 : rules.front()->dim(); }

Vec OfsVirtualModel::extend(const Vec& x) const {
  Vec xe(x.size() + 1);
  xe(0) = 1.0;
  xe.tail(x.size()) = mask.size() ? x.cwiseProduct(mask) : x;
  return xe;
}

Vec OfsVirtualModel::firing(const Vec& x) const {
  Vec logw(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) logw(i) = -masked_distance(*rules[i], x, mask);
  return softmax(logw);
}

Vec OfsVirtualModel::predict(const Vec& x) const {
  if (rules.empty()) throw invariant_violation("virtual model is empty");
  const Vec lambda = firing(x);
  const Vec xe = extend(x);
  Vec y = Vec::Zero(rules.front()->weights.cols());
  for (std::size_t i = 0; i < rules.size(); ++i)
    y.noalias() += lambda(i) * (rules[i]->weights.transpose() * xe);
  return y;
}

std::vector<Mat> OfsVirtualModel::gradient(const Vec& x, const Vec& target) const {
  const Vec lambda = firing(x);
  const Vec xe = extend(x);
  const Vec err = predict(x) - target;
  std::vector<Mat> grads;
  grads.reserve(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) grads.push_back(lambda(i) * xe * err.transpose());
  return grads;
}

void ofs_step(OfsVirtualModel& vm, const Vec& x, const Vec& target) {
  if (vm.rules.empty()) return;
  const auto grads = vm.gradient(x, target);
  const Scalar lr = vm.params.learning_rate;
  const Scalar shrink = 1.0 - lr * vm.params.chi;
  const Scalar radius = vm.params.radius();
  for (std::size_t i = 0; i < vm.rules.size(); ++i) {
    Mat& W = vm.rules[i]->weights;
    W = shrink * W - lr * grads[i];
    const Scalar norm = W.norm();
    if (norm > radius) W *= radius / norm;
  }
}

Vec feature_scores(const OfsVirtualModel& vm) {
  const int u = vm.dim();
  Vec mass = Vec::Zero(u);
  for (const auto* r : vm.rules)
    mass += r->weights.bottomRows(u).cwiseAbs().rowwise().sum();
  const Scalar total = mass.sum();
  if (!(total > 0)) return Vec::Constant(u, 1.0 / u);
  return mass / total;
}

FeatureMask apply_mask(const Vec& scores, int B) {
  const auto u = static_cast<int>(scores.size());
  if (B < 1 || B > u) throw config_error("apply_mask: B must lie in [1,u]");
  std::vector<int> order(u);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  FeatureMask m;
  m.active = Vec::Zero(u);
  for (int k = 0; k < B; ++k) m.active(order[k]) = 1.0;
  m.scores = scores;
  m.B = B;
  return m;
}

}  // namespace pens
