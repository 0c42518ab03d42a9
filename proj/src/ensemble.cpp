#include "pens/ensemble.hpp"

#include <algorithm>
#include <limits>

#include "pens/linalg.hpp"

namespace pens {

LearnerConfig LearnerConfig::defaults(int u, int O, int P) {
  LearnerConfig c;
  c.stream.u = u;
  c.stream.O = O;
  c.stream.P = P;
  c.grow.age_min = 2 * P;
  return c;
}

void LearnerConfig::validate() const {
  stream.validate();
  grow.validate();
  ofs.validate();
  ActiveLearnParams al_check = al;
  al_check.theta0 = stream.theta;
  al_check.theta_min = std::min(al.theta_min, stream.theta);
  al_check.theta_max = std::max(al.theta_max, stream.theta);
  al_check.validate();
  if (detector_chunks < 1) throw config_error("detector horizon must span >= 1 chunk");
  if (bootstrap_min < 1) throw config_error("bootstrap_min must be >= 1");
  if (!(beta_floor >= 0 && beta_floor < 1)) throw config_error("beta_floor must lie in [0,1)");
}

Prediction predict(const std::vector<EnsembleMember>& members, const Vec& x) {
  Prediction out;
  out.members.resize(members.size());
  bool any = false;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& m = members[i];
    if (!m.votes()) continue;
    out.members[i] = m.model.infer(x);
    if (!any) {
      out.global = Vec::Zero(out.members[i]->scores.size());
      any = true;
    }
    out.global.noalias() += m.beta * out.members[i]->scores;
  }
  if (!any) throw invariant_violation("ensemble is empty");
  out.predicted = static_cast<int>(argmax_first(out.global)) + 1;
  return out;
}

void normalize_betas(std::vector<EnsembleMember>& members) {
  Scalar total = 0;
  for (const auto& m : members) total += m.beta;
  if (!(total > 0)) return;
  for (auto& m : members) m.beta /= total;
}

void reward_penalize(std::vector<EnsembleMember>& members, const std::vector<int>& predicted,
                     int truth, Scalar p, Scalar beta_floor) {
  for (std::size_t i = 0; i < members.size() && i < predicted.size(); ++i) {
    if (predicted[i] == 0) continue;
    auto& b = members[i].beta;
    if (predicted[i] != truth)
      b = std::max(b * p, beta_floor);
    else
      b = std::min(b * (2.0 - p), 1.0);
  }
  normalize_betas(members);
}

std::size_t select_winner(const std::vector<EnsembleMember>& members) {
  std::size_t best = 0;
  Scalar best_mse = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& m = members[i];
    if (m.chunk_seen == 0) continue;
    const Scalar mse = m.chunk_sq_err / static_cast<Scalar>(m.chunk_seen);
    if (mse < best_mse) {
      best_mse = mse;
      best = i;
    }
  }
  return best;
}

std::vector<MergeAction> merge_check(const std::vector<EnsembleMember>& members,
                                     const MciState& mci, Scalar delta_rel,
                                     std::optional<Scalar> delta_abs) {
  std::vector<MergeAction> out;
  const std::size_t M = std::min(members.size(), mci.members());
  if (M < 2) return out;
  Scalar best_xi = std::numeric_limits<Scalar>::infinity();
  std::optional<std::pair<std::size_t, std::size_t>> pick;
  for (std::size_t i = 0; i < M; ++i) {
    if (members[i].bootstrapping || !members[i].votes()) continue;
    for (std::size_t j = i + 1; j < M; ++j) {
      if (members[j].bootstrapping || !members[j].votes()) continue;
      const auto s = mci.summarize(i, j);
      if (s.count < 2) continue;
      const Scalar threshold = delta_abs ? *delta_abs : delta_rel * 0.5 * (s.var1 + s.var2);
      if (s.xi <= threshold && s.xi < best_xi) {
        best_xi = s.xi;
        pick = std::make_pair(i, j);
      }
    }
  }
  if (!pick) return out;
  const auto [i, j] = *pick;
  // The less accurate member goes; on a tie the lower index goes.
  if (members[i].chunk_accuracy() > members[j].chunk_accuracy())
    out.push_back({i, j});
  else
    out.push_back({j, i});
  return out;
}

void apply_merge(std::vector<EnsembleMember>& members, const MergeAction& action) {
  auto& keep = members[action.keep];
  keep.beta = std::min(keep.beta + members[action.drop].beta, 1.0);
  members.erase(members.begin() + static_cast<std::ptrdiff_t>(action.drop));
  normalize_betas(members);
}

Ensemble::Ensemble(LearnerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.al.theta0 = cfg_.stream.theta;
  cfg_.al.conjunction = cfg_.stream.al_conjunction;
  cfg_.al.theta_min = std::min(cfg_.al.theta_min, cfg_.stream.theta);
  cfg_.al.theta_max = std::max(cfg_.al.theta_max, cfg_.stream.theta);
  cfg_.validate();
  const auto& s = cfg_.stream;
  detector_ = DriftDetector(s.alpha_w, s.alpha_d,
                            cfg_.detector_chunks * static_cast<std::size_t>(s.P));
  standardizer_ = RunningStandardizer(s.u);
  al_ = ActiveLearnState(cfg_.al);
  if (s.active_features() < s.u) {
    mask_ = Vec::Ones(s.u);
    importance_ = Vec::Constant(s.u, 1.0 / s.u);
  }
}

std::size_t Ensemble::add_member() {
  const auto& s = cfg_.stream;
  EnsembleMember m;
  m.model = PClassModel(s.u, s.O, s.base_kind, cfg_.grow);
  m.model.set_mask(mask_);
  m.beta = 1.0;
  m.bootstrapping = !members_.empty();
  members_.push_back(std::move(m));
  normalize_betas(members_);
  if (mci_.members() + 1 == members_.size())
    mci_.add_member();
  else
    mci_.reset(members_.size(), s.O);
  return members_.size() - 1;
}

void Ensemble::broadcast_mask() {
  for (auto& m : members_) m.model.set_mask(mask_);
}

OfsVirtualModel Ensemble::virtual_model() {
  OfsVirtualModel vm;
  for (auto& m : members_)
    for (auto& r : m.model.rules()) vm.rules.push_back(&r);
  vm.mask = mask_;
  vm.params = cfg_.ofs;
  return vm;
}

std::vector<const PClassModel*> Ensemble::model_views() const {
  std::vector<const PClassModel*> out;
  for (const auto& m : members_)
    if (m.votes()) out.push_back(&m.model);
  return out;
}

std::size_t Ensemble::total_rules() const {
  std::size_t R = 0;
  for (const auto& m : members_) R += m.model.size();
  return R;
}

std::size_t Ensemble::parameter_count() const { return count_parameters(*this); }

Prediction Ensemble::predict_standardized(const Vec& x) const { return predict(members_, x); }

int Ensemble::predict_raw(const Vec& raw) const {
  return predict_standardized(standardizer_.transform(raw)).predicted;
}

ChunkReport Ensemble::train_chunk(const DataChunk& chunk) {
  if (chunk.samples.empty()) throw data_error("train_chunk: empty chunk");
  const auto& cfg = cfg_.stream;
  const int O = cfg.O;
  const int B = cfg.active_features();
  const bool selecting = B < cfg.u;

  if (members_.empty()) add_member();
  for (auto& m : members_) {
    m.chunk_sq_err = 0;
    m.chunk_correct = 0;
    m.chunk_seen = 0;
  }
  mci_.reset(members_.size(), O);

  ChunkReport rep;
  rep.index = chunk.index;
  rep.theta_start = al_.theta;
  if (selecting) rep.feature_active.assign(static_cast<std::size_t>(cfg.u), 0);

  for (const auto& s : chunk.samples) {
    if (s.x.size() != cfg.u)
      throw data_error("sample has " + std::to_string(s.x.size()) + " features, expected " +
                       std::to_string(cfg.u));
    const Vec x = standardizer_.standardize(s.x);
    ++rep.seen;
    if (!s.label) continue;
    const int label = *s.label;
    if (label < 1 || label > O) throw data_error("class label outside 1..O");

    const bool can_vote =
        std::any_of(members_.begin(), members_.end(), [](const auto& m) { return m.votes(); });
    if (!can_vote) {
      // The very first labeled sample seeds the rule base unconditionally.
      ++rep.accepted;
      for (auto& m : members_) {
        m.model.train_sample(x, label);
        if (m.bootstrapping) ++m.bootstrap_seen;
      }
      continue;
    }

    const Prediction pred = predict_standardized(x);
    const ConflictScores conflict{conflict_input(model_views(), x), conflict_output(pred.global)};
    if (decide(al_, conflict) == Decision::reject) continue;
    ++rep.accepted;

    if (selecting) {
      ++rep.mask_samples;
      for (int j = 0; j < cfg.u; ++j)
        if (mask_(j) > 0.5) ++rep.feature_active[static_cast<std::size_t>(j)];
    }

    const Vec target = one_hot(label, O);
    const std::size_t M = members_.size();
    std::vector<int> votes(M, 0);
    std::vector<const Vec*> outputs(M, nullptr);
    for (std::size_t i = 0; i < M; ++i) {
      if (!pred.members[i]) continue;
      auto& m = members_[i];
      const auto& inf = *pred.members[i];
      votes[i] = inf.predicted;
      m.chunk_sq_err += (target - inf.scores).squaredNorm();
      ++m.chunk_seen;
      if (inf.predicted == label) ++m.chunk_correct;
      if (!m.bootstrapping) outputs[i] = &inf.scores;
    }
    mci_.accumulate(outputs);
    reward_penalize(members_, votes, label, cfg.p, cfg_.beta_floor);

    const bool wrong = pred.predicted != label;
    if (!wrong) ++rep.correct;
    const DriftState state = detector_.step(wrong ? 1.0 : 0.0);
    if (state == DriftState::drift) {
      ++rep.drift_events;
      add_member();
    } else if (state == DriftState::warning) {
      ++rep.warning_events;
    }

    const std::size_t winner = select_winner(members_);
    for (auto& m : members_) {
      if (!m.bootstrapping) continue;
      m.model.train_sample(x, label);
      ++m.bootstrap_seen;
    }
    if (state == DriftState::stable && !members_[winner].bootstrapping)
      members_[winner].model.train_sample(x, label);

    if (selecting) {
      auto vm = virtual_model();
      if (wrong) ofs_step(vm, x, target);
      importance_ = feature_scores(vm);
      mask_ = apply_mask(importance_, B).active;
      broadcast_mask();
    }
  }

  if (members_.size() >= 2) {
    for (const auto& action : merge_check(members_, mci_, cfg.delta_rel, cfg.delta_abs)) {
      apply_merge(members_, action);
      ++rep.merges;
    }
  }
  for (auto& m : members_) {
    if (!m.bootstrapping) continue;
    if (m.bootstrap_seen >= cfg_.bootstrap_min || m.bootstrap_extended)
      m.bootstrapping = false;
    else
      m.bootstrap_extended = true;
  }

  ++chunks_seen_;
  rep.members = members_.size();
  rep.rules = total_rules();
  rep.theta_end = al_.theta;
  rep.mask = mask_;
  rep.importance = importance_;
  return rep;
}

void Ensemble::restore_state(RunningStandardizer st, DriftDetector det, ActiveLearnState al,
                             Vec mask, Vec importance, std::vector<EnsembleMember> members,
                             std::size_t chunks_seen) {
  standardizer_ = std::move(st);
  detector_ = std::move(det);
  al_ = al;
  mask_ = std::move(mask);
  importance_ = std::move(importance);
  members_ = std::move(members);
  chunks_seen_ = chunks_seen;
  mci_.reset(members_.size(), cfg_.stream.O);
  broadcast_mask();
}

std::size_t count_parameters(const Ensemble& ens) {
  std::size_t total = 0;
  for (const auto& m : ens.members()) {
    const auto u = static_cast<std::size_t>(m.model.dim());
    const auto O = static_cast<std::size_t>(m.model.classes());
    const std::size_t dispersion =
        m.model.kind() == BaseKind::axis_parallel ? u : u * (u + 1) / 2;
    total += m.model.size() * (u + dispersion + (u + 1) * O);
    total += 1;
  }
  return total;
}

}  // namespace pens
