#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pens/core.hpp"
#include "pens/drift.hpp"
#include "pens/mci.hpp"
#include "pens/pclass.hpp"
#include "pens/selection.hpp"

namespace pens {

/// Everything needed to build an Ensemble.
struct LearnerConfig {
  StreamConfig stream;
  GrowPruneParams grow;
  ActiveLearnParams al;
  OfsParams ofs;
  std::size_t detector_chunks = 4;  // drift window horizon in chunks
  int bootstrap_min = 5;            // accepted samples a drift-born member needs
  Scalar beta_floor = 1e-8;         // pre-normalization floor on voting weights

  /// Defaults for a stream with u inputs, O classes and chunk size P. Sets
  /// the rule age gate to 2P.
  static LearnerConfig defaults(int u, int O, int P);
  void validate() const;
};

struct EnsembleMember {
  PClassModel model;
  Scalar beta = 1.0;
  Scalar chunk_sq_err = 0.0;
  std::int64_t chunk_correct = 0;
  std::int64_t chunk_seen = 0;
  bool bootstrapping = false;
  std::int64_t bootstrap_seen = 0;
  bool bootstrap_extended = false;

  bool votes() const { return !model.empty(); }
  Scalar chunk_accuracy() const {
    return chunk_seen ? static_cast<Scalar>(chunk_correct) / static_cast<Scalar>(chunk_seen) : 0.0;
  }
};

struct Prediction {
  Vec global;
  int predicted = 1;                         // 1-based
  std::vector<std::optional<Inference>> members;
};

/// Beta-weighted vote over the members that have at least one rule.
/// Throws invariant_violation when no member can vote.
Prediction predict(const std::vector<EnsembleMember>& members, const Vec& x);

/// Multiplies wrong members' beta by p, correct ones by (2 - p) capped at 1,
/// then normalizes. `predicted[i] == 0` marks a member that did not vote.
void reward_penalize(std::vector<EnsembleMember>& members, const std::vector<int>& predicted,
                     int truth, Scalar p, Scalar beta_floor = 0.0);

void normalize_betas(std::vector<EnsembleMember>& members);

/// Lowest running chunk MSE among members that saw a labeled sample; 0 if none.
std::size_t select_winner(const std::vector<EnsembleMember>& members);

struct MergeAction {
  std::size_t keep;
  std::size_t drop;
};

/// At most one (keep, drop) pair whose mean MCI is below the threshold. With
/// delta_abs set the threshold is absolute, otherwise delta_rel * mean variance.
/// Members flagged `bootstrapping` are not considered.
std::vector<MergeAction> merge_check(const std::vector<EnsembleMember>& members,
                                     const MciState& mci, Scalar delta_rel,
                                     std::optional<Scalar> delta_abs = std::nullopt);

/// Applies a merge: survivor beta <- min(beta_keep + beta_drop, 1), drop erased,
/// betas renormalized.
void apply_merge(std::vector<EnsembleMember>& members, const MergeAction& action);

struct ChunkReport {
  std::size_t index = 0;
  std::int64_t seen = 0;
  std::int64_t accepted = 0;
  std::int64_t correct = 0;  // prequential, accepted samples only
  std::size_t members = 0;
  std::size_t rules = 0;
  std::int64_t drift_events = 0;
  std::int64_t warning_events = 0;
  std::int64_t merges = 0;
  Scalar theta_start = 0;
  Scalar theta_end = 0;
  Vec mask;
  Vec importance;
  std::int64_t mask_samples = 0;      // accepted samples with a selection mask in force
  std::vector<std::int64_t> feature_active;  // per-feature count over those samples
};

class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(LearnerConfig cfg);

  /// One pass over a raw (unstandardized) chunk.
  ChunkReport train_chunk(const DataChunk& chunk);

  /// Frozen scoring of a raw sample: no statistic or model is touched.
  int predict_raw(const Vec& raw) const;
  Prediction predict_standardized(const Vec& x) const;

  const LearnerConfig& config() const { return cfg_; }
  const std::vector<EnsembleMember>& members() const { return members_; }
  std::vector<EnsembleMember>& members() { return members_; }
  const DriftDetector& detector() const { return detector_; }
  const RunningStandardizer& standardizer() const { return standardizer_; }
  const ActiveLearnState& al_state() const { return al_; }
  const Vec& mask() const { return mask_; }
  const Vec& importance() const { return importance_; }
  std::size_t chunks_seen() const { return chunks_seen_; }

  std::size_t member_count() const { return members_.size(); }
  std::size_t total_rules() const;
  std::size_t parameter_count() const;

  /// Snapshot restore hooks (see serialize.hpp).
  void restore_state(RunningStandardizer st, DriftDetector det, ActiveLearnState al, Vec mask,
                     Vec importance, std::vector<EnsembleMember> members, std::size_t chunks_seen);

  /// Appends a fresh member (beta 1 before normalization) and returns its index.
  std::size_t add_member();

 private:
  void broadcast_mask();
  OfsVirtualModel virtual_model();
  std::vector<const PClassModel*> model_views() const;

  LearnerConfig cfg_;
  std::vector<EnsembleMember> members_;
  DriftDetector detector_;
  RunningStandardizer standardizer_;
  ActiveLearnState al_;
  MciState mci_;
  Vec mask_;
  Vec importance_;
  std::size_t chunks_seen_ = 0;
};

/// Network parameter count: per rule, centers + dispersion (u diagonal
/// entries, or u(u+1)/2 for full matrices) + (u+1)*O consequents; plus one
/// beta per member.
std::size_t count_parameters(const Ensemble& ens);

}  // namespace pens
