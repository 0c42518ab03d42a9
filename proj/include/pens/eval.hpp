#pragma once

#include <chrono>
#include <concepts>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pens/core.hpp"
#include "pens/ensemble.hpp"

namespace pens {

struct EvalProtocol {
  enum class Mode { holdout, cv };
  Mode mode = Mode::holdout;
  int folds = 10;
  std::int64_t train_per_stamp = 250;
  std::int64_t test_per_stamp = 250;
  std::int64_t stamps = 200;

  void validate() const;
};

/// Metrics of one stamp (hold-out) or one fold (CV).
struct StampMetrics {
  std::int64_t index = 0;
  std::int64_t start = 0;      // stream position of the first training sample
  Scalar cr = 0;               // test classification rate
  Scalar fr = 0;               // rules after training
  Scalar bc = 0;               // members after training
  Scalar np = 0;               // parameters after training
  Scalar ts = 0;               // accepted training samples
  Scalar rt = 0;               // training + testing seconds
  std::int64_t trained = 0;    // labeled samples offered for training
  std::int64_t tested = 0;
  std::int64_t drift_events = 0;
  std::int64_t warning_events = 0;
  std::int64_t merges = 0;
  Scalar theta = 0;
  std::vector<int> mask;       // selected features (1-based) after training
  std::int64_t mask_samples = 0;
  std::vector<std::int64_t> feature_active;
};

struct RunMetrics {
  Scalar cr = 0, cr_std = 0;
  Scalar fr = 0, fr_std = 0;
  Scalar bc = 0, bc_std = 0;
  Scalar np = 0, np_std = 0;
  Scalar ts = 0, ts_std = 0;
  Scalar rt = 0;
  std::int64_t consumed = 0;   // samples pulled from the stream
  std::vector<StampMetrics> series;

  /// Accepted over offered training labels across the whole run.
  Scalar accept_rate() const;
};

/// Mean and population standard deviation of each series field.
void summarize(RunMetrics& m);

template <typename L>
concept StreamLearner = requires(L& l, const L& cl, const DataChunk& c, const Vec& x) {
  { l.train_chunk(c) } -> std::same_as<ChunkReport>;
  { cl.predict_raw(x) } -> std::convertible_to<int>;
  { cl.member_count() } -> std::convertible_to<std::size_t>;
  { cl.total_rules() } -> std::convertible_to<std::size_t>;
  { cl.parameter_count() } -> std::convertible_to<std::size_t>;
};

struct RunOptions {
  std::size_t chunk = 250;     // training chunk size P
  bool timing = true;          // rt = 0 when off, for byte-stable metrics
  std::function<void(const StampMetrics&)> on_stamp;
};

namespace detail {

inline Scalar seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t0).count();
}

template <StreamLearner L>
void fold_report(StampMetrics& s, const L& learner, const ChunkReport& r) {
  s.ts += static_cast<Scalar>(r.accepted);
  s.drift_events += r.drift_events;
  s.warning_events += r.warning_events;
  s.merges += r.merges;
  s.theta = r.theta_end;
  s.mask.clear();
  for (Eigen::Index j = 0; j < r.mask.size(); ++j)
    if (r.mask(j) > 0.5) s.mask.push_back(static_cast<int>(j) + 1);
  s.mask_samples += r.mask_samples;
  if (s.feature_active.size() < r.feature_active.size())
    s.feature_active.resize(r.feature_active.size(), 0);
  for (std::size_t j = 0; j < r.feature_active.size(); ++j) s.feature_active[j] += r.feature_active[j];
  s.fr = static_cast<Scalar>(learner.total_rules());
  s.bc = static_cast<Scalar>(learner.member_count());
  s.np = static_cast<Scalar>(learner.parameter_count());
}

template <StreamLearner L>
Scalar score(const L& learner, const std::vector<Sample>& test) {
  std::int64_t hit = 0, n = 0;
  for (const auto& s : test) {
    if (!s.label) continue;
    ++n;
    if (learner.predict_raw(s.x) == *s.label) ++hit;
  }
  return n ? static_cast<Scalar>(hit) / static_cast<Scalar>(n) : 0.0;
}

}  // namespace detail

/// Periodic hold-out: each stamp trains on the next train_per_stamp samples
/// (in chunks of opts.chunk) and then scores the next test_per_stamp samples
/// with the learner frozen. Throws data_error naming the stamp when the
/// stream runs out early.
template <StreamLearner L>
RunMetrics run_holdout(L& learner, SampleSource& source, const EvalProtocol& proto,
                       const RunOptions& opts = {}) {
  proto.validate();
  if (opts.chunk == 0) throw config_error("chunk size must be >= 1");
  RunMetrics m;
  std::size_t chunk_index = 0;
  auto pull = [&](std::int64_t n, std::int64_t stamp) {
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      auto s = source.next();
      if (!s)
        throw data_error("stream exhausted at stamp " + std::to_string(stamp + 1) + " of " +
                         std::to_string(proto.stamps) + " after " + std::to_string(m.consumed) +
                         " samples");
      ++m.consumed;
      out.push_back(std::move(*s));
    }
    return out;
  };

  const auto run_start = std::chrono::steady_clock::now();
  for (std::int64_t k = 0; k < proto.stamps; ++k) {
    StampMetrics s;
    s.index = k;
    s.start = m.consumed;
    auto train = pull(proto.train_per_stamp, k);
    auto test = pull(proto.test_per_stamp, k);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t off = 0; off < train.size(); off += opts.chunk) {
      DataChunk c;
      c.index = chunk_index++;
      const auto end = std::min(train.size(), off + opts.chunk);
      c.samples.assign(std::make_move_iterator(train.begin() + static_cast<std::ptrdiff_t>(off)),
                       std::make_move_iterator(train.begin() + static_cast<std::ptrdiff_t>(end)));
      for (const auto& smp : c.samples) s.trained += smp.label ? 1 : 0;
      detail::fold_report(s, learner, learner.train_chunk(c));
    }
    s.tested = static_cast<std::int64_t>(test.size());
    s.cr = detail::score(learner, test);
    if (opts.timing) s.rt = detail::seconds_since(t0);
    if (opts.on_stamp) opts.on_stamp(s);
    m.series.push_back(std::move(s));
  }
  summarize(m);
  m.rt = opts.timing ? detail::seconds_since(run_start) : 0.0;
  return m;
}

/// Learner factory for CV folds; each fold owns a fresh learner.
using EnsembleFactory = std::function<Ensemble()>;

/// k-fold CV over contiguous bins in stream order. Fold k tests bin k and
/// trains on bins k+1, ..., k-1 (rotating), each kept in order. Folds run on
/// worker threads.
RunMetrics run_cv(const std::vector<Sample>& data, int folds, const EnsembleFactory& make,
                  const RunOptions& opts = {});

/// Bin boundaries: sizes differ by at most one, larger bins first.
std::vector<std::size_t> cv_bins(std::size_t n, int folds);

}  // namespace pens
