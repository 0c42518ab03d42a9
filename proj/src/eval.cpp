#include "pens/eval.hpp"

#include <cmath>
#include <future>

namespace pens {

void EvalProtocol::validate() const {
  if (mode == Mode::cv) {
    if (folds < 2) throw config_error("folds must be >= 2");
    return;
  }
  if (stamps < 1) throw config_error("stamps must be >= 1");
  if (train_per_stamp < 1) throw config_error("train block must be >= 1");
  if (test_per_stamp < 0) throw config_error("test block must be >= 0");
}

Scalar RunMetrics::accept_rate() const {
  Scalar acc = 0, offered = 0;
  for (const auto& s : series) {
    acc += s.ts;
    offered += static_cast<Scalar>(s.trained);
  }
  return offered > 0 ? acc / offered : 0.0;
}

void summarize(RunMetrics& m) {
  const auto stats = [&](auto field, Scalar& mean, Scalar& sd) {
    mean = sd = 0;
    if (m.series.empty()) return;
    const auto n = static_cast<Scalar>(m.series.size());
    for (const auto& s : m.series) mean += field(s);
    mean /= n;
    for (const auto& s : m.series) sd += (field(s) - mean) * (field(s) - mean);
    sd = std::sqrt(sd / n);
  };
  stats([](const StampMetrics& s) { return s.cr; }, m.cr, m.cr_std);
  stats([](const StampMetrics& s) { return s.fr; }, m.fr, m.fr_std);
  stats([](const StampMetrics& s) { return s.bc; }, m.bc, m.bc_std);
  stats([](const StampMetrics& s) { return s.np; }, m.np, m.np_std);
  stats([](const StampMetrics& s) { return s.ts; }, m.ts, m.ts_std);
}

std::vector<std::size_t> cv_bins(std::size_t n, int folds) {
  if (folds < 2) throw config_error("folds must be >= 2");
  const auto k = static_cast<std::size_t>(folds);
  if (n < k) throw data_error("need at least as many samples as folds");
  std::vector<std::size_t> edges{0};
  for (std::size_t b = 0; b < k; ++b) edges.push_back(edges.back() + n / k + (b < n % k ? 1 : 0));
  return edges;
}

RunMetrics run_cv(const std::vector<Sample>& data, int folds, const EnsembleFactory& make,
                  const RunOptions& opts) {
  if (opts.chunk == 0) throw config_error("chunk size must be >= 1");
  const auto edges = cv_bins(data.size(), folds);
  const auto k = static_cast<std::size_t>(folds);

  auto fold = [&](std::size_t f) {
    const auto t0 = std::chrono::steady_clock::now();
    Ensemble learner = make();
    StampMetrics s;
    s.index = static_cast<std::int64_t>(f);
    s.start = static_cast<std::int64_t>(edges[f]);
    std::vector<Sample> train;
    for (std::size_t step = 1; step < k; ++step) {
      const std::size_t b = (f + step) % k;
      train.insert(train.end(), data.begin() + static_cast<std::ptrdiff_t>(edges[b]),
                   data.begin() + static_cast<std::ptrdiff_t>(edges[b + 1]));
    }
    std::size_t index = 0;
    for (std::size_t off = 0; off < train.size(); off += opts.chunk) {
      DataChunk c;
      c.index = index++;
      const auto end = std::min(train.size(), off + opts.chunk);
      c.samples.assign(train.begin() + static_cast<std::ptrdiff_t>(off),
                       train.begin() + static_cast<std::ptrdiff_t>(end));
      s.trained += static_cast<std::int64_t>(c.samples.size());
      detail::fold_report(s, learner, learner.train_chunk(c));
    }
    const std::vector<Sample> test(data.begin() + static_cast<std::ptrdiff_t>(edges[f]),
                                   data.begin() + static_cast<std::ptrdiff_t>(edges[f + 1]));
    s.tested = static_cast<std::int64_t>(test.size());
    s.cr = detail::score(learner, test);
    if (opts.timing) s.rt = detail::seconds_since(t0);
    return s;
  };

  const auto run_start = std::chrono::steady_clock::now();
  std::vector<std::future<StampMetrics>> jobs;
  for (std::size_t f = 0; f < k; ++f) jobs.push_back(std::async(std::launch::async, fold, f));
  RunMetrics m;
  m.consumed = static_cast<std::int64_t>(data.size());
  for (auto& j : jobs) {
    m.series.push_back(j.get());
    if (opts.on_stamp) opts.on_stamp(m.series.back());
  }
  summarize(m);
  m.rt = opts.timing ? detail::seconds_since(run_start) : 0.0;
  return m;
}

}  // namespace pens
