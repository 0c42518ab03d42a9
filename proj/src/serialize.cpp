#include "pens/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace pens {

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw invariant_violation("snapshot: non-finite value");
    a.push_back(v(i));
  }
  return a;
}

Vec vec_from(const json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<Scalar>();
  return v;
}

json mat_json(const Mat& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) throw invariant_violation("snapshot: non-finite value");
      data.push_back(m(r, c));
    }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat mat_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (data.size() != static_cast<std::size_t>(rows * cols))
    throw data_error("snapshot: matrix size mismatch");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<Scalar>();
  return m;
}

DriftState drift_state_from(const std::string& s) {
  if (s == "stable") return DriftState::stable;
  if (s == "warning") return DriftState::warning;
  if (s == "drift") return DriftState::drift;
  throw data_error("snapshot: unknown drift state '" + s + "'");
}

}  // namespace

json to_json(const FuzzyRule& r) {
  return {{"center", vec_json(r.center)},
          {"inv_cov", mat_json(r.inv_cov)},
          {"support", r.support},
          {"class_support", r.class_support},
          {"weights", mat_json(r.weights)},
          {"rls_cov", mat_json(r.rls_cov)},
          {"activity", r.activity},
          {"peak_potential", r.peak_potential},
          {"age", r.age}};
}

FuzzyRule rule_from_json(const json& j) {
  FuzzyRule r;
  r.center = vec_from(j.at("center"));
  r.inv_cov = mat_from(j.at("inv_cov"));
  r.support = j.at("support").get<std::int64_t>();
  r.class_support = j.at("class_support").get<std::vector<std::int64_t>>();
  r.weights = mat_from(j.at("weights"));
  r.rls_cov = mat_from(j.at("rls_cov"));
  r.activity = j.at("activity").get<Scalar>();
  r.peak_potential = j.at("peak_potential").get<Scalar>();
  r.age = j.at("age").get<std::int64_t>();
  return r;
}

static json grow_json(const GrowPruneParams& g) {
  return {{"err_grow", g.err_grow},         {"novelty_quantile", g.novelty_quantile},
          {"density_sigmas", g.density_sigmas}, {"volume_cap", g.volume_cap},
          {"prune_frac", g.prune_frac},     {"decay", g.decay},
          {"potential_frac", g.potential_frac}, {"age_min", g.age_min},
          {"weight_decay", g.weight_decay}, {"init_spread", g.init_spread},
          {"min_spread", g.min_spread},     {"rls_init", g.rls_init}};
}

static GrowPruneParams grow_from(const json& j) {
  GrowPruneParams g;
  g.err_grow = j.at("err_grow");
  g.novelty_quantile = j.at("novelty_quantile");
  g.density_sigmas = j.at("density_sigmas");
  g.volume_cap = j.at("volume_cap");
  g.prune_frac = j.at("prune_frac");
  g.decay = j.at("decay");
  g.potential_frac = j.at("potential_frac");
  g.age_min = j.at("age_min");
  g.weight_decay = j.at("weight_decay");
  g.init_spread = j.at("init_spread");
  g.min_spread = j.at("min_spread");
  g.rls_init = j.at("rls_init");
  return g;
}

json to_json(const PClassModel& m) {
  json rules = json::array(), archive = json::array();
  for (const auto& r : m.rules()) rules.push_back(to_json(r));
  for (const auto& r : m.archive()) archive.push_back(to_json(r));
  const auto& d = m.rde();
  const auto& e = m.events();
  return {{"u", m.dim()},
          {"O", m.classes()},
          {"kind", to_string(m.kind())},
          {"params", grow_json(m.params())},
          {"mask", vec_json(m.mask())},
          {"rules", rules},
          {"archive", archive},
          {"rde",
           {{"count", d.count},
            {"mean", vec_json(d.mean)},
            {"mean_sq_norm", d.mean_sq_norm},
            {"density_count", d.density_count},
            {"density_mean", d.density_mean},
            {"density_m2", d.density_m2},
            {"last_density", d.last_density}}},
          {"events",
           {{"grown", e.grown},
            {"recalled", e.recalled},
            {"pruned_ers", e.pruned_ers},
            {"pruned_potential", e.pruned_potential}}}};
}

PClassModel model_from_json(const json& j) {
  PClassModel m(j.at("u").get<int>(), j.at("O").get<int>(),
                base_kind_from_string(j.at("kind").get<std::string>()), grow_from(j.at("params")));
  m.set_mask(vec_from(j.at("mask")));
  for (const auto& r : j.at("rules")) m.rules().push_back(rule_from_json(r));
  for (const auto& r : j.at("archive")) m.archive().push_back(rule_from_json(r));
  const auto& d = j.at("rde");
  auto& rde = m.rde();
  rde.count = d.at("count");
  rde.mean = vec_from(d.at("mean"));
  rde.mean_sq_norm = d.at("mean_sq_norm");
  rde.density_count = d.at("density_count");
  rde.density_mean = d.at("density_mean");
  rde.density_m2 = d.at("density_m2");
  rde.last_density = d.at("last_density");
  const auto& e = j.at("events");
  m.restore_events({e.at("grown"), e.at("recalled"), e.at("pruned_ers"), e.at("pruned_potential")});
  return m;
}

json to_json(const LearnerConfig& c) {
  const auto& s = c.stream;
  json stream = {{"u", s.u},
                 {"O", s.O},
                 {"P", s.P},
                 {"theta", s.theta},
                 {"delta_rel", s.delta_rel},
                 {"delta_abs", s.delta_abs ? json(*s.delta_abs) : json(nullptr)},
                 {"alpha_w", s.alpha_w},
                 {"alpha_d", s.alpha_d},
                 {"p", s.p},
                 {"B", s.B},
                 {"seed", s.seed},
                 {"base_kind", to_string(s.base_kind)},
                 {"al_conjunction", s.al_conjunction}};
  json al = {{"theta0", c.al.theta0},         {"step", c.al.step},
             {"theta_min", c.al.theta_min},   {"theta_max", c.al.theta_max},
             {"target_rate", c.al.target_rate}, {"slack", c.al.slack},
             {"conjunction", c.al.conjunction}};
  return {{"stream", stream},
          {"grow", grow_json(c.grow)},
          {"al", al},
          {"ofs", {{"learning_rate", c.ofs.learning_rate}, {"chi", c.ofs.chi}}},
          {"detector_chunks", c.detector_chunks},
          {"bootstrap_min", c.bootstrap_min},
          {"beta_floor", c.beta_floor}};
}

LearnerConfig config_from_json(const json& j) {
  LearnerConfig c;
  const auto& s = j.at("stream");
  c.stream.u = s.at("u");
  c.stream.O = s.at("O");
  c.stream.P = s.at("P");
  c.stream.theta = s.at("theta");
  c.stream.delta_rel = s.at("delta_rel");
  if (!s.at("delta_abs").is_null()) c.stream.delta_abs = s.at("delta_abs").get<Scalar>();
  c.stream.alpha_w = s.at("alpha_w");
  c.stream.alpha_d = s.at("alpha_d");
  c.stream.p = s.at("p");
  c.stream.B = s.at("B");
  c.stream.seed = s.at("seed");
  c.stream.base_kind = base_kind_from_string(s.at("base_kind"));
  c.stream.al_conjunction = s.at("al_conjunction");
  c.grow = grow_from(j.at("grow"));
  const auto& a = j.at("al");
  c.al.theta0 = a.at("theta0");
  c.al.step = a.at("step");
  c.al.theta_min = a.at("theta_min");
  c.al.theta_max = a.at("theta_max");
  c.al.target_rate = a.at("target_rate");
  c.al.slack = a.at("slack");
  c.al.conjunction = a.at("conjunction");
  c.ofs.learning_rate = j.at("ofs").at("learning_rate");
  c.ofs.chi = j.at("ofs").at("chi");
  c.detector_chunks = j.at("detector_chunks");
  c.bootstrap_min = j.at("bootstrap_min");
  c.beta_floor = j.at("beta_floor");
  return c;
}

json to_json(const Ensemble& ens) {
  const auto& st = ens.standardizer();
  const auto& det = ens.detector();
  const auto& al = ens.al_state();
  json members = json::array();
  for (const auto& m : ens.members())
    members.push_back({{"model", to_json(m.model)},
                       {"beta", m.beta},
                       {"bootstrapping", m.bootstrapping},
                       {"bootstrap_seen", m.bootstrap_seen},
                       {"bootstrap_extended", m.bootstrap_extended}});
  json window = json::array();
  for (Scalar v : det.window()) window.push_back(v);
  return {{"format", "pens-snapshot/1"},
          {"config", to_json(ens.config())},
          {"chunks_seen", ens.chunks_seen()},
          {"standardizer",
           {{"count", st.count()}, {"mean", vec_json(st.mean())}, {"m2", vec_json(st.m2())}}},
          {"detector",
           {{"window", window},
            {"state", to_string(det.state())},
            {"cut", det.cut() ? json(*det.cut()) : json(nullptr)}}},
          {"al",
           {{"theta", al.theta},
            {"level", al.level},
            {"accepted", al.accepted},
            {"seen", al.seen}}},
          {"mask", vec_json(ens.mask())},
          {"importance", vec_json(ens.importance())},
          {"members", members}};
}

Ensemble ensemble_from_json(const json& j) {
  if (j.value("format", "") != "pens-snapshot/1") throw data_error("not a pens snapshot");
  Ensemble ens(config_from_json(j.at("config")));

  const auto& s = j.at("standardizer");
  RunningStandardizer st;
  st.restore(s.at("count"), vec_from(s.at("mean")), vec_from(s.at("m2")));

  const auto& d = j.at("detector");
  DriftDetector det = ens.detector();
  std::deque<Scalar> window;
  for (const auto& v : d.at("window")) window.push_back(v.get<Scalar>());
  std::optional<std::size_t> cut;
  if (!d.at("cut").is_null()) cut = d.at("cut").get<std::size_t>();
  det.restore(std::move(window), drift_state_from(d.at("state")), cut);

  ActiveLearnState al = ens.al_state();
  const auto& a = j.at("al");
  al.theta = a.at("theta");
  al.level = a.at("level");
  al.accepted = a.at("accepted");
  al.seen = a.at("seen");

  std::vector<EnsembleMember> members;
  for (const auto& mj : j.at("members")) {
    EnsembleMember m;
    m.model = model_from_json(mj.at("model"));
    m.beta = mj.at("beta");
    m.bootstrapping = mj.at("bootstrapping");
    m.bootstrap_seen = mj.at("bootstrap_seen");
    m.bootstrap_extended = mj.at("bootstrap_extended");
    members.push_back(std::move(m));
  }
  ens.restore_state(std::move(st), std::move(det), al, vec_from(j.at("mask")),
                    vec_from(j.at("importance")), std::move(members),
                    j.at("chunks_seen").get<std::size_t>());
  return ens;
}

void save_snapshot(const Ensemble& ens, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  out << to_json(ens).dump(1) << '\n';
  if (!out) throw data_error("write failed: " + path);
}

Ensemble load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw data_error(path + ": " + e.what());
  }
  return ensemble_from_json(j);
}

std::uint64_t snapshot_hash(const Ensemble& ens) {
  const std::string text = to_json(ens).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json to_json(const StampMetrics& s) {
  return {{"record", "stamp"},
          {"stamp", s.index},
          {"start", s.start},
          {"cr", s.cr},
          {"fr", s.fr},
          {"bc", s.bc},
          {"np", s.np},
          {"ts", s.ts},
          {"rt", s.rt},
          {"trace",
           {{"trained", s.trained},
            {"tested", s.tested},
            {"drift", s.drift_events},
            {"warning", s.warning_events},
            {"merges", s.merges},
            {"theta", s.theta},
            {"mask", s.mask},
            {"mask_samples", s.mask_samples},
            {"feature_active", s.feature_active}}}};
}

json summary_json(const RunMetrics& m) {
  return {{"record", "summary"},
          {"cr", m.cr},
          {"cr_std", m.cr_std},
          {"fr", m.fr},
          {"fr_std", m.fr_std},
          {"bc", m.bc},
          {"bc_std", m.bc_std},
          {"np", m.np},
          {"np_std", m.np_std},
          {"ts", m.ts},
          {"ts_std", m.ts_std},
          {"rt", m.rt},
          {"stamps", m.series.size()},
          {"consumed", m.consumed},
          {"accept_rate", m.accept_rate()}};
}

void write_metrics(std::ostream& out, const RunMetrics& m) {
  for (const auto& s : m.series) out << to_json(s).dump() << '\n';
  out << summary_json(m).dump() << '\n';
}

void write_metrics(const std::string& path, const RunMetrics& m) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  write_metrics(out, m);
  if (!out) throw data_error("write failed: " + path);
}

RunMetrics read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  RunMetrics m;
  bool summary = false;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(lineno) + ": ";
    try {
      const json j = json::parse(line);
      const auto kind = j.at("record").get<std::string>();
      if (kind == "stamp") {
        StampMetrics s;
        s.index = j.at("stamp");
        s.start = j.at("start");
        s.cr = j.at("cr");
        s.fr = j.at("fr");
        s.bc = j.at("bc");
        s.np = j.at("np");
        s.ts = j.at("ts");
        s.rt = j.at("rt");
        const auto& t = j.at("trace");
        s.trained = t.at("trained");
        s.tested = t.at("tested");
        s.drift_events = t.at("drift");
        s.warning_events = t.at("warning");
        s.merges = t.at("merges");
        s.theta = t.at("theta");
        s.mask = t.at("mask").get<std::vector<int>>();
        s.mask_samples = t.at("mask_samples");
        s.feature_active = t.at("feature_active").get<std::vector<std::int64_t>>();
        m.series.push_back(std::move(s));
      } else if (kind == "summary") {
        m.cr = j.at("cr");
        m.cr_std = j.at("cr_std");
        m.fr = j.at("fr");
        m.fr_std = j.at("fr_std");
        m.bc = j.at("bc");
        m.bc_std = j.at("bc_std");
        m.np = j.at("np");
        m.np_std = j.at("np_std");
        m.ts = j.at("ts");
        m.ts_std = j.at("ts_std");
        m.rt = j.at("rt");
        m.consumed = j.at("consumed");
        summary = true;
      } else {
        throw data_error(where + "unknown record '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw data_error(where + e.what());
    }
  }
  if (!summary) throw data_error(path + ": no summary record");
  return m;
}

}  // namespace pens
