#include "pens/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace pens {

namespace {

Scalar uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<Scalar>(0.0, 1.0)(rng);
}

Vec random_unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  Vec w(d);
  for (int i = 0; i < d; ++i) w(i) = normal(rng);
  return w.normalized();
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    out.push_back(trim(row.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool is_blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

// ---------------------------------------------------------------------------
// SEA

void SeaConfig::validate() const {
  if (n_total < 1) throw config_error("SEA: n_total must be >= 1");
  if (thresholds.empty()) throw config_error("SEA: need at least one threshold");
  if (!(minority_frac >= 0 && minority_frac < 1)) throw config_error("SEA: minority_frac in [0,1)");
  if (!(noise_frac >= 0 && noise_frac < 1)) throw config_error("SEA: noise_frac in [0,1)");
}

Scalar sea_threshold_at(const SeaConfig& cfg, std::int64_t i) {
  const auto K = static_cast<std::int64_t>(cfg.thresholds.size());
  const std::int64_t k = std::min(i * K / cfg.n_total, K - 1);
  return cfg.thresholds[static_cast<std::size_t>(k)];
}

Scalar sea_class2_area(Scalar t) {
  if (t <= 0) return 0.0;
  if (t >= 20) return 1.0;
  if (t <= 10) return t * t / 200.0;
  return 1.0 - (20.0 - t) * (20.0 - t) / 200.0;
}

SeaSource::SeaSource(SeaConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) { cfg_.validate(); }

std::optional<Sample> SeaSource::next() {
  if (pos_ >= cfg_.n_total) return std::nullopt;
  const Scalar theta = sea_threshold_at(cfg_, pos_);
  const Scalar p2 = sea_class2_area(theta);
  const Scalar m = cfg_.minority_frac;
  const bool resample = m > 0 && p2 > 0 && p2 < 1;
  // Thinning one class by acceptance probability `keep` moves its share to m.
  const int thinned = p2 < m ? 1 : 2;
  const Scalar keep = p2 < m ? p2 * (1 - m) / (m * (1 - p2)) : m * (1 - p2) / ((1 - m) * p2);

  std::uniform_real_distribution<Scalar> box(0.0, 10.0);
  Vec x(3);
  int label = 1;
  while (true) {
    for (int j = 0; j < 3; ++j) x(j) = box(rng_);
    label = sea_label(x, theta);
    if (!resample || label != thinned || uniform01(rng_) < keep) break;
  }
  if (cfg_.noise_frac > 0 && uniform01(rng_) < cfg_.noise_frac) label = 3 - label;
  ++pos_;
  return Sample(std::move(x), label);
}

// ---------------------------------------------------------------------------
// Hyperplane

void HyperplaneConfig::validate() const {
  if (d < 2) throw config_error("hyperplane: d must be >= 2");
  if (!(drift_start > 0 && drift_start < n_total))
    throw config_error("hyperplane: need 0 < drift_start < n_total");
  if (!(ramp_frac >= 0 && ramp_frac <= 1)) throw config_error("hyperplane: ramp_frac in [0,1]");
  if (w_before.size() && w_before.size() != d) throw config_error("hyperplane: w_before length");
  if (w_after.size() && w_after.size() != d) throw config_error("hyperplane: w_after length");
  if (!(noise_frac >= 0 && noise_frac < 1)) throw config_error("hyperplane: noise_frac in [0,1)");
}

HyperplaneConcepts hyperplane_concepts(const HyperplaneConfig& cfg) {
  std::mt19937_64 rng(cfg.weight_seed);
  HyperplaneConcepts c;
  const Vec wb = random_unit(rng, cfg.d);
  const Vec wa = random_unit(rng, cfg.d);
  c.w_before = cfg.w_before.size() ? cfg.w_before : wb;
  c.w_after = cfg.w_after.size() ? cfg.w_after : wa;
  c.w0_before = cfg.w0 ? *cfg.w0 : 0.5 * c.w_before.sum();
  c.w0_after = cfg.w0 ? *cfg.w0 : 0.5 * c.w_after.sum();
  return c;
}

Scalar hyperplane_mix_at(const HyperplaneConfig& cfg, std::int64_t i) {
  if (i < cfg.drift_start) return 0.0;
  const Scalar width = cfg.ramp_frac * static_cast<Scalar>(cfg.n_total);
  if (width <= 0) return 1.0;
  return std::min(static_cast<Scalar>(i - cfg.drift_start) / width, 1.0);
}

HyperplaneSource::HyperplaneSource(HyperplaneConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  concepts_ = hyperplane_concepts(cfg_);
}

std::optional<Sample> HyperplaneSource::next() {
  if (pos_ >= cfg_.n_total) return std::nullopt;
  Vec x(cfg_.d);
  for (int j = 0; j < cfg_.d; ++j) x(j) = uniform01(rng_);
  const bool after = uniform01(rng_) < hyperplane_mix_at(cfg_, pos_);
  int label = after ? hyperplane_label(x, concepts_.w_after, concepts_.w0_after)
                    : hyperplane_label(x, concepts_.w_before, concepts_.w0_before);
  if (cfg_.noise_frac > 0 && uniform01(rng_) < cfg_.noise_frac) label = 3 - label;
  ++pos_;
  return Sample(std::move(x), label);
}

// ---------------------------------------------------------------------------
// CSV

CsvSource::CsvSource(const std::string& path, std::optional<int> num_classes)
    : path_(path), in_(path) {
  if (!in_) throw data_error("cannot open " + path);
  std::string row;
  if (!std::getline(in_, row)) throw data_error(path + ": missing header");
  header_ = split(row);
  if (header_.size() < 2 || header_.back() != "class")
    throw data_error(path + ":1: header must end with a `class` column");
  u_ = static_cast<int>(header_.size()) - 1;

  if (num_classes) {
    O_ = *num_classes;
    return;
  }
  // One constant-memory pass for the class count, then rewind.
  int max_label = 0;
  while (auto s = next()) max_label = std::max(max_label, *s->label);
  O_ = std::max(max_label, 2);
  in_.clear();
  in_.seekg(0);
  std::getline(in_, row);
  line_ = 1;
}

Sample CsvSource::parse_row(const std::string& row) const {
  const auto where = path_ + ":" + std::to_string(line_) + ": ";
  const auto fields = split(row);
  if (fields.size() != header_.size())
    throw data_error(where + "expected " + std::to_string(header_.size()) + " fields, got " +
                     std::to_string(fields.size()));
  Vec x(u_);
  for (int j = 0; j < u_; ++j) {
    const auto& f = fields[static_cast<std::size_t>(j)];
    Scalar v = 0;
    const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || end != f.data() + f.size() || f.empty() || !std::isfinite(v))
      throw data_error(where + "bad value '" + f + "' in column " + header_[static_cast<std::size_t>(j)]);
    x(j) = v;
  }
  const auto& c = fields.back();
  int label = 0;
  const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), label);
  if (ec != std::errc() || end != c.data() + c.size() || c.empty() || label < 1 ||
      (O_ > 0 && label > O_))
    throw data_error(where + "unknown class value '" + c + "'");
  return Sample(std::move(x), label);
}

std::optional<Sample> CsvSource::next() {
  std::string row;
  while (std::getline(in_, row)) {
    ++line_;
    if (is_blank(row)) continue;
    return parse_row(row);
  }
  return std::nullopt;
}

std::int64_t write_csv(const std::string& path, SampleSource& source) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  const int u = source.num_features();
  for (int j = 0; j < u; ++j) out << 'x' << (j + 1) << ',';
  out << "class\n";
  std::int64_t rows = 0;
  char buf[64];
  while (auto s = source.next()) {
    if (!s->label) throw data_error("write_csv: unlabeled sample");
    for (int j = 0; j < u; ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, s->x(j));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << *s->label << '\n';
    ++rows;
  }
  if (!out) throw data_error("write failed: " + path);
  return rows;
}

std::vector<Sample> load_csv(const std::string& path, int* num_classes) {
  CsvSource src(path);
  if (num_classes) *num_classes = src.num_classes();
  std::vector<Sample> out;
  while (auto s = src.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace pens
