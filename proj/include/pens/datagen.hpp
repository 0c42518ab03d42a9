#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pens/core.hpp"

namespace pens {

// ---------------------------------------------------------------------------
// SEA concepts
// ---------------------------------------------------------------------------

struct SeaConfig {
  std::int64_t n_total = 100000;
  std::vector<Scalar> thresholds{4, 7, 4, 7};
  Scalar minority_frac = 0.25;  // target class-2 share; 0 disables resampling
  Scalar noise_frac = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Class 2 when x1 + x2 < threshold, class 1 otherwise.
inline int sea_label(const Vec& x, Scalar threshold) { return x(0) + x(1) < threshold ? 2 : 1; }

/// Threshold in force at sample i (switches every n_total / |thresholds|).
Scalar sea_threshold_at(const SeaConfig& cfg, std::int64_t i);

/// Share of the [0,10]^2 square below x1 + x2 = threshold.
Scalar sea_class2_area(Scalar threshold);

class SeaSource final : public SampleSource {
 public:
  explicit SeaSource(SeaConfig cfg);
  std::optional<Sample> next() override;
  int num_features() const override { return 3; }
  int num_classes() const override { return 2; }

 private:
  SeaConfig cfg_;
  std::mt19937_64 rng_;
  std::int64_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Rotating hyperplane with a gradual concept switch
// ---------------------------------------------------------------------------

struct HyperplaneConfig {
  std::int64_t n_total = 120000;
  int d = 4;
  std::int64_t drift_start = 40000;
  Scalar ramp_frac = 0.2;       // mixing window as a share of n_total
  Vec w_before;                 // empty: seeded random unit vector
  Vec w_after;
  std::optional<Scalar> w0;     // empty: hyperplane through the cube center
  std::uint64_t weight_seed = 7;
  Scalar noise_frac = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Concept weights and offsets after defaults are filled in.
struct HyperplaneConcepts {
  Vec w_before, w_after;
  Scalar w0_before = 0, w0_after = 0;
};
HyperplaneConcepts hyperplane_concepts(const HyperplaneConfig& cfg);

/// Class 1 when w.x > w0 (strict), class 2 otherwise.
inline int hyperplane_label(const Vec& x, const Vec& w, Scalar w0) { return w.dot(x) > w0 ? 1 : 2; }

/// Probability that sample i is drawn from the new concept.
Scalar hyperplane_mix_at(const HyperplaneConfig& cfg, std::int64_t i);

class HyperplaneSource final : public SampleSource {
 public:
  explicit HyperplaneSource(HyperplaneConfig cfg);
  std::optional<Sample> next() override;
  int num_features() const override { return cfg_.d; }
  int num_classes() const override { return 2; }
  const HyperplaneConcepts& concepts() const { return concepts_; }

 private:
  HyperplaneConfig cfg_;
  HyperplaneConcepts concepts_;
  std::mt19937_64 rng_;
  std::int64_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// CSV: header, u numeric columns, then an integer `class` column (1..O)
// ---------------------------------------------------------------------------

class CsvSource final : public SampleSource {
 public:
  /// Opens the file and pre-scans it once for the class count. A class count
  /// given up front skips the scan and makes larger labels a data_error.
  explicit CsvSource(const std::string& path, std::optional<int> num_classes = std::nullopt);
  std::optional<Sample> next() override;
  int num_features() const override { return u_; }
  int num_classes() const override { return O_; }
  const std::vector<std::string>& header() const { return header_; }
  std::int64_t line() const { return line_; }

 private:
  Sample parse_row(const std::string& row) const;
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  int u_ = 0;
  int O_ = 0;
  std::int64_t line_ = 1;
};

/// Drains a source into a CSV file; values use the shortest round-trip form.
/// Returns the number of rows written.
std::int64_t write_csv(const std::string& path, SampleSource& source);

/// Reads the whole file into memory (CV needs random access to bins).
std::vector<Sample> load_csv(const std::string& path, int* num_classes = nullptr);

}  // namespace pens
