#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pens {

using Scalar = double;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Error taxonomy. The CLI maps config_error to exit code 2 and data_error to 3.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invariant_violation : std::logic_error {
  using std::logic_error::logic_error;
};

struct Sample {
  Vec x;
  std::optional<int> label;  // 1-based class index
  Vec weight_mask;           // 0/1 per feature, empty means "all active"

  Sample() = default;
  Sample(Vec x_, std::optional<int> label_) : x(std::move(x_)), label(label_) {}

  std::size_t dim() const { return static_cast<std::size_t>(x.size()); }
};

struct DataChunk {
  std::vector<Sample> samples;
  std::size_t index = 0;

  std::size_t size() const { return samples.size(); }
};

/// One-hot regression target for a 1-based label.
Vec one_hot(int label, int num_classes);

/// Pull-based sample stream. Generators and file readers implement this.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::optional<Sample> next() = 0;
  virtual int num_features() const = 0;
  virtual int num_classes() const = 0;
};

/// Replays an in-memory sample list; mostly used by tests and the CV harness.
class VectorSource final : public SampleSource {
 public:
  VectorSource(std::vector<Sample> samples, int num_classes);
  std::optional<Sample> next() override;
  int num_features() const override { return u_; }
  int num_classes() const override { return classes_; }

 private:
  std::vector<Sample> samples_;
  std::size_t pos_ = 0;
  int u_ = 0;
  int classes_ = 0;
};

/// Splits a source into consecutive non-overlapping chunks of `chunk_size`.
/// The last chunk may be shorter. Yields nothing for an empty source.
class ChunkReader {
 public:
  ChunkReader(SampleSource& source, std::size_t chunk_size);
  std::optional<DataChunk> next();

 private:
  SampleSource* source_;
  std::size_t chunk_size_;
  std::size_t index_ = 0;
  bool exhausted_ = false;
};

/// Convenience: materialize every chunk of a source.
std::vector<DataChunk> chunks(SampleSource& source, std::size_t chunk_size);

/// Welford running mean/variance with a floored standard deviation.
class RunningStandardizer {
 public:
  static constexpr Scalar kStdFloor = 1e-8;

  RunningStandardizer() = default;
  explicit RunningStandardizer(int dim);

  /// Folds x into the running statistics, then returns (x - mean) / std.
  Vec standardize(const Vec& x);
  /// Same map without updating the statistics (frozen scoring).
  Vec transform(const Vec& x) const;

  Vec variance() const;
  Vec stddev() const;

  int dim() const { return static_cast<int>(mean_.size()); }
  std::int64_t count() const { return count_; }
  const Vec& mean() const { return mean_; }
  const Vec& m2() const { return m2_; }

  void restore(std::int64_t count, Vec mean, Vec m2);

 private:
  void check_dim(const Vec& x) const;

  std::int64_t count_ = 0;
  Vec mean_;
  Vec m2_;
};

/// Column-wise affine map of [min,max] onto [lo,hi]. Constant columns land on
/// the midpoint.
Mat minmax_scale(const Mat& X, Scalar lo = 0.1, Scalar hi = 0.9);

enum class BaseKind { axis_parallel, multivariate };

std::string to_string(BaseKind kind);
BaseKind base_kind_from_string(const std::string& name);

struct StreamConfig {
  int u = 0;                 // input dimension
  int O = 2;                 // number of classes
  int P = 250;               // chunk size
  Scalar theta = 0.7;        // initial conflict threshold
  Scalar delta_rel = 0.02;   // relative merge threshold
  std::optional<Scalar> delta_abs;  // absolute merge threshold override
  Scalar alpha_w = 0.005;
  Scalar alpha_d = 0.001;
  Scalar p = 0.5;            // penalty/reward factor
  int B = 0;                 // target feature count, 0 means u (selection off)
  std::uint64_t seed = 1;
  BaseKind base_kind = BaseKind::axis_parallel;
  bool al_conjunction = false;

  int active_features() const { return B <= 0 ? u : B; }
  /// Throws config_error when any field is out of range.
  void validate() const;
};

}  // namespace pens
