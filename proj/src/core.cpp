#include "pens/core.hpp"

#include <cmath>

namespace pens {

Vec one_hot(int label, int num_classes) {
  if (label < 1 || label > num_classes)
    throw data_error("class label " + std::to_string(label) + " outside 1.." +
                     std::to_string(num_classes));
  Vec t = Vec::Zero(num_classes);
  t(label - 1) = 1.0;
  return t;
}

VectorSource::VectorSource(std::vector<Sample> samples, int num_classes)
    : samples_(std::move(samples)), classes_(num_classes) {
  if (!samples_.empty()) u_ = static_cast<int>(samples_.front().x.size());
}

std::optional<Sample> VectorSource::next() {
  if (pos_ >= samples_.size()) return std::nullopt;
  return samples_[pos_++];
}

ChunkReader::ChunkReader(SampleSource& source, std::size_t chunk_size)
    : source_(&source), chunk_size_(chunk_size) {
  if (chunk_size_ == 0) throw config_error("chunk size must be >= 1");
}

std::optional<DataChunk> ChunkReader::next() {
  if (exhausted_) return std::nullopt;
  DataChunk chunk;
  chunk.index = index_;
  chunk.samples.reserve(chunk_size_);
  while (chunk.samples.size() < chunk_size_) {
    auto s = source_->next();
    if (!s) {
      exhausted_ = true;
      break;
    }
    chunk.samples.push_back(std::move(*s));
  }
  if (chunk.samples.empty()) return std::nullopt;
  ++index_;
  return chunk;
}

std::vector<DataChunk> chunks(SampleSource& source, std::size_t chunk_size) {
  ChunkReader reader(source, chunk_size);
  std::vector<DataChunk> out;
  while (auto c = reader.next()) out.push_back(std::move(*c));
  return out;
}

RunningStandardizer::RunningStandardizer(int dim)
    : mean_(Vec::Zero(dim)), m2_(Vec::Zero(dim)) {}

void RunningStandardizer::check_dim(const Vec& x) const {
  if (x.size() != mean_.size())
    throw data_error("standardizer expects " + std::to_string(mean_.size()) +
                     " features, got " + std::to_string(x.size()));
}

Vec RunningStandardizer::standardize(const Vec& x) {
  if (count_ == 0 && mean_.size() == 0) {
    mean_ = Vec::Zero(x.size());
    m2_ = Vec::Zero(x.size());
  }
  check_dim(x);
  ++count_;
  const Vec delta = x - mean_;
  mean_ += delta / static_cast<Scalar>(count_);
  m2_ += delta.cwiseProduct(x - mean_);
  return transform(x);
}

Vec RunningStandardizer::transform(const Vec& x) const {
  check_dim(x);
  return (x - mean_).cwiseQuotient(stddev());
}

Vec RunningStandardizer::variance() const {
  const Scalar denom = static_cast<Scalar>(std::max<std::int64_t>(count_ - 1, 1));
  return (m2_ / denom).cwiseMax(0.0);
}

Vec RunningStandardizer::stddev() const {
  return variance().cwiseSqrt().cwiseMax(kStdFloor);
}

void RunningStandardizer::restore(std::int64_t count, Vec mean, Vec m2) {
  if (mean.size() != m2.size()) throw data_error("standardizer state size mismatch");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

Mat minmax_scale(const Mat& X, Scalar lo, Scalar hi) {
  if (!X.allFinite()) throw data_error("minmax_scale: non-finite input");
  Mat out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Scalar mn = X.col(j).minCoeff();
    const Scalar mx = X.col(j).maxCoeff();
    if (mx == mn) {
      out.col(j).setConstant(0.5 * (lo + hi));
    } else {
      out.col(j) = ((X.col(j).array() - mn) * ((hi - lo) / (mx - mn)) + lo).matrix();
    }
  }
  return out;
}

std::string to_string(BaseKind kind) {
  return kind == BaseKind::axis_parallel ? "axis" : "multivariate";
}

BaseKind base_kind_from_string(const std::string& name) {
  if (name == "axis" || name == "axis_parallel") return BaseKind::axis_parallel;
  if (name == "multivariate") return BaseKind::multivariate;
  throw config_error("unknown base classifier kind '" + name + "'");
}

void StreamConfig::validate() const {
  auto fail = [](const std::string& what) { throw config_error(what); };
  if (u < 1) fail("u must be >= 1");
  if (O < 2) fail("O must be >= 2");
  if (P < 1) fail("chunk size P must be >= 1");
  if (!(theta > 0.0 && theta <= 1.0)) fail("theta must lie in (0,1]");
  if (!(delta_rel >= 0.0)) fail("delta_rel must be >= 0");
  if (delta_abs && !(*delta_abs >= 0.0)) fail("delta_abs must be >= 0");
  if (!(alpha_w > 0.0 && alpha_w < 1.0)) fail("alpha_w must lie in (0,1)");
  if (!(alpha_d > 0.0 && alpha_d < 1.0)) fail("alpha_d must lie in (0,1)");
  if (!(alpha_d < alpha_w)) fail("alpha_d must be smaller than alpha_w");
  if (!(p > 0.0 && p < 1.0)) fail("p must lie in (0,1)");
  if (B < 0 || B > u) fail("B must lie in [1,u] (0 selects all features)");
}

}  // namespace pens
