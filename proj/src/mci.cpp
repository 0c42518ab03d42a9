#include "pens/mci.hpp"

#include <utility>

namespace pens {

Scalar mci(const PairMoments& m) {
  if (m.count < 2) throw insufficient_data("mci needs at least two samples");
  return mci(m.var1(), m.var2(), m.cov());
}

void MciState::reset(std::size_t members, int outputs) {
  members_ = members;
  outputs_ = outputs;
  const std::size_t pairs = members * (members > 0 ? members - 1 : 0) / 2;
  moments_.assign(pairs * static_cast<std::size_t>(outputs), PairMoments{});
}

void MciState::add_member() {
  MciState grown(members_ + 1, outputs_);
  for (std::size_t i = 0; i < members_; ++i)
    for (std::size_t j = i + 1; j < members_; ++j)
      for (int o = 0; o < outputs_; ++o) grown.at(i, j, o) = at(i, j, o);
  *this = std::move(grown);
}

std::size_t MciState::index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (i == j || j >= members_) throw std::out_of_range("MciState: bad member pair");
  // Row-major upper triangle without the diagonal.
  const std::size_t pair = i * (2 * members_ - i - 1) / 2 + (j - i - 1);
  return pair * static_cast<std::size_t>(outputs_);
}

PairMoments& MciState::at(std::size_t i, std::size_t j, int o) {
  return moments_[index(i, j) + static_cast<std::size_t>(o)];
}

const PairMoments& MciState::at(std::size_t i, std::size_t j, int o) const {
  return moments_[index(i, j) + static_cast<std::size_t>(o)];
}

void MciState::accumulate(const std::vector<const Vec*>& outputs) {
  const std::size_t M = std::min(outputs.size(), members_);
  for (std::size_t i = 0; i < M; ++i) {
    if (!outputs[i]) continue;
    for (std::size_t j = i + 1; j < M; ++j) {
      if (!outputs[j]) continue;
      for (int o = 0; o < outputs_; ++o) at(i, j, o).push((*outputs[i])(o), (*outputs[j])(o));
    }
  }
}

MciState::PairSummary MciState::summarize(std::size_t i, std::size_t j) const {
  PairSummary s;
  s.count = at(i, j, 0).count;
  if (s.count < 2) return s;
  for (int o = 0; o < outputs_; ++o) {
    const auto& m = at(i, j, o);
    s.xi += mci(m);
    s.var1 += m.var1();
    s.var2 += m.var2();
  }
  const Scalar k = static_cast<Scalar>(outputs_);
  s.xi /= k;
  s.var1 /= k;
  s.var2 /= k;
  return s;
}

}  // namespace pens
