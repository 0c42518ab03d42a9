#include <doctest.h>

#include <random>

#include "pens/datagen.hpp"
#include "pens/ensemble.hpp"

using namespace pens;

namespace {

// A member with one rule at the origin whose scores are the constant `scores`.
EnsembleMember constant_member(const Vec& scores, Scalar beta = 1.0) {
  const int O = static_cast<int>(scores.size());
  EnsembleMember m;
  m.model = PClassModel(2, O, BaseKind::axis_parallel);
  m.model.add_rule(Vec::Zero(2), 1);
  m.model.rules()[0].weights.setZero();
  m.model.rules()[0].weights.row(0) = scores.transpose();
  m.beta = beta;
  return m;
}

Vec v2(Scalar a, Scalar b) { return (Vec(2) << a, b).finished(); }

std::vector<Sample> two_blobs(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    const int label = 1 + i % 2;
    const double c = label == 1 ? -2.0 : 2.0;
    out.emplace_back(v2(c + g(rng), c + g(rng)), label);
  }
  return out;
}

}  // namespace

TEST_CASE("predict examples") {
  SUBCASE("one member decides regardless of beta") {
    std::vector<EnsembleMember> ms{constant_member(v2(0.2, 0.8), 0.01)};
    CHECK(predict(ms, v2(0, 0)).predicted == 2);
  }
  SUBCASE("the heavy member dominates") {
    std::vector<EnsembleMember> ms{constant_member(v2(1, 0), 0.9), constant_member(v2(0, 1), 0.1)};
    CHECK(predict(ms, v2(0, 0)).predicted == 1);
  }
  SUBCASE("three members: weighted sum by hand") {
    std::vector<EnsembleMember> ms{constant_member((Vec(3) << 0.6, 0.3, 0.1).finished(), 0.5),
                                   constant_member((Vec(3) << 0.1, 0.8, 0.1).finished(), 0.3),
                                   constant_member((Vec(3) << 0.2, 0.2, 0.6).finished(), 0.2)};
    const auto p = predict(ms, v2(0, 0));
    CHECK(p.global(0) == doctest::Approx(0.5 * 0.6 + 0.3 * 0.1 + 0.2 * 0.2));
    CHECK(p.global(1) == doctest::Approx(0.5 * 0.3 + 0.3 * 0.8 + 0.2 * 0.2));
    CHECK(p.global(2) == doctest::Approx(0.5 * 0.1 + 0.3 * 0.1 + 0.2 * 0.6));
    CHECK(p.predicted == 2);
  }
  SUBCASE("ties go to the lowest class") {
    std::vector<EnsembleMember> ms{constant_member(v2(0.5, 0.5))};
    CHECK(predict(ms, v2(0, 0)).predicted == 1);
  }
  SUBCASE("empty ensemble") {
    CHECK_THROWS_AS(predict({}, v2(0, 0)), invariant_violation);
  }
}

TEST_CASE("reward_penalize examples") {
  std::vector<EnsembleMember> ms{constant_member(v2(1, 0)), constant_member(v2(0, 1))};
  reward_penalize(ms, {1, 2}, 2, 0.5);
  CHECK(ms[0].beta == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ms[1].beta == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  std::vector<EnsembleMember> all{constant_member(v2(1, 0), 0.2), constant_member(v2(1, 0), 0.8)};
  reward_penalize(all, {1, 1}, 2, 0.5);
  CHECK(all[0].beta == doctest::Approx(0.2));
  CHECK(all[1].beta == doctest::Approx(0.8));
  reward_penalize(all, {1, 1}, 1, 0.5);
  // Both rewarded, the second capped at 1: (0.3, 1) normalized.
  CHECK(all[0].beta == doctest::Approx(0.3 / 1.3));
  CHECK(all[0].beta + all[1].beta == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<EnsembleMember> silent{constant_member(v2(1, 0), 0.5), constant_member(v2(1, 0), 0.5)};
  reward_penalize(silent, {0, 2}, 1, 0.5);
  CHECK(silent[0].beta == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("select_winner examples") {
  std::vector<EnsembleMember> ms{constant_member(v2(1, 0))};
  CHECK(select_winner(ms) == 0);
  ms = {constant_member(v2(1, 0)), constant_member(v2(1, 0)), constant_member(v2(1, 0))};
  const Scalar mse[3] = {0.3, 0.1, 0.2};
  for (int i = 0; i < 3; ++i) {
    ms[i].chunk_seen = 10;
    ms[i].chunk_sq_err = 10 * mse[i];
  }
  CHECK(select_winner(ms) == 1);
  for (auto& m : ms) m.chunk_sq_err = 2.0;
  CHECK(select_winner(ms) == 0);
  for (auto& m : ms) m.chunk_seen = 0;
  CHECK(select_winner(ms) == 0);
  ms[2].chunk_seen = 1;
  CHECK(select_winner(ms) == 2);
}

TEST_CASE("merge_check") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0, 1);

  SUBCASE("a member and its clone merge") {
    std::vector<EnsembleMember> ms{constant_member(v2(1, 0), 0.5), constant_member(v2(1, 0), 0.5)};
    MciState st(2, 2);
    for (int i = 0; i < 100; ++i) {
      const double a = U(rng);
      const Vec y = v2(a, 1 - a);
      st.accumulate({&y, &y});
    }
    const auto acts = merge_check(ms, st, 0.02);
    REQUIRE(acts.size() == 1);
    // Equal accuracy: the lower index goes.
    CHECK(acts[0].keep == 1);
    CHECK(acts[0].drop == 0);
    apply_merge(ms, acts[0]);
    CHECK(ms.size() == 1);
    CHECK(ms[0].beta == 1.0);
  }
  SUBCASE("uncorrelated members never merge for delta_rel < 1") {
    std::vector<EnsembleMember> ms{constant_member(v2(1, 0)), constant_member(v2(1, 0))};
    MciState st(2, 2);
    // Orthogonal +-1 patterns per dimension: rho = 0 exactly.
    const double a[4] = {1, -1, 1, -1}, b[4] = {1, 1, -1, -1};
    for (int rep = 0; rep < 25; ++rep)
      for (int k = 0; k < 4; ++k) {
        const Vec y1 = v2(a[k], -a[k]);
        const Vec y2 = v2(b[k], -b[k]);
        st.accumulate({&y1, &y2});
      }
    CHECK(merge_check(ms, st, 0.99).empty());
    CHECK(merge_check(ms, st, 0.5).empty());
  }
  SUBCASE("three members, one duplicated pair") {
    std::vector<EnsembleMember> ms{constant_member(v2(1, 0), 0.2), constant_member(v2(1, 0), 0.3),
                                   constant_member(v2(1, 0), 0.5)};
    ms[0].chunk_seen = ms[1].chunk_seen = ms[2].chunk_seen = 10;
    ms[0].chunk_correct = 5;
    ms[1].chunk_correct = 9;
    ms[2].chunk_correct = 7;
    MciState st(3, 2);
    for (int i = 0; i < 200; ++i) {
      const double a = U(rng), c = U(rng);
      const Vec y = v2(a, 1 - a);
      const Vec z = v2(c, 1 - c);
      st.accumulate({&z, &y, &y});
    }
    const auto acts = merge_check(ms, st, 0.02);
    REQUIRE(acts.size() == 1);
    CHECK(acts[0].keep == 1);
    CHECK(acts[0].drop == 2);
    apply_merge(ms, acts[0]);
    REQUIRE(ms.size() == 2);
    CHECK(ms[1].beta / ms[0].beta == doctest::Approx(0.8 / 0.2));
  }
  SUBCASE("absolute threshold and bootstrapping members") {
    std::vector<EnsembleMember> ms{constant_member(v2(1, 0)), constant_member(v2(1, 0))};
    MciState st(2, 2);
    for (int i = 0; i < 50; ++i) {
      const double a = U(rng);
      const Vec y = v2(a, 1 - a);
      st.accumulate({&y, &y});
    }
    CHECK(merge_check(ms, st, 0.02, -1.0).empty());
    ms[1].bootstrapping = true;
    CHECK(merge_check(ms, st, 0.02).empty());
  }
}

TEST_CASE("count_parameters") {
  auto cfg = LearnerConfig::defaults(2, 2, 50);
  Ensemble empty(cfg);
  CHECK(count_parameters(empty) == 0);

  Ensemble axis(cfg);
  axis.add_member();
  axis.members()[0].model.add_rule(v2(0, 0), 1);
  CHECK(count_parameters(axis) == 11);

  cfg.stream.base_kind = BaseKind::multivariate;
  Ensemble multi(cfg);
  multi.add_member();
  multi.members()[0].model.add_rule(v2(0, 0), 1);
  CHECK(count_parameters(multi) == 12);
}

TEST_CASE("first chunk creates exactly one member") {
  auto cfg = LearnerConfig::defaults(2, 2, 100);
  Ensemble ens(cfg);
  CHECK(ens.member_count() == 0);
  DataChunk c{two_blobs(1, 100), 0};
  const auto rep = ens.train_chunk(c);
  CHECK(ens.member_count() == 1);
  CHECK(rep.members == 1);
  CHECK(rep.seen == 100);
  CHECK(rep.accepted >= 1);
  CHECK(ens.total_rules() >= 1);
  CHECK_THROWS_AS(ens.train_chunk(DataChunk{}), data_error);
}

TEST_CASE("stationary two-blob stream keeps at most two members") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto cfg = LearnerConfig::defaults(2, 2, 500);
    cfg.stream.seed = seed;
    Ensemble ens(cfg);
    VectorSource src(two_blobs(seed, 50 * 500), 2);
    ChunkReader rd(src, 500);
    std::size_t max_members = 0;
    while (auto c = rd.next()) {
      ens.train_chunk(*c);
      max_members = std::max(max_members, ens.member_count());
      Scalar sum = 0;
      for (const auto& m : ens.members()) sum += m.beta;
      REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(max_members <= 2);
    Scalar correct = 0;
    for (const auto& s : two_blobs(seed + 100, 400)) correct += ens.predict_raw(s.x) == s.label;
    CHECK(correct / 400 >= 0.95);
  }
}

TEST_CASE("SEA, 200 chunks of 500: drifts follow the concept shifts") {
  SeaConfig sc;
  sc.seed = 1;
  SeaSource src(sc);
  auto cfg = LearnerConfig::defaults(3, 2, 500);
  cfg.stream.seed = 1;
  Ensemble ens(cfg);
  ChunkReader rd(src, 500);
  std::vector<std::size_t> events;
  while (auto c = rd.next()) {
    const auto before = ens.member_count();
    const auto rep = ens.train_chunk(*c);
    for (std::int64_t k = 0; k < rep.drift_events; ++k) events.push_back(c->index);
    // A drift adds one member, a merge removes one.
    CHECK(ens.member_count() == before + (before == 0) + rep.drift_events - rep.merges);
  }
  CHECK(events.size() >= 3);
  for (auto k : events) {
    const bool near_shift = (k >= 50 && k < 70) || (k >= 100 && k < 120) || (k >= 150 && k < 170);
    CHECK_MESSAGE(near_shift, "drift at chunk " << k);
  }
}
