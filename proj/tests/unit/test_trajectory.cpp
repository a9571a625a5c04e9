#include <doctest.h>

#include <random>

#include "capmon/errors.hpp"
#include "capmon/trajectory.hpp"
#include "oracles.hpp"

using namespace capmon;

namespace {
ExpressionEvent ev(Polarity p, std::size_t at) { return {p, at, 1, 0}; }
}  // namespace

TEST_CASE("empty input gives zero trajectories") {
  auto tp = build_trajectories({}, 1000, 50);
  CHECK(tp.confident.stages == std::vector<double>(50, 0.0));
  CHECK(tp.uncertain.stages == std::vector<double>(50, 0.0));
}

TEST_CASE("event at the final token lands in the last stage") {
  auto tp = build_trajectories({ev(Polarity::Uncertain, 999)}, 1000, 50);
  for (std::size_t t = 0; t < 49; ++t) CHECK(tp.uncertain.stages[t] == 0.0);
  CHECK(tp.uncertain.stages[49] == doctest::Approx(50.0));
}

TEST_CASE("one event per bin gives constant density") {
  std::vector<ExpressionEvent> evs;
  for (std::size_t k = 0; k < 50; ++k) evs.push_back(ev(Polarity::Confident, k * 20 + 7));
  auto tp = build_trajectories(evs, 1000, 50);
  for (double d : tp.confident.stages) CHECK(d == doctest::Approx(50.0));
}

TEST_CASE("boundaries put the remainder in the last bins") {
  auto b = stage_boundaries(103, 10);
  REQUIRE(b.size() == 11);
  CHECK(b[0] == 0);
  CHECK(b[7] == 70);
  CHECK(b[8] == 81);
  CHECK(b[10] == 103);
  CHECK(stage_of(69, 103, 10) == 6);
  CHECK(stage_of(70, 103, 10) == 7);
  CHECK(stage_of(102, 103, 10) == 9);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(build_trajectories({}, 10, 50), InvalidArgument);
  CHECK_THROWS(build_trajectories({ev(Polarity::Confident, 100)}, 100, 50));
  TrajectoryBuilder b;
  CHECK_THROWS(b.finalize(50));
  TrajectoryBuilder c;
  c.observe_tokens(100);
  c.finalize(50);
  CHECK_THROWS_AS(c.observe_tokens(), StateError);
}

TEST_CASE("fuzz: batch equals oracle, mass and scale") {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 300; ++it) {
    std::size_t S = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    std::size_t total = std::uniform_int_distribution<std::size_t>(S, 3000)(rng);
    std::vector<ExpressionEvent> evs;
    std::size_t pos = 0;
    std::uniform_int_distribution<std::size_t> gap(0, 40);
    while (true) {
      pos += gap(rng);
      if (pos >= total) break;
      evs.push_back(ev(rng() % 2 ? Polarity::Uncertain : Polarity::Confident, pos));
      ++pos;
    }
    auto tp = build_trajectories(evs, total, S);
    auto oc = oracle::densities(evs, Polarity::Confident, total, S);
    auto ou = oracle::densities(evs, Polarity::Uncertain, total, S);
    for (std::size_t t = 0; t < S; ++t) {
      CHECK(tp.confident.stages[t] == doctest::Approx(oc[t]));
      CHECK(tp.uncertain.stages[t] == doctest::Approx(ou[t]));
    }
    std::size_t nu = 0;
    for (auto& e : evs) nu += e.polarity == Polarity::Uncertain;
    CHECK(recovered_event_count(tp.uncertain) == doctest::Approx(nu));

    // Stretching the trace twofold with every event duplicated keeps densities.
    if (total % S == 0) {
      std::vector<ExpressionEvent> evs2;
      for (const auto& e : evs) {
        evs2.push_back(ev(e.polarity, 2 * e.start_token));
        evs2.push_back(ev(e.polarity, 2 * e.start_token + 1));
      }
      auto tp2 = build_trajectories(evs2, 2 * total, S);
      for (std::size_t t = 0; t < S; ++t) CHECK(tp2.uncertain.stages[t] == doctest::Approx(tp.uncertain.stages[t]));
    }

    // The incremental builder agrees with the batch call.
    TrajectoryBuilder b;
    std::size_t k = 0;
    for (std::size_t i = 0; i < total; ++i) {
      b.observe_tokens();
      while (k < evs.size() && evs[k].end_token() == i + 1) b.observe_event(evs[k++]);
    }
    auto snap = b.snapshot(total, S);
    auto fin = b.finalize(S);
    CHECK(fin.uncertain.stages == tp.uncertain.stages);
    CHECK(fin.confident.stages == tp.confident.stages);
    CHECK(snap.uncertain.stages == tp.uncertain.stages);
  }
}

TEST_CASE("smoothing") {
  CHECK(smooth_series({0, 0, 3, 0, 0}, 3) == std::vector<double>{0, 1, 1, 1, 0});
  std::vector<double> s{1, 4, 2, 8};
  CHECK(smooth_series(s, 1) == s);
  auto c = smooth_series(std::vector<double>(9, 2.5), 5);
  for (double v : c) CHECK(v == doctest::Approx(2.5));
  auto lin = smooth_series({0, 1, 2, 3, 4, 5, 6}, 5);
  for (std::size_t i = 0; i < lin.size(); ++i) CHECK(lin[i] == doctest::Approx(double(i)));
  CHECK_THROWS_AS(smooth_series(s, 2), InvalidArgument);
  CHECK_THROWS_AS(smooth_series(s, 5), InvalidArgument);
}
