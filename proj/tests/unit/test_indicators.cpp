#include <doctest.h>

#include <cmath>
#include <random>

#include "capmon/errors.hpp"
#include "capmon/indicators.hpp"
#include "oracles.hpp"

using namespace capmon;

namespace {

DensityTrajectory traj(Polarity p, std::vector<double> v) {
  DensityTrajectory t;
  t.polarity = p;
  t.total_tokens = 1000;
  t.stages = std::move(v);
  return t;
}

IndicatorConfig cfg_at(double s, std::size_t window = 1) {
  IndicatorConfig c;
  c.stage_percent = s;
  c.smoothing_window = window;
  return c;
}

}  // namespace

TEST_CASE("conf_diff on equal trajectories is Within") {
  auto c = traj(Polarity::Confident, std::vector<double>(10, 3.0));
  auto u = traj(Polarity::Uncertain, std::vector<double>(10, 3.0));
  auto v = conf_diff(c, u, cfg_at(100));
  CHECK(v.score == 0.0);
  CHECK(v.decision == Decision::Within);
}

TEST_CASE("conf_diff 8 of 10 stages") {
  std::vector<double> dc(10, 1.0), du(10, 2.0);
  du[3] = 1.0;
  du[7] = 0.0;
  auto v = conf_diff(traj(Polarity::Confident, dc), traj(Polarity::Uncertain, du), cfg_at(100));
  CHECK(v.score == doctest::Approx(0.8));
  CHECK(v.decision == Decision::Beyond);
  CHECK(v.stages_considered == 10);
}

TEST_CASE("conf_diff threshold boundary is strict") {
  for (double alpha : {0.1, 0.3, 0.5, 0.55, 0.7}) {
    for (std::size_t n : {10u, 20u, 50u}) {
      std::size_t k = static_cast<std::size_t>(std::ceil(alpha * double(n))) - 1;
      std::vector<double> dc(n, 1.0), du(n, 0.0);
      for (std::size_t t = 0; t < k; ++t) du[t] = 2.0;
      IndicatorConfig cfg = cfg_at(100);
      cfg.alpha = alpha;
      CHECK(conf_diff(traj(Polarity::Confident, dc), traj(Polarity::Uncertain, du), cfg).decision == Decision::Within);
      // At exactly alpha the tie also resolves Within.
      if (std::fabs(alpha * double(n) - std::round(alpha * double(n))) < 1e-12) {
        du[k] = 2.0;
        CHECK(conf_diff(traj(Polarity::Confident, dc), traj(Polarity::Uncertain, du), cfg).decision == Decision::Within);
        du[k + 1] = 2.0;
        CHECK(conf_diff(traj(Polarity::Confident, dc), traj(Polarity::Uncertain, du), cfg).decision == Decision::Beyond);
      }
    }
  }
}

TEST_CASE("conf_diff window, scale invariance and errors") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 10);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> dc(50), du(50);
    for (auto& x : dc) x = std::floor(u(rng));
    for (auto& x : du) x = std::floor(u(rng));
    unsigned s = 2 + static_cast<unsigned>(rng() % 99);
    if (s > 100) s = 100;
    auto v = conf_diff(traj(Polarity::Confident, dc), traj(Polarity::Uncertain, du), cfg_at(s));
    std::size_t w = oracle::window_stages(50, s);
    CHECK(v.stages_considered == w);
    CHECK(v.score == oracle::conf_diff_score(dc, du, w));
    for (auto& x : dc) x *= 3.7;
    for (auto& x : du) x *= 3.7;
    CHECK(conf_diff(traj(Polarity::Confident, dc), traj(Polarity::Uncertain, du), cfg_at(s)).score == v.score);
  }
  auto a = traj(Polarity::Confident, std::vector<double>(50, 0));
  auto b = traj(Polarity::Uncertain, std::vector<double>(40, 0));
  CHECK_THROWS_AS(conf_diff(a, b, cfg_at(50)), InvalidArgument);
  CHECK_THROWS_AS(conf_diff(a, traj(Polarity::Uncertain, std::vector<double>(50, 0)), cfg_at(1)), InsufficientData);
}

TEST_CASE("conf_curv on quadratics and lines") {
  for (double a : {0.01, 0.5, 1.0, 7.0}) {
    std::vector<double> neg(50), pos(50), lin(50), zero(50, 0.0);
    for (std::size_t t = 0; t < 50; ++t) {
      double x = double(t + 1);
      neg[t] = 100.0 * 2500 - a * x * x;  // keep densities non-negative via an offset in D_U
      pos[t] = a * x * x;
      lin[t] = 3.0 * x + 1.0;
    }
    for (std::size_t w : {1u, 3u, 5u}) {
      IndicatorConfig cfg = cfg_at(100, w);
      CHECK(conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, neg), cfg).score == 1.0);
      CHECK(conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, pos), cfg).score == 0.0);
      CHECK(conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, lin), cfg).score == 0.0);
      // -t^2 as D_U - D_C with D_C carrying the quadratic.
      CHECK(conf_curv(traj(Polarity::Confident, pos), traj(Polarity::Uncertain, zero), cfg).score == 1.0);
      CHECK(conf_curv(traj(Polarity::Confident, pos), traj(Polarity::Uncertain, zero), cfg).decision == Decision::Beyond);
      IndicatorConfig fwd = cfg;
      fwd.curvature_scheme = CurvatureScheme::Forward;
      CHECK(conf_curv(traj(Polarity::Confident, pos), traj(Polarity::Uncertain, zero), fwd).score == 1.0);
      IndicatorConfig flip = cfg;
      flip.curvature_sign = CurvatureSign::Positive;
      CHECK(conf_curv(traj(Polarity::Confident, pos), traj(Polarity::Uncertain, zero), flip).score == 0.0);
    }
  }
  auto z = traj(Polarity::Confident, std::vector<double>(50, 0));
  CHECK_THROWS_AS(conf_curv(z, traj(Polarity::Uncertain, std::vector<double>(50, 0)), cfg_at(4)), InsufficientData);
}

TEST_CASE("second differences") {
  auto c = second_differences({1, 4, 9, 16}, CurvatureScheme::Central);
  REQUIRE(c.size() == 2);
  CHECK(c[0].stage == 1);
  CHECK(c[0].value == 2.0);
  auto f = second_differences({1, 4, 9, 16}, CurvatureScheme::Forward);
  CHECK(f[0].stage == 0);
}

TEST_CASE("curvature sign symmetry and positive scaling") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0, 5);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> g(50), zero(50, 0.0), ng(50), sg(50);
    for (std::size_t t = 0; t < 50; ++t) g[t] = 100 + n(rng);
    for (std::size_t t = 0; t < 50; ++t) ng[t] = 200 - g[t], sg[t] = 4.0 * g[t];
    IndicatorConfig cfg = cfg_at(100, 1);
    double x = conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, g), cfg).score;
    double y = conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, ng), cfg).score;
    CHECK(x + y == doctest::Approx(1.0));
    CHECK(conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, sg), cfg).score == x);
  }
}

TEST_CASE("stage sweep on a perfectly separated corpus") {
  std::vector<SweepItem> corpus;
  for (int i = 0; i < 20; ++i) {
    bool uns = i % 2 == 0;
    SweepItem it;
    it.unsolvable = uns;
    it.trajectories.confident = traj(Polarity::Confident, std::vector<double>(50, uns ? 0.0 : 1.0));
    it.trajectories.uncertain = traj(Polarity::Uncertain, std::vector<double>(50, uns ? 1.0 : 0.0));
    corpus.push_back(it);
  }
  auto r = stage_sweep(corpus, Detector::ConfDiff, default_stage_grid(), default_threshold_grid(), IndicatorConfig{});
  CHECK_FALSE(r.degenerate_labels);
  REQUIRE(r.best_per_stage.size() == 50);
  for (const auto& row : r.best_per_stage) CHECK(row.accuracy == 1.0);
  for (const auto& row : r.fixed_threshold) CHECK(row.accuracy == 1.0);

  std::vector<SweepItem> one(corpus.begin(), corpus.begin() + 1);
  CHECK(stage_sweep(one, Detector::ConfDiff, {10}, {0.5}, IndicatorConfig{}).degenerate_labels);
}

TEST_CASE("conf_curv ignores rounding residue on inexact lines") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> slope(-20.0, 20.0), off(0.0, 1e6);
  for (int it = 0; it < 200; ++it) {
    const double b = slope(rng), c = off(rng);
    std::vector<double> line(50), zero(50, 0.0);
    for (std::size_t t = 0; t < 50; ++t) line[t] = c + b * double(t + 1) / 3.0;
    for (std::size_t w : {1u, 3u, 5u}) {
      CHECK(conf_curv(traj(Polarity::Confident, zero), traj(Polarity::Uncertain, line), cfg_at(100, w)).score == 0.0);
      CHECK(conf_curv(traj(Polarity::Confident, line), traj(Polarity::Uncertain, zero), cfg_at(100, w)).score == 0.0);
    }
  }
}
