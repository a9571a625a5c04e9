#include <doctest.h>

#include <memory>

#include "capmon/errors.hpp"
#include "capmon/indicators.hpp"
#include "capmon/matcher.hpp"
#include "capmon/probe.hpp"
#include "capmon/synth.hpp"
#include "capmon/tokenizer.hpp"
#include "capmon/trajectory.hpp"

using namespace capmon;

namespace {

SweepItem pipeline_item(const SynthItem& it, const SynthConfig& cfg, const Matcher& m) {
  auto chunks = simulate_stream(it, cfg, SimRequest::Original, cfg.reference_length);
  std::string thinking;
  for (const auto& c : chunks) {
    if (c == "<think>") continue;
    if (c == "</think>") break;
    thinking += c;
  }
  auto toks = tokenize(thinking);
  SweepItem s;
  s.unsolvable = it.label == SolvabilityLabel::Unsolvable;
  s.trajectories = build_trajectories(m.match(toks), toks.size(), 50);
  s.trace_id = it.id;
  return s;
}

double sweep_accuracy_at(const SynthConfig& cfg, double s) {
  auto corpus = synth_corpus(cfg);
  Matcher m(default_lexicon());
  std::vector<SweepItem> items;
  for (const auto& it : corpus.items) items.push_back(pipeline_item(it, cfg, m));
  auto res = stage_sweep(items, Detector::ConfDiff, {s}, {0.5}, IndicatorConfig{});
  return res.fixed_threshold.at(0).accuracy;
}

}  // namespace

TEST_CASE("seed repeat is byte-identical") {
  SynthConfig cfg;
  cfg.n_solvable = 30;
  cfg.n_unsolvable = 20;
  auto a = synth_corpus(cfg), b = synth_corpus(cfg);
  CHECK(encode_records(a.records) == encode_records(b.records));
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].id == b.items[i].id);
    CHECK(a.items[i].think_length == b.items[i].think_length);
    CHECK(simulate_stream(a.items[i], cfg, SimRequest::Original, 4096) ==
          simulate_stream(b.items[i], cfg, SimRequest::Original, 4096));
  }
  cfg.seed = 8;
  CHECK(encode_records(synth_corpus(cfg).records) != encode_records(a.records));
}

TEST_CASE("config validation and json") {
  SynthConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.smoothing_window = 4;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = SynthConfig{};
  cfg.length_min = 1000;
  cfg.length_max = 10;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = SynthConfig{};
  cfg.overlap = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = SynthConfig{};
  cfg.n_solvable = 0;
  cfg.n_unsolvable = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  SynthConfig c2;
  c2.seed = 99;
  c2.separation = 1.25;
  auto back = synth_config_from_json(synth_config_to_json(c2));
  CHECK(synth_config_to_json(back) == synth_config_to_json(c2));
  CHECK_THROWS_AS(synth_config_from_json(R"({"sed": 3})"), ConfigError);
  CHECK_THROWS(synth_config_from_json(R"({"n_solvable": -4})"));
  CHECK(synth_config_from_json(R"({"n_solvable": 4})").n_unsolvable == SynthConfig{}.n_unsolvable);
}

TEST_CASE("corpus shape") {
  SynthConfig cfg;
  auto c = synth_corpus(cfg);
  REQUIRE(c.items.size() == cfg.n_solvable + cfg.n_unsolvable);
  REQUIRE(c.records.size() == c.items.size());
  std::size_t near = 0, over = 0;
  for (std::size_t i = 0; i < c.items.size(); ++i) {
    const auto& it = c.items[i];
    CHECK(c.records[i].trace_id == it.id);
    CHECK(c.records[i].label == it.label);
    CHECK(c.records[i].vector.size() == cfg.hidden_dim);
    near += it.near_boundary;
    if (it.overflow) {
      ++over;
      CHECK(it.label == SolvabilityLabel::Unsolvable);
      CHECK(natural_length(it) == 0);
      auto s = simulate_stream(it, cfg, SimRequest::Original, 2048);
      CHECK(s.size() == 2048);
    } else {
      auto s = simulate_stream(it, cfg, SimRequest::Original, 100000);
      CHECK(s.size() == natural_length(it));
    }
    if (it.near_boundary) CHECK(it.label == SolvabilityLabel::Solvable);
  }
  CHECK(near == std::size_t(std::round(cfg.near_boundary_fraction * double(cfg.n_solvable))));
  CHECK(over > cfg.n_unsolvable / 2);
}

TEST_CASE("densities follow the class profiles") {
  SynthConfig cfg;
  CHECK(synth_density(cfg, SolvabilityLabel::Solvable, true, 0.0) == doctest::Approx(40.0));
  CHECK(synth_density(cfg, SolvabilityLabel::Solvable, true, 1.0) == doctest::Approx(150.0));
  CHECK(synth_density(cfg, SolvabilityLabel::Unsolvable, false, 0.0) == doctest::Approx(60.0));
  CHECK(synth_density(cfg, SolvabilityLabel::Unsolvable, false, 1.0) > 115.0);
  cfg.overlap = 1.0;
  for (double p : {0.0, 0.3, 0.8})
    for (bool conf : {true, false})
      CHECK(synth_density(cfg, SolvabilityLabel::Solvable, conf, p) ==
            doctest::Approx(synth_density(cfg, SolvabilityLabel::Unsolvable, conf, p)));
}

TEST_CASE("default config separates by ConfDiff from 10 percent on") {
  SynthConfig cfg;
  for (double s : {10.0, 20.0, 50.0, 100.0}) CHECK(sweep_accuracy_at(cfg, s) >= 0.95);
}

TEST_CASE("pipeline agreement is monotone in class overlap") {
  SynthConfig cfg;
  cfg.n_solvable = 100;
  cfg.n_unsolvable = 100;
  double prev = 2.0;
  for (double ov : {0.0, 0.5, 0.8, 1.0}) {
    cfg.overlap = ov;
    double acc = sweep_accuracy_at(cfg, 20.0);
    CAPTURE(ov);
    CHECK(acc <= prev);
    prev = acc;
  }
  CHECK(prev == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("hidden states: no separation means chance accuracy") {
  SynthConfig cfg;
  cfg.hidden_dim = 64;
  cfg.latent_dim = 16;
  cfg.separation = 0.0;
  auto train = synth_hidden_states(cfg, 150, 1), test = synth_hidden_states(cfg, 300, 2);
  CHECK(std::fabs(accuracy(fit_lda(train), test) - 0.5) < 0.08);
  cfg.separation = 3.0;
  train = synth_hidden_states(cfg, 150, 1);
  test = synth_hidden_states(cfg, 300, 2);
  CHECK(accuracy(fit_lda(train), test) >= 0.97);
}

TEST_CASE("reprompt and forced streams are short outlines") {
  SynthConfig cfg;
  auto c = synth_corpus(cfg);
  for (const auto& it : c.items) {
    auto r = simulate_stream(it, cfg, SimRequest::Reprompt, 4096);
    CHECK(r.size() >= cfg.outline_min);
    CHECK(r.size() <= cfg.outline_max);
    auto f = simulate_stream(it, cfg, SimRequest::ForcedPrefix, 4096);
    CHECK(f.size() <= cfg.outline_max);
    CHECK(simulate_stream(it, cfg, SimRequest::BoostAbstention, 4096) ==
          simulate_stream(it, cfg, SimRequest::Original, 4096));
  }
}
