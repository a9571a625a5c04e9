#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "capmon/hidden_record.hpp"

namespace capmon {

// Parameters of the synthetic corpus and of the simulated reasoning model
// that produces its token streams. Densities are events per 1000 tokens.
struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t n_solvable = 160;
  std::size_t n_unsolvable = 90;

  // Solvable: confident density c0 + (c1 - c0) * p^exponent over relative
  // position p in [0, 1]; uncertain stays flat.
  double solvable_confident_start = 40.0;
  double solvable_confident_end = 150.0;
  double solvable_confident_exponent = 2.0;
  double solvable_uncertain = 0.5;

  // Unsolvable: uncertain density rises from u0 and converges to umax with
  // time constant tau (in units of p); confident stays flat.
  double unsolvable_uncertain_start = 60.0;
  double unsolvable_uncertain_max = 120.0;
  double unsolvable_uncertain_tau = 0.3;
  double unsolvable_confident = 5.0;

  // 0 keeps the class profiles apart, 1 makes them identical.
  double overlap = 0.0;

  // Thinking length of completing traces, uniform in [min, max]. Solvable
  // items closest to the hidden-state boundary get `near_boundary_inflation`
  // times the length.
  std::size_t length_min = 250;
  std::size_t length_max = 900;
  double near_boundary_fraction = 0.25;
  double near_boundary_inflation = 2.0;

  // Unsolvable items that never finish; the rest stop with a wrong answer.
  double p_overflow = 0.95;
  // Position scale for traces that never finish.
  std::size_t reference_length = 4096;

  // Length of the outline given after an abstention.
  std::size_t outline_min = 180;
  std::size_t outline_max = 340;

  // Probability that the abstention system prompt makes an unsolvable item abstain.
  double boost_compliance = 0.0;

  // Hidden states: latent_dim Gaussian factors embedded orthonormally in
  // hidden_dim dimensions plus isotropic noise; the class means sit at
  // -separation and +separation along the first factor (unit variance).
  std::size_t hidden_dim = 256;
  std::size_t latent_dim = 64;
  double noise_floor = 0.05;
  double separation = 3.0;

  // Smoothing window recorded with the corpus for later analysis.
  std::size_t smoothing_window = 5;

  void validate() const;
};

std::string synth_config_to_json(const SynthConfig& cfg);
// Missing keys keep their defaults; unknown keys are a ConfigError.
SynthConfig synth_config_from_json(std::string_view text);

struct SynthItem {
  std::string id;
  std::string question;
  std::string gold_answer;
  std::string wrong_answer;
  SolvabilityLabel label = SolvabilityLabel::Solvable;
  bool near_boundary = false;
  bool overflow = false;
  std::size_t think_length = 0;  // 0 when the item never finishes
  std::uint64_t stream_seed = 0;
  std::size_t index = 0;
};

struct SynthCorpus {
  SynthConfig config;
  std::vector<SynthItem> items;
  std::vector<HiddenStateRecord> records;  // aligned with items
};

// Deterministic in cfg (same config, same bytes).
SynthCorpus synth_corpus(const SynthConfig& cfg);

// Independent labelled hidden states from the same simulated model, for
// probe training. `sample_seed` selects the draw.
std::vector<HiddenStateRecord> synth_hidden_states(const SynthConfig& cfg,
                                                   std::size_t per_class,
                                                   std::uint64_t sample_seed);

enum class SimRequest : std::uint8_t {
  Original = 0,     // plain question
  BoostAbstention,  // question under the abstention system prompt
  Reprompt,         // question with the boundary suffix
  ForcedPrefix,     // continuation after the forced output prefix
};

// Streamed response of the simulated model, one model token per element,
// cut at `max_tokens`. Deterministic in (item, request).
std::vector<std::string> simulate_stream(const SynthItem& item, const SynthConfig& cfg,
                                         SimRequest request, std::size_t max_tokens);

// Model tokens the item needs when nothing stops it early; 0 for items that
// never finish.
std::size_t natural_length(const SynthItem& item);

// Expected density of one polarity at relative position p.
double synth_density(const SynthConfig& cfg, SolvabilityLabel label, bool confident, double p);

}  // namespace capmon
