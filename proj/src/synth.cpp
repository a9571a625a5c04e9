#include "capmon/synth.hpp"

#include <type_traits>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <json.hpp>

#include "capmon/errors.hpp"
#include "capmon/lexicon.hpp"
#include "capmon/tokenizer.hpp"

namespace capmon {

using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Portable draws on top of mt19937_64, whose output sequence is fixed by the
// standard (the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() {
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

enum StreamTag : std::uint64_t {
  kTagThinking = 1,
  kTagBoostDecision = 2,
  kTagBoostThinking = 3,
  kTagReprompt = 4,
  kTagForced = 5,
  kTagBasis = 6,
  kTagCorpus = 7,
};

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
  return splitmix(seed ^ splitmix(tag * 0x632be59bd9b4e019ULL));
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w = {
      "we",    "compute", "the",   "sum",   "of",       "both",  "sides", "then",   "check",
      "value", "x",       "=",     "2",     "+",        "3",     "let",   "consider", "case",
      "where", "n",       "is",    "even",  "odd",      "factor", "and",  "divide", "by",
      "gives", "term",    "next",  "a",     "b",        "square", "root", "positive", "count",
      "pairs", "modulo",  "5",     "7",     "(",        ")",     ",",     ".",      "hence",
      "wait",  "now",     "again", "bound", "integer"};
  return w;
}

const std::vector<std::string>& outline_words() {
  static const std::vector<std::string> w = {
      " define", " the",     " key",   " quantities", " and",     " set",   " up",
      " equations", " using", " known", " identities", " then",   " bound", " each",
      " term",   " check",   " small", " cases",      " to",      " find",  " a",
      " pattern", " finally", " combine", " results",   " reduce", " constraints", " test"};
  return w;
}

const std::vector<std::string> kMarkerChunks = {
    "This", " question", " is", " beyond", " my", " capability", " boundary", ",", " but",
    " I",   " can",      " outline", " a", " concise", " potential", " approach", ":"};

struct PhraseBank {
  std::vector<std::vector<std::string>> confident;
  std::vector<std::vector<std::string>> uncertain;
};

const PhraseBank& phrases() {
  static const PhraseBank bank = [] {
    PhraseBank b;
    const Lexicon& lex = default_lexicon();
    for (const auto& p : lex.confident) b.confident.push_back(p.tokens);
    for (const auto& p : lex.uncertain) b.uncertain.push_back(p.tokens);
    return b;
  }();
  return bank;
}

void gen_thinking(Rng& rng, const SynthConfig& cfg, SolvabilityLabel label, double ref_length,
                  std::size_t count, std::vector<std::string>& out) {
  const auto& fill = filler_words();
  const auto& bank = phrases();
  std::size_t produced = 0;
  while (produced < count) {
    double p = static_cast<double>(produced) / ref_length;
    double ru = synth_density(cfg, label, false, p) / 1000.0;
    double rc = synth_density(cfg, label, true, p) / 1000.0;
    double r = rng.uniform();
    const std::vector<std::string>* phrase = nullptr;
    if (r < ru)
      phrase = &bank.uncertain[rng.below(bank.uncertain.size())];
    else if (r < ru + rc)
      phrase = &bank.confident[rng.below(bank.confident.size())];
    if (phrase) {
      for (const auto& t : *phrase) {
        if (produced == count) break;
        out.push_back(" " + t);
        ++produced;
      }
    } else {
      out.push_back(" " + fill[rng.below(fill.size())]);
      ++produced;
    }
  }
}

void gen_outline(Rng& rng, std::size_t count, std::vector<std::string>& out) {
  const auto& w = outline_words();
  std::size_t step = 1;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 40 == 0)
      out.push_back("\n" + std::to_string(step++) + ".");
    else
      out.push_back(w[rng.below(w.size())]);
  }
}

constexpr std::size_t kAnswerTokens = 6;

void append_answer(const std::string& answer, std::vector<std::string>& out) {
  out.push_back("</think>");
  out.push_back("\n\nThe");
  out.push_back(" final");
  out.push_back(" answer");
  out.push_back(" is");
  out.push_back(" \\boxed{" + answer + "}.");
}

Eigen::MatrixXd hidden_basis(const SynthConfig& cfg) {
  Rng rng(derive(cfg.seed, kTagBasis));
  Eigen::MatrixXd g(cfg.hidden_dim, cfg.latent_dim);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(cfg.hidden_dim, cfg.latent_dim);
}

Eigen::VectorXd draw_latent(Rng& rng, const SynthConfig& cfg, SolvabilityLabel label) {
  Eigen::VectorXd z(cfg.latent_dim);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  z(0) += label == SolvabilityLabel::Unsolvable ? cfg.separation : -cfg.separation;
  return z;
}

std::vector<float> embed(Rng& rng, const SynthConfig& cfg, const Eigen::MatrixXd& basis,
                         const Eigen::VectorXd& z) {
  Eigen::VectorXd x = basis * z;
  std::vector<float> v(cfg.hidden_dim);
  for (std::size_t i = 0; i < cfg.hidden_dim; ++i)
    v[i] = static_cast<float>(x(static_cast<Eigen::Index>(i)) + cfg.noise_floor * rng.normal());
  return v;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("synth config: " + m); };
  if (n_solvable + n_unsolvable == 0) fail("corpus is empty");
  for (double d : {solvable_confident_start, solvable_confident_end, solvable_uncertain,
                   unsolvable_uncertain_start, unsolvable_uncertain_max, unsolvable_confident})
    if (!(d >= 0.0) || d > 1000.0) fail("densities must lie in [0, 1000]");
  if (!(solvable_confident_exponent > 0.0)) fail("solvable_confident_exponent must be positive");
  if (!(unsolvable_uncertain_tau > 0.0)) fail("unsolvable_uncertain_tau must be positive");
  if (!(overlap >= 0.0 && overlap <= 1.0)) fail("overlap must lie in [0, 1]");
  if (length_min == 0 || length_min > length_max) fail("need 0 < length_min <= length_max");
  if (!(near_boundary_fraction >= 0.0 && near_boundary_fraction <= 1.0))
    fail("near_boundary_fraction must lie in [0, 1]");
  if (!(near_boundary_inflation >= 1.0)) fail("near_boundary_inflation must be >= 1");
  if (!(p_overflow >= 0.0 && p_overflow <= 1.0)) fail("p_overflow must lie in [0, 1]");
  if (reference_length == 0) fail("reference_length must be positive");
  if (outline_min == 0 || outline_min > outline_max) fail("need 0 < outline_min <= outline_max");
  if (!(boost_compliance >= 0.0 && boost_compliance <= 1.0))
    fail("boost_compliance must lie in [0, 1]");
  if (latent_dim == 0 || latent_dim > hidden_dim) fail("need 0 < latent_dim <= hidden_dim");
  if (!(noise_floor >= 0.0)) fail("noise_floor must be non-negative");
  if (!(separation >= 0.0)) fail("separation must be non-negative");
  if (smoothing_window == 0 || smoothing_window % 2 == 0) fail("smoothing_window must be odd");
}

#define CAPMON_SYNTH_FIELDS(X)                                                            \
  X(seed) X(n_solvable) X(n_unsolvable) X(solvable_confident_start)                       \
  X(solvable_confident_end) X(solvable_confident_exponent) X(solvable_uncertain)          \
  X(unsolvable_uncertain_start) X(unsolvable_uncertain_max) X(unsolvable_uncertain_tau)   \
  X(unsolvable_confident) X(overlap) X(length_min) X(length_max) X(near_boundary_fraction) \
  X(near_boundary_inflation) X(p_overflow) X(reference_length) X(outline_min)             \
  X(outline_max) X(boost_compliance) X(hidden_dim) X(latent_dim) X(noise_floor)           \
  X(separation) X(smoothing_window)

std::string synth_config_to_json(const SynthConfig& cfg) {
  json j;
#define X(f) j[#f] = cfg.f;
  CAPMON_SYNTH_FIELDS(X)
#undef X
  return j.dump(2);
}

namespace {

// Counts and seeds reject negatives instead of wrapping around.
template <typename T>
T read_field(const std::string& key, const json& v) {
  if constexpr (std::is_unsigned_v<T>)
    if (!v.is_number_unsigned())
      throw ConfigError("synth config: \"" + key + "\" must be a non-negative integer");
  return v.get<T>();
}

}  // namespace

SynthConfig synth_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("synth config: expected a JSON object");
  SynthConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    bool known = false;
    try {
#define X(f)                                     \
  if (k == #f) {                                 \
    cfg.f = read_field<decltype(cfg.f)>(k, it.value()); \
    known = true;                                \
  }
      CAPMON_SYNTH_FIELDS(X)
#undef X
    } catch (const json::exception& e) {
      throw ConfigError("synth config: bad value for \"" + k + "\": " + e.what());
    }
    if (!known) throw ConfigError("synth config: unknown key \"" + k + "\"");
  }
  cfg.validate();
  return cfg;
}

#undef CAPMON_SYNTH_FIELDS

double synth_density(const SynthConfig& cfg, SolvabilityLabel label, bool confident, double p) {
  auto own = [&](bool unsolvable) {
    if (!unsolvable)
      return confident ? cfg.solvable_confident_start +
                             (cfg.solvable_confident_end - cfg.solvable_confident_start) *
                                 std::pow(std::max(p, 0.0), cfg.solvable_confident_exponent)
                       : cfg.solvable_uncertain;
    return confident ? cfg.unsolvable_confident
                     : cfg.unsolvable_uncertain_start +
                           (cfg.unsolvable_uncertain_max - cfg.unsolvable_uncertain_start) *
                               (1.0 - std::exp(-std::max(p, 0.0) / cfg.unsolvable_uncertain_tau));
  };
  bool unsolvable = label == SolvabilityLabel::Unsolvable;
  double mid = 0.5 * (own(false) + own(true));
  return (1.0 - cfg.overlap) * own(unsolvable) + cfg.overlap * mid;
}

std::size_t natural_length(const SynthItem& item) {
  if (item.overflow) return 0;
  return item.think_length + 1 + kAnswerTokens;
}

SynthCorpus synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive(cfg.seed, kTagCorpus));
  const Eigen::MatrixXd basis = hidden_basis(cfg);

  const std::size_t n = cfg.n_solvable + cfg.n_unsolvable;
  std::vector<SynthItem> items(n);
  std::vector<Eigen::VectorXd> latents(n);
  for (std::size_t i = 0; i < n; ++i) {
    items[i].label = i < cfg.n_solvable ? SolvabilityLabel::Solvable : SolvabilityLabel::Unsolvable;
    latents[i] = draw_latent(rng, cfg, items[i].label);
  }

  std::vector<std::size_t> solv(cfg.n_solvable);
  std::iota(solv.begin(), solv.end(), 0);
  std::stable_sort(solv.begin(), solv.end(),
                   [&](std::size_t a, std::size_t b) { return latents[a](0) > latents[b](0); });
  auto n_near = static_cast<std::size_t>(
      std::llround(cfg.near_boundary_fraction * static_cast<double>(cfg.n_solvable)));
  for (std::size_t k = 0; k < n_near; ++k) items[solv[k]].near_boundary = true;

  for (std::size_t i = 0; i < n; ++i) {
    auto& it = items[i];
    std::size_t len = rng.between(cfg.length_min, cfg.length_max);
    if (it.label == SolvabilityLabel::Solvable) {
      if (it.near_boundary)
        len = static_cast<std::size_t>(std::llround(static_cast<double>(len) *
                                                    cfg.near_boundary_inflation));
      it.think_length = len;
    } else {
      it.overflow = rng.bernoulli(cfg.p_overflow);
      it.think_length = it.overflow ? 0 : len;
    }
    std::size_t a = rng.between(2, 99), b = rng.between(2, 99);
    std::size_t gold = 100 + rng.below(900);
    it.gold_answer = std::to_string(gold);
    it.wrong_answer = std::to_string(gold + 1 + rng.below(9));
    it.question = "Find the remainder N for the configuration with parameters a = " +
                  std::to_string(a) + " and b = " + std::to_string(b) +
                  ". Put the final answer in \\boxed{}.";
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  SynthCorpus corpus;
  corpus.config = cfg;
  corpus.items.reserve(n);
  corpus.records.reserve(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    std::size_t src = order[pos];
    SynthItem it = items[src];
    char buf[32];
    std::snprintf(buf, sizeof buf, "synth-%05zu", pos);
    it.id = buf;
    it.index = pos;
    it.stream_seed = derive(cfg.seed, 1000 + pos);

    HiddenStateRecord rec;
    rec.trace_id = it.id;
    rec.model_id = "simulated";
    rec.label = it.label;
    rec.vector = embed(rng, cfg, basis, latents[src]);
    std::size_t usage = natural_length(it);
    rec.token_usage = usage ? usage : cfg.reference_length;
    corpus.items.push_back(std::move(it));
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

std::vector<HiddenStateRecord> synth_hidden_states(const SynthConfig& cfg, std::size_t per_class,
                                                   std::uint64_t sample_seed) {
  cfg.validate();
  const Eigen::MatrixXd basis = hidden_basis(cfg);
  Rng rng(derive(sample_seed, kTagCorpus ^ 0xabcdefULL));
  std::vector<HiddenStateRecord> out;
  out.reserve(2 * per_class);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    HiddenStateRecord rec;
    rec.label = i % 2 ? SolvabilityLabel::Unsolvable : SolvabilityLabel::Solvable;
    rec.trace_id = "train-" + std::to_string(i);
    rec.model_id = "simulated";
    rec.vector = embed(rng, cfg, basis, draw_latent(rng, cfg, rec.label));
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> simulate_stream(const SynthItem& item, const SynthConfig& cfg,
                                         SimRequest request, std::size_t max_tokens) {
  std::vector<std::string> out;
  const bool unsolvable = item.label == SolvabilityLabel::Unsolvable;

  if (request == SimRequest::BoostAbstention) {
    Rng decide(derive(item.stream_seed, kTagBoostDecision));
    if (unsolvable && decide.bernoulli(cfg.boost_compliance)) {
      Rng rng(derive(item.stream_seed, kTagBoostThinking));
      out.push_back("<think>");
      gen_thinking(rng, cfg, item.label, static_cast<double>(cfg.reference_length), 40, out);
      out.push_back("</think>");
      out.push_back("\n\n");
      out.insert(out.end(), kMarkerChunks.begin(), kMarkerChunks.end());
      std::size_t len = rng.between(cfg.outline_min, cfg.outline_max);
      gen_outline(rng, len > kMarkerChunks.size() ? len - kMarkerChunks.size() : 1, out);
      if (out.size() > max_tokens) out.resize(max_tokens);
      return out;
    }
    request = SimRequest::Original;
  }

  if (request == SimRequest::Original) {
    Rng rng(derive(item.stream_seed, kTagThinking));
    out.push_back("<think>");
    if (item.overflow) {
      std::size_t need = max_tokens > 1 ? max_tokens - 1 : 0;
      gen_thinking(rng, cfg, item.label, static_cast<double>(cfg.reference_length), need, out);
    } else {
      std::size_t need = std::min(item.think_length, max_tokens);
      gen_thinking(rng, cfg, item.label, static_cast<double>(item.think_length), need, out);
      append_answer(unsolvable ? item.wrong_answer : item.gold_answer, out);
    }
  } else if (request == SimRequest::Reprompt) {
    Rng rng(derive(item.stream_seed, kTagReprompt));
    std::size_t len = rng.between(cfg.outline_min, cfg.outline_max);
    out.insert(out.end(), kMarkerChunks.begin(), kMarkerChunks.end());
    gen_outline(rng, len > kMarkerChunks.size() ? len - kMarkerChunks.size() : 1, out);
  } else {
    Rng rng(derive(item.stream_seed, kTagForced));
    gen_outline(rng, rng.between(cfg.outline_min, cfg.outline_max), out);
  }
  if (out.size() > max_tokens) out.resize(max_tokens);
  return out;
}

}  // namespace capmon
