#include "capmon/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "capmon/errors.hpp"

namespace capmon {

std::string_view to_string(Decision d) { return d == Decision::Beyond ? "beyond" : "within"; }

std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::ConfDiff: return "conf_diff";
    case Detector::ConfCurv: return "conf_curv";
    case Detector::HiddenProbe: return "hidden_probe";
  }
  return "unknown";
}

Detector detector_from_string(std::string_view s) {
  if (s == "conf_diff" || s == "confdiff") return Detector::ConfDiff;
  if (s == "conf_curv" || s == "confcurv") return Detector::ConfCurv;
  if (s == "hidden_probe" || s == "hidden") return Detector::HiddenProbe;
  throw ConfigError("unknown detector \"" + std::string(s) + "\"");
}

void IndicatorConfig::validate() const {
  if (!(stage_percent > 0.0 && stage_percent <= 100.0))
    throw InvalidArgument("indicator: stage_percent must lie in (0, 100]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("indicator: alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("indicator: beta must lie in [0, 1]");
  if (smoothing_window == 0 || smoothing_window % 2 == 0)
    throw InvalidArgument("indicator: smoothing_window must be a positive odd integer");
}

std::size_t stages_in_window(std::size_t num_stages, double stage_percent) {
  const double exact = stage_percent * static_cast<double>(num_stages) / 100.0;
  auto n = static_cast<std::size_t>(std::floor(exact + 1e-9));
  return std::min(n, num_stages);
}

namespace {

void check_pair(const DensityTrajectory& c, const DensityTrajectory& u) {
  if (c.num_stages() != u.num_stages())
    throw InvalidArgument("indicator: trajectories have different stage counts");
  if (c.total_tokens != u.total_tokens)
    throw InvalidArgument("indicator: trajectories have different token totals");
}

}  // namespace

BoundaryVerdict conf_diff(const DensityTrajectory& confident,
                          const DensityTrajectory& uncertain, const IndicatorConfig& cfg) {
  cfg.validate();
  check_pair(confident, uncertain);
  const std::size_t n = stages_in_window(confident.num_stages(), cfg.stage_percent);
  if (n == 0) throw InsufficientData("conf_diff: no stage falls inside the window");

  std::size_t dominant = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (uncertain.stages[t] > confident.stages[t]) ++dominant;

  BoundaryVerdict v;
  v.detector = Detector::ConfDiff;
  v.score = static_cast<double>(dominant) / static_cast<double>(n);
  v.threshold = cfg.alpha;
  v.decision = v.score > cfg.alpha ? Decision::Beyond : Decision::Within;
  v.stage_percent = cfg.stage_percent;
  v.stages_considered = n;
  return v;
}

std::vector<CurvaturePoint> second_differences(const std::vector<double>& g,
                                               CurvatureScheme scheme) {
  std::vector<CurvaturePoint> out;
  if (g.size() < 3) return out;
  out.reserve(g.size() - 2);
  for (std::size_t t = 1; t + 1 < g.size(); ++t) {
    double d2 = g[t + 1] - 2.0 * g[t] + g[t - 1];
    out.push_back({scheme == CurvatureScheme::Central ? t : t - 1, d2});
  }
  return out;
}

BoundaryVerdict conf_curv(const DensityTrajectory& confident,
                          const DensityTrajectory& uncertain, const IndicatorConfig& cfg) {
  cfg.validate();
  check_pair(confident, uncertain);
  const std::size_t n = stages_in_window(confident.num_stages(), cfg.stage_percent);
  if (n < 3) throw InsufficientData("conf_curv: fewer than 3 stages inside the window");

  std::vector<double> g(n);
  for (std::size_t t = 0; t < n; ++t) g[t] = uncertain.stages[t] - confident.stages[t];

  std::size_t window = std::min(cfg.smoothing_window, n % 2 == 1 ? n : n - 1);
  g = smooth_series(g, window);

  const auto d2 = second_differences(g, cfg.curvature_scheme);
  // Second differences within a few ulps of the series magnitude are rounding
  // residue of a straight line, not curvature.
  double magnitude = 0.0;
  for (double x : g) magnitude = std::max(magnitude, std::abs(x));
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * magnitude;
  std::size_t hits = 0;
  for (const auto& p : d2) {
    if (cfg.curvature_sign == CurvatureSign::Negative ? p.value < -tol : p.value > tol) ++hits;
  }

  BoundaryVerdict v;
  v.detector = Detector::ConfCurv;
  v.score = static_cast<double>(hits) / static_cast<double>(d2.size());
  v.threshold = cfg.beta;
  v.decision = v.score > cfg.beta ? Decision::Beyond : Decision::Within;
  v.stage_percent = cfg.stage_percent;
  v.stages_considered = n;
  return v;
}

BoundaryVerdict evaluate(Detector detector, const TrajectoryPair& pair,
                         const IndicatorConfig& cfg) {
  switch (detector) {
    case Detector::ConfDiff: return conf_diff(pair.confident, pair.uncertain, cfg);
    case Detector::ConfCurv: return conf_curv(pair.confident, pair.uncertain, cfg);
    case Detector::HiddenProbe: break;
  }
  throw ConfigError("evaluate: hidden_probe is not a trajectory detector");
}

std::vector<double> default_stage_grid() {
  std::vector<double> g;
  for (int s = 2; s <= 100; s += 2) g.push_back(s);
  return g;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (int k = 0; k < 20; ++k) g.push_back(k * 0.05);
  return g;
}

SweepResult stage_sweep(const std::vector<SweepItem>& corpus, Detector detector,
                        const std::vector<double>& stage_grid,
                        const std::vector<double>& threshold_grid,
                        const IndicatorConfig& base) {
  SweepResult res;
  std::size_t pos = 0;
  for (const auto& it : corpus) pos += it.unsolvable ? 1 : 0;
  res.degenerate_labels = pos == 0 || pos == corpus.size();

  for (double s : stage_grid) {
    IndicatorConfig cfg = base;
    cfg.stage_percent = s;
    // Scores do not depend on the threshold; compute once per stage.
    std::vector<double> scores;
    std::vector<bool> labels;
    std::size_t skipped = 0;
    for (const auto& it : corpus) {
      try {
        auto v = evaluate(detector, it.trajectories, cfg);
        scores.push_back(v.score);
        labels.push_back(it.unsolvable);
      } catch (const InsufficientData&) {
        ++skipped;
      }
    }
    std::size_t n_pos = std::count(labels.begin(), labels.end(), true);
    std::size_t n_neg = labels.size() - n_pos;

    auto row_for = [&](double thr) {
      std::size_t tp = 0, fp = 0, correct = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        bool beyond = scores[i] > thr;
        if (beyond && labels[i]) ++tp;
        if (beyond && !labels[i]) ++fp;
        if (beyond == labels[i]) ++correct;
      }
      SweepRow r{detector, s, thr, 0.0, 0.0, 0.0, scores.size(), skipped};
      if (!scores.empty()) r.accuracy = static_cast<double>(correct) / scores.size();
      if (n_pos) r.tpr = static_cast<double>(tp) / n_pos;
      if (n_neg) r.fpr = static_cast<double>(fp) / n_neg;
      return r;
    };

    const double fixed = detector == Detector::ConfCurv ? base.beta : base.alpha;
    std::size_t first = res.rows.size();
    for (double thr : threshold_grid) res.rows.push_back(row_for(thr));
    res.fixed_threshold.push_back(row_for(fixed));

    auto best = std::max_element(res.rows.begin() + first, res.rows.end(),
                                 [](const SweepRow& a, const SweepRow& b) {
                                   return a.accuracy < b.accuracy;
                                 });
    if (best != res.rows.end()) res.best_per_stage.push_back(*best);
  }
  return res;
}

}  // namespace capmon
