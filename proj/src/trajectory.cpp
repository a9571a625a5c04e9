#include "capmon/trajectory.hpp"

#include <algorithm>
#include <string>

#include "capmon/errors.hpp"

namespace capmon {

std::vector<std::size_t> stage_boundaries(std::size_t total, std::size_t stages) {
  if (stages < 2) throw InvalidArgument("trajectory: need at least 2 stages");
  if (total < stages)
    throw InvalidArgument("trajectory: total_tokens " + std::to_string(total) +
                          " is smaller than stage count " + std::to_string(stages));
  const std::size_t q = total / stages;
  const std::size_t r = total % stages;
  std::vector<std::size_t> b(stages + 1);
  for (std::size_t i = 0; i <= stages; ++i) {
    std::size_t extra = i > stages - r ? i - (stages - r) : 0;
    b[i] = i * q + extra;
  }
  return b;
}

std::size_t stage_of(std::size_t pos, std::size_t total, std::size_t stages) {
  const std::size_t q = total / stages;
  const std::size_t r = total % stages;
  const std::size_t plain = (stages - r) * q;  // tokens covered by the short bins
  if (pos < plain) return pos / q;
  return (stages - r) + (pos - plain) / (q + 1);
}

namespace {

void accumulate(const ExpressionEvent& ev, std::size_t total, std::size_t stages,
                std::vector<double>& conf, std::vector<double>& unc) {
  if (ev.length_tokens == 0 || ev.end_token() > total)
    throw ValidationError("trajectory: event at token " + std::to_string(ev.start_token) +
                          " exceeds trace length " + std::to_string(total));
  auto& dst = ev.polarity == Polarity::Confident ? conf : unc;
  dst[stage_of(ev.start_token, total, stages)] += 1.0;
}

TrajectoryPair to_densities(std::vector<double> conf, std::vector<double> unc,
                            std::size_t total, const std::vector<std::size_t>& bounds) {
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const double width = static_cast<double>(bounds[i + 1] - bounds[i]);
    conf[i] = conf[i] / width * kDensityUnit;
    unc[i] = unc[i] / width * kDensityUnit;
  }
  TrajectoryPair out;
  out.confident = {Polarity::Confident, total, std::move(conf)};
  out.uncertain = {Polarity::Uncertain, total, std::move(unc)};
  return out;
}

}  // namespace

TrajectoryPair build_trajectories(const std::vector<ExpressionEvent>& events,
                                  std::size_t total_tokens, std::size_t num_stages) {
  auto bounds = stage_boundaries(total_tokens, num_stages);
  std::vector<double> conf(num_stages, 0.0), unc(num_stages, 0.0);
  for (const auto& ev : events) accumulate(ev, total_tokens, num_stages, conf, unc);
  return to_densities(std::move(conf), std::move(unc), total_tokens, bounds);
}

double recovered_event_count(const DensityTrajectory& traj) {
  auto bounds = stage_boundaries(traj.total_tokens, traj.num_stages());
  double n = 0.0;
  for (std::size_t i = 0; i < traj.num_stages(); ++i)
    n += traj.stages[i] * static_cast<double>(bounds[i + 1] - bounds[i]) / kDensityUnit;
  return n;
}

std::vector<double> smooth_series(const std::vector<double>& series, std::size_t window) {
  if (window == 0 || window % 2 == 0)
    throw InvalidArgument("smooth: window must be a positive odd integer");
  if (window > series.size())
    throw InvalidArgument("smooth: window " + std::to_string(window) +
                          " exceeds series length " + std::to_string(series.size()));
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t h = std::min({half, i, n - 1 - i});
    double acc = 0.0;
    for (std::size_t j = i - h; j <= i + h; ++j) acc += series[j];
    out[i] = acc / static_cast<double>(2 * h + 1);
  }
  return out;
}

DensityTrajectory smooth(const DensityTrajectory& traj, std::size_t window) {
  DensityTrajectory out = traj;
  out.stages = smooth_series(traj.stages, window);
  return out;
}

TrajectoryBuilder::TrajectoryBuilder(std::size_t provisional_width)
    : width_(provisional_width == 0 ? kProvisionalWidth : provisional_width) {}

void TrajectoryBuilder::observe_tokens(std::size_t count) {
  if (finalized_) throw StateError("trajectory builder: observe after finalize");
  tokens_ += count;
}

void TrajectoryBuilder::observe_event(const ExpressionEvent& ev) {
  if (finalized_) throw StateError("trajectory builder: observe after finalize");
  if (ev.end_token() > tokens_)
    throw ValidationError("trajectory builder: event ends past observed tokens");
  const std::size_t bin = ev.start_token / width_;
  if (bins_.size() <= bin) bins_.resize(bin + 1);
  bins_[bin].events.push_back(ev);
  ++counts_[static_cast<std::size_t>(ev.polarity)];
}

std::vector<ExpressionEvent> TrajectoryBuilder::events() const {
  std::vector<ExpressionEvent> all;
  for (const auto& b : bins_) all.insert(all.end(), b.events.begin(), b.events.end());
  return all;
}

TrajectoryPair TrajectoryBuilder::snapshot(std::size_t total, std::size_t num_stages,
                                           const std::vector<ExpressionEvent>& extra) const {
  auto bounds = stage_boundaries(total, num_stages);
  std::vector<double> conf(num_stages, 0.0), unc(num_stages, 0.0);
  for (const auto& b : bins_)
    for (const auto& ev : b.events) accumulate(ev, total, num_stages, conf, unc);
  for (const auto& ev : extra) accumulate(ev, total, num_stages, conf, unc);
  return to_densities(std::move(conf), std::move(unc), total, bounds);
}

TrajectoryPair TrajectoryBuilder::finalize(std::size_t num_stages) {
  if (finalized_) throw StateError("trajectory builder: finalize called twice");
  if (tokens_ == 0) throw InsufficientData("trajectory builder: empty trace");
  auto out = snapshot(tokens_, num_stages);
  finalized_ = true;
  return out;
}

}  // namespace capmon
