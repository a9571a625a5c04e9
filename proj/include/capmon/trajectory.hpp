#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "capmon/lexicon.hpp"
#include "capmon/matcher.hpp"

namespace capmon {

inline constexpr std::size_t kDefaultStages = 50;
inline constexpr double kDensityUnit = 1000.0;  // events per 1000 tokens

// Per-stage expression density of one polarity over a trace.
struct DensityTrajectory {
  Polarity polarity = Polarity::Confident;
  std::size_t total_tokens = 0;
  std::vector<double> stages;

  std::size_t num_stages() const noexcept { return stages.size(); }
};

struct TrajectoryPair {
  DensityTrajectory confident;
  DensityTrajectory uncertain;
};

// Stage boundaries for `total` tokens split into `stages` contiguous bins of
// floor(total/stages) tokens; the last (total mod stages) bins take one
// extra token each. Returns stages+1 offsets, first 0, last total.
std::vector<std::size_t> stage_boundaries(std::size_t total, std::size_t stages);

// Bin index holding token `pos` for the boundaries above.
std::size_t stage_of(std::size_t pos, std::size_t total, std::size_t stages);

TrajectoryPair build_trajectories(const std::vector<ExpressionEvent>& events,
                                  std::size_t total_tokens,
                                  std::size_t num_stages = kDefaultStages);

// Number of events recovered from a trajectory's densities.
double recovered_event_count(const DensityTrajectory& traj);

// Centered moving average. Near the edges the window shrinks symmetrically
// to the widest centered window that fits, so linear series pass unchanged.
DensityTrajectory smooth(const DensityTrajectory& traj, std::size_t window);
std::vector<double> smooth_series(const std::vector<double>& series, std::size_t window);

// Incremental builder for streams whose length is unknown up front. Event
// starts are kept in fixed provisional bins of `provisional_width` tokens and
// re-binned to the requested stage count on snapshot() / finalize().
class TrajectoryBuilder {
 public:
  static constexpr std::size_t kProvisionalWidth = 64;

  explicit TrajectoryBuilder(std::size_t provisional_width = kProvisionalWidth);

  void observe_tokens(std::size_t count = 1);
  void observe_event(const ExpressionEvent& ev);

  std::size_t tokens_seen() const noexcept { return tokens_; }
  std::size_t event_count(Polarity p) const noexcept {
    return counts_[static_cast<std::size_t>(p)];
  }

  // Trajectories as if the trace had `total` tokens, with `extra` events
  // (not yet released by the matcher) included. Does not change state.
  TrajectoryPair snapshot(std::size_t total, std::size_t num_stages,
                          const std::vector<ExpressionEvent>& extra = {}) const;

  std::vector<ExpressionEvent> events() const;

  // Ends the stream; total = tokens seen. Further observe_* calls throw.
  TrajectoryPair finalize(std::size_t num_stages = kDefaultStages);
  bool finalized() const noexcept { return finalized_; }

 private:
  struct Bin {
    std::vector<ExpressionEvent> events;
  };

  std::size_t width_;
  std::size_t tokens_ = 0;
  std::array<std::size_t, 2> counts_{0, 0};
  std::vector<Bin> bins_;
  bool finalized_ = false;
};

}  // namespace capmon
