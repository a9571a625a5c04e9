#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "capmon/trajectory.hpp"

namespace capmon {

enum class Decision : std::uint8_t { Within = 0, Beyond = 1 };
enum class Detector : std::uint8_t { ConfDiff = 0, ConfCurv = 1, HiddenProbe = 2 };
enum class CurvatureScheme : std::uint8_t { Central = 0, Forward = 1 };

// Which sign of the second difference of (D_U - D_C) counts toward Beyond.
// Negative is the default; Positive exists to test the opposite convention.
enum class CurvatureSign : std::uint8_t { Negative = 0, Positive = 1 };

std::string_view to_string(Decision d);
std::string_view to_string(Detector d);
Detector detector_from_string(std::string_view s);

struct IndicatorConfig {
  double stage_percent = 100.0;  // s in (0, 100]
  double alpha = 0.5;            // ConfDiff threshold
  double beta = 0.5;             // ConfCurv threshold
  std::size_t smoothing_window = 5;
  CurvatureScheme curvature_scheme = CurvatureScheme::Central;
  CurvatureSign curvature_sign = CurvatureSign::Negative;

  void validate() const;
};

struct BoundaryVerdict {
  Decision decision = Decision::Within;
  Detector detector = Detector::ConfDiff;
  double score = 0.0;      // fraction in [0,1], or signed margin for probes
  double threshold = 0.0;  // alpha/beta; 0 for probes
  double stage_percent = 0.0;
  std::size_t stages_considered = 0;
  std::string trace_id;
};

// Stages t (1-based) with t / S * 100 <= s, i.e. bins fully inside the first
// s percent of the trace.
std::size_t stages_in_window(std::size_t num_stages, double stage_percent);

BoundaryVerdict conf_diff(const DensityTrajectory& confident,
                          const DensityTrajectory& uncertain, const IndicatorConfig& cfg);

BoundaryVerdict conf_curv(const DensityTrajectory& confident,
                          const DensityTrajectory& uncertain, const IndicatorConfig& cfg);

BoundaryVerdict evaluate(Detector detector, const TrajectoryPair& pair,
                         const IndicatorConfig& cfg);

// Discrete second differences g(t+1) - 2 g(t) + g(t-1). The central scheme
// attributes each value to its middle stage, the forward scheme to its first.
struct CurvaturePoint {
  std::size_t stage;
  double value;
};
std::vector<CurvaturePoint> second_differences(const std::vector<double>& g,
                                               CurvatureScheme scheme);

// ---------------------------------------------------------------------------
// Stage sweep

struct SweepItem {
  TrajectoryPair trajectories;
  bool unsolvable = false;
  std::string trace_id;
};

struct SweepRow {
  Detector detector;
  double stage_percent;
  double threshold;
  double accuracy;  // fraction in [0,1]
  double tpr;       // Beyond among unsolvable
  double fpr;       // Beyond among solvable
  std::size_t evaluated;
  std::size_t skipped;  // traces with too few stages in the window
};

struct SweepResult {
  std::vector<SweepRow> rows;                 // every (s, threshold)
  std::vector<SweepRow> best_per_stage;       // best threshold at each s
  std::vector<SweepRow> fixed_threshold;      // rows at the configured threshold
  bool degenerate_labels = false;             // only one class present
};

std::vector<double> default_stage_grid();      // 2, 4, ..., 100
std::vector<double> default_threshold_grid();  // 0.0, 0.05, ..., 0.95

SweepResult stage_sweep(const std::vector<SweepItem>& corpus, Detector detector,
                        const std::vector<double>& stage_grid,
                        const std::vector<double>& threshold_grid,
                        const IndicatorConfig& base);

}  // namespace capmon
