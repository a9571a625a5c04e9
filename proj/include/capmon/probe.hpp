#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "capmon/hidden_record.hpp"
#include "capmon/indicators.hpp"

namespace capmon {

enum class ProbeKind : std::uint8_t { LDA = 0, LogReg = 1 };

std::string_view to_string(ProbeKind k);
ProbeKind probe_kind_from_string(std::string_view s);

struct TrainMeta {
  std::string dataset_hash;
  std::uint64_t split_seed = 0;
  std::size_t train_size = 0;
};

// Linear probe over standardized features. Unsolvable is the positive class:
// margin = w . ((x - mean) / scale) + b > 0 means Beyond.
struct ProbeModel {
  ProbeKind kind = ProbeKind::LDA;
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  double shrinkage = 0.5;  // LDA only
  double C = 1.0;          // LogReg only
  TrainMeta meta;
  bool converged = true;
  std::size_t iterations = 0;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Data preparation

struct LabeledMatrix {
  Eigen::MatrixXd X;       // n x d, raw features
  Eigen::VectorXd y;       // 1 = unsolvable, 0 = solvable
};

// Rejects non-finite components, mixed dimensions and Unknown labels.
LabeledMatrix to_matrix(const std::vector<HiddenStateRecord>& records);

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population std; constant features get 1
};
Standardizer fit_standardizer(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& X);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified split: each label's indices are shuffled with mt19937_64(seed)
// and the first round(train_fraction * n_label) go to train.
Split stratified_split(const std::vector<HiddenStateRecord>& records, double train_fraction,
                       std::uint64_t seed);

std::vector<HiddenStateRecord> subset(const std::vector<HiddenStateRecord>& records,
                                      const std::vector<std::size_t>& idx);

// ---------------------------------------------------------------------------
// Fitting

// Two-class LDA with covariance (1 - shrinkage) * pooled + shrinkage * diag(pooled).
// shrinkage = 0 uses the Moore-Penrose pseudo-inverse of the pooled covariance.
ProbeModel fit_lda(const std::vector<HiddenStateRecord>& records, double shrinkage = 0.5);

struct LogRegOptions {
  double C = 1.0;
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 10000;
  std::size_t history = 10;  // L-BFGS memory
};

ProbeModel fit_logreg(const std::vector<HiddenStateRecord>& records,
                      const LogRegOptions& opts = {});

// Objective minimized by fit_logreg on standardized features Z:
//   (1/n) sum_i log(1 + exp(-s_i (w . z_i + b))) + ||w||^2 / (2 C n),
// with s_i = +1 for unsolvable and -1 for solvable.
struct LossGradient {
  double loss;
  Eigen::VectorXd grad_w;
  double grad_b;
};
LossGradient logistic_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, double b, double C);

// ---------------------------------------------------------------------------
// Inference and analytics

double margin(const ProbeModel& model, const std::vector<float>& x);
BoundaryVerdict predict(const ProbeModel& model, const std::vector<float>& x);

// |margin| / ||w|| in standardized-feature units.
double boundary_distance(const ProbeModel& model, const std::vector<float>& x);

struct TokenUsageRatio {
  double ratio = 0.0;
  double near_mean = 0.0;
  double far_mean = 0.0;
  std::size_t used = 0;
  std::size_t skipped_missing = 0;  // solvable records without token_usage
};

// Splits solvable records at the median boundary distance and divides the
// near half's mean token usage by the far half's. With an odd count the
// median record belongs to neither half.
TokenUsageRatio token_usage_ratio(const std::vector<HiddenStateRecord>& records,
                                  const ProbeModel& model);

struct Point2D {
  double u;  // signed distance along the unit normal
  double v;  // first principal component of the residual orthogonal to it
};
std::vector<Point2D> project_2d(const ProbeModel& model,
                                const std::vector<HiddenStateRecord>& records);

double accuracy(const ProbeModel& model, const std::vector<HiddenStateRecord>& records);

// ---------------------------------------------------------------------------
// Multi-seed evaluation

struct ProbeSpec {
  ProbeKind kind = ProbeKind::LDA;
  double shrinkage = 0.5;
  double C = 1.0;
};

struct ProbeEvaluation {
  ProbeSpec spec;
  std::vector<double> accuracies;  // one per seed
  double mean = 0.0;
  double sd = 0.0;
};

ProbeModel fit_probe(const std::vector<HiddenStateRecord>& records, const ProbeSpec& spec);

ProbeEvaluation evaluate_probe(const std::vector<HiddenStateRecord>& records,
                               const ProbeSpec& spec, const std::vector<std::uint64_t>& seeds,
                               double train_fraction = 0.8);

// ---------------------------------------------------------------------------
// Serialization: JSON with binary64 little-endian values rendered as hex.

std::string encode_hex_doubles(const Eigen::VectorXd& v);
Eigen::VectorXd decode_hex_doubles(std::string_view hex);

std::string save_probe(const ProbeModel& model);
ProbeModel load_probe(std::string_view text);
void save_probe_file(const std::string& path, const ProbeModel& model);
ProbeModel load_probe_file(const std::string& path);

}  // namespace capmon
