#include "capmon/probe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "capmon/errors.hpp"

namespace capmon {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string_view to_string(ProbeKind k) { return k == ProbeKind::LDA ? "lda" : "logreg"; }

ProbeKind probe_kind_from_string(std::string_view s) {
  if (s == "lda") return ProbeKind::LDA;
  if (s == "logreg" || s == "lr") return ProbeKind::LogReg;
  throw ConfigError("unknown probe kind \"" + std::string(s) + "\"");
}

void ProbeModel::validate() const {
  if (weights.size() == 0) throw ValidationError("probe: empty weight vector");
  if (mean.size() != weights.size() || scale.size() != weights.size())
    throw ValidationError("probe: normalization size does not match weights");
  for (Eigen::Index i = 0; i < scale.size(); ++i)
    if (!(scale[i] > 0.0)) throw ValidationError("probe: normalization scale must be > 0");
  if (!weights.allFinite() || !std::isfinite(bias)) throw ValidationError("probe: non-finite weights");
}

// ===========================================================================
// Data preparation

LabeledMatrix to_matrix(const std::vector<HiddenStateRecord>& records) {
  if (records.empty()) throw InsufficientData("probe: no records");
  const std::size_t d = records.front().vector.size();
  if (d == 0) throw ValidationError("probe: zero-dimensional records");
  LabeledMatrix m;
  m.X.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(d));
  m.y.resize(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.vector.size() != d)
      throw ValidationError("probe: record " + r.trace_id + " has dimension " +
                            std::to_string(r.vector.size()) + ", expected " + std::to_string(d));
    if (r.label == SolvabilityLabel::Unknown)
      throw ValidationError("probe: record " + r.trace_id + " is unlabeled");
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(r.vector[j]))
        throw ValidationError("probe: record " + r.trace_id + " has a non-finite feature");
      m.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.vector[j];
    }
    m.y[static_cast<Eigen::Index>(i)] = r.label == SolvabilityLabel::Unsolvable ? 1.0 : 0.0;
  }
  return m;
}

Standardizer fit_standardizer(const MatrixXd& X) {
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double var = (X.col(j).array() - s.mean[j]).square().sum() / n;
    double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

MatrixXd apply_standardizer(const Standardizer& s, const MatrixXd& X) {
  return (X.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
}

Split stratified_split(const std::vector<HiddenStateRecord>& records, double train_fraction,
                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("split: train_fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  Split split;
  for (auto label : {SolvabilityLabel::Solvable, SolvabilityLabel::Unsolvable}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].label == label) idx.push_back(i);
    // Fisher-Yates with an explicit draw so the permutation is library independent.
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(idx[i - 1], idx[j]);
    }
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * idx.size()));
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + n_train);
    split.test.insert(split.test.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<HiddenStateRecord> subset(const std::vector<HiddenStateRecord>& records,
                                      const std::vector<std::size_t>& idx) {
  std::vector<HiddenStateRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records.at(i));
  return out;
}

// ===========================================================================
// LDA

namespace {

struct ClassStats {
  VectorXd mu0, mu1;
  MatrixXd centered;  // rows centered by their own class mean
  std::size_t n0 = 0, n1 = 0;
};

ClassStats class_stats(const MatrixXd& Z, const VectorXd& y) {
  ClassStats cs;
  const auto d = Z.cols();
  cs.mu0 = VectorXd::Zero(d);
  cs.mu1 = VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    if (y[i] > 0.5) {
      cs.mu1 += Z.row(i).transpose();
      ++cs.n1;
    } else {
      cs.mu0 += Z.row(i).transpose();
      ++cs.n0;
    }
  }
  if (cs.n0 < 2 || cs.n1 < 2)
    throw InsufficientData("probe: each class needs at least 2 samples (solvable " +
                           std::to_string(cs.n0) + ", unsolvable " + std::to_string(cs.n1) + ")");
  cs.mu0 /= static_cast<double>(cs.n0);
  cs.mu1 /= static_cast<double>(cs.n1);
  cs.centered = Z;
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    cs.centered.row(i) -= (y[i] > 0.5 ? cs.mu1 : cs.mu0).transpose();
  return cs;
}

// Solves pinv(Xc^T Xc / dof) delta without forming the d x d matrix when d > n.
VectorXd pinv_pooled_solve(const MatrixXd& Xc, double dof, const VectorXd& delta) {
  const auto n = Xc.rows();
  const auto d = Xc.cols();
  if (d <= n) {
    MatrixXd S = Xc.transpose() * Xc / dof;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    const VectorXd& ev = es.eigenvalues();
    double tol = std::max(ev.maxCoeff(), 0.0) * 1e-10;
    VectorXd inv = ev.unaryExpr([tol](double x) { return x > tol ? 1.0 / x : 0.0; });
    return es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * delta);
  }
  // Sigma = U U^T with U = Xc^T / sqrt(dof); U^T U = V L V^T gives
  // pinv(Sigma) = U V L^-2 V^T U^T.
  const double c = 1.0 / std::sqrt(dof);
  MatrixXd G = (Xc * Xc.transpose()) * (c * c);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  const VectorXd& ev = es.eigenvalues();
  double tol = std::max(ev.maxCoeff(), 0.0) * 1e-10;
  VectorXd inv2 = ev.unaryExpr([tol](double x) { return x > tol ? 1.0 / (x * x) : 0.0; });
  VectorXd t = es.eigenvectors().transpose() * (c * (Xc * delta));
  return c * (Xc.transpose() * (es.eigenvectors() * inv2.asDiagonal() * t));
}

}  // namespace

ProbeModel fit_lda(const std::vector<HiddenStateRecord>& records, double shrinkage) {
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0))
    throw InvalidArgument("lda: shrinkage must lie in [0, 1]");
  auto data = to_matrix(records);
  auto stdz = fit_standardizer(data.X);
  MatrixXd Z = apply_standardizer(stdz, data.X);
  auto cs = class_stats(Z, data.y);

  const auto n = Z.rows();
  const auto d = Z.cols();
  const double dof = static_cast<double>(n - 2);
  const VectorXd delta = cs.mu1 - cs.mu0;
  VectorXd diag = cs.centered.colwise().squaredNorm().transpose() / dof;

  // Features with no within-class spread get zero weight.
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < d; ++j)
    if (diag[j] > 1e-12) active.push_back(j);

  VectorXd w = VectorXd::Zero(d);
  if (!active.empty()) {
    const auto k = static_cast<Eigen::Index>(active.size());
    MatrixXd Xa(n, k);
    VectorXd da(k), ga(k);
    for (Eigen::Index c = 0; c < k; ++c) {
      Xa.col(c) = cs.centered.col(active[c]);
      da[c] = diag[active[c]];
      ga[c] = delta[active[c]];
    }
    VectorXd wa;
    if (shrinkage == 0.0) {
      wa = pinv_pooled_solve(Xa, dof, ga);
    } else if (shrinkage == 1.0) {
      wa = ga.cwiseQuotient(da);
    } else if (k <= n) {
      MatrixXd S = (1.0 - shrinkage) * (Xa.transpose() * Xa) / dof;
      S.diagonal() += shrinkage * da;
      wa = S.llt().solve(ga);
    } else {
      // Woodbury: (A + U U^T)^-1 with A = shrinkage * diag, U = c Xa^T.
      const double c = std::sqrt((1.0 - shrinkage) / dof);
      VectorXd a = shrinkage * da;
      VectorXd a_inv = a.cwiseInverse();
      MatrixXd Xs = Xa * a_inv.cwiseSqrt().asDiagonal();
      MatrixXd M = (Xs * Xs.transpose()) * (c * c);
      M.diagonal().array() += 1.0;
      VectorXd ag = ga.cwiseProduct(a_inv);
      VectorXd t = c * (Xa * ag);
      VectorXd corr = c * (Xa.transpose() * M.llt().solve(t));
      wa = ag - corr.cwiseProduct(a_inv);
    }
    for (Eigen::Index c = 0; c < k; ++c) w[active[c]] = wa[c];
  }

  ProbeModel m;
  m.kind = ProbeKind::LDA;
  m.shrinkage = shrinkage;
  m.weights = w;
  m.bias = -w.dot(cs.mu0 + cs.mu1) / 2.0 +
           std::log(static_cast<double>(cs.n1) / static_cast<double>(cs.n0));
  m.mean = stdz.mean;
  m.scale = stdz.scale;
  m.meta.dataset_hash = dataset_hash(records);
  m.meta.train_size = records.size();
  m.validate();
  return m;
}

// ===========================================================================
// Logistic regression

namespace {

double log1pexp(double x) {  // log(1 + e^x)
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LossGradient logistic_objective(const MatrixXd& Z, const VectorXd& y, const VectorXd& w,
                                double b, double C) {
  const double n = static_cast<double>(Z.rows());
  VectorXd m = (Z * w).array() + b;
  double loss = 0.0;
  VectorXd r(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double s = y[i] > 0.5 ? 1.0 : -1.0;
    loss += log1pexp(-s * m[i]);
    r[i] = -s * sigmoid(-s * m[i]);
  }
  LossGradient out;
  out.loss = loss / n + w.squaredNorm() / (2.0 * C * n);
  out.grad_w = Z.transpose() * r / n + w / (C * n);
  out.grad_b = r.sum() / n;
  return out;
}

namespace {

struct LbfgsResult {
  VectorXd theta;
  bool converged = false;
  std::size_t iterations = 0;
};

// Minimizes the logistic objective over theta = (w, b) with L-BFGS and an
// Armijo backtracking line search. Starts from zero; fully deterministic.
LbfgsResult lbfgs_logistic(const MatrixXd& F, const VectorXd& y, const LogRegOptions& o) {
  const auto r = F.cols();
  auto eval = [&](const VectorXd& th, VectorXd& g) {
    auto lg = logistic_objective(F, y, th.head(r), th[r], o.C);
    g.resize(r + 1);
    g.head(r) = lg.grad_w;
    g[r] = lg.grad_b;
    return lg.loss;
  };

  LbfgsResult res;
  VectorXd th = VectorXd::Zero(r + 1);
  VectorXd g;
  double f = eval(th, g);
  std::deque<VectorXd> S, Y;
  std::deque<double> rho;

  for (std::size_t it = 0; it < o.max_iterations; ++it) {
    res.iterations = it;
    if (g.norm() <= o.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * S[k].dot(q);
      q -= alpha[k] * Y[k];
    }
    double gamma = S.empty() ? 1.0 / std::max(g.norm(), 1.0) : S.back().dot(Y.back()) / Y.back().squaredNorm();
    VectorXd p = gamma * q;
    for (std::size_t k = 0; k < S.size(); ++k) {
      double beta = rho[k] * Y[k].dot(p);
      p += (alpha[k] - beta) * S[k];
    }
    p = -p;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      p = -g / std::max(g.norm(), 1.0);
      slope = g.dot(p);
    }

    double step = 1.0;
    VectorXd th_new, g_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      th_new = th + step * p;
      f_new = eval(th_new, g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease representable in double precision; at the optimum floor.
      res.converged = g.norm() <= o.gradient_tolerance;
      break;
    }
    VectorXd s = th_new - th;
    VectorXd yv = g_new - g;
    double sy = s.dot(yv);
    if (sy > 1e-12) {
      S.push_back(s);
      Y.push_back(yv);
      rho.push_back(1.0 / sy);
      if (S.size() > o.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    th = std::move(th_new);
    g = std::move(g_new);
    f = f_new;
    res.iterations = it + 1;
  }
  if (!res.converged && g.norm() <= o.gradient_tolerance) res.converged = true;
  res.theta = th;
  return res;
}

}  // namespace

ProbeModel fit_logreg(const std::vector<HiddenStateRecord>& records, const LogRegOptions& opts) {
  if (!(opts.C > 0.0)) throw InvalidArgument("logreg: C must be > 0");
  auto data = to_matrix(records);
  {
    const double pos = data.y.sum();
    if (pos < 2 || static_cast<double>(data.y.size()) - pos < 2)
      throw InsufficientData("probe: each class needs at least 2 samples");
  }
  auto stdz = fit_standardizer(data.X);
  MatrixXd Z = apply_standardizer(stdz, data.X);
  const auto n = Z.rows();
  const auto d = Z.cols();

  // With w0 = 0 every iterate stays in the row space of Z, so when d > n the
  // problem is solved exactly in row-space coordinates F = Z V (||w|| = ||u||).
  MatrixXd basis;  // d x r, orthonormal columns
  MatrixXd F;
  if (d > n) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Z * Z.transpose());
    const VectorXd& ev = es.eigenvalues();
    double tol = std::max(ev.maxCoeff(), 0.0) * 1e-12;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev[i] > tol) keep.push_back(i);
    const auto rnk = static_cast<Eigen::Index>(keep.size());
    MatrixXd P(n, rnk);
    VectorXd s(rnk);
    for (Eigen::Index c = 0; c < rnk; ++c) {
      P.col(c) = es.eigenvectors().col(keep[c]);
      s[c] = std::sqrt(ev[keep[c]]);
    }
    F = P * s.asDiagonal();
    basis = Z.transpose() * P * s.cwiseInverse().asDiagonal();
  }

  auto res = lbfgs_logistic(d > n ? F : Z, data.y, opts);
  const auto r = res.theta.size() - 1;

  ProbeModel m;
  m.kind = ProbeKind::LogReg;
  m.C = opts.C;
  m.weights = d > n ? VectorXd(basis * res.theta.head(r)) : VectorXd(res.theta.head(r));
  m.bias = res.theta[r];
  m.mean = stdz.mean;
  m.scale = stdz.scale;
  m.converged = res.converged;
  m.iterations = res.iterations;
  m.meta.dataset_hash = dataset_hash(records);
  m.meta.train_size = records.size();
  m.validate();
  return m;
}

// ===========================================================================
// Inference

namespace {

VectorXd standardized(const ProbeModel& model, const std::vector<float>& x) {
  if (x.size() != model.dim())
    throw InvalidArgument("probe: input dimension " + std::to_string(x.size()) +
                          " does not match model dimension " + std::to_string(model.dim()));
  VectorXd z(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    z[jj] = (static_cast<double>(x[j]) - model.mean[jj]) / model.scale[jj];
  }
  return z;
}

}  // namespace

double margin(const ProbeModel& model, const std::vector<float>& x) {
  return model.weights.dot(standardized(model, x)) + model.bias;
}

BoundaryVerdict predict(const ProbeModel& model, const std::vector<float>& x) {
  BoundaryVerdict v;
  v.detector = Detector::HiddenProbe;
  v.score = margin(model, x);
  v.threshold = 0.0;
  v.decision = v.score > 0.0 ? Decision::Beyond : Decision::Within;
  v.stage_percent = 0.0;  // issued at prefill
  return v;
}

double boundary_distance(const ProbeModel& model, const std::vector<float>& x) {
  const double wn = model.weights.norm();
  if (wn == 0.0) throw InvalidArgument("probe: zero weight vector has no boundary");
  return std::abs(margin(model, x)) / wn;
}

TokenUsageRatio token_usage_ratio(const std::vector<HiddenStateRecord>& records,
                                  const ProbeModel& model) {
  TokenUsageRatio out;
  std::vector<std::pair<double, double>> dist_tokens;
  for (const auto& r : records) {
    if (r.label != SolvabilityLabel::Solvable) continue;
    if (!r.token_usage) {
      ++out.skipped_missing;
      continue;
    }
    dist_tokens.emplace_back(boundary_distance(model, r.vector),
                             static_cast<double>(*r.token_usage));
  }
  if (dist_tokens.size() < 10)
    throw InsufficientData("token_usage_ratio: need at least 10 solvable records with "
                           "token usage, have " + std::to_string(dist_tokens.size()));
  std::stable_sort(dist_tokens.begin(), dist_tokens.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t half = dist_tokens.size() / 2;
  double near = 0.0, far = 0.0;
  for (std::size_t i = 0; i < half; ++i) near += dist_tokens[i].second;
  for (std::size_t i = dist_tokens.size() - half; i < dist_tokens.size(); ++i)
    far += dist_tokens[i].second;
  out.used = dist_tokens.size();
  out.near_mean = near / half;
  out.far_mean = far / half;
  if (out.far_mean == 0.0) throw InsufficientData("token_usage_ratio: far half uses no tokens");
  out.ratio = out.near_mean / out.far_mean;
  return out;
}

std::vector<Point2D> project_2d(const ProbeModel& model,
                                const std::vector<HiddenStateRecord>& records) {
  std::vector<Point2D> out;
  if (records.empty()) return out;
  const double wn = model.weights.norm();
  if (wn == 0.0) throw InvalidArgument("probe: zero weight vector has no boundary");
  const VectorXd unit = model.weights / wn;
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto d = static_cast<Eigen::Index>(model.dim());

  MatrixXd R(n, d);
  VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXd z = standardized(model, records[static_cast<std::size_t>(i)].vector);
    u[i] = (model.weights.dot(z) + model.bias) / wn;
    R.row(i) = (z - z.dot(unit) * unit).transpose();
  }
  R.rowwise() -= R.colwise().mean();

  VectorXd v = VectorXd::Zero(n);
  if (n > 1) {
    if (d <= n) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(R.transpose() * R);
      if (es.eigenvalues()[d - 1] > 1e-12) v = R * es.eigenvectors().col(d - 1);
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(R * R.transpose());
      double top = es.eigenvalues()[n - 1];
      if (top > 1e-12) v = std::sqrt(top) * es.eigenvectors().col(n - 1);
    }
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
  }
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out.push_back({u[i], v[i]});
  return out;
}

double accuracy(const ProbeModel& model, const std::vector<HiddenStateRecord>& records) {
  if (records.empty()) throw InsufficientData("accuracy: no records");
  std::size_t correct = 0, counted = 0;
  for (const auto& r : records) {
    if (r.label == SolvabilityLabel::Unknown) continue;
    bool beyond = predict(model, r.vector).decision == Decision::Beyond;
    correct += beyond == (r.label == SolvabilityLabel::Unsolvable) ? 1 : 0;
    ++counted;
  }
  if (counted == 0) throw InsufficientData("accuracy: no labeled records");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

ProbeModel fit_probe(const std::vector<HiddenStateRecord>& records, const ProbeSpec& spec) {
  if (spec.kind == ProbeKind::LDA) return fit_lda(records, spec.shrinkage);
  LogRegOptions o;
  o.C = spec.C;
  return fit_logreg(records, o);
}

ProbeEvaluation evaluate_probe(const std::vector<HiddenStateRecord>& records,
                               const ProbeSpec& spec, const std::vector<std::uint64_t>& seeds,
                               double train_fraction) {
  ProbeEvaluation ev;
  ev.spec = spec;
  for (auto seed : seeds) {
    auto split = stratified_split(records, train_fraction, seed);
    auto model = fit_probe(subset(records, split.train), spec);
    ev.accuracies.push_back(accuracy(model, subset(records, split.test)));
  }
  if (ev.accuracies.empty()) return ev;
  ev.mean = std::accumulate(ev.accuracies.begin(), ev.accuracies.end(), 0.0) /
            static_cast<double>(ev.accuracies.size());
  if (ev.accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : ev.accuracies) ss += (a - ev.mean) * (a - ev.mean);
    ev.sd = std::sqrt(ss / static_cast<double>(ev.accuracies.size() - 1));
  }
  return ev;
}

// ===========================================================================
// Serialization

std::string encode_hex_doubles(const VectorXd& v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(v.size()) * 16);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int byte = 0; byte < 8; ++byte) {  // little-endian byte order
      auto b = static_cast<unsigned>((bits >> (8 * byte)) & 0xFF);
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xF]);
    }
  }
  return out;
}

VectorXd decode_hex_doubles(std::string_view hex) {
  if (hex.size() % 16 != 0) throw ValidationError("probe: hex payload length not a multiple of 16");
  auto nib = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw ValidationError("probe: invalid hex digit");
  };
  VectorXd v(static_cast<Eigen::Index>(hex.size() / 16));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int byte = 0; byte < 8; ++byte) {
      std::size_t p = static_cast<std::size_t>(i) * 16 + static_cast<std::size_t>(byte) * 2;
      std::uint64_t b = (nib(hex[p]) << 4) | nib(hex[p + 1]);
      bits |= b << (8 * byte);
    }
    v[i] = std::bit_cast<double>(bits);
  }
  return v;
}

std::string save_probe(const ProbeModel& model) {
  model.validate();
  json j;
  j["format"] = "capmon-probe";
  j["version"] = 1;
  j["kind"] = std::string(to_string(model.kind));
  j["dim"] = model.dim();
  VectorXd b(1);
  b[0] = model.bias;
  j["bias"] = encode_hex_doubles(b);
  j["weights"] = encode_hex_doubles(model.weights);
  j["mean"] = encode_hex_doubles(model.mean);
  j["scale"] = encode_hex_doubles(model.scale);
  if (model.kind == ProbeKind::LDA)
    j["hyperparams"] = {{"shrinkage", model.shrinkage}};
  else
    j["hyperparams"] = {{"C", model.C}};
  j["train_meta"] = {{"dataset_hash", model.meta.dataset_hash},
                     {"split_seed", model.meta.split_seed},
                     {"train_size", model.meta.train_size}};
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  return j.dump(2) + "\n";
}

ProbeModel load_probe(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("probe file: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "capmon-probe")
      throw ValidationError("probe file: unexpected format tag");
    if (j.at("version").get<int>() != 1) throw ValidationError("probe file: unsupported version");
    ProbeModel m;
    m.kind = probe_kind_from_string(j.at("kind").get<std::string>());
    m.weights = decode_hex_doubles(j.at("weights").get<std::string>());
    m.mean = decode_hex_doubles(j.at("mean").get<std::string>());
    m.scale = decode_hex_doubles(j.at("scale").get<std::string>());
    auto b = decode_hex_doubles(j.at("bias").get<std::string>());
    if (b.size() != 1) throw ValidationError("probe file: bias must hold one value");
    m.bias = b[0];
    const auto& hp = j.at("hyperparams");
    if (m.kind == ProbeKind::LDA)
      m.shrinkage = hp.at("shrinkage").get<double>();
    else
      m.C = hp.at("C").get<double>();
    if (j.contains("train_meta")) {
      const auto& tm = j["train_meta"];
      m.meta.dataset_hash = tm.value("dataset_hash", std::string{});
      m.meta.split_seed = tm.value("split_seed", std::uint64_t{0});
      m.meta.train_size = tm.value("train_size", std::size_t{0});
    }
    m.converged = j.value("converged", true);
    m.iterations = j.value("iterations", std::size_t{0});
    if (j.at("dim").get<std::size_t>() != m.dim())
      throw ValidationError("probe file: dim does not match weights");
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("probe file: ") + e.what());
  }
}

void save_probe_file(const std::string& path, const ProbeModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << save_probe(model);
}

ProbeModel load_probe_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open probe file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_probe(ss.str());
}

}  // namespace capmon
