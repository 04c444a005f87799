// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/causal/identify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "adacred/causal/regularizer.hpp"
#include "adacred/errors.hpp"

namespace adacred {

TransitionTable flatten_rollouts(const LatentRollouts& rollouts, std::size_t action_count) {
  if (action_count < 2) throw ParameterError("identification needs at least 2 actions");
  TransitionTable t;
  t.d = rollouts.d;
  t.action_count = action_count;
  for (std::size_t e = 0; e < rollouts.states.size(); ++e) {
    const auto& states = rollouts.states[e];
    const auto& actions = rollouts.actions[e];
    const auto& rewards = rollouts.rewards[e];
    if (states.size() != actions.size() + 1 || rewards.size() != actions.size()) {
      throw DimensionError("rollout episode " + std::to_string(e) + " has inconsistent lengths");
    }
    for (std::size_t s = 0; s < actions.size(); ++s) {
      if (states[s].size() != t.d || states[s + 1].size() != t.d) throw DimensionError("latent state has wrong size");
      if (actions[s] >= action_count) throw RangeError("action " + std::to_string(actions[s]) + " out of range");
      t.g.insert(t.g.end(), states[s].begin(), states[s].end());
      t.g_next.insert(t.g_next.end(), states[s + 1].begin(), states[s + 1].end());
      t.a.push_back(actions[s]);
      t.r_prev.push_back(s == 0 ? 0.0 : rewards[s - 1]);
      t.r.push_back(rewards[s]);
    }
  }
  return t;
}

TransitionTable permute_targets(const TransitionTable& table, std::uint64_t seed) {
  const std::size_t n = table.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  TransitionTable out = table;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(table.g_next.begin() + perm[i] * table.d, table.d, out.g_next.begin() + i * table.d);
    out.r[i] = table.r[perm[i]];
  }
  return out;
}

namespace {

// Design: [1, g (d), dummies (K-1), optionally r_prev].
Eigen::MatrixXd design(const TransitionTable& t, bool with_reward) {
  const std::size_t n = t.size(), d = t.d, k = t.action_count;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 1 + d + (k - 1) + (with_reward ? 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) x(i, 1 + j) = t.g[i * d + j];
    if (t.a[i] > 0) x(i, 1 + d + t.a[i] - 1) = 1.0;
    if (with_reward) x(i, 1 + d + k - 1) = t.r_prev[i];
  }
  return x;
}

struct Fit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  double rss = 0.0;
  double tss = 0.0;
};

Fit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw StatisticalPowerError("design matrix is rank deficient");
  Fit f;
  f.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * f.beta;
  f.rss = resid.squaredNorm();
  f.tss = (y.array() - y.mean()).matrix().squaredNorm();
  const double sigma2 = f.rss / double(x.rows() - x.cols());
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  f.se = (sigma2 * xtx_inv.diagonal().array()).sqrt();
  return f;
}

double rss_without(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::Index first, Eigen::Index count) {
  Eigen::MatrixXd r(x.rows(), x.cols() - count);
  r << x.leftCols(first), x.rightCols(x.cols() - first - count);
  Eigen::VectorXd beta = r.colPivHouseholderQr().solve(y);
  return (y - r * beta).squaredNorm();
}

class Tester {
 public:
  Tester(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const IdentifyOptions& options, double level)
      : x_(x), y_(y), fit_(least_squares(x, y)), options_(options), level_(level) {
    exact_ = fit_.rss <= 1e-20 * std::max(fit_.tss, 1e-300) || fit_.rss == 0.0;
  }

  // Fisher z test on a single coefficient.
  EdgeTest single(Eigen::Index col) const {
    EdgeTest e;
    const double beta = fit_.beta(col);
    if (exact_) {
      e.edge = std::abs(beta) > options_.exact_tolerance;
      e.statistic = beta;
      e.p_value = e.edge ? 0.0 : 1.0;
      return e;
    }
    const double n = double(x_.rows()), p = double(x_.cols());
    const double t = beta / fit_.se(col);
    const double r = t / std::sqrt(t * t + (n - p));
    const double conditioning = p - 2.0;
    const double z = std::atanh(std::clamp(r, -1.0 + 1e-16, 1.0 - 1e-16)) * std::sqrt(n - conditioning - 3.0);
    e.statistic = z;
    e.p_value = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::abs(z)));
    e.edge = e.p_value < level_;
    return e;
  }

  // F test on a block of coefficients.
  EdgeTest group(Eigen::Index first, Eigen::Index count) const {
    if (count == 1) return single(first);
    EdgeTest e;
    if (exact_) {
      double largest = 0.0;
      for (Eigen::Index c = first; c < first + count; ++c) largest = std::max(largest, std::abs(fit_.beta(c)));
      e.edge = largest > options_.exact_tolerance;
      e.statistic = largest;
      e.p_value = e.edge ? 0.0 : 1.0;
      return e;
    }
    const double df2 = double(x_.rows() - x_.cols());
    const double restricted = rss_without(x_, y_, first, count);
    const double f = ((restricted - fit_.rss) / double(count)) / (fit_.rss / df2);
    e.statistic = f;
    e.p_value = boost::math::cdf(boost::math::complement(boost::math::fisher_f(double(count), df2), std::max(f, 0.0)));
    e.edge = e.p_value < level_;
    return e;
  }

 private:
  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  Fit fit_;
  const IdentifyOptions& options_;
  double level_;
  bool exact_ = false;
};

}  // namespace

IdentifyResult identify_structure(const TransitionTable& table, const IdentifyOptions& options) {
  const std::size_t n = table.size(), d = table.d, k = table.action_count;
  if (d == 0) throw DimensionError("transition table has no latent dimensions");
  if (k < 2) throw ParameterError("identification needs at least 2 actions");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  const std::size_t p = 1 + d + (k - 1) + 1;
  if (n < p + 10) {
    throw StatisticalPowerError("identification needs at least " + std::to_string(p + 10) + " transitions, got " +
                                std::to_string(n));
  }
  const std::size_t tests = d * (d + 2) + d + 1;
  IdentifyResult out;
  out.samples = n;
  out.threshold = options.bonferroni ? options.alpha / double(tests) : options.alpha;
  out.masks = StructuralMasks::empty(d);

  const Eigen::MatrixXd xg = design(table, true);
  for (std::size_t i = 0; i < d; ++i) {
    Eigen::VectorXd y(n);
    for (std::size_t s = 0; s < n; ++s) y(s) = table.g_next[s * d + i];
    Tester tester(xg, y, options, out.threshold);
    for (std::size_t j = 0; j < d; ++j) {
      EdgeTest e = tester.single(Eigen::Index(1 + j));
      e.mask = "c_gg";
      e.target = i;
      e.source = j;
      out.masks.c_gg[i * d + j] = e.edge;
      out.tests.push_back(e);
    }
    EdgeTest ea = tester.group(Eigen::Index(1 + d), Eigen::Index(k - 1));
    ea.mask = "c_ag";
    ea.target = i;
    out.masks.c_ag[i] = ea.edge;
    out.tests.push_back(ea);
    EdgeTest er = tester.single(Eigen::Index(1 + d + k - 1));
    er.mask = "c_rg";
    er.target = i;
    out.masks.c_rg[i] = er.edge;
    out.tests.push_back(er);
  }

  const Eigen::MatrixXd xr = design(table, false);
  Eigen::VectorXd yr = Eigen::Map<const Eigen::VectorXd>(table.r.data(), Eigen::Index(n));
  Tester tester(xr, yr, options, out.threshold);
  for (std::size_t j = 0; j < d; ++j) {
    EdgeTest e = tester.single(Eigen::Index(1 + j));
    e.mask = "c_gr";
    e.source = j;
    out.masks.c_gr[j] = e.edge;
    out.tests.push_back(e);
  }
  EdgeTest ea = tester.group(Eigen::Index(1 + d), Eigen::Index(k - 1));
  ea.mask = "c_ar";
  out.masks.c_ar = ea.edge;
  out.tests.push_back(ea);
  return out;
}

IdentifyResult identify_structure(const LatentRollouts& rollouts, std::size_t action_count,
                                  const IdentifyOptions& options) {
  return identify_structure(flatten_rollouts(rollouts, action_count), options);
}

EdgeScore edge_f1(const StructuralMasks& estimate, const StructuralMasks& truth) {
  estimate.validate();
  truth.validate();
  if (estimate.d != truth.d) throw DimensionError("masks have different dimensions");
  EdgeScore s;
  auto tally = [&](std::uint8_t est, std::uint8_t tru) {
    if (est && tru) ++s.true_positive;
    if (est && !tru) ++s.false_positive;
    if (!est && tru) ++s.false_negative;
  };
  auto tally_all = [&](const std::vector<std::uint8_t>& e, const std::vector<std::uint8_t>& t) {
    for (std::size_t i = 0; i < e.size(); ++i) tally(e[i], t[i]);
  };
  tally_all(estimate.c_gg, truth.c_gg);
  tally_all(estimate.c_ag, truth.c_ag);
  tally_all(estimate.c_rg, truth.c_rg);
  tally_all(estimate.c_gr, truth.c_gr);
  tally(estimate.c_ar, truth.c_ar);
  const double tp = double(s.true_positive), fp = double(s.false_positive), fn = double(s.false_negative);
  if (tp + fp + fn == 0.0) return s;
  s.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  s.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
  return s;
}

namespace {

// Coordinate descent for (1/2n)|y - X b|^2 + lambda |b|_1 on standardized
// columns (X centered, unit variance; y centered).
Eigen::VectorXd lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd resid = y;
  const Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose() / double(n);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = x.col(j).dot(resid) / double(n) + col_sq(j) * beta(j);
      const double soft = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / col_sq(j);
      const double delta = soft - beta(j);
      if (delta != 0.0) {
        resid -= delta * x.col(j);
        beta(j) = soft;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change < 1e-10) break;
  }
  return beta;
}

Eigen::MatrixXd standardize(Eigen::MatrixXd x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    x.col(j).array() -= x.col(j).mean();
    const double sd = std::sqrt(x.col(j).squaredNorm() / double(x.rows()));
    if (sd > 0.0) x.col(j) /= sd;
  }
  return x;
}

}  // namespace

RelaxedResult relaxed_structure(const TransitionTable& table, double lambda, double support_tolerance) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda_reg must be >= 0");
  const std::size_t n = table.size(), d = table.d, k = table.action_count;
  if (n < 2) throw StatisticalPowerError("relaxed identification needs at least 2 transitions");
  RelaxedResult out;
  out.masks = StructuralMasks::empty(d);
  auto any_support = [&](const Eigen::VectorXd& b, Eigen::Index first, Eigen::Index count) {
    for (Eigen::Index c = first; c < first + count; ++c) {
      if (std::abs(b(c)) > support_tolerance) return true;
    }
    return false;
  };
  const Eigen::MatrixXd xg = standardize(design(table, true).rightCols(Eigen::Index(d + k)));
  for (std::size_t i = 0; i < d; ++i) {
    Eigen::VectorXd y(n);
    for (std::size_t s = 0; s < n; ++s) y(s) = table.g_next[s * d + i];
    y.array() -= y.mean();
    const Eigen::VectorXd b = lasso(xg, y, lambda);
    for (std::size_t j = 0; j < d; ++j) out.masks.c_gg[i * d + j] = std::abs(b(Eigen::Index(j))) > support_tolerance;
    out.masks.c_ag[i] = any_support(b, Eigen::Index(d), Eigen::Index(k - 1));
    out.masks.c_rg[i] = std::abs(b(Eigen::Index(d + k - 1))) > support_tolerance;
    out.coefficients.insert(out.coefficients.end(), b.data(), b.data() + b.size());
  }
  const Eigen::MatrixXd xr = standardize(design(table, false).rightCols(Eigen::Index(d + k - 1)));
  Eigen::VectorXd yr = Eigen::Map<const Eigen::VectorXd>(table.r.data(), Eigen::Index(n));
  yr.array() -= yr.mean();
  const Eigen::VectorXd b = lasso(xr, yr, lambda);
  for (std::size_t j = 0; j < d; ++j) out.masks.c_gr[j] = std::abs(b(Eigen::Index(j))) > support_tolerance;
  out.masks.c_ar = any_support(b, Eigen::Index(d), Eigen::Index(k - 1));
  out.coefficients.insert(out.coefficients.end(), b.data(), b.data() + b.size());
  out.penalty = reg_penalty(out.coefficients, {}, lambda);
  return out;
}

}  // namespace adacred
