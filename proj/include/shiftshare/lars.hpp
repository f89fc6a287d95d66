#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "shiftshare/error.hpp"
#include "shiftshare/index_set.hpp"

namespace shiftshare {

struct LassoStep {
  double lambda = 0.0;
  IndexSet active;
  Eigen::VectorXd coef;
};

// Knots of the piecewise-linear lasso path, lambda weakly decreasing. The
// first knot (lambda = max |X'y|) has no active variables; each later knot
// holds the active set after one entry or drop at that lambda.
struct LassoPath {
  std::vector<LassoStep> steps;
  std::vector<std::string> log;

  // Coefficients at an arbitrary lambda by linear interpolation between knots.
  Eigen::VectorXd at(double lambda) const {
    if (steps.empty()) detail::fail(ErrorKind::invalid_argument, "empty lasso path");
    if (lambda >= steps.front().lambda) return steps.front().coef;
    for (std::size_t k = 1; k < steps.size(); ++k) {
      const auto& a = steps[k - 1];
      const auto& b = steps[k];
      if (lambda >= b.lambda) {
        const double span = a.lambda - b.lambda;
        const double t = span > 0 ? (a.lambda - lambda) / span : 1.0;
        return a.coef + t * (b.coef - a.coef);
      }
    }
    return steps.back().coef;
  }
};

struct LarsOptions {
  double tol = 1e-12;
  int max_steps = 0;  // 0: 8 * p + 16
};

// LARS with the lasso modification (Efron, Hastie, Johnstone & Tibshirani),
// in covariance form: needs only gram = X'X and xty = X'y. Exact knots at
// every entry and drop; ties enter by lowest column index. Columns that
// would make the active Gram singular are skipped until the next drop.
inline LassoPath lasso_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, const LarsOptions& opt = {}) {
  const Eigen::Index p = gram.rows();
  if (gram.cols() != p || xty.size() != p) detail::fail(ErrorKind::invalid_argument, "lasso_path: dimension mismatch");
  const int max_steps = opt.max_steps > 0 ? opt.max_steps : static_cast<int>(8 * p + 16);

  LassoPath path;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd corr = xty;
  double lambda = corr.cwiseAbs().maxCoeff();
  const double lambda0 = lambda;
  path.steps.push_back({lambda, IndexSet{}, coef});
  if (!(lambda > 0.0)) return path;

  const double scale_tol = opt.tol * lambda0;
  std::vector<int> active;
  std::vector<char> in_active(static_cast<std::size_t>(p), 0), skipped(static_cast<std::size_t>(p), 0);

  auto collinear_with_active = [&](int j) {
    if (active.empty()) return !(gram(j, j) > 0.0);
    Eigen::MatrixXd ga(static_cast<Eigen::Index>(active.size()), static_cast<Eigen::Index>(active.size()));
    Eigen::VectorXd gj(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      gj(static_cast<Eigen::Index>(a)) = gram(active[a], j);
      for (std::size_t b = 0; b < active.size(); ++b)
        ga(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram(active[a], active[b]);
    }
    const double resid = gram(j, j) - gj.dot(ga.ldlt().solve(gj));
    return !(resid > 1e-10 * gram(j, j));
  };

  auto enter = [&](int j) {
    if (collinear_with_active(j)) {
      skipped[static_cast<std::size_t>(j)] = 1;
      path.log.push_back(detail::cat("column ", j + 1, " is collinear with the active set; skipped"));
      return false;
    }
    active.push_back(j);
    in_active[static_cast<std::size_t>(j)] = 1;
    return true;
  };

  // First entry: largest |correlation|, lowest index among ties.
  {
    int best = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (best < 0 || std::abs(corr(j)) > std::abs(corr(best)) + scale_tol) best = static_cast<int>(j);
    }
    int ties = 0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (std::abs(std::abs(corr(j)) - lambda) <= scale_tol) ++ties;
    if (ties > 1) path.log.push_back(detail::cat(ties, " columns tie for first entry; took column ", best + 1));
    if (enter(best)) path.steps.push_back({lambda, IndexSet{best}, coef});
  }

  for (int step = 0; step < max_steps && lambda > scale_tol; ++step) {
    if (active.empty()) {
      // Everything dropped or skipped; re-enter the strongest remaining column.
      int best = -1;
      for (Eigen::Index j = 0; j < p; ++j)
        if (!skipped[static_cast<std::size_t>(j)] && (best < 0 || std::abs(corr(j)) > std::abs(corr(best)) + scale_tol))
          best = static_cast<int>(j);
      if (best < 0) break;
      if (enter(best)) path.steps.push_back({lambda, IndexSet{best}, coef});
      continue;
    }
    const auto na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd ga(na, na);
    Eigen::VectorXd sgn(na);
    for (Eigen::Index a = 0; a < na; ++a) {
      const int ja = active[static_cast<std::size_t>(a)];
      sgn(a) = corr(ja) >= 0 ? 1.0 : -1.0;
      for (Eigen::Index b = 0; b < na; ++b) ga(a, b) = gram(ja, active[static_cast<std::size_t>(b)]);
    }
    const Eigen::VectorXd dir = ga.ldlt().solve(sgn);  // d coef_A / d(-lambda)
    Eigen::VectorXd slope = Eigen::VectorXd::Zero(p);  // d corr / d(-lambda)
    for (Eigen::Index a = 0; a < na; ++a) slope += gram.col(active[static_cast<std::size_t>(a)]) * dir(a);

    double gamma = lambda;  // step to lambda = 0
    int event = -1;
    bool is_drop = false;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (in_active[static_cast<std::size_t>(j)] || skipped[static_cast<std::size_t>(j)]) continue;
      for (double s : {1.0, -1.0}) {
        const double den = 1.0 - s * slope(j);
        if (den <= 1e-14) continue;
        const double g = (lambda - s * corr(j)) / den;
        if (g > scale_tol && g < gamma - scale_tol) {
          gamma = g;
          event = static_cast<int>(j);
          is_drop = false;
        } else if (g > scale_tol && std::abs(g - gamma) <= scale_tol && !is_drop && event >= 0 &&
                   static_cast<int>(j) < event) {
          event = static_cast<int>(j);
        }
      }
    }
    for (Eigen::Index a = 0; a < na; ++a) {
      const int ja = active[static_cast<std::size_t>(a)];
      if (dir(a) == 0.0) continue;
      const double g = -coef(ja) / dir(a);
      if (g > scale_tol && g <= gamma + scale_tol) {
        gamma = std::min(gamma, g);
        event = ja;
        is_drop = true;
      }
    }

    for (Eigen::Index a = 0; a < na; ++a) coef(active[static_cast<std::size_t>(a)]) += gamma * dir(a);
    lambda -= gamma;
    if (lambda <= scale_tol) lambda = 0.0;
    corr = xty - gram * coef;

    if (event >= 0 && lambda > 0.0) {
      if (is_drop) {
        coef(event) = 0.0;
        active.erase(std::find(active.begin(), active.end(), event));
        in_active[static_cast<std::size_t>(event)] = 0;
        std::fill(skipped.begin(), skipped.end(), 0);
        path.log.push_back(detail::cat("column ", event + 1, " leaves the active set at lambda ", lambda));
      } else {
        enter(event);
      }
    }
    std::vector<int> act(active);
    path.steps.push_back({lambda, IndexSet(std::move(act)), coef});
    if (lambda == 0.0) break;
  }
  return path;
}

}  // namespace shiftshare
