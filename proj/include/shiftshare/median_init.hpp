#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <vector>

#include "shiftshare/estimators.hpp"

namespace shiftshare {

struct InitialEstimate {
  Eigen::VectorXd beta_m;   // P marginal medians
  Eigen::VectorXd alpha_m;  // J plug-in direct effects
  int n_combos_used = 0;
  int dropped_combos = 0;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) detail::fail(ErrorKind::invalid_argument, "median of an empty set");
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
  const double hi = v[h];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
  return 0.5 * (lo + hi);
}

// Coordinate-wise median over the finite rows.
inline Eigen::VectorXd marginal_median(const CombinationEstimates& ce) {
  const Eigen::Index P = ce.betas.cols();
  Eigen::VectorXd out(P);
  int finite = 0;
  for (int r = 0; r < ce.rows(); ++r) finite += ce.finite_row(r);
  if (finite == 0) detail::fail(ErrorKind::numerical, "no finite just-identified estimates");
  if (2 * (ce.rows() - finite) > ce.rows())
    detail::fail(ErrorKind::numerical, ce.rows() - finite, " of ", ce.rows(),
                 " just-identified combinations are rank deficient (more than half)");
  for (Eigen::Index p = 0; p < P; ++p) {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(finite));
    for (int r = 0; r < ce.rows(); ++r)
      if (ce.finite_row(r)) col.push_back(ce.betas(r, p));
    out(p) = median_of(std::move(col));
  }
  return out;
}

// Least-squares coefficients of (y - X beta_m) on Z, with W partialled out.
inline Eigen::VectorXd alpha_plugin(const Moments& m, const Eigen::VectorXd& beta_m) {
  if (beta_m.size() != m.P()) detail::fail(ErrorKind::invalid_argument, "beta_m has wrong length");
  const auto zw = detail::concat(m.z_cols(IndexSet::range(m.J())), m.w_cols());
  const Eigen::MatrixXd& G = m.pool().gram();
  const auto s = detail::gram_solver(m.pool(), zw, "instrument cross-product");
  const Eigen::VectorXd rhs =
      detail::block(G, zw, {m.y_col()}).col(0) - detail::block(G, zw, m.x_cols()) * beta_m;
  return s.solve(rhs).col(0).head(m.J());
}

inline InitialEstimate initial_estimate(const Moments& m, const CombinationEstimates& ce) {
  InitialEstimate ie;
  ie.beta_m = marginal_median(ce);
  ie.alpha_m = alpha_plugin(m, ie.beta_m);
  ie.dropped_combos = ce.dropped;
  ie.n_combos_used = ce.rows() - ce.dropped;
  return ie;
}

// Smallest g with C(g,P) / C(J,P) > 1/2, in exact integer arithmetic.
inline int qualified_majority_min(int J, int P) {
  using boost::multiprecision::cpp_int;
  if (P < 1 || J < 1) detail::fail(ErrorKind::invalid_argument, "J and P must be positive");
  if (P > J) detail::fail(ErrorKind::invalid_argument, "P = ", P, " exceeds J = ", J);
  auto choose = [](int n, int k) {
    if (k > n) return cpp_int(0);
    cpp_int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  const cpp_int total = choose(J, P);
  for (int g = P; g <= J; ++g)
    if (2 * choose(g, P) > total) return g;
  return J;
}

// Limit of the required valid fraction g/J as J grows: 2^{-1/P}.
inline double asymptotic_fraction_limit(int P) {
  if (P < 1) detail::fail(ErrorKind::invalid_argument, "P must be positive");
  return std::pow(0.5, 1.0 / P);
}

}  // namespace shiftshare
