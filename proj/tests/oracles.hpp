#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "shiftshare.hpp"

namespace testutil {

// Cyclic coordinate descent on 1/2 b'Gb - b'c + lambda sum |b_j| / s_j.
inline Eigen::VectorXd cd_oracle(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double lambda,
                                 const Eigen::VectorXd& s) {
  const Eigen::Index p = c.size();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double rho = c(j) - G.row(j).dot(b) + G(j, j) * b(j);
      const double t = lambda / s(j);
      const double nb = rho > t ? (rho - t) / G(j, j) : rho < -t ? (rho + t) / G(j, j) : 0.0;
      change = std::max(change, std::abs(nb - b(j)));
      b(j) = nb;
    }
    if (change < 1e-14) break;
  }
  return b;
}

inline bool overlap(const shiftshare::Interval& a, const shiftshare::Interval& b) {
  return a.lo <= b.lo ? a.hi > b.lo : b.hi > a.lo;
}

// Exhaustive search over subsets for the largest pairwise-overlapping group,
// ties broken toward the smallest first index then lexicographic order.
inline shiftshare::IndexSet brute_force_group(const shiftshare::IntervalSet& iv) {
  const auto& it = iv.items;
  const int m = static_cast<int>(it.size());
  shiftshare::IndexSet best;
  for (int mask = 1; mask < (1 << m); ++mask) {
    bool ok = true;
    std::vector<int> idx;
    for (int a = 0; a < m && ok; ++a) {
      if (!(mask >> a & 1)) continue;
      idx.push_back(it[static_cast<std::size_t>(a)].index);
      for (int b = a + 1; b < m && ok; ++b)
        if (mask >> b & 1) ok = overlap(it[static_cast<std::size_t>(a)], it[static_cast<std::size_t>(b)]);
    }
    if (!ok) continue;
    shiftshare::IndexSet g(idx);
    if (g.size() > best.size() || (g.size() == best.size() && (g[0] < best[0] || (g[0] == best[0] && g < best))))
      best = g;
  }
  return best;
}

// Number of distinct pairwise-overlapping groups of maximal size.
inline int count_largest_groups(const shiftshare::IntervalSet& iv) {
  const auto& it = iv.items;
  const int m = static_cast<int>(it.size());
  int best = 0, count = 0;
  for (int mask = 1; mask < (1 << m); ++mask) {
    bool ok = true;
    for (int a = 0; a < m && ok; ++a)
      for (int b = a + 1; b < m && ok; ++b)
        if ((mask >> a & 1) && (mask >> b & 1)) ok = overlap(it[static_cast<std::size_t>(a)], it[static_cast<std::size_t>(b)]);
    if (!ok) continue;
    const int size = __builtin_popcount(static_cast<unsigned>(mask));
    if (size > best) best = size, count = 0;
    if (size == best) ++count;
  }
  return count;
}

// Just-identified-style estimates from explicit numbers, one instrument per row.
inline shiftshare::CombinationEstimates estimates(const std::vector<double>& b, const std::vector<double>& se) {
  shiftshare::CombinationEstimates ce;
  const auto J = static_cast<Eigen::Index>(b.size());
  ce.betas.resize(J, 1);
  ce.ses.resize(J, 1);
  for (Eigen::Index j = 0; j < J; ++j) {
    ce.betas(j, 0) = b[static_cast<std::size_t>(j)];
    ce.ses(j, 0) = se[static_cast<std::size_t>(j)];
    ce.combos.push_back(shiftshare::IndexSet{static_cast<int>(j)});
  }
  return ce;
}

inline shiftshare::CombinationEstimates random_estimates(std::uint64_t seed, int J) {
  shiftshare::Rng rng(seed);
  std::vector<double> b, s;
  for (int j = 0; j < J; ++j) {
    b.push_back(rng.normal());
    s.push_back(rng.uniform(0.05, 0.5));
  }
  return estimates(b, s);
}

}  // namespace testutil
