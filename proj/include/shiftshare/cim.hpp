#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shiftshare/selection.hpp"

namespace shiftshare {

struct Interval {
  int index = 0;  // 0-based instrument
  double lo = 0.0, hi = 0.0;
};

// Just-identified confidence intervals sorted by lower endpoint (ties by index).
struct IntervalSet {
  std::vector<Interval> items;
  double psi = 0.0;
  std::vector<std::string> warnings;
};

inline IntervalSet build_intervals(const CombinationEstimates& ce, double psi) {
  if (ce.betas.cols() != 1)
    detail::fail(ErrorKind::unsupported, "confidence intervals are defined for a single treatment only");
  if (!(psi >= 0.0) || !std::isfinite(psi)) detail::fail(ErrorKind::invalid_argument, "psi must be finite and >= 0");
  IntervalSet iv;
  iv.psi = psi;
  for (int r = 0; r < ce.rows(); ++r) {
    const double b = ce.betas(r, 0), s = ce.ses(r, 0);
    const int j = ce.combos[static_cast<std::size_t>(r)][0];
    if (!std::isfinite(b) || !std::isfinite(s)) {
      iv.warnings.push_back(detail::cat("instrument ", j + 1, " has no finite estimate or standard error; excluded"));
      continue;
    }
    iv.items.push_back({j, b - psi * s, b + psi * s});
  }
  std::sort(iv.items.begin(), iv.items.end(), [](const Interval& a, const Interval& b) {
    return a.lo != b.lo ? a.lo < b.lo : a.index < b.index;
  });
  return iv;
}

namespace detail {

// Among equally large groups prefer the one holding the smallest index, then
// the lexicographically smallest.
inline bool better_group(const IndexSet& a, const IndexSet& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  if (a.empty()) return false;
  if (a[0] != b[0]) return a[0] < b[0];
  return a < b;
}

}  // namespace detail

// Sweep in lower-endpoint order: the group of j is every earlier interval
// still open at cil_j (ciu_k > cil_j), plus j.
inline IndexSet largest_group(const IntervalSet& iv, std::vector<std::string>* warnings = nullptr) {
  IndexSet best;
  int ties = 0;
  const auto& it = iv.items;
  for (std::size_t j = 0; j < it.size(); ++j) {
    std::vector<int> g{it[j].index};
    for (std::size_t k = 0; k < j; ++k)
      if (it[k].hi > it[j].lo) g.push_back(it[k].index);
    IndexSet gs(std::move(g));
    if (gs.size() == best.size() && gs != best) ++ties;
    if (gs.size() > best.size()) ties = 0;
    if (best.empty() || detail::better_group(gs, best)) best = std::move(gs);
  }
  if (ties && warnings)
    warnings->push_back(detail::cat("psi ", iv.psi, ": ", ties + 1, " groups of size ", best.size(), " tie; kept ",
                                    to_string(best)));
  return best;
}

// Critical values at which some pair of intervals starts or stops
// overlapping, descending.
inline std::vector<double> psi_breakpoints(const CombinationEstimates& ce) {
  if (ce.betas.cols() != 1)
    detail::fail(ErrorKind::unsupported, "confidence intervals are defined for a single treatment only");
  std::vector<double> out;
  for (int a = 0; a < ce.rows(); ++a)
    for (int b = 0; b < ce.rows(); ++b) {
      const double ba = ce.betas(a, 0), bb = ce.betas(b, 0);
      const double s = ce.ses(a, 0) + ce.ses(b, 0);
      if (!std::isfinite(ba) || !std::isfinite(bb) || !std::isfinite(s) || !(ba > bb) || !(s > 0.0)) continue;
      out.push_back((ba - bb) / s);
    }
  std::sort(out.begin(), out.end(), std::greater<>());
  std::vector<double> uniq;
  for (double v : out)
    if (uniq.empty() || uniq.back() - v > 1e-12 * std::max(1.0, std::abs(v))) uniq.push_back(v);
  return uniq;
}

// psi values, one per distinct grouping on (0, psi0]: psi0 itself, then the
// midpoints between consecutive breakpoints below it, then half the smallest.
inline std::vector<double> psi_schedule(const std::vector<double>& breakpoints, double psi0) {
  std::vector<double> below;
  for (double b : breakpoints)
    if (b < psi0) below.push_back(b);
  std::vector<double> out{psi0};
  for (std::size_t k = 0; k + 1 < below.size(); ++k) out.push_back(0.5 * (below[k] + below[k + 1]));
  if (!below.empty()) out.push_back(0.5 * below.back());
  return out;
}

struct CimOptions {
  TestKind test = TestKind::hs;
  double c = 0.1;
  std::optional<double> siglevel;
  Vce vce = Vce::homoskedastic;
  double psif = 1.0;
  bool list_untested = true;
};

inline double cim_initial_psi(long long n, double psif = 1.0) {
  if (!(psif > 0.0)) detail::fail(ErrorKind::invalid_argument, "psif must be positive");
  return psif * std::sqrt(2.01 * 2.01 * std::log(static_cast<double>(n)));
}

// Downward testing over the largest overlapping group as psi decreases.
inline SelectionResult cim_select(const Moments& m, const CimOptions& opt = {},
                                  const CombinationEstimates* precomputed = nullptr) {
  if (m.P() != 1)
    detail::fail(ErrorKind::unsupported,
                 "the confidence interval method is defined for one endogenous regressor only (P = ", m.P(),
                 "); use method alasso");
  const int J = m.J();
  if (J < 2) detail::fail(ErrorKind::undefined_test, "the confidence interval method needs at least two instruments");
  SelectionResult r;
  r.method = SelectionMethod::cim;
  r.test = opt.test;
  r.vce = opt.vce;
  r.threshold = testing_threshold(m.n(), opt.c, opt.siglevel);
  r.n = m.n();
  r.J = J;
  r.P = 1;
  r.psi0 = cim_initial_psi(m.n(), opt.psif);

  CombinationEstimates local;
  if (!precomputed || !precomputed->ses.array().isFinite().any()) {
    JustIdentifiedOptions jo;
    jo.vce = opt.vce;
    local = just_identified(m, jo);
    precomputed = &local;
  }
  for (const auto& w : precomputed->warnings) r.warnings.push_back(w);

  std::set<IndexSet> seen;
  bool passed = false;
  IndexSet chosen;
  for (double psi : psi_schedule(psi_breakpoints(*precomputed), r.psi0)) {
    IntervalSet iv = build_intervals(*precomputed, psi);
    if (seen.empty())
      for (const auto& w : iv.warnings) r.warnings.push_back(w);
    const IndexSet group = largest_group(iv, &r.warnings);
    if (group.size() < 2) break;
    if (!seen.insert(group).second) continue;
    PathEntry e;
    e.tuning = psi;
    e.invalid = group.complement(J);
    if (!passed) {
      const TestOutcome t = overid_test(m, opt.test, group, e.invalid, opt.vce);
      e.tested = true;
      e.stat = t.stat;
      e.df = t.df;
      e.p_value = t.p_value;
      r.path.push_back(e);
      if (t.p_value > r.threshold) {
        passed = true;
        chosen = e.invalid;
        r.stopped_at = static_cast<int>(r.path.size()) - 1;
        if (!opt.list_untested) break;
      }
    } else {
      r.path.push_back(e);
    }
  }
  if (!passed) {
    detail::finish_selection(r, m.dataset(), IndexSet{});
    throw SelectionExhausted(detail::cat("no overlapping group passes the ", to_string(opt.test), " test at level ",
                                         r.threshold, "; try a larger psif or a smaller c"),
                             std::move(r));
  }
  detail::finish_selection(r, m.dataset(), chosen);
  return r;
}

}  // namespace shiftshare
