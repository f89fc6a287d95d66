#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "shiftshare/lars.hpp"
#include "shiftshare/selection.hpp"

namespace shiftshare {

// Explicit projections in weighted space (rows scaled by sqrt weights):
// xhat = P_[Z,W] X and Ztilde = M_[xhat,W] Z, ytilde = M_[xhat,W] y.
struct ProjectedInstruments {
  Eigen::MatrixXd Ztilde;
  Eigen::MatrixXd xhat;
  Eigen::VectorXd ytilde;
};

namespace detail {

// Cross-products of the projected system straight from the Gram matrix.
struct ProjectedGram {
  Eigen::MatrixXd ZtZt;  // Ztilde' Ztilde
  Eigen::VectorXd Zty;   // Ztilde' y
};

inline ProjectedGram projected_gram(const Moments& m) {
  const Eigen::MatrixXd& G = m.pool().gram();
  const auto zc = m.z_cols(IndexSet::range(m.J()));
  const auto wc = m.w_cols();
  const auto xc = m.x_cols();
  const auto U = concat(zc, wc);
  const std::vector<int> yv{m.y_col()};
  const auto su = gram_solver(m.pool(), U, "instrument cross-product");
  const Eigen::MatrixXd GUX = block(G, U, xc);
  const Eigen::MatrixXd piX = su.solve(GUX);
  const Eigen::MatrixXd xhxh = GUX.transpose() * piX;
  const Eigen::VectorXd xhy = piX.transpose() * block(G, U, yv);

  const Eigen::Index P = m.P(), K = m.K(), J = m.J();
  Eigen::MatrixXd GBB(P + K, P + K);
  GBB.topLeftCorner(P, P) = 0.5 * (xhxh + xhxh.transpose());
  if (K) {
    GBB.topRightCorner(P, K) = block(G, xc, wc);
    GBB.bottomLeftCorner(K, P) = block(G, wc, xc);
    GBB.bottomRightCorner(K, K) = block(G, wc, wc);
  }
  Eigen::MatrixXd GZB(J, P + K);
  GZB.leftCols(P) = block(G, zc, xc);
  if (K) GZB.rightCols(K) = block(G, zc, wc);
  Eigen::VectorXd GBy(P + K);
  GBy.head(P) = xhy;
  if (K) GBy.tail(K) = block(G, wc, yv);

  const SpdSolver sb(GBB);
  if (!sb.ok()) fail(ErrorKind::collinear, "projected treatment is collinear with the controls");
  ProjectedGram pg;
  pg.ZtZt = block(G, zc, zc) - GZB * sb.solve(GZB.transpose());
  pg.ZtZt = 0.5 * (pg.ZtZt + pg.ZtZt.transpose());
  pg.Zty = block(G, zc, yv).col(0) - GZB * sb.solve(GBy).col(0);
  return pg;
}

}  // namespace detail

inline ProjectedInstruments project_instruments(const Moments& m) {
  const Eigen::MatrixXd& A = m.pool().data();
  const auto zc = m.z_cols(IndexSet::range(m.J()));
  const auto wc = m.w_cols();
  const Eigen::MatrixXd U = detail::columns(A, detail::concat(zc, wc));
  const Eigen::MatrixXd X = detail::columns(A, m.x_cols());
  const Eigen::MatrixXd Z = detail::columns(A, zc);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qu(U);
  ProjectedInstruments out;
  out.xhat = U * qu.solve(X);
  Eigen::MatrixXd B(A.rows(), m.P() + m.K());
  B.leftCols(m.P()) = out.xhat;
  if (m.K()) B.rightCols(m.K()) = detail::columns(A, wc);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qb(B);
  out.Ztilde = Z - B * qb.solve(Z);
  const Eigen::VectorXd y = A.col(m.y_col());
  out.ytilde = y - B * qb.solve(y);
  return out;
}

// Adaptive weights |alpha_m|^v, floored so every column stays on the path.
inline Eigen::VectorXd adaptive_scales(const Eigen::VectorXd& alpha_m, double v = 1.0,
                                       std::vector<std::string>* warnings = nullptr) {
  if (!alpha_m.allFinite()) detail::fail(ErrorKind::non_finite, "initial direct-effect estimates are not finite");
  if (!(v > 0.0)) detail::fail(ErrorKind::invalid_argument, "adaptive weight exponent must be positive");
  Eigen::VectorXd s(alpha_m.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    s(j) = std::pow(std::abs(alpha_m(j)), v);
    if (s(j) < 1e-12) {
      if (warnings) warnings->push_back(detail::cat("initial estimate for instrument ", j + 1, " is ~0; weight floored"));
      s(j) = 1e-12;
    }
  }
  return s;
}

// Lasso path of min 1/2 ||ytilde - Ztilde a||^2 + lambda sum |a_j| / scale_j,
// solved as an ordinary lasso on columns scaled by scale_j and rescaled back.
inline LassoPath alasso_path(const Eigen::MatrixXd& ZtZt, const Eigen::VectorXd& Zty, const Eigen::VectorXd& scale) {
  if (scale.size() != Zty.size()) detail::fail(ErrorKind::invalid_argument, "adaptive weights have wrong length");
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (!(scale(j) > 0.0) || !std::isfinite(scale(j)))
      detail::fail(ErrorKind::invalid_argument, "adaptive weights must be finite and positive");
  const Eigen::MatrixXd gs = scale.asDiagonal() * ZtZt * scale.asDiagonal();
  const Eigen::VectorXd cs = scale.cwiseProduct(Zty);
  LassoPath path = lasso_path(gs, cs);
  for (auto& s : path.steps) s.coef = scale.cwiseProduct(s.coef);
  return path;
}

inline LassoPath alasso_path(const Moments& m, const Eigen::VectorXd& alpha_m, double v = 1.0,
                             std::vector<std::string>* warnings = nullptr) {
  const auto pg = detail::projected_gram(m);
  return alasso_path(pg.ZtZt, pg.Zty, adaptive_scales(alpha_m, v, warnings));
}

// beta = (xhat' M_W xhat)^{-1} xhat' M_W (y - Z alpha_ad).
inline Eigen::VectorXd alasso_beta(const Moments& m, const Eigen::VectorXd& alpha_ad) {
  if (alpha_ad.size() != m.J()) detail::fail(ErrorKind::invalid_argument, "alpha_ad has wrong length");
  const Eigen::MatrixXd& G = m.pool().gram();
  const auto zc = m.z_cols(IndexSet::range(m.J()));
  const auto wc = m.w_cols();
  const auto xc = m.x_cols();
  const auto U = detail::concat(zc, wc);
  const std::vector<int> yv{m.y_col()};
  const auto su = detail::gram_solver(m.pool(), U, "instrument cross-product");
  const Eigen::MatrixXd piX = su.solve(detail::block(G, U, xc));
  // xhat' v for any column set v in span-compatible form: piX' G_U,v
  const Eigen::MatrixXd xhxh = detail::block(G, U, xc).transpose() * piX;
  Eigen::VectorXd xhr = piX.transpose() * (detail::block(G, U, yv).col(0) - detail::block(G, U, zc) * alpha_ad);
  Eigen::MatrixXd H = xhxh;
  if (m.K()) {
    const auto sw = detail::gram_solver(m.pool(), wc, "control cross-product");
    const Eigen::MatrixXd xhW = detail::block(G, xc, wc);  // xhat'W = X'W since W is in the span
    const Eigen::VectorXd Wr = detail::block(G, wc, yv).col(0) - detail::block(G, wc, zc) * alpha_ad;
    H -= xhW * sw.solve(xhW.transpose());
    xhr -= xhW * sw.solve(Wr).col(0);
  }
  const detail::SpdSolver hs(0.5 * (H + H.transpose()));
  if (!hs.ok()) detail::fail(ErrorKind::collinear, "projected treatment has no variation beyond the controls");
  return hs.solve(xhr).col(0);
}

struct AlassoOptions {
  TestKind test = TestKind::hs;
  double c = 0.1;
  std::optional<double> siglevel;
  Vce vce = Vce::homoskedastic;
  double v = 1.0;
  long long cap = 200000;
  bool list_untested = true;
};

// Downward testing along the adaptive Lasso path: distinct active sets in path
// order, the first whose overidentification p-value exceeds the threshold is
// selected as the invalid set.
inline SelectionResult alasso_select(const Moments& m, const AlassoOptions& opt = {},
                                     const CombinationEstimates* precomputed = nullptr) {
  const int J = m.J(), P = m.P();
  if (J <= P)
    detail::fail(ErrorKind::undefined_test, "adaptive Lasso selection needs J > P (J = ", J, ", P = ", P, ")");
  SelectionResult r;
  r.method = SelectionMethod::alasso;
  r.test = opt.test;
  r.vce = opt.vce;
  r.threshold = testing_threshold(m.n(), opt.c, opt.siglevel);
  r.n = m.n();
  r.J = J;
  r.P = P;
  if (P > 1) {
    const int g = qualified_majority_min(J, P);
    r.qualified_majority = g;
    r.warnings.push_back(detail::cat("with P = ", P, " the median initial estimator needs at least ", g, " of ", J,
                                     " instruments valid"));
  }

  CombinationEstimates local;
  if (!precomputed) {
    JustIdentifiedOptions jo;
    jo.cap = opt.cap;
    jo.with_se = false;
    local = just_identified(m, jo);
    precomputed = &local;
  }
  for (const auto& w : precomputed->warnings) r.warnings.push_back(w);
  r.initial = initial_estimate(m, *precomputed);

  const LassoPath path = alasso_path(m, r.initial->alpha_m, opt.v, &r.warnings);
  for (const auto& s : path.log) r.warnings.push_back(s);

  std::set<IndexSet> seen;
  int largest = -1;
  int chosen_step = -1;
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const auto& st = path.steps[k];
    if (seen.count(st.active)) continue;
    seen.insert(st.active);
    if (st.active.size() < largest) {
      r.warnings.push_back(detail::cat("path set ", to_string(st.active), " at lambda ", st.lambda,
                                       " is smaller than one already tested; skipped"));
      continue;
    }
    largest = st.active.size();
    if (J - st.active.size() <= P) break;
    PathEntry e;
    e.tuning = st.lambda;
    e.invalid = st.active;
    if (chosen_step < 0) {
      const TestOutcome t = overid_test(m, opt.test, st.active.complement(J), st.active, opt.vce);
      e.tested = true;
      e.stat = t.stat;
      e.df = t.df;
      e.p_value = t.p_value;
      r.path.push_back(e);
      if (t.p_value > r.threshold) {
        chosen_step = static_cast<int>(k);
        r.stopped_at = static_cast<int>(r.path.size()) - 1;
        if (!opt.list_untested) break;
      }
    } else {
      r.path.push_back(e);
    }
  }
  if (chosen_step < 0) {
    detail::finish_selection(r, m.dataset(), IndexSet{});
    throw SelectionExhausted(
        detail::cat("no model on the adaptive Lasso path passes the ", to_string(opt.test), " test at level ",
                    r.threshold, " before fewer than P + 1 = ", P + 1,
                    " instruments remain valid; the majority assumption may be violated (try method cim or a "
                    "smaller c)"),
        std::move(r));
  }
  const auto k = static_cast<std::size_t>(chosen_step);
  const auto& st = path.steps[k];
  detail::finish_selection(r, m.dataset(), st.active);
  // The chosen set is active between this knot and the next; at the knot itself
  // the newest entrant is still zero, so report the segment midpoint.
  r.alpha_ad = k + 1 < path.steps.size() ? Eigen::VectorXd(0.5 * (st.coef + path.steps[k + 1].coef)) : st.coef;
  r.beta_ad = alasso_beta(m, *r.alpha_ad);
  return r;
}

}  // namespace shiftshare
