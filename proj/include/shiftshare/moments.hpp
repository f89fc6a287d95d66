#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "shiftshare/dataset.hpp"
#include "shiftshare/error.hpp"
#include "shiftshare/index_set.hpp"

namespace shiftshare {

enum class Vce { homoskedastic, robust, cluster };

inline std::string to_string(Vce v) {
  switch (v) {
    case Vce::homoskedastic: return "homoskedastic";
    case Vce::robust: return "robust";
    case Vce::cluster: return "cluster";
  }
  return "?";
}

namespace detail {

// Symmetric positive-definite solver with diagonal equilibration. Singular or
// badly conditioned systems are reported through ok().
class SpdSolver {
 public:
  explicit SpdSolver(const Eigen::MatrixXd& m, double rcond_tol = 1e-13) {
    const Eigen::Index k = m.rows();
    scale_.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double d = m(i, i);
      scale_(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
      if (!(d > 0.0)) ok_ = false;
    }
    if (!ok_) return;
    const Eigen::MatrixXd eq = scale_.asDiagonal() * m * scale_.asDiagonal();
    ldlt_.compute(eq);
    rcond_ = ldlt_.rcond();
    ok_ = ldlt_.info() == Eigen::Success && ldlt_.isPositive() && rcond_ > rcond_tol;
  }

  bool ok() const { return ok_; }
  double rcond() const { return rcond_; }

  template <typename Rhs>
  Eigen::MatrixXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    return scale_.asDiagonal() * ldlt_.solve(scale_.asDiagonal() * b);
  }

  Eigen::MatrixXd inverse() const {
    const Eigen::Index k = scale_.size();
    return solve(Eigen::MatrixXd::Identity(k, k));
  }

 private:
  Eigen::VectorXd scale_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double rcond_ = 0.0;
  bool ok_ = true;
};

inline Eigen::MatrixXd block(const Eigen::MatrixXd& g, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rows[i], cols[j]);
  return out;
}

inline Eigen::MatrixXd columns(const Eigen::MatrixXd& a, const std::vector<int>& cols) {
  Eigen::MatrixXd out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
  return out;
}

inline std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

// Column pool in weighted space (rows scaled by sqrt of mean-one analytic
// weights) together with its cross-product matrix. Every IV quantity used by
// the estimators and tests is a function of slices of gram().
class ColumnPool {
 public:
  ColumnPool(Eigen::MatrixXd raw, std::vector<std::string> names, const Eigen::VectorXd& weights,
             std::vector<std::int64_t> cluster_ids, int n_clusters)
      : names_(std::move(names)), cluster_ids_(std::move(cluster_ids)), n_clusters_(n_clusters) {
    a_ = weights.cwiseSqrt().asDiagonal() * raw;
    gram_ = a_.transpose() * a_;
  }

  int n() const { return static_cast<int>(a_.rows()); }
  const Eigen::MatrixXd& data() const { return a_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::int64_t>& cluster_ids() const { return cluster_ids_; }
  int n_clusters() const { return n_clusters_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd gram_;
  std::vector<std::string> names_;
  std::vector<std::int64_t> cluster_ids_;
  int n_clusters_;
};

// Columns of a pool playing the roles of outcome, endogenous regressors,
// excluded instruments and included exogenous regressors.
struct IvSpec {
  int y = 0;
  std::vector<int> endog;
  std::vector<int> excluded;
  std::vector<int> exog;

  std::vector<int> instruments() const { return detail::concat(excluded, exog); }
  std::vector<int> regressors() const { return detail::concat(endog, exog); }
};

// Dataset plus its weighted column pool, laid out as [y | X | Z | W].
// Implicitly constructible so every estimator accepts a Dataset directly;
// build one explicitly to share the cross-products across many fits.
class Moments {
 public:
  Moments(const Dataset& d) : d_(d), pool_(stack(d), names(d), d.weights(), d.cluster_ids(), d.n_clusters()) {}

  const Dataset& dataset() const { return d_; }
  const ColumnPool& pool() const { return pool_; }
  int n() const { return d_.n(); }
  int P() const { return d_.P(); }
  int J() const { return d_.J(); }
  int K() const { return d_.K(); }

  int y_col() const { return 0; }
  int x_col(int p) const { return 1 + p; }
  int z_col(int j) const { return 1 + P() + j; }
  int w_col(int k) const { return 1 + P() + J() + k; }

  std::vector<int> x_cols() const { return seq(x_col(0), P()); }
  std::vector<int> w_cols() const { return seq(w_col(0), K()); }
  std::vector<int> z_cols(const IndexSet& s) const {
    std::vector<int> out;
    for (int j : s) out.push_back(z_col(j));
    return out;
  }

  // y on X, instrumenting with Z_valid; Z_invalid and W included as controls.
  IvSpec spec(const IndexSet& valid, const IndexSet& invalid) const {
    for (int j : valid)
      if (j < 0 || j >= J()) detail::fail(ErrorKind::invalid_argument, "instrument index ", j + 1, " out of range");
    for (int j : invalid)
      if (j < 0 || j >= J()) detail::fail(ErrorKind::invalid_argument, "instrument index ", j + 1, " out of range");
    if (valid.intersects(invalid))
      detail::fail(ErrorKind::invalid_argument, "valid and invalid instrument sets overlap");
    return IvSpec{y_col(), x_cols(), z_cols(valid), detail::concat(z_cols(invalid), w_cols())};
  }

 private:
  static std::vector<int> seq(int start, int count) {
    std::vector<int> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = start + i;
    return v;
  }

  static Eigen::MatrixXd stack(const Dataset& d) {
    Eigen::MatrixXd a(d.n(), 1 + d.P() + d.J() + d.K());
    a.col(0) = d.y();
    a.middleCols(1, d.P()) = d.X();
    a.middleCols(1 + d.P(), d.J()) = d.Z();
    if (d.K()) a.rightCols(d.K()) = d.W();
    return a;
  }

  static std::vector<std::string> names(const Dataset& d) {
    std::vector<std::string> out{d.y_name()};
    for (const auto& s : d.x_names()) out.push_back(s);
    for (const auto& s : d.z_names()) out.push_back(s);
    for (const auto& s : d.w_names()) out.push_back(s);
    return out;
  }

  Dataset d_;
  ColumnPool pool_;
};

namespace detail {

[[noreturn]] inline void report_collinear(const ColumnPool& pool, const std::vector<int>& cols, const Eigen::MatrixXd& m,
                                          const char* what) {
  Eigen::VectorXd s(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) s(i) = m(i, i) > 0 ? 1.0 / std::sqrt(m(i, i)) : 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.asDiagonal() * m * s.asDiagonal());
  const Eigen::VectorXd v = es.eigenvectors().col(0);
  std::string list;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 0.1 || !(m(i, i) > 0)) {
      if (!list.empty()) list += ", ";
      list += pool.names()[static_cast<std::size_t>(cols[static_cast<std::size_t>(i)])];
    }
  fail(ErrorKind::collinear, what, " is singular; collinear columns: ", list);
}

// Solver for the cross-product of the given columns; throws a collinearity
// error naming the offending columns.
inline SpdSolver gram_solver(const ColumnPool& pool, const std::vector<int>& cols, const char* what) {
  const Eigen::MatrixXd g = block(pool.gram(), cols, cols);
  SpdSolver s(g);
  if (!s.ok()) report_collinear(pool, cols, g, what);
  return s;
}

// Cross-product of `a` and `b` after partialling out `by` (a' M_by b).
inline Eigen::MatrixXd partial_cross(const ColumnPool& pool, const std::vector<int>& a, const std::vector<int>& b,
                                     const std::vector<int>& by) {
  Eigen::MatrixXd out = block(pool.gram(), a, b);
  if (by.empty()) return out;
  const SpdSolver s = gram_solver(pool, by, "control cross-product");
  out -= block(pool.gram(), a, by) * s.solve(block(pool.gram(), by, b));
  return out;
}

// k-class estimate of spec. kappa = 1 gives 2SLS, kappa = 0 gives OLS.
struct KClassFit {
  IvSpec spec;
  double kappa = 1.0;
  Eigen::VectorXd coef;      // regressors() order: endog then exog
  Eigen::MatrixXd bread;     // inverse of the k-class normal matrix
  Eigen::MatrixXd proj;      // (Q'Q)^{-1} Q'R, Q = instruments, R = regressors
  double rss = 0.0;          // weighted residual sum of squares
  int n = 0;
};

inline KClassFit fit_kclass(const ColumnPool& pool, const IvSpec& spec, double kappa) {
  const auto Q = spec.instruments();
  const auto R = spec.regressors();
  if (static_cast<int>(spec.excluded.size()) < static_cast<int>(spec.endog.size()))
    fail(ErrorKind::underidentified, spec.excluded.size(), " excluded instruments for ", spec.endog.size(),
         " endogenous regressors");
  const Eigen::MatrixXd& G = pool.gram();
  const std::vector<int> yv{spec.y};

  const SpdSolver qq = gram_solver(pool, Q, "instrument cross-product");
  const Eigen::MatrixXd GQR = block(G, Q, R);
  const Eigen::MatrixXd GRR = block(G, R, R);
  const Eigen::VectorXd GRy = block(G, R, yv);
  const Eigen::VectorXd GQy = block(G, Q, yv);

  KClassFit f;
  f.spec = spec;
  f.kappa = kappa;
  f.n = pool.n();
  f.proj = qq.solve(GQR);
  const Eigen::MatrixXd RPR = GQR.transpose() * f.proj;
  const Eigen::VectorXd RPy = f.proj.transpose() * GQy;
  Eigen::MatrixXd H = (1.0 - kappa) * GRR + kappa * RPR;
  H = 0.5 * (H + H.transpose());
  const Eigen::VectorXd rhs = (1.0 - kappa) * GRy + kappa * RPy;
  const SpdSolver hs(H);
  if (!hs.ok()) report_collinear(pool, R, H, "second-stage design");
  f.coef = hs.solve(rhs);
  f.bread = hs.inverse();
  const double yy = G(spec.y, spec.y);
  f.rss = std::max(0.0, yy - 2.0 * f.coef.dot(GRy) + f.coef.dot(GRR * f.coef));
  return f;
}

inline Eigen::VectorXd residuals(const ColumnPool& pool, const IvSpec& spec, const Eigen::VectorXd& coef) {
  return pool.data().col(spec.y) - columns(pool.data(), spec.regressors()) * coef;
}

// Sum over clusters of outer products of summed scores; singleton clusters
// give HC0. The G/(G-1) factor is applied by the caller.
inline Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& scores, const std::vector<std::int64_t>& ids,
                                    int n_clusters) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_clusters, scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) sums.row(ids[static_cast<std::size_t>(i)]) += scores.row(i);
  return sums.transpose() * sums;
}

}  // namespace detail

// Variance of a linear estimator from its bread and per-observation scores.
// homoskedastic: sigma^2 * bread; robust: HC0 sandwich; cluster: CR0 sandwich
// times G/(G-1).
inline Eigen::MatrixXd sandwich_vcov(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& score_rows,
                                     const Eigen::VectorXd& resid, Vce vce, const std::vector<std::int64_t>& cluster_ids,
                                     int n_clusters, std::vector<std::string>* warnings = nullptr) {
  const auto n = static_cast<double>(resid.size());
  if (vce == Vce::homoskedastic) return (resid.squaredNorm() / n) * bread;
  const Eigen::MatrixXd scores = score_rows.array().colwise() * resid.array();
  Eigen::MatrixXd meat;
  if (vce == Vce::robust) {
    meat = scores.transpose() * scores;
  } else {
    if (warnings && n_clusters <= bread.rows())
      warnings->push_back(detail::cat("only ", n_clusters, " clusters for ", bread.rows(), " parameters"));
    if (n_clusters < 2) detail::fail(ErrorKind::invalid_argument, "cluster-robust variance needs at least two clusters");
    meat = detail::cluster_meat(scores, cluster_ids, n_clusters) *
           (static_cast<double>(n_clusters) / (n_clusters - 1.0));
  }
  Eigen::MatrixXd v = bread * meat * bread;
  return 0.5 * (v + v.transpose());
}

namespace detail {

// vcov of a k-class fit. Scores use the k-class "instrument" rows
// (1-kappa) R_i + kappa (P_Q R)_i.
inline Eigen::MatrixXd kclass_vcov(const ColumnPool& pool, const KClassFit& f, Vce vce,
                                   std::vector<std::string>* warnings = nullptr) {
  if (vce == Vce::homoskedastic) return (f.rss / f.n) * f.bread;
  const Eigen::VectorXd e = residuals(pool, f.spec, f.coef);
  const Eigen::MatrixXd Rm = columns(pool.data(), f.spec.regressors());
  const Eigen::MatrixXd Rhat = columns(pool.data(), f.spec.instruments()) * f.proj;
  const Eigen::MatrixXd rows = (1.0 - f.kappa) * Rm + f.kappa * Rhat;
  return sandwich_vcov(f.bread, rows, e, vce, pool.cluster_ids(), pool.n_clusters(), warnings);
}

// Smallest root of |Y'M_exog Y - kappa Y'M_Q Y| = 0 with Y = [y, endog],
// floored at one.
inline double liml_kappa(const ColumnPool& pool, const IvSpec& spec) {
  const auto Yc = concat(std::vector<int>{spec.y}, spec.endog);
  Eigen::MatrixXd A = partial_cross(pool, Yc, Yc, spec.exog);
  Eigen::MatrixXd B = partial_cross(pool, Yc, Yc, spec.instruments());
  A = 0.5 * (A + A.transpose());
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bcheck(B);
  const double bmax = bcheck.eigenvalues().maxCoeff();
  const double bmin = bcheck.eigenvalues().minCoeff();
  if (!(bmin > 1e-14 * std::max(1.0, bmax))) {
    // exact fit of [y, X] on the instruments: the variance ratio is unbounded
    // only if A is also singular in that direction, in which case kappa = 1.
    return 1.0;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  if (es.info() != Eigen::Success)
    fail(ErrorKind::numerical, "LIML eigenproblem did not converge (min eig of residual cross-product ", bmin,
         ", max ", bmax, ")");
  const double k = es.eigenvalues().minCoeff();
  if (!std::isfinite(k)) fail(ErrorKind::numerical, "LIML eigenvalue is not finite");
  return k < 1.0 + 1e-12 ? 1.0 : k;
}

}  // namespace detail
}  // namespace shiftshare
