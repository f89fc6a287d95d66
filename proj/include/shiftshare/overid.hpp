#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <optional>
#include <string>

#include "shiftshare/estimators.hpp"
#include "shiftshare/moments.hpp"

namespace shiftshare {

enum class TestKind { hs, ar };

inline std::string to_string(TestKind t) { return t == TestKind::hs ? "hs" : "ar"; }

struct TestOutcome {
  double stat = 0.0;
  int df = 0;
  double p_value = 1.0;
  TestKind test = TestKind::hs;
};

// Upper-tail chi-square probability.
inline double chi2_sf(double x, int df) {
  if (df < 1) detail::fail(ErrorKind::invalid_argument, "chi-square df must be positive");
  if (!(x > 0.0)) return 1.0;
  if (!std::isfinite(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

namespace detail {

inline int overid_df(const Moments& m, const IndexSet& valid, const IndexSet& invalid) {
  if (valid.intersects(invalid)) fail(ErrorKind::invalid_argument, "valid and invalid sets overlap");
  const int df = valid.size() - m.P();
  if (df < 1)
    fail(ErrorKind::undefined_test, "overidentification test undefined with |valid| = ", valid.size(),
         " and P = ", m.P());
  return df;
}

}  // namespace detail

// Sargan n*R^2 form under homoskedastic vce; Hansen J at the two-step
// efficient GMM estimate under robust or cluster vce.
inline TestOutcome hansen_sargan(const Moments& m, const IndexSet& valid, const IndexSet& invalid,
                                 Vce vce = Vce::homoskedastic) {
  const int df = detail::overid_df(m, valid, invalid);
  const ColumnPool& pool = m.pool();
  const IvSpec spec = m.spec(valid, invalid);
  const auto Q = spec.instruments();
  const auto R = spec.regressors();
  const std::vector<int> yv{spec.y};
  const Eigen::MatrixXd& G = pool.gram();
  const auto f = detail::fit_kclass(pool, spec, 1.0);
  const Eigen::MatrixXd GQR = detail::block(G, Q, R);
  const Eigen::VectorXd GQy = detail::block(G, Q, yv);

  TestOutcome out;
  out.df = df;
  out.test = TestKind::hs;
  if (vce == Vce::homoskedastic) {
    const Eigen::VectorXd qe = GQy - GQR * f.coef;
    const auto qq = detail::gram_solver(pool, Q, "instrument cross-product");
    const double explained = qe.dot(qq.solve(qe).col(0));
    out.stat = f.rss > 0.0 ? pool.n() * explained / f.rss : 0.0;
  } else {
    const Eigen::VectorXd e = detail::residuals(pool, spec, f.coef);
    const Eigen::MatrixXd Qm = detail::columns(pool.data(), Q);
    const Eigen::MatrixXd scores = Qm.array().colwise() * e.array();
    const Eigen::MatrixXd omega = vce == Vce::robust
                                      ? Eigen::MatrixXd(scores.transpose() * scores)
                                      : detail::cluster_meat(scores, pool.cluster_ids(), pool.n_clusters());
    const detail::SpdSolver os(omega, 1e-15);
    if (!os.ok())
      detail::fail(ErrorKind::numerical, "singular score covariance in Hansen J (",
                   vce == Vce::cluster ? "too few clusters?" : "degenerate residuals", ")");
    const Eigen::MatrixXd WQR = os.solve(GQR);
    const detail::SpdSolver hs(GQR.transpose() * WQR);
    if (!hs.ok()) detail::fail(ErrorKind::numerical, "singular efficient GMM normal matrix");
    const Eigen::VectorXd b2 = hs.solve(WQR.transpose() * GQy);
    const Eigen::VectorXd qe = GQy - GQR * b2;
    out.stat = qe.dot(os.solve(qe).col(0));
  }
  out.stat = std::max(0.0, out.stat);
  out.p_value = chi2_sf(out.stat, df);
  return out;
}

// Overidentification form of the Anderson-Rubin statistic: the AR statistic
// minimised over beta, (n - L) (kappa_LIML - 1), L = number of instruments.
inline TestOutcome anderson_rubin(const Moments& m, const IndexSet& valid, const IndexSet& invalid) {
  const int df = detail::overid_df(m, valid, invalid);
  const IvSpec spec = m.spec(valid, invalid);
  const double kappa = detail::liml_kappa(m.pool(), spec);
  const int L = static_cast<int>(spec.instruments().size());
  TestOutcome out;
  out.df = df;
  out.test = TestKind::ar;
  out.stat = std::max(0.0, (m.n() - L) * (kappa - 1.0));
  out.p_value = chi2_sf(out.stat, df);
  return out;
}

inline TestOutcome overid_test(const Moments& m, TestKind t, const IndexSet& valid, const IndexSet& invalid,
                               Vce vce) {
  return t == TestKind::hs ? hansen_sargan(m, valid, invalid, vce) : anderson_rubin(m, valid, invalid);
}

// Downward-testing significance level c / ln(n), or the override.
inline double testing_threshold(long long n, double c = 0.1, std::optional<double> override_level = std::nullopt) {
  if (override_level) {
    if (!(*override_level > 0.0 && *override_level < 1.0))
      detail::fail(ErrorKind::invalid_argument, "significance level must lie in (0, 1)");
    return *override_level;
  }
  if (n <= 1) detail::fail(ErrorKind::invalid_argument, "testing threshold needs n > 1");
  if (!(c > 0.0)) detail::fail(ErrorKind::invalid_argument, "threshold constant c must be positive");
  return c / std::log(static_cast<double>(n));
}

}  // namespace shiftshare
