#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "shiftshare/dataset.hpp"
#include "shiftshare/moments.hpp"

namespace shiftshare {

enum class Estimator { ols, tsls, liml, ssiv };

inline std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::ols: return "ols";
    case Estimator::tsls: return "tsls";
    case Estimator::liml: return "liml";
    case Estimator::ssiv: return "ssiv";
  }
  return "?";
}

// Excluded-instrument strength. P = 1: F statistic (Wald/q under robust or
// cluster vce); P > 1: Cragg-Donald minimum eigenvalue statistic.
struct FirstStage {
  double value = 0.0;
  std::string kind;     // "F", "robust_F", "cluster_F" or "cragg_donald"
  bool capped = false;  // perfect first-stage fit; value set to kCap
  static constexpr double kCap = 1e12;
};

struct EstimateResult {
  Estimator estimator = Estimator::tsls;
  Vce vce = Vce::homoskedastic;
  Eigen::VectorXd beta;            // P treatment effects
  Eigen::VectorXd alpha;           // direct effects of the instruments used as controls
  Eigen::VectorXd controls;        // coefficients on W
  Eigen::MatrixXd vcov;            // over (beta, alpha, controls)
  Eigen::VectorXd se;
  std::vector<std::string> param_names;
  FirstStage first_stage;
  double kappa = 1.0;
  IndexSet valid;
  IndexSet invalid;
  std::vector<std::string> valid_names, invalid_names;
  int n = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline EstimateResult package(const ColumnPool& pool, const KClassFit& f, Vce vce, Estimator est, int P, int n_invalid) {
  EstimateResult r;
  r.estimator = est;
  r.vce = vce;
  r.kappa = f.kappa;
  r.n = pool.n();
  r.vcov = kclass_vcov(pool, f, vce, &r.warnings);
  r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.beta = f.coef.head(P);
  r.alpha = f.coef.segment(P, n_invalid);
  r.controls = f.coef.tail(f.coef.size() - P - n_invalid);
  for (int c : f.spec.regressors()) r.param_names.push_back(pool.names()[static_cast<std::size_t>(c)]);
  return r;
}

inline FirstStage first_stage_pool(const ColumnPool& pool, const IvSpec& spec, Vce vce) {
  const int q = static_cast<int>(spec.excluded.size());
  const int L = static_cast<int>(spec.instruments().size());
  const int n = pool.n();
  const Eigen::MatrixXd restricted = partial_cross(pool, spec.endog, spec.endog, spec.exog);
  const Eigen::MatrixXd unrestricted = partial_cross(pool, spec.endog, spec.endog, spec.instruments());
  FirstStage fs;
  if (spec.endog.size() == 1) {
    const double rss_u = unrestricted(0, 0), rss_r = restricted(0, 0);
    if (!(rss_u > 1e-13 * rss_r)) {
      fs.value = FirstStage::kCap;
      fs.capped = true;
      fs.kind = "F";
      return fs;
    }
    if (vce == Vce::homoskedastic) {
      fs.kind = "F";
      fs.value = ((rss_r - rss_u) / q) / (rss_u / (n - L));
      return fs;
    }
    // Wald test on the excluded coefficients of the first-stage regression.
    const IvSpec ols{spec.endog[0], {}, {}, spec.instruments()};
    const KClassFit f = fit_kclass(pool, ols, 0.0);
    const Eigen::MatrixXd v = kclass_vcov(pool, f, vce);
    const Eigen::VectorXd b = f.coef.head(q);
    const Eigen::MatrixXd vq = v.topLeftCorner(q, q);
    const SpdSolver s(vq);
    fs.kind = vce == Vce::robust ? "robust_F" : "cluster_F";
    // a rank-deficient meat (e.g. fewer clusters than instruments) leaves the Wald statistic undefined
    fs.value = s.ok() ? b.dot(s.solve(b).col(0)) / q : std::numeric_limits<double>::quiet_NaN();
    return fs;
  }
  // Cragg-Donald: min eig of Sigma^{-1/2} X~'P X~ Sigma^{-1/2} / q
  fs.kind = "cragg_donald";
  Eigen::MatrixXd sigma = unrestricted / static_cast<double>(n - L);
  Eigen::MatrixXd between = restricted - unrestricted;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  if (es.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    fs.value = FirstStage::kCap;
    fs.capped = true;
    return fs;
  }
  const Eigen::MatrixXd isq = es.operatorInverseSqrt();
  Eigen::MatrixXd m = isq * between * isq;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(0.5 * (m + m.transpose()));
  fs.value = em.eigenvalues().minCoeff() / q;
  return fs;
}

inline void note_first_stage(EstimateResult& r) {
  if (!std::isfinite(r.first_stage.value))
    r.warnings.push_back("first-stage " + r.first_stage.kind + " undefined: singular coefficient covariance");
}

inline void label_sets(EstimateResult& r, const Dataset& d, const IndexSet& valid, const IndexSet& invalid) {
  r.valid = valid;
  r.invalid = invalid;
  r.valid_names = names_of(valid, d.z_names());
  r.invalid_names = names_of(invalid, d.z_names());
}

inline void check_sets(const Moments& m, const IndexSet& valid, const IndexSet& invalid) {
  if (valid.intersects(invalid)) fail(ErrorKind::invalid_argument, "valid and invalid sets overlap");
  if (valid.size() < m.P())
    fail(ErrorKind::underidentified, "|valid| = ", valid.size(), " < P = ", m.P(), ": model is underidentified");
}

}  // namespace detail

// 2SLS of y on (X, Z_invalid, W) instrumenting X with Z_valid.
inline EstimateResult fit_2sls(const Moments& m, const IndexSet& valid, const IndexSet& invalid,
                               Vce vce = Vce::homoskedastic) {
  detail::check_sets(m, valid, invalid);
  const IvSpec spec = m.spec(valid, invalid);
  const auto f = detail::fit_kclass(m.pool(), spec, 1.0);
  auto r = detail::package(m.pool(), f, vce, Estimator::tsls, m.P(), invalid.size());
  r.first_stage = detail::first_stage_pool(m.pool(), spec, vce);
  detail::note_first_stage(r);
  detail::label_sets(r, m.dataset(), valid, invalid);
  return r;
}

inline double liml_kappa(const Moments& m, const IndexSet& valid, const IndexSet& invalid) {
  detail::check_sets(m, valid, invalid);
  return detail::liml_kappa(m.pool(), m.spec(valid, invalid));
}

inline EstimateResult fit_liml(const Moments& m, const IndexSet& valid, const IndexSet& invalid,
                               Vce vce = Vce::homoskedastic) {
  detail::check_sets(m, valid, invalid);
  const IvSpec spec = m.spec(valid, invalid);
  const double kappa = detail::liml_kappa(m.pool(), spec);
  const auto f = detail::fit_kclass(m.pool(), spec, kappa);
  auto r = detail::package(m.pool(), f, vce, Estimator::liml, m.P(), invalid.size());
  r.first_stage = detail::first_stage_pool(m.pool(), spec, vce);
  detail::note_first_stage(r);
  detail::label_sets(r, m.dataset(), valid, invalid);
  return r;
}

inline FirstStage first_stage_strength(const Moments& m, const IndexSet& valid, const IndexSet& invalid,
                                       Vce vce = Vce::homoskedastic) {
  detail::check_sets(m, valid, invalid);
  return detail::first_stage_pool(m.pool(), m.spec(valid, invalid), vce);
}

// The constructed shift-share instrument aligned to the dataset's (unit, time)
// row keys; unit = location, time = period.
inline Eigen::VectorXd ssiv_column(const Dataset& d, const ShiftShareInputs& ss, const IndexSet& valid) {
  if (!d.keys()) detail::fail(ErrorKind::invalid_argument, "SSIV needs unit/time keys on the dataset");
  const IndexSet classes = class_set_from_names(ss, names_of(valid, d.z_names()));
  std::map<std::pair<std::string, double>, double> cells;
  for (const auto& c : build_ssiv(ss, classes)) cells[{c.location, c.period}] = c.value;
  Eigen::VectorXd s(d.n());
  std::vector<std::string> missing;
  for (int i = 0; i < d.n(); ++i) {
    const auto& k = (*d.keys())[static_cast<std::size_t>(i)];
    auto it = cells.find({k.unit, k.time});
    if (it == cells.end()) {
      if (missing.size() < 10) missing.push_back("(" + k.unit + ", " + format_double(k.time) + ")");
      continue;
    }
    s(i) = it->second;
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& x : missing) list += " " + x;
    detail::fail(ErrorKind::missing_key, "dataset rows without a shift-share cell:", list);
  }
  return s;
}

// Just-identified IV with the single constructed instrument built from the
// valid classes; invalid shares enter as controls.
inline EstimateResult fit_ssiv(const Dataset& d, const ShiftShareInputs& ss, const IndexSet& valid,
                               const IndexSet& invalid, Vce vce = Vce::homoskedastic) {
  if (valid.empty()) detail::fail(ErrorKind::invalid_argument, "SSIV needs a non-empty valid set");
  if (valid.intersects(invalid)) detail::fail(ErrorKind::invalid_argument, "valid and invalid sets overlap");
  if (d.P() != 1) detail::fail(ErrorKind::underidentified, "SSIV is just-identified for a single treatment only");
  const Eigen::VectorXd s = ssiv_column(d, ss, valid);
  const int nI = invalid.size();
  Eigen::MatrixXd raw(d.n(), 3 + nI + d.K());
  raw.col(0) = d.y();
  raw.col(1) = d.X().col(0);
  raw.col(2) = s;
  std::vector<std::string> names{d.y_name(), d.x_names()[0], "ssiv"};
  for (int i = 0; i < nI; ++i) {
    raw.col(3 + i) = d.Z().col(invalid[i]);
    names.push_back(d.z_names()[static_cast<std::size_t>(invalid[i])]);
  }
  if (d.K()) raw.rightCols(d.K()) = d.W();
  for (const auto& w : d.w_names()) names.push_back(w);
  const ColumnPool pool(std::move(raw), std::move(names), d.weights(), d.cluster_ids(), d.n_clusters());
  IvSpec spec{0, {1}, {2}, {}};
  for (int c = 3; c < 3 + nI + d.K(); ++c) spec.exog.push_back(c);
  const auto f = detail::fit_kclass(pool, spec, 1.0);
  auto r = detail::package(pool, f, vce, Estimator::ssiv, 1, nI);
  r.first_stage = detail::first_stage_pool(pool, spec, vce);
  detail::note_first_stage(r);
  detail::label_sets(r, d, valid, invalid);
  return r;
}

// ---------------------------------------------------------------------------
// Just-identified estimates over all P-subsets of instruments

struct CombinationEstimates {
  std::vector<IndexSet> combos;  // lexicographic P-subsets of {0..J-1}
  Eigen::MatrixXd betas;         // C(J,P) x P; NaN rows for rank-deficient first stages
  Eigen::MatrixXd ses;           // matching standard errors (NaN when not computed)
  int dropped = 0;
  std::vector<std::string> warnings;

  int rows() const { return static_cast<int>(combos.size()); }
  bool finite_row(int r) const { return betas.row(r).allFinite(); }
};

struct JustIdentifiedOptions {
  long long cap = 200000;
  bool with_se = true;
  Vce vce = Vce::homoskedastic;
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

inline std::vector<IndexSet> lexicographic_subsets(int J, int P) {
  std::vector<IndexSet> out;
  std::vector<int> c(static_cast<std::size_t>(P));
  for (int i = 0; i < P; ++i) c[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.emplace_back(c);
    int i = P - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == J - P + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < P; ++k) c[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k - 1)] + 1;
  }
  return out;
}

// Each row instruments X with exactly P shares; the other J-P shares stay in
// the model as controls, so a combination's estimate converges to
// beta0 + gamma_S^{-1} alpha_S.
inline CombinationEstimates just_identified(const Moments& m, const JustIdentifiedOptions& opt = {}) {
  const int J = m.J(), P = m.P();
  if (binomial(J, P) > static_cast<double>(opt.cap))
    detail::fail(ErrorKind::invalid_argument, "C(", J, ",", P, ") = ", binomial(J, P), " combinations exceed the cap of ",
                 opt.cap);
  CombinationEstimates ce;
  ce.combos = lexicographic_subsets(J, P);
  const auto C = static_cast<Eigen::Index>(ce.combos.size());
  ce.betas = Eigen::MatrixXd::Constant(C, P, std::numeric_limits<double>::quiet_NaN());
  ce.ses = Eigen::MatrixXd::Constant(C, P, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index r = 0; r < C; ++r) {
    const IndexSet& S = ce.combos[static_cast<std::size_t>(r)];
    const IndexSet rest = S.complement(J);
    try {
      const IvSpec spec = m.spec(S, rest);
      const auto f = detail::fit_kclass(m.pool(), spec, 1.0);
      if (!f.coef.allFinite()) throw Error(ErrorKind::numerical, "non-finite estimate");
      ce.betas.row(r) = f.coef.head(P).transpose();
      if (opt.with_se) {
        const Eigen::MatrixXd v = detail::kclass_vcov(m.pool(), f, opt.vce);
        ce.ses.row(r) = v.diagonal().head(P).cwiseMax(0.0).cwiseSqrt().transpose();
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::collinear && e.kind() != ErrorKind::numerical) throw;
      ce.betas.row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
      ++ce.dropped;
    }
  }
  if (ce.dropped)
    ce.warnings.push_back(detail::cat(ce.dropped, " of ", C, " just-identified combinations have a rank-deficient "
                                                             "first stage and are excluded from medians"));
  return ce;
}

}  // namespace shiftshare
