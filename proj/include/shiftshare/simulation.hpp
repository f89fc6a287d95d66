#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "shiftshare/alasso.hpp"
#include "shiftshare/cim.hpp"
#include "shiftshare/csv.hpp"
#include "shiftshare/rng.hpp"

namespace shiftshare {

inline constexpr int kSimulationSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240611;

enum class ZLaw { uniform_0_01, uniform_0_1 };

inline std::string to_string(ZLaw z) { return z == ZLaw::uniform_0_01 ? "uniform(0,0.1)" : "uniform(0,1)"; }

struct DgpConfig {
  int n = 0;
  int J = 0;
  int P = 1;
  Eigen::MatrixXd gamma;      // J x P
  Eigen::VectorXd alpha;      // J
  Eigen::VectorXd beta0;      // P
  Eigen::MatrixXd error_cov;  // (P+1) x (P+1), order (u, eps_1..eps_P)
  ZLaw z_law = ZLaw::uniform_0_01;
  std::uint64_t seed = kDefaultSeed;

  IndexSet true_invalid() const {
    std::vector<int> v;
    for (Eigen::Index j = 0; j < alpha.size(); ++j)
      if (alpha(j) != 0.0) v.push_back(static_cast<int>(j));
    return IndexSet(std::move(v));
  }

  void validate() const {
    if (n < 1 || J < 1 || P < 1) detail::fail(ErrorKind::invalid_argument, "n, J and P must be positive");
    if (gamma.rows() != J || gamma.cols() != P) detail::fail(ErrorKind::invalid_argument, "gamma must be J x P");
    if (alpha.size() != J) detail::fail(ErrorKind::invalid_argument, "alpha must have length J");
    if (beta0.size() != P) detail::fail(ErrorKind::invalid_argument, "beta0 must have length P");
    if (error_cov.rows() != P + 1 || error_cov.cols() != P + 1)
      detail::fail(ErrorKind::invalid_argument, "error_cov must be (P+1) x (P+1)");
    if (!(error_cov - error_cov.transpose()).isZero(1e-12))
      detail::fail(ErrorKind::invalid_argument, "error_cov is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(error_cov);
    if (llt.info() != Eigen::Success) detail::fail(ErrorKind::invalid_argument, "error_cov is not positive definite");
  }
};

// Z per z_law, X = Z gamma + eps, y = X beta0 + Z alpha + u, (u, eps) ~ N(0, error_cov).
inline Dataset generate(const DgpConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double hi = cfg.z_law == ZLaw::uniform_0_01 ? 0.1 : 1.0;
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(cfg.error_cov).matrixL();
  DatasetParts p;
  p.Z.resize(cfg.n, cfg.J);
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.J; ++j) p.Z(i, j) = rng.uniform(0.0, hi);
  Eigen::MatrixXd e(cfg.n, cfg.P + 1);
  for (int i = 0; i < cfg.n; ++i)
    for (int k = 0; k <= cfg.P; ++k) e(i, k) = rng.normal();
  e = e * L.transpose();
  p.X = p.Z * cfg.gamma + e.rightCols(cfg.P);
  p.y = p.X * cfg.beta0 + p.Z * cfg.alpha + e.col(0);
  p.W.resize(cfg.n, 0);
  p.y_name = "y";
  for (int k = 0; k < cfg.P; ++k) p.x_names.push_back("x" + std::to_string(k + 1));
  for (int j = 0; j < cfg.J; ++j) p.z_names.push_back("z" + std::to_string(j + 1));
  return Dataset(std::move(p));
}

enum class Method { standard, oracle, alasso, cim };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::standard: return "standard";
    case Method::oracle: return "oracle";
    case Method::alasso: return "alasso";
    case Method::cim: return "cim";
  }
  return "?";
}

struct CellMetrics {
  Method method = Method::standard;
  double mad = 0.0;               // median over successful reps of max_p |beta_p - beta0_p|
  double mean_n_invalid = 0.0;    // over successful reps
  double freq_all_invalid = 0.0;  // over all reps; a failed rep counts as a miss
  double oracle_F = 0.0;          // mean oracle first-stage statistic
  int failures = 0;
  int reps = 0;
};

struct CellOptions {
  int reps = 100;
  std::vector<Method> methods{Method::standard, Method::oracle, Method::alasso, Method::cim};
  std::uint64_t seed = kDefaultSeed;
  TestKind test = TestKind::hs;
  double c = 0.1;
  Vce vce = Vce::homoskedastic;
  int threads = 0;  // 0: hardware concurrency
};

namespace detail {

struct RepRecord {
  bool ok = false;
  double dev = 0.0;
  int n_invalid = 0;
  bool all_invalid = false;
};

// Runs body(i) for i in [0, count) on a small pool; results are written by
// index so the outcome does not depend on scheduling.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  int t = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  t = std::min(t, count);
  if (t <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  for (int k = 0; k < t; ++k)
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline double max_abs_dev(const Eigen::VectorXd& b, const Eigen::VectorXd& b0) {
  return (b - b0).cwiseAbs().maxCoeff();
}

}  // namespace detail

// Replication r draws data with seed derive_seed(opt.seed, r), so cells that
// share a seed use common random numbers.
inline std::vector<CellMetrics> run_cell(const DgpConfig& base, const CellOptions& opt) {
  base.validate();
  if (opt.reps < 1) detail::fail(ErrorKind::invalid_argument, "reps must be positive");
  const IndexSet truth = base.true_invalid();
  const std::size_t M = opt.methods.size();
  std::vector<std::vector<detail::RepRecord>> rec(M, std::vector<detail::RepRecord>(static_cast<std::size_t>(opt.reps)));
  std::vector<double> oracle_f(static_cast<std::size_t>(opt.reps), std::numeric_limits<double>::quiet_NaN());

  detail::parallel_for(opt.reps, opt.threads, [&](int r) {
    DgpConfig cfg = base;
    cfg.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(r));
    const Moments m(generate(cfg));
    const int J = m.J();
    const IndexSet all = IndexSet::range(J);
    try {
      oracle_f[static_cast<std::size_t>(r)] = first_stage_strength(m, truth.complement(J), truth, opt.vce).value;
    } catch (const Error&) {
    }
    std::optional<CombinationEstimates> ce;
    auto combos = [&]() -> const CombinationEstimates& {
      if (!ce) {
        JustIdentifiedOptions jo;
        jo.vce = opt.vce;
        jo.with_se = std::find(opt.methods.begin(), opt.methods.end(), Method::cim) != opt.methods.end();
        ce = just_identified(m, jo);
      }
      return *ce;
    };
    for (std::size_t k = 0; k < M; ++k) {
      auto& out = rec[k][static_cast<std::size_t>(r)];
      try {
        IndexSet invalid;
        switch (opt.methods[k]) {
          case Method::standard: break;
          case Method::oracle: invalid = truth; break;
          case Method::alasso: {
            AlassoOptions ao;
            ao.test = opt.test;
            ao.c = opt.c;
            ao.vce = opt.vce;
            ao.list_untested = false;
            invalid = alasso_select(m, ao, &combos()).invalid;
            break;
          }
          case Method::cim: {
            CimOptions co;
            co.test = opt.test;
            co.c = opt.c;
            co.vce = opt.vce;
            co.list_untested = false;
            invalid = cim_select(m, co, &combos()).invalid;
            break;
          }
        }
        const auto fit = fit_2sls(m, invalid.complement(J), invalid, Vce::homoskedastic);
        out.dev = detail::max_abs_dev(fit.beta, cfg.beta0);
        out.n_invalid = invalid.size();
        out.all_invalid = truth.is_subset_of(invalid);
        out.ok = std::isfinite(out.dev);
      } catch (const Error&) {
        out.ok = false;
      }
      (void)all;
    }
  });

  std::vector<CellMetrics> res;
  double fsum = 0.0;
  int fcount = 0;
  for (double f : oracle_f)
    if (std::isfinite(f)) fsum += f, ++fcount;
  const double mean_f = fcount ? fsum / fcount : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < M; ++k) {
    CellMetrics cm;
    cm.method = opt.methods[k];
    cm.reps = opt.reps;
    cm.oracle_F = mean_f;
    std::vector<double> devs;
    double ninv = 0.0, hits = 0.0;
    for (const auto& x : rec[k]) {
      if (!x.ok) {
        ++cm.failures;
        continue;
      }
      devs.push_back(x.dev);
      ninv += x.n_invalid;
      hits += x.all_invalid;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cm.mad = devs.empty() ? nan : median_of(devs);
    cm.mean_n_invalid = devs.empty() ? nan : ninv / static_cast<double>(devs.size());
    cm.freq_all_invalid = hits / opt.reps;
    res.push_back(cm);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class Design { majority, plurality, weak_strong_grid, multi_regressor };

inline std::string to_string(Design d) {
  switch (d) {
    case Design::majority: return "majority";
    case Design::plurality: return "plurality";
    case Design::weak_strong_grid: return "weak_strong_grid";
    case Design::multi_regressor: return "multi_regressor";
  }
  return "?";
}

inline Design parse_design(const std::string& s) {
  if (s == "majority") return Design::majority;
  if (s == "plurality") return Design::plurality;
  if (s == "weak_strong_grid" || s == "grid") return Design::weak_strong_grid;
  if (s == "multi_regressor" || s == "multi") return Design::multi_regressor;
  detail::fail(ErrorKind::invalid_argument, "unknown design '", s,
               "' (expected majority, plurality, weak_strong_grid or multi_regressor)");
}

inline std::vector<int> default_n_grid() {
  std::vector<int> g;
  for (int n = 400; n <= 6000; n += 400) g.push_back(n);
  return g;
}

inline Eigen::VectorXd majority_alpha(double scale = 1.0) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(10);
  a.head(3).setConstant(0.2 * scale);
  return a;
}

inline Eigen::VectorXd plurality_alpha(double scale = 1.0) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(10);
  a << 0.1, 0.1, 0.2, 0.2, 0.3, 0.3, 0, 0, 0, 0;
  return a * scale;
}

// J = 10 single-regressor cell: z ~ U(0, 0.1), gamma constant, unit error
// variances with covariance 0.5, beta0 = 0.
inline DgpConfig single_regressor_cell(int n, const Eigen::VectorXd& alpha, double gamma = 0.6) {
  DgpConfig c;
  c.n = n;
  c.J = static_cast<int>(alpha.size());
  c.P = 1;
  c.gamma = Eigen::MatrixXd::Constant(c.J, 1, gamma);
  c.alpha = alpha;
  c.beta0 = Eigen::VectorXd::Zero(1);
  c.error_cov.resize(2, 2);
  c.error_cov << 1.0, 0.5, 0.5, 1.0;
  c.z_law = ZLaw::uniform_0_01;
  return c;
}

inline Eigen::MatrixXd multi_regressor_gamma(int P, int J = 20) {
  Eigen::MatrixXd g(J, P);
  for (int j = 0; j < J; ++j) {
    if (P == 1) {
      g(j, 0) = 1.0;
      continue;
    }
    g(j, 0) = 0.05 * (j + 1);
    g(j, 1) = 0.05 * (J - j);
    if (P >= 3) g(j, 2) = 0.05 * (j % 4 + 1);
  }
  if (P > 3) detail::fail(ErrorKind::invalid_argument, "multi-regressor design is defined for P <= 3");
  return g;
}

// n = 10000, J = 20, z ~ U(0,1), u ~ N(0, 0.25), eps_p = e_p + 0.5 u with
// e_p ~ N(0,1); alpha_j = j for the first k instruments.
inline DgpConfig multi_regressor_cell(int P, int k, int n = 10000, int J = 20) {
  if (k < 0 || k > J) detail::fail(ErrorKind::invalid_argument, "invalid count out of range");
  DgpConfig c;
  c.n = n;
  c.J = J;
  c.P = P;
  c.gamma = multi_regressor_gamma(P, J);
  c.alpha = Eigen::VectorXd::Zero(J);
  for (int j = 0; j < k; ++j) c.alpha(j) = j + 1;
  c.beta0 = Eigen::VectorXd::Zero(P);
  c.error_cov = Eigen::MatrixXd::Constant(P + 1, P + 1, 0.0625);
  c.error_cov(0, 0) = 0.25;
  for (int p = 1; p <= P; ++p) {
    c.error_cov(0, p) = c.error_cov(p, 0) = 0.125;
    c.error_cov(p, p) = 1.0625;
  }
  c.z_law = ZLaw::uniform_0_1;
  return c;
}

struct SweepOptions {
  Design design = Design::majority;
  std::vector<int> n_grid;          // empty: 400..6000 step 400 (multi: 10000)
  std::vector<int> P_list;          // multi only; empty: {1, 2, 3}
  std::vector<int> invalid_counts;  // multi only; empty: 0..18 (0..17 for P = 3)
  CellOptions cell;                 // methods empty: design default
  std::function<void(const std::string&)> progress;
};

struct SweepRow {
  std::string design;
  int n = 0, P = 0, J = 0, n_invalid_true = 0;
  CellMetrics metrics;
  std::uint64_t seed = 0;
};

struct SweepCell {
  std::string label;
  DgpConfig cfg;
};

inline std::vector<SweepCell> sweep_cells(const SweepOptions& o) {
  std::vector<SweepCell> cells;
  const auto grid = o.n_grid.empty() ? default_n_grid() : o.n_grid;
  switch (o.design) {
    case Design::majority:
      for (int n : grid) cells.push_back({"majority", single_regressor_cell(n, majority_alpha())});
      break;
    case Design::plurality:
      for (int n : grid) cells.push_back({"plurality", single_regressor_cell(n, plurality_alpha())});
      break;
    case Design::weak_strong_grid:
      for (const char* base : {"majority", "plurality"})
        for (double gamma : {0.6, 0.3})
          for (double scale : {1.0, 2.0}) {
            const std::string label = std::string(base) + (gamma == 0.6 ? "_strong_iv" : "_weak_iv") +
                                      (scale == 1.0 ? "_weak_violation" : "_strong_violation");
            const Eigen::VectorXd a = std::string(base) == "majority" ? majority_alpha(scale) : plurality_alpha(scale);
            for (int n : grid) cells.push_back({label, single_regressor_cell(n, a, gamma)});
          }
      break;
    case Design::multi_regressor: {
      const std::vector<int> Ps = o.P_list.empty() ? std::vector<int>{1, 2, 3} : o.P_list;
      const std::vector<int> ns = o.n_grid.empty() ? std::vector<int>{10000} : o.n_grid;
      for (int P : Ps)
        for (int n : ns) {
          std::vector<int> ks = o.invalid_counts;
          if (ks.empty())
            for (int k = 0; k <= (P == 3 ? 17 : 18); ++k) ks.push_back(k);
          for (int k : ks) cells.push_back({"multi_regressor", multi_regressor_cell(P, k, n)});
        }
      break;
    }
  }
  return cells;
}

inline std::vector<SweepRow> sweep(const SweepOptions& o) {
  CellOptions co = o.cell;
  if (co.methods.empty()) {
    co.methods = {Method::standard, Method::oracle, Method::alasso};
    if (o.design != Design::multi_regressor) co.methods.push_back(Method::cim);
  }
  std::vector<SweepRow> rows;
  const auto cells = sweep_cells(o);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (o.progress)
      o.progress(detail::cat("cell ", i + 1, "/", cells.size(), ": ", c.label, " n=", c.cfg.n, " P=", c.cfg.P,
                             " invalid=", c.cfg.true_invalid().size()));
    CellOptions cc = co;
    if (c.cfg.P > 1)
      cc.methods.erase(std::remove(cc.methods.begin(), cc.methods.end(), Method::cim), cc.methods.end());
    for (const auto& m : run_cell(c.cfg, cc))
      rows.push_back({c.label, c.cfg.n, c.cfg.P, c.cfg.J, c.cfg.true_invalid().size(), m, co.seed});
  }
  return rows;
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{"design", "n",           "P",        "J",    "n_invalid_true",
                                             "method", "mad",         "mean_n_invalid", "freq_all_invalid",
                                             "oracle_F", "failures", "reps",     "seed", "schema_version"};
  return cols;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  const auto& cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    os << r.design << ',' << r.n << ',' << r.P << ',' << r.J << ',' << r.n_invalid_true << ',' << to_string(m.method)
       << ',' << num(m.mad) << ',' << num(m.mean_n_invalid) << ',' << num(m.freq_all_invalid) << ','
       << num(m.oracle_F) << ',' << m.failures << ',' << m.reps << ',' << r.seed << ',' << kSimulationSchemaVersion
       << "\n";
  }
}

}  // namespace shiftshare
