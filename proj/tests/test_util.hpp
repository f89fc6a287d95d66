#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "shiftshare.hpp"

namespace testutil {

using namespace shiftshare;

inline Eigen::MatrixXd uniform_matrix(Rng& rng, int n, int k, double hi = 1.0) {
  Eigen::MatrixXd m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = rng.uniform(0.0, hi);
  return m;
}

inline Eigen::MatrixXd normal_matrix(Rng& rng, int n, int k) {
  Eigen::MatrixXd m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = rng.normal();
  return m;
}

struct RandomSpec {
  int n = 300, P = 1, J = 5, K = 0;
  bool weights = false;
  int clusters = 0;  // 0: none
  Eigen::VectorXd alpha;  // default zero
  double noise = 1.0;
};

// Strong first stage, endogenous treatment, optional weights and clusters.
inline Dataset random_dataset(const RandomSpec& s, std::uint64_t seed) {
  Rng rng(seed);
  DatasetParts p;
  p.Z = uniform_matrix(rng, s.n, s.J);
  p.W = s.K ? normal_matrix(rng, s.n, s.K) : Eigen::MatrixXd(s.n, 0);
  const Eigen::MatrixXd gamma = Eigen::MatrixXd::Constant(s.J, s.P, 0.3) + uniform_matrix(rng, s.J, s.P);
  const Eigen::VectorXd u = normal_matrix(rng, s.n, 1).col(0) * s.noise;
  const Eigen::MatrixXd e = normal_matrix(rng, s.n, s.P) + 0.5 * u.replicate(1, s.P);
  p.X = p.Z * gamma + e;
  if (s.K) p.X += p.W * Eigen::MatrixXd::Constant(s.K, s.P, 0.2);
  Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(s.P, 0.5, 1.0);
  p.y = p.X * beta + u;
  if (s.alpha.size()) p.y += p.Z * s.alpha;
  if (s.K) p.y += p.W * Eigen::VectorXd::Constant(s.K, -0.3);
  if (s.weights) {
    Eigen::VectorXd w(s.n);
    for (int i = 0; i < s.n; ++i) w(i) = rng.uniform(0.5, 2.0);
    p.weights = w;
  }
  if (s.clusters > 0) {
    std::vector<std::string> c;
    for (int i = 0; i < s.n; ++i) c.push_back("g" + std::to_string(i % s.clusters));
    p.clusters = c;
  }
  return Dataset(std::move(p));
}

// Five shares A..E at n = 722; A, B, C valid, D and E with direct effect 0.5
// so their just-identified estimates converge to 0.5 while beta0 = 0.
inline Dataset toy_dataset(std::uint64_t seed = 722) {
  Rng rng(seed);
  const int n = 722;
  DatasetParts p;
  p.Z = uniform_matrix(rng, n, 5);
  Eigen::VectorXd u(n), e(n);
  for (int i = 0; i < n; ++i) {
    u(i) = rng.normal();
    e(i) = 0.5 * u(i) + std::sqrt(0.75) * rng.normal();
  }
  p.X = p.Z * Eigen::VectorXd::Ones(5) + e;
  Eigen::VectorXd alpha(5);
  alpha << 0, 0, 0, 0.5, 0.5;
  p.y = p.Z * alpha + u;
  p.y_name = "dwage";
  p.x_names = {"dimm"};
  p.z_names = {"A", "B", "C", "D", "E"};
  return Dataset(std::move(p));
}

// Weighted-space copies of raw matrices for explicit oracles.
inline Eigen::MatrixXd sw(const Dataset& d, const Eigen::MatrixXd& m) {
  return d.weights().cwiseSqrt().asDiagonal() * m;
}

inline Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

inline Eigen::MatrixXd cols_of(const Eigen::MatrixXd& m, const IndexSet& s) {
  Eigen::MatrixXd out(m.rows(), s.size());
  for (int k = 0; k < s.size(); ++k) out.col(k) = m.col(s[k]);
  return out;
}

// P_Q A by QR, independent of the normal-equation engine.
inline Eigen::MatrixXd project(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& A) {
  if (Q.cols() == 0) return Eigen::MatrixXd::Zero(A.rows(), A.cols());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Q);
  return Q * qr.solve(A);
}

struct Explicit2sls {
  Eigen::VectorXd coef;
  Eigen::MatrixXd R, Q, Rhat;
  Eigen::VectorXd y, resid;
};

// Textbook 2SLS: regress y on P_Q R, R = [X, Z_invalid, W], Q = [Z_valid, Z_invalid, W].
inline Explicit2sls explicit_2sls(const Dataset& d, const IndexSet& valid, const IndexSet& invalid) {
  Explicit2sls r;
  r.y = sw(d, d.y());
  const Eigen::MatrixXd X = sw(d, d.X()), Z = sw(d, d.Z()), W = sw(d, d.W());
  r.R = hcat(hcat(X, cols_of(Z, invalid)), W);
  r.Q = hcat(hcat(cols_of(Z, valid), cols_of(Z, invalid)), W);
  r.Rhat = project(r.Q, r.R);
  r.coef = r.Rhat.colPivHouseholderQr().solve(r.y);
  r.resid = r.y - r.R * r.coef;
  return r;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testutil
