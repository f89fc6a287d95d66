#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "shiftshare/csv.hpp"
#include "shiftshare/error.hpp"
#include "shiftshare/index_set.hpp"

namespace shiftshare {

// (unit, time) identifiers of a panel row. Time is numeric so that periods
// order naturally.
struct RowKey {
  std::string unit;
  double time = 0.0;
  friend bool operator==(const RowKey&, const RowKey&) = default;
};

struct DatasetParts {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd W;
  std::optional<Eigen::VectorXd> weights;
  std::optional<std::vector<std::string>> clusters;
  std::optional<std::vector<RowKey>> keys;
  std::string y_name = "y";
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  std::vector<std::string> w_names;
};

// Outcome y (n), treatments X (n x P), candidate instruments Z (n x J),
// exogenous controls W (n x K). Validated on construction and immutable after.
class Dataset {
 public:
  explicit Dataset(DatasetParts parts) : p_(std::move(parts)) {
    if (p_.W.size() == 0) p_.W.resize(p_.y.size(), 0);
    fill_default_names();
    validate();
    if (p_.clusters) {
      std::unordered_map<std::string, std::int64_t> ids;
      cluster_ids_.reserve(p_.clusters->size());
      for (const auto& c : *p_.clusters) {
        auto [it, inserted] = ids.try_emplace(c, static_cast<std::int64_t>(ids.size()));
        cluster_ids_.push_back(it->second);
      }
      n_clusters_ = static_cast<int>(ids.size());
    } else {
      cluster_ids_.resize(static_cast<std::size_t>(n()));
      for (int i = 0; i < n(); ++i) cluster_ids_[static_cast<std::size_t>(i)] = i;
      n_clusters_ = n();
    }
  }

  int n() const { return static_cast<int>(p_.y.size()); }
  int P() const { return static_cast<int>(p_.X.cols()); }
  int J() const { return static_cast<int>(p_.Z.cols()); }
  int K() const { return static_cast<int>(p_.W.cols()); }

  const Eigen::VectorXd& y() const { return p_.y; }
  const Eigen::MatrixXd& X() const { return p_.X; }
  const Eigen::MatrixXd& Z() const { return p_.Z; }
  const Eigen::MatrixXd& W() const { return p_.W; }

  bool has_weights() const { return p_.weights.has_value(); }
  // Analytic weights rescaled to mean one; all ones when absent.
  Eigen::VectorXd weights() const {
    if (!p_.weights) return Eigen::VectorXd::Ones(n());
    return *p_.weights * (static_cast<double>(n()) / p_.weights->sum());
  }
  const std::optional<Eigen::VectorXd>& raw_weights() const { return p_.weights; }

  bool has_clusters() const { return p_.clusters.has_value(); }
  const std::optional<std::vector<std::string>>& cluster_labels() const { return p_.clusters; }
  // Dense 0-based cluster ids; singleton clusters when no cluster column.
  const std::vector<std::int64_t>& cluster_ids() const { return cluster_ids_; }
  int n_clusters() const { return n_clusters_; }

  const std::optional<std::vector<RowKey>>& keys() const { return p_.keys; }

  const std::string& y_name() const { return p_.y_name; }
  const std::vector<std::string>& x_names() const { return p_.x_names; }
  const std::vector<std::string>& z_names() const { return p_.z_names; }
  const std::vector<std::string>& w_names() const { return p_.w_names; }

  const DatasetParts& parts() const { return p_; }

  std::optional<int> z_index(const std::string& name) const {
    for (int j = 0; j < J(); ++j)
      if (p_.z_names[static_cast<std::size_t>(j)] == name) return j;
    return std::nullopt;
  }

 private:
  void fill_default_names() {
    auto fill = [](std::vector<std::string>& names, Eigen::Index count, const char* stub) {
      if (names.empty())
        for (Eigen::Index j = 0; j < count; ++j) names.push_back(stub + std::to_string(j + 1));
    };
    fill(p_.x_names, p_.X.cols(), "x");
    fill(p_.z_names, p_.Z.cols(), "z");
    fill(p_.w_names, p_.W.cols(), "w");
  }

  void validate() const {
    const Eigen::Index n = p_.y.size();
    if (p_.X.cols() < 1) detail::fail(ErrorKind::invalid_argument, "at least one treatment column required");
    if (p_.Z.cols() < 1) detail::fail(ErrorKind::invalid_argument, "at least one instrument column required");
    if (p_.W.rows() == 0 && p_.W.cols() == 0) {
      // empty control block is always fine
    } else if (p_.W.rows() != n) {
      detail::fail(ErrorKind::invalid_argument, "control matrix has ", p_.W.rows(), " rows, expected ", n);
    }
    if (p_.X.rows() != n || p_.Z.rows() != n)
      detail::fail(ErrorKind::invalid_argument, "row counts differ: y=", n, " X=", p_.X.rows(), " Z=",
                   p_.Z.rows());
    if (static_cast<std::size_t>(p_.X.cols()) != p_.x_names.size() ||
        static_cast<std::size_t>(p_.Z.cols()) != p_.z_names.size() ||
        static_cast<std::size_t>(p_.W.cols()) != p_.w_names.size())
      detail::fail(ErrorKind::invalid_argument, "column name count does not match matrix width");
    if (p_.Z.cols() < p_.X.cols())
      detail::fail(ErrorKind::underidentified, "J=", p_.Z.cols(), " instruments for P=", p_.X.cols(),
                   " treatments");
    if (n <= p_.X.cols() + p_.Z.cols() + p_.W.cols())
      detail::fail(ErrorKind::invalid_argument, "n=", n, " must exceed P+J+K=",
                   p_.X.cols() + p_.Z.cols() + p_.W.cols());

    auto check_finite = [](const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          if (!std::isfinite(m(i, j)))
            detail::fail(ErrorKind::non_finite, "non-finite value at row ", i + 1, ", column '",
                         names[static_cast<std::size_t>(j)], "'");
    };
    check_finite(p_.y, {p_.y_name});
    check_finite(p_.X, p_.x_names);
    check_finite(p_.Z, p_.z_names);
    if (p_.W.size()) check_finite(p_.W, p_.w_names);

    if (p_.weights) {
      if (p_.weights->size() != n) detail::fail(ErrorKind::invalid_argument, "weights length mismatch");
      for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite((*p_.weights)(i)) || (*p_.weights)(i) <= 0.0)
          detail::fail(ErrorKind::invalid_argument, "weight at row ", i + 1, " is not strictly positive");
    }
    if (p_.clusters && static_cast<Eigen::Index>(p_.clusters->size()) != n)
      detail::fail(ErrorKind::invalid_argument, "cluster vector length mismatch");
    if (p_.keys && static_cast<Eigen::Index>(p_.keys->size()) != n)
      detail::fail(ErrorKind::invalid_argument, "row key vector length mismatch");

    if (auto dep = first_dependent_column(p_.Z))
      detail::fail(ErrorKind::rank_deficient, "instrument matrix is rank deficient: column ", *dep + 1, " ('",
                   p_.z_names[static_cast<std::size_t>(*dep)], "') is linearly dependent on earlier columns");
  }

 public:
  // Index of the first column lying in the span of the preceding ones.
  static std::optional<int> first_dependent_column(const Eigen::MatrixXd& m, double tol = 1e-10) {
    if (m.cols() == 0) return std::nullopt;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(tol);
    if (qr.rank() == m.cols()) return std::nullopt;
    for (Eigen::Index j = 1; j <= m.cols(); ++j) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> sub(m.leftCols(j));
      sub.setThreshold(tol);
      if (sub.rank() < j) return static_cast<int>(j - 1);
    }
    return static_cast<int>(m.cols() - 1);
  }

 private:
  DatasetParts p_;
  std::vector<std::int64_t> cluster_ids_;
  int n_clusters_ = 0;
};

// Which file columns play which role.
struct ColumnRoles {
  std::string y;
  std::vector<std::string> x;
  std::vector<std::string> z_list;
  std::optional<std::string> z_stub;
  std::vector<std::string> controls;
  std::optional<std::string> weights;
  std::optional<std::string> cluster;
  std::optional<std::string> unit;
  std::optional<std::string> time;
  bool add_constant = false;
};

inline std::vector<std::string> resolve_instruments(const Table& t, const ColumnRoles& roles) {
  std::vector<std::string> z = roles.z_list;
  if (roles.z_stub) {
    std::vector<std::string> taken{roles.y};
    taken.insert(taken.end(), roles.x.begin(), roles.x.end());
    taken.insert(taken.end(), roles.controls.begin(), roles.controls.end());
    for (const auto* o : {&roles.weights, &roles.cluster, &roles.unit, &roles.time})
      if (*o) taken.push_back(**o);
    auto has = [](const std::vector<std::string>& v, const std::string& s) {
      return std::find(v.begin(), v.end(), s) != v.end();
    };
    for (const auto& h : t.header)
      if (h.rfind(*roles.z_stub, 0) == 0 && !has(z, h) && !has(taken, h)) z.push_back(h);
  }
  return z;
}

inline Dataset load_dataset(const Table& t, const ColumnRoles& roles) {
  if (roles.y.empty()) detail::fail(ErrorKind::invalid_argument, "no outcome column named");
  if (roles.x.empty()) detail::fail(ErrorKind::invalid_argument, "no treatment column named");
  const auto z_cols = resolve_instruments(t, roles);
  if (z_cols.empty()) detail::fail(ErrorKind::invalid_argument, "no instrument columns named or matched");

  const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
  auto numeric = [&](const std::vector<std::string>& names) {
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(names.size()));
    for (std::size_t c = 0; c < names.size(); ++c) {
      const int col = t.require_column(names[c]);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& cell = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)];
        auto v = parse_finite(cell);
        if (!v)
          detail::fail(ErrorKind::non_finite, "row ", i + 1, ", column '", names[c], "': '", cell,
                       "' is not a finite number");
        m(i, static_cast<Eigen::Index>(c)) = *v;
      }
    }
    return m;
  };

  DatasetParts p;
  p.y_name = roles.y;
  p.y = numeric({roles.y}).col(0);
  p.x_names = roles.x;
  p.X = numeric(roles.x);
  p.z_names = z_cols;
  p.Z = numeric(z_cols);
  p.w_names = roles.controls;
  p.W = numeric(roles.controls);
  if (roles.add_constant) {
    p.W.conservativeResize(n, p.W.cols() + 1);
    p.W.col(p.W.cols() - 1).setOnes();
    p.w_names.push_back("_cons");
  }
  if (roles.weights) p.weights = numeric({*roles.weights}).col(0);
  if (roles.cluster) {
    const int col = t.require_column(*roles.cluster);
    std::vector<std::string> cl;
    for (const auto& r : t.rows) cl.push_back(r[static_cast<std::size_t>(col)]);
    p.clusters = std::move(cl);
  }
  if (roles.unit || roles.time) {
    if (!roles.unit || !roles.time)
      detail::fail(ErrorKind::invalid_argument, "unit and time columns must be given together");
    const int uc = t.require_column(*roles.unit);
    const auto tm = numeric({*roles.time});
    std::vector<RowKey> keys;
    for (Eigen::Index i = 0; i < n; ++i)
      keys.push_back({t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(uc)], tm(i, 0)});
    p.keys = std::move(keys);
  }
  return Dataset(std::move(p));
}

// Writes the dataset back as delimited text; reloading with
// roles_for_written(d) reproduces it bit-identically.
inline void write_dataset(std::ostream& os, const Dataset& d, char delim = ',') {
  std::vector<std::string> head{d.y_name()};
  for (const auto& s : d.x_names()) head.push_back(s);
  for (const auto& s : d.z_names()) head.push_back(s);
  for (const auto& s : d.w_names()) head.push_back(s);
  if (d.has_weights()) head.push_back("_weight");
  if (d.has_clusters()) head.push_back("_cluster");
  if (d.keys()) {
    head.push_back("_unit");
    head.push_back("_time");
  }
  for (std::size_t i = 0; i < head.size(); ++i) os << (i ? std::string(1, delim) : "") << head[i];
  os << '\n';
  for (int i = 0; i < d.n(); ++i) {
    os << format_double(d.y()(i));
    for (int j = 0; j < d.P(); ++j) os << delim << format_double(d.X()(i, j));
    for (int j = 0; j < d.J(); ++j) os << delim << format_double(d.Z()(i, j));
    for (int j = 0; j < d.K(); ++j) os << delim << format_double(d.W()(i, j));
    if (d.has_weights()) os << delim << format_double((*d.raw_weights())(i));
    if (d.has_clusters()) os << delim << (*d.cluster_labels())[static_cast<std::size_t>(i)];
    if (d.keys()) {
      const auto& k = (*d.keys())[static_cast<std::size_t>(i)];
      os << delim << k.unit << delim << format_double(k.time);
    }
    os << '\n';
  }
}

inline ColumnRoles roles_for_written(const Dataset& d) {
  ColumnRoles r;
  r.y = d.y_name();
  r.x = d.x_names();
  r.z_list = d.z_names();
  r.controls = d.w_names();
  if (d.has_weights()) r.weights = "_weight";
  if (d.has_clusters()) r.cluster = "_cluster";
  if (d.keys()) {
    r.unit = "_unit";
    r.time = "_time";
  }
  return r;
}

// Copy of d with Z, X, W replaced; used by transforms and simulations.
inline Dataset with_parts(const Dataset& d, auto&& edit) {
  DatasetParts p = d.parts();
  edit(p);
  return Dataset(std::move(p));
}

// Differences y and X within unit over consecutive panel periods. Instruments,
// controls, weights and clusters are taken from the later period of each pair.
inline Dataset first_difference(const Dataset& panel, std::vector<std::string>* warnings = nullptr) {
  if (!panel.keys()) detail::fail(ErrorKind::invalid_argument, "first_difference needs unit and time keys");
  const auto& keys = *panel.keys();

  std::set<double> period_set;
  for (const auto& k : keys) period_set.insert(k.time);
  const std::vector<double> periods(period_set.begin(), period_set.end());
  auto period_pos = [&](double t) {
    return static_cast<int>(std::lower_bound(periods.begin(), periods.end(), t) - periods.begin());
  };

  std::map<std::string, std::vector<int>> by_unit;
  std::vector<std::string> unit_order;
  for (int i = 0; i < panel.n(); ++i) {
    auto [it, inserted] = by_unit.try_emplace(keys[static_cast<std::size_t>(i)].unit);
    if (inserted) unit_order.push_back(it->first);
    it->second.push_back(i);
  }

  std::vector<std::string> gaps;
  std::vector<std::pair<int, int>> pairs;  // (earlier row, later row)
  for (const auto& u : unit_order) {
    auto rows = by_unit[u];
    std::sort(rows.begin(), rows.end(), [&](int a, int b) {
      return keys[static_cast<std::size_t>(a)].time < keys[static_cast<std::size_t>(b)].time;
    });
    if (rows.size() == 1) {
      if (warnings) warnings->push_back("unit '" + u + "' has a single period and contributes no differences");
      continue;
    }
    bool gap = false;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const int a = period_pos(keys[static_cast<std::size_t>(rows[r - 1])].time);
      const int b = period_pos(keys[static_cast<std::size_t>(rows[r])].time);
      if (b != a + 1) gap = true;
      pairs.emplace_back(rows[r - 1], rows[r]);
    }
    if (gap) gaps.push_back(u);
  }
  if (!gaps.empty()) {
    std::string list;
    for (std::size_t i = 0; i < gaps.size(); ++i) list += (i ? ", " : "") + gaps[i];
    detail::fail(ErrorKind::panel_gap, "non-consecutive periods (or duplicates) for units: ", list);
  }

  const auto m = static_cast<Eigen::Index>(pairs.size());
  const auto& src = panel.parts();
  DatasetParts p;
  p.y_name = src.y_name;
  p.x_names = src.x_names;
  p.z_names = src.z_names;
  p.w_names = src.w_names;
  p.y.resize(m);
  p.X.resize(m, panel.P());
  p.Z.resize(m, panel.J());
  p.W.resize(m, panel.K());
  if (src.weights) p.weights = Eigen::VectorXd(m);
  if (src.clusters) p.clusters = std::vector<std::string>();
  p.keys = std::vector<RowKey>();
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto [a, b] = pairs[static_cast<std::size_t>(r)];
    p.y(r) = src.y(b) - src.y(a);
    p.X.row(r) = src.X.row(b) - src.X.row(a);
    p.Z.row(r) = src.Z.row(b);
    if (panel.K()) p.W.row(r) = src.W.row(b);
    if (src.weights) (*p.weights)(r) = (*src.weights)(b);
    if (src.clusters) p.clusters->push_back((*src.clusters)[static_cast<std::size_t>(b)]);
    p.keys->push_back(keys[static_cast<std::size_t>(b)]);
  }
  return Dataset(std::move(p));
}

// Subtracts period means from every instrument column (optional
// preprocessing; off unless requested).
inline Dataset demean_instruments_within_period(const Dataset& d) {
  if (!d.keys()) detail::fail(ErrorKind::invalid_argument, "within-period demeaning needs time keys");
  return with_parts(d, [&](DatasetParts& p) {
    std::map<double, std::vector<int>> groups;
    for (int i = 0; i < d.n(); ++i) groups[(*p.keys)[static_cast<std::size_t>(i)].time].push_back(i);
    for (const auto& [t, rows] : groups) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d.J());
      for (int i : rows) mean += p.Z.row(i);
      mean /= static_cast<double>(rows.size());
      for (int i : rows) p.Z.row(i) -= mean;
    }
  });
}

// ---------------------------------------------------------------------------
// Shift-share inputs

struct ShareRecord {
  std::string location;
  std::string cls;
  double share = 0.0;
};

struct ShiftRecord {
  std::string cls;
  double period = 0.0;
  double shift = 0.0;
};

// Long-format base-period shares (location x class) and class shifts
// (class x period). Shares are not renormalised; sums below one are allowed.
class ShiftShareInputs {
 public:
  ShiftShareInputs(std::vector<ShareRecord> shares, std::vector<ShiftRecord> shifts) {
    for (const auto& s : shares) {
      if (!std::isfinite(s.share) || s.share < 0.0)
        detail::fail(ErrorKind::invalid_argument, "share for (", s.location, ", ", s.cls,
                     ") must be finite and non-negative");
      const int l = intern(locations_, loc_index_, s.location);
      const int c = intern(classes_, class_index_, s.cls);
      if (!share_.emplace(std::pair{l, c}, s.share).second)
        detail::fail(ErrorKind::invalid_argument, "duplicate share record for (", s.location, ", ", s.cls, ")");
    }
    std::set<double> ps;
    for (const auto& s : shifts) {
      if (!std::isfinite(s.shift)) detail::fail(ErrorKind::non_finite, "non-finite shift for class ", s.cls);
      auto it = class_index_.find(s.cls);
      int c = (it == class_index_.end()) ? intern(classes_, class_index_, s.cls) : it->second;
      if (!shift_.emplace(std::pair{c, s.period}, s.shift).second)
        detail::fail(ErrorKind::invalid_argument, "duplicate shift record for (", s.cls, ", ", s.period, ")");
      ps.insert(s.period);
    }
    periods_.assign(ps.begin(), ps.end());
    std::vector<double> sums(locations_.size(), 0.0);
    for (const auto& [lc, v] : share_) sums[static_cast<std::size_t>(lc.first)] += v;
    for (std::size_t l = 0; l < sums.size(); ++l)
      if (sums[l] > 1.0 + 1e-8)
        detail::fail(ErrorKind::invalid_argument, "shares of location '", locations_[l], "' sum to ", sums[l],
                     " > 1");
  }

  const std::vector<std::string>& locations() const { return locations_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<double>& periods() const { return periods_; }

  std::optional<int> class_index(const std::string& name) const {
    auto it = class_index_.find(name);
    if (it == class_index_.end()) return std::nullopt;
    return it->second;
  }

  double share(int location, int cls) const {
    auto it = share_.find({location, cls});
    return it == share_.end() ? 0.0 : it->second;
  }

  std::optional<double> shift(int cls, double period) const {
    auto it = shift_.find({cls, period});
    if (it == shift_.end()) return std::nullopt;
    return it->second;
  }

 private:
  static int intern(std::vector<std::string>& list, std::map<std::string, int>& index, const std::string& key) {
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(list.size()));
    if (inserted) list.push_back(key);
    return it->second;
  }

  std::vector<std::string> locations_, classes_;
  std::vector<double> periods_;
  std::map<std::string, int> loc_index_, class_index_;
  std::map<std::pair<int, int>, double> share_;
  std::map<std::pair<int, double>, double> shift_;
};

// Shares file columns: location, class, share. Shifts file: class, period, shift.
inline ShiftShareInputs load_shift_share(const Table& shares, const Table& shifts) {
  const int lc = shares.require_column("location"), cc = shares.require_column("class"),
            sc = shares.require_column("share");
  std::vector<ShareRecord> sr;
  for (std::size_t i = 0; i < shares.rows.size(); ++i) {
    const auto& r = shares.rows[i];
    auto v = parse_finite(r[static_cast<std::size_t>(sc)]);
    if (!v) detail::fail(ErrorKind::non_finite, "shares row ", i + 1, ": share is not a finite number");
    sr.push_back({r[static_cast<std::size_t>(lc)], r[static_cast<std::size_t>(cc)], *v});
  }
  const int gc = shifts.require_column("class"), pc = shifts.require_column("period"),
            vc = shifts.require_column("shift");
  std::vector<ShiftRecord> gr;
  for (std::size_t i = 0; i < shifts.rows.size(); ++i) {
    const auto& r = shifts.rows[i];
    auto per = parse_finite(r[static_cast<std::size_t>(pc)]);
    auto v = parse_finite(r[static_cast<std::size_t>(vc)]);
    if (!per || !v) detail::fail(ErrorKind::non_finite, "shifts row ", i + 1, ": non-numeric period or shift");
    gr.push_back({r[static_cast<std::size_t>(gc)], *per, *v});
  }
  return ShiftShareInputs(std::move(sr), std::move(gr));
}

struct SsivCell {
  std::string location;
  double period = 0.0;
  double value = 0.0;
};

// s_lt = sum over the valid classes of share_lj * shift_jt, on the full
// location x period grid (location-major, periods ascending).
inline std::vector<SsivCell> build_ssiv(const ShiftShareInputs& in, const IndexSet& valid_classes) {
  if (valid_classes.empty()) detail::fail(ErrorKind::invalid_argument, "valid class set is empty");
  const int C = static_cast<int>(in.classes().size());
  for (int c : valid_classes)
    if (c < 0 || c >= C) detail::fail(ErrorKind::invalid_argument, "class index ", c + 1, " out of range");
  for (int c : valid_classes)
    for (double t : in.periods())
      if (!in.shift(c, t))
        detail::fail(ErrorKind::missing_key, "missing shift for (class '", in.classes()[static_cast<std::size_t>(c)],
                     "', period ", t, ")");
  std::vector<SsivCell> out;
  out.reserve(in.locations().size() * in.periods().size());
  for (int l = 0; l < static_cast<int>(in.locations().size()); ++l)
    for (double t : in.periods()) {
      double s = 0.0;
      for (int c : valid_classes) s += in.share(l, c) * *in.shift(c, t);
      out.push_back({in.locations()[static_cast<std::size_t>(l)], t, s});
    }
  return out;
}

inline IndexSet class_set_from_names(const ShiftShareInputs& in, const std::vector<std::string>& names) {
  std::vector<int> idx;
  for (const auto& nm : names) {
    auto c = in.class_index(nm);
    if (!c) detail::fail(ErrorKind::missing_key, "class '", nm, "' not present in share/shift tables");
    idx.push_back(*c);
  }
  return IndexSet(std::move(idx));
}

}  // namespace shiftshare
