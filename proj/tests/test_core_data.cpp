#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace shiftshare;
using testutil::uniform_matrix;

namespace {

Table parse(const std::string& text) {
  std::istringstream in(text);
  return read_table(in);
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::io;
}

std::string csv_of(const Eigen::MatrixXd& m, const std::vector<std::string>& head) {
  std::ostringstream os;
  for (std::size_t j = 0; j < head.size(); ++j) os << (j ? "," : "") << head[j];
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
  return os.str();
}

ColumnRoles yxz(std::vector<std::string> z) {
  ColumnRoles r;
  r.y = "y";
  r.x = {"x"};
  r.z_list = std::move(z);
  return r;
}

}  // namespace

TEST(LoadDataset, FiveColumnFileMapsRoles) {
  Rng rng(1);
  const auto m = uniform_matrix(rng, 12, 5);
  const auto d = load_dataset(parse(csv_of(m, {"y", "x", "z1", "z2", "z3"})), yxz({"z1", "z2", "z3"}));
  EXPECT_EQ(d.n(), 12);
  EXPECT_EQ(d.P(), 1);
  EXPECT_EQ(d.J(), 3);
  EXPECT_EQ(d.K(), 0);
  EXPECT_EQ(d.Z()(4, 1), m(4, 3));
  EXPECT_EQ(d.z_names(), (std::vector<std::string>{"z1", "z2", "z3"}));
}

TEST(LoadDataset, InstrumentOrderFollowsRoles) {
  Rng rng(2);
  const auto m = uniform_matrix(rng, 10, 5);
  const auto d = load_dataset(parse(csv_of(m, {"y", "x", "z1", "z2", "z3"})), yxz({"z3", "z1", "z2"}));
  EXPECT_EQ(d.Z()(0, 0), m(0, 4));
  EXPECT_EQ(d.z_names()[0], "z3");
}

TEST(LoadDataset, StubMatchesPrefixedColumnsOnly) {
  Rng rng(3);
  const auto m = uniform_matrix(rng, 10, 6);
  ColumnRoles r = yxz({});
  r.z_stub = "sh_";
  r.controls = {"sh_ctrl"};
  const auto d = load_dataset(parse(csv_of(m, {"y", "x", "sh_a", "other", "sh_b", "sh_ctrl"})), r);
  EXPECT_EQ(d.z_names(), (std::vector<std::string>{"sh_a", "sh_b"}));
  EXPECT_EQ(d.K(), 1);
}

TEST(LoadDataset, DuplicateInstrumentIsRankError) {
  Rng rng(4);
  Eigen::MatrixXd m = uniform_matrix(rng, 10, 5);
  m.col(4) = m.col(3);
  EXPECT_EQ(kind_of([&] { load_dataset(parse(csv_of(m, {"y", "x", "z1", "z2", "z3"})), yxz({"z1", "z2", "z3"})); }),
            ErrorKind::rank_deficient);
  try {
    load_dataset(parse(csv_of(m, {"y", "x", "z1", "z2", "z3"})), yxz({"z1", "z2", "z3"}));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("z3"), std::string::npos);
  }
}

TEST(LoadDataset, ConstantDuplicateInstrumentIsRankError) {
  Rng rng(5);
  Eigen::MatrixXd m = uniform_matrix(rng, 10, 4);
  m.col(3).setConstant(0.25);
  Eigen::MatrixXd m2(10, 5);
  m2 << m, Eigen::VectorXd::Constant(10, 0.25);
  EXPECT_EQ(kind_of([&] { load_dataset(parse(csv_of(m2, {"y", "x", "z1", "z2", "z3"})), yxz({"z1", "z2", "z3"})); }),
            ErrorKind::rank_deficient);
}

TEST(LoadDataset, MissingColumnIsNamed) {
  Rng rng(6);
  const auto m = uniform_matrix(rng, 10, 4);
  try {
    load_dataset(parse(csv_of(m, {"y", "x", "z1", "z2"})), yxz({"z1", "zz"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_column);
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
  }
}

TEST(LoadDataset, NonFiniteCellIsLocated) {
  const std::string text = "y,x,z1,z2\n1,2,0.1,0.2\n2,3,NA,0.3\n3,1,0.5,0.1\n4,4,0.2,0.9\n";
  try {
    load_dataset(parse(text), yxz({"z1", "z2"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_finite);
    const std::string w = e.what();
    EXPECT_NE(w.find("row 2"), std::string::npos);
    EXPECT_NE(w.find("z1"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { load_dataset(parse("y,x,z1\n1,2,inf\n2,1,3\n3,3,4\n"), yxz({"z1"})); }),
            ErrorKind::non_finite);
}

TEST(LoadDataset, WeightsDefaultToOneAndClustersToSingletons) {
  Rng rng(7);
  const auto d = load_dataset(parse(csv_of(uniform_matrix(rng, 8, 4), {"y", "x", "z1", "z2"})), yxz({"z1", "z2"}));
  EXPECT_FALSE(d.has_weights());
  EXPECT_TRUE(d.weights().isOnes());
  EXPECT_EQ(d.n_clusters(), 8);
}

TEST(LoadDataset, NonPositiveWeightRejected) {
  ColumnRoles r = yxz({"z1"});
  r.weights = "w";
  EXPECT_EQ(kind_of([&] { load_dataset(parse("y,x,z1,w\n1,2,1,1\n2,1,3,0\n3,3,4,1\n"), r); }),
            ErrorKind::invalid_argument);
}

TEST(LoadDataset, TabDelimited) {
  std::istringstream in("y\tx\tz1\n1\t2\t0.5\n2\t1\t0.25\n3\t3\t0.75\n");
  const auto d = load_dataset(read_table(in, '\t'), yxz({"z1"}));
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.Z()(1, 0), 0.25);
}

TEST(LoadDataset, MigrationPanelShape) {
  Rng rng(8);
  const int locs = 722, periods = 3, J = 19;
  std::ostringstream os;
  os << "cz,year,dwage,dimm";
  for (int j = 1; j <= J; ++j) os << ",sh" << j;
  os << '\n';
  for (int l = 0; l < locs; ++l)
    for (int t = 0; t < periods; ++t) {
      os << "cz" << l << ',' << 1990 + 10 * t << ',' << rng.normal() << ',' << rng.normal();
      for (int j = 0; j < J; ++j) os << ',' << rng.uniform(0.0, 0.05);
      os << '\n';
    }
  ColumnRoles r;
  r.y = "dwage";
  r.x = {"dimm"};
  r.z_stub = "sh";
  r.unit = "cz";
  r.time = "year";
  r.cluster = "cz";
  const auto d = load_dataset(parse(os.str()), r);
  EXPECT_EQ(d.n(), 2166);
  EXPECT_EQ(d.J(), 19);
  EXPECT_EQ(d.n_clusters(), 722);
}

TEST(LoadDataset, RoundTripIsBitIdentical) {
  Rng rng(9);
  testutil::RandomSpec s;
  s.n = 50;
  s.K = 2;
  s.weights = true;
  s.clusters = 7;
  const Dataset d = testutil::random_dataset(s, 99);
  std::ostringstream os;
  write_dataset(os, d);
  const Dataset back = load_dataset(parse(os.str()), roles_for_written(d));
  EXPECT_EQ(back.y(), d.y());
  EXPECT_EQ(back.X(), d.X());
  EXPECT_EQ(back.Z(), d.Z());
  EXPECT_EQ(back.W(), d.W());
  EXPECT_EQ(back.weights(), d.weights());
  EXPECT_EQ(*back.cluster_labels(), *d.cluster_labels());
  EXPECT_EQ(back.z_names(), d.z_names());
}

namespace {

Dataset panel(const std::vector<std::tuple<std::string, double, double, double>>& rows) {
  DatasetParts p;
  const auto n = static_cast<Eigen::Index>(rows.size());
  p.y.resize(n);
  p.X.resize(n, 1);
  p.Z.resize(n, 1);
  std::vector<RowKey> keys;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [u, t, y, x] = rows[static_cast<std::size_t>(i)];
    p.y(i) = y;
    p.X(i, 0) = x;
    p.Z(i, 0) = 0.1 * static_cast<double>(i + 1);
    keys.push_back({u, t});
  }
  p.keys = keys;
  return Dataset(std::move(p));
}

}  // namespace

TEST(FirstDifference, ThreePeriodUnit) {
  const auto d = panel({{"a", 1990, 1, 0}, {"a", 2000, 3, 0}, {"a", 2010, 6, 0}, {"b", 1990, 0, 1}, {"b", 2000, 0, 2},
                        {"b", 2010, 0, 3}});
  const auto fd = first_difference(d);
  ASSERT_EQ(fd.n(), 4);
  EXPECT_DOUBLE_EQ(fd.y()(0), 2.0);
  EXPECT_DOUBLE_EQ(fd.y()(1), 3.0);
}

TEST(FirstDifference, TwoUnitHandComputed) {
  // unit u: y 5 -> 2 -> 4, x 1 -> 1.5 -> 0.5; unit v (rows out of order): y 10 -> 7 -> 7.5, x 0 -> -1 -> 2
  const auto d = panel({{"u", 1, 5, 1}, {"v", 2, 7, -1}, {"u", 2, 2, 1.5}, {"v", 1, 10, 0}, {"u", 3, 4, 0.5},
                        {"v", 3, 7.5, 2}, {"w", 1, 1, 1}, {"w", 2, 1, 1}});
  const auto fd = first_difference(d);
  ASSERT_EQ(fd.n(), 5);
  const std::vector<double> dy{-3, 2, -3, 0.5, 0}, dx{0.5, -1, -1, 3, 0};
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(fd.y()(i), dy[static_cast<std::size_t>(i)]);
    EXPECT_DOUBLE_EQ(fd.X()(i, 0), dx[static_cast<std::size_t>(i)]);
  }
  // instruments come from the later period
  EXPECT_DOUBLE_EQ(fd.Z()(0, 0), d.Z()(2, 0));
  EXPECT_EQ((*fd.keys())[3].unit, "v");
  EXPECT_EQ((*fd.keys())[3].time, 3.0);
}

TEST(FirstDifference, SinglePeriodUnitWarns) {
  const auto d = panel({{"a", 1, 1, 0}, {"a", 2, 2, 1}, {"a", 3, 4, 3}, {"a", 4, 5, 3}, {"b", 2, 9, 9}});
  std::vector<std::string> w;
  const auto fd = first_difference(d, &w);
  EXPECT_EQ(fd.n(), 3);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("'b'"), std::string::npos);
}

TEST(FirstDifference, GapListsOffendingUnits) {
  const auto d = panel({{"a", 1, 1, 0}, {"a", 2, 2, 1}, {"a", 3, 4, 3}, {"b", 1, 1, 0}, {"b", 3, 2, 1}, {"c", 1, 1, 1},
                        {"c", 2, 1, 2}});
  try {
    first_difference(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::panel_gap);
    const std::string w = e.what();
    EXPECT_EQ(w.substr(w.rfind(':')), ": b");
  }
}

TEST(FirstDifference, UnitConstantSeriesIsZero) {
  std::vector<std::tuple<std::string, double, double, double>> rows;
  Rng rng(10);
  for (int u = 0; u < 6; ++u) {
    const double y = rng.normal(), x = rng.normal();
    for (int t = 0; t < 4; ++t) rows.emplace_back("u" + std::to_string(u), t, y, x);
  }
  const auto fd = first_difference(panel(rows));
  EXPECT_EQ(fd.n(), 18);
  EXPECT_TRUE(fd.y().isZero(0.0));
  EXPECT_TRUE(fd.X().isZero(0.0));
}

TEST(Demean, PeriodMeansRemoved) {
  std::vector<std::tuple<std::string, double, double, double>> rows;
  for (int u = 0; u < 5; ++u)
    for (int t = 0; t < 2; ++t) rows.emplace_back("u" + std::to_string(u), t, u + t, u * t + 0.5 * u);
  const auto d = demean_instruments_within_period(panel(rows));
  double s0 = 0, s1 = 0;
  for (int i = 0; i < d.n(); ++i) ((*d.keys())[static_cast<std::size_t>(i)].time == 0 ? s0 : s1) += d.Z()(i, 0);
  EXPECT_NEAR(s0, 0.0, 1e-12);
  EXPECT_NEAR(s1, 0.0, 1e-12);
}

// ---------------------------------------------------------------------------

TEST(BuildSsiv, TwoClassesBothValid) {
  ShiftShareInputs in({{"l", "a", 0.5}, {"l", "b", 0.5}}, {{"a", 1, 2.0}, {"b", 1, 4.0}});
  const auto s = build_ssiv(in, IndexSet{0, 1});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].value, 3.0);
  EXPECT_DOUBLE_EQ(build_ssiv(in, IndexSet{0})[0].value, 1.0);
}

TEST(BuildSsiv, EmptyValidSetRejected) {
  ShiftShareInputs in({{"l", "a", 0.5}}, {{"a", 1, 2.0}});
  EXPECT_EQ(kind_of([&] { build_ssiv(in, IndexSet{}); }), ErrorKind::invalid_argument);
}

TEST(BuildSsiv, MissingShiftNamesClassAndPeriod) {
  ShiftShareInputs in({{"l", "a", 0.5}, {"l", "b", 0.2}}, {{"a", 1, 2.0}, {"a", 2, 1.0}, {"b", 1, 4.0}});
  try {
    build_ssiv(in, IndexSet{0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_key);
    const std::string w = e.what();
    EXPECT_NE(w.find("'b'"), std::string::npos);
    EXPECT_NE(w.find("period 2"), std::string::npos);
  }
  // restricting to the class with complete shifts works
  EXPECT_NO_THROW(build_ssiv(in, IndexSet{0}));
}

TEST(BuildSsiv, SharesAboveOneRejected) {
  EXPECT_EQ(kind_of([] { ShiftShareInputs({{"l", "a", 0.7}, {"l", "b", 0.4}}, {{"a", 1, 1}, {"b", 1, 1}}); }),
            ErrorKind::invalid_argument);
}

namespace {

struct RandomShiftShare {
  std::vector<ShareRecord> shares;
  std::vector<ShiftRecord> shifts;
  std::map<std::pair<std::string, std::string>, double> z;
  std::map<std::pair<std::string, double>, double> g;
};

RandomShiftShare random_shift_share(std::uint64_t seed, int L, int C, int T) {
  Rng rng(seed);
  RandomShiftShare r;
  for (int l = 0; l < L; ++l) {
    std::vector<double> raw(static_cast<std::size_t>(C));
    double tot = 0;
    for (auto& v : raw) tot += (v = rng.uniform());
    for (int c = 0; c < C; ++c) {
      const double s = 0.9 * raw[static_cast<std::size_t>(c)] / tot;
      const std::string ln = "L" + std::to_string(l), cn = "c" + std::to_string(c);
      r.shares.push_back({ln, cn, s});
      r.z[{ln, cn}] = s;
    }
  }
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t) {
      const double v = rng.normal();
      r.shifts.push_back({"c" + std::to_string(c), 2000.0 + t, v});
      r.g[{"c" + std::to_string(c), 2000.0 + t}] = v;
    }
  return r;
}

}  // namespace

TEST(BuildSsiv, MatchesSummationOracle) {
  const auto r = random_shift_share(11, 15, 10, 3);
  const ShiftShareInputs in(r.shares, r.shifts);
  const IndexSet valid{0, 2, 3, 7, 9};
  const auto s = build_ssiv(in, valid);
  ASSERT_EQ(s.size(), 45u);
  for (const auto& cell : s) {
    double want = 0.0;
    for (int c : valid) {
      const std::string cn = "c" + std::to_string(c);
      want += r.z.at({cell.location, cn}) * r.g.at({cn, cell.period});
    }
    EXPECT_NEAR(cell.value, want, 1e-12);
  }
}

TEST(BuildSsiv, LinearOverClassPartition) {
  const auto r = random_shift_share(12, 9, 10, 2);
  const ShiftShareInputs in(r.shares, r.shifts);
  const auto full = build_ssiv(in, IndexSet::range(10));
  const auto a = build_ssiv(in, IndexSet{0, 1, 4, 8});
  const auto b = build_ssiv(in, IndexSet{2, 3, 5, 6, 7, 9});
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(full[i].value, a[i].value + b[i].value, 1e-12);
}

TEST(BuildSsiv, LoadsFromTables) {
  const auto shares = parse("location,class,share\nx,a,0.5\nx,b,0.5\ny,a,0.1\n");
  const auto shifts = parse("class,period,shift\na,1,2\nb,1,4\n");
  const auto in = load_shift_share(shares, shifts);
  const auto s = build_ssiv(in, class_set_from_names(in, {"a", "b"}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0].value, 3.0);
  EXPECT_DOUBLE_EQ(s[1].value, 0.2);
  EXPECT_EQ(kind_of([&] { class_set_from_names(in, {"zz"}); }), ErrorKind::missing_key);
}
