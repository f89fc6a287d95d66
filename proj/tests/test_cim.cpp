#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <map>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace shiftshare;
using namespace testutil;

TEST(Intervals, ZeroPsiIsDegenerate) {
  const auto iv = build_intervals(random_estimates(1, 6), 0.0);
  ASSERT_EQ(iv.items.size(), 6u);
  for (const auto& i : iv.items) EXPECT_EQ(i.lo, i.hi);
}

TEST(Intervals, SortedByLowerEndpoint) {
  const auto iv = build_intervals(random_estimates(2, 9), 1.3);
  for (std::size_t k = 1; k < iv.items.size(); ++k) EXPECT_LE(iv.items[k - 1].lo, iv.items[k].lo);
  for (const auto& i : iv.items) EXPECT_LE(i.lo, i.hi);
}

TEST(Intervals, DoublingPsiDoublesHalfWidth) {
  const auto ce = random_estimates(3, 7);
  const auto a = build_intervals(ce, 0.8), b = build_intervals(ce, 1.6);
  std::map<int, double> wa, wb;
  for (const auto& i : a.items) wa[i.index] = i.hi - i.lo;
  for (const auto& i : b.items) wb[i.index] = i.hi - i.lo;
  for (const auto& [j, w] : wa) EXPECT_DOUBLE_EQ(wb[j], 2.0 * w);
}

TEST(Intervals, NonFiniteSeExcludedWithWarning) {
  auto ce = estimates({0.0, 0.1, 0.2}, {0.1, std::numeric_limits<double>::quiet_NaN(), 0.1});
  const auto iv = build_intervals(ce, 1.0);
  EXPECT_EQ(iv.items.size(), 2u);
  EXPECT_EQ(iv.warnings.size(), 1u);
}

// ---------------------------------------------------------------------------

TEST(LargestGroup, MatchesBruteForceOn200Instances) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto ce = random_estimates(1000 + seed, 8);
    const double psi = 0.5 + static_cast<double>(seed % 7) * 0.5;
    const auto iv = build_intervals(ce, psi);
    EXPECT_EQ(largest_group(iv), brute_force_group(iv)) << seed;
  }
}

TEST(LargestGroup, DisjointGivesLowestIndex) {
  const auto iv = build_intervals(estimates({3.0, 0.0, 1.0, 2.0}, {0.1, 0.1, 0.1, 0.1}), 1.0);
  std::vector<std::string> w;
  EXPECT_EQ(largest_group(iv, &w), IndexSet{0});
  EXPECT_FALSE(w.empty());
}

TEST(LargestGroup, ToyGroupsABCAndDE) {
  const Dataset d = toy_dataset();
  const auto ce = just_identified(d);
  const auto iv = build_intervals(ce, 2.0);
  EXPECT_EQ(largest_group(iv), (IndexSet{0, 1, 2}));
  std::map<int, Interval> by;
  for (const auto& i : iv.items) by[i.index] = i;
  EXPECT_TRUE(overlap(by[3], by[4]));
  for (int a = 0; a < 3; ++a)
    for (int b = 3; b < 5; ++b) EXPECT_FALSE(overlap(by[a], by[b])) << a << b;
}

TEST(LargestGroup, PermutationInvariant) {
  std::mt19937_64 g(4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ce = random_estimates(2000 + seed, 7);
    const auto iv = build_intervals(ce, 1.5);
    if (count_largest_groups(iv) != 1) continue;  // the tie rule is label dependent
    const IndexSet base = largest_group(iv);
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    auto cp = ce;
    for (int j = 0; j < 7; ++j) cp.combos[static_cast<std::size_t>(j)] = IndexSet{perm[static_cast<std::size_t>(j)]};
    std::vector<int> mapped;
    for (int j : base) mapped.push_back(perm[static_cast<std::size_t>(j)]);
    EXPECT_EQ(largest_group(build_intervals(cp, 1.5)), IndexSet(mapped)) << seed;
  }
}

TEST(LargestGroup, WideningKeepsGroupOverlapping) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ce = random_estimates(3000 + seed, 8);
    double prev_size = 0;
    for (double psi = 0.25; psi < 6.0; psi *= 1.3) {
      const auto g = largest_group(build_intervals(ce, psi));
      EXPECT_GE(g.size(), prev_size);
      prev_size = g.size();
      // the group found at psi stays pairwise overlapping at any larger psi
      const auto wide = build_intervals(ce, psi * 1.7);
      std::vector<Interval> members;
      for (const auto& i : wide.items)
        if (g.contains(i.index)) members.push_back(i);
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) EXPECT_TRUE(overlap(members[a], members[b]));
    }
  }
}

// ---------------------------------------------------------------------------

TEST(Breakpoints, ClosedFormPair) {
  const auto bp = psi_breakpoints(estimates({0.0, 1.0}, {0.5, 0.5}));
  ASSERT_EQ(bp.size(), 1u);
  EXPECT_DOUBLE_EQ(bp[0], 1.0);
}

TEST(Breakpoints, CountAndOrder) {
  for (int J : {2, 5, 9, 14}) {
    const auto bp = psi_breakpoints(random_estimates(static_cast<std::uint64_t>(J), J));
    EXPECT_LE(bp.size(), static_cast<std::size_t>(J * (J - 1) / 2));
    for (std::size_t k = 1; k < bp.size(); ++k) EXPECT_GT(bp[k - 1], bp[k]);
  }
}

TEST(Breakpoints, ScheduleVisitsEveryGridGrouping) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ce = random_estimates(4000 + seed, 6);
    const auto bp = psi_breakpoints(ce);
    const double top = bp.front() * 1.1;
    std::set<IndexSet> from_schedule, from_grid;
    const auto sched = psi_schedule(bp, top);
    for (double psi : sched) {
      const auto iv = build_intervals(ce, psi);
      from_schedule.insert(largest_group(iv));
      EXPECT_EQ(largest_group(iv), brute_force_group(iv));
    }
    // A grid can step over narrow windows between breakpoints; the schedule cannot.
    for (int k = 1; k <= 1000; ++k) from_grid.insert(largest_group(build_intervals(ce, top * k / 1000.0)));
    EXPECT_TRUE(std::includes(from_schedule.begin(), from_schedule.end(), from_grid.begin(), from_grid.end()))
        << seed;
    EXPECT_EQ(sched.size(), bp.size() + 1);
  }
}

TEST(Breakpoints, FullSetAboveLargestBreakpoint) {
  const auto ce = random_estimates(5, 6);
  const auto bp = psi_breakpoints(ce);
  EXPECT_EQ(largest_group(build_intervals(ce, bp.front() * 1.0001)), IndexSet::range(6));
  EXPECT_LT(largest_group(build_intervals(ce, bp.front() * 0.9999)).size(), 6);
}

// ---------------------------------------------------------------------------

TEST(CimSelect, ToySelectsDAndE) {
  const Dataset d = toy_dataset();
  const auto r = cim_select(d);
  EXPECT_EQ(r.invalid_names, (std::vector<std::string>{"D", "E"}));
  EXPECT_NEAR(r.psi0, 2.01 * std::sqrt(std::log(722.0)), 1e-12);
  ASSERT_FALSE(r.path.empty());
  EXPECT_TRUE(r.path.front().invalid.empty());  // all intervals overlap at psi0
  for (std::size_t k = 1; k < r.path.size(); ++k) EXPECT_LT(r.path[k].tuning, r.path[k - 1].tuning);
}

TEST(CimSelect, PsifScalesInitialCriticalValue) {
  CimOptions o;
  o.psif = 0.5;
  EXPECT_NEAR(cim_select(toy_dataset(), o).psi0, 0.5 * cim_initial_psi(722), 1e-12);
  EXPECT_THROW(cim_initial_psi(722, 0.0), Error);
}

TEST(CimSelect, MultiRegressorUnsupported) {
  RandomSpec s;
  s.P = 2;
  s.J = 5;
  try {
    cim_select(random_dataset(s, 6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported);
  }
}

TEST(CimSelect, HeterogeneousEffectsExcludeMinorityGroup) {
  // D and E have no direct effect but shift a treatment margin with effect 0.5;
  // A, B, C shift a margin with effect 0. Grouping keeps the plurality.
  Rng rng(7);
  const int n = 3000;
  DatasetParts p;
  p.Z = uniform_matrix(rng, n, 5);
  p.y.resize(n);
  p.X.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const double u = rng.normal();
    const double x_abc = p.Z.row(i).head(3).sum() + 0.5 * u + rng.normal();
    const double x_de = p.Z.row(i).tail(2).sum() + rng.normal();
    p.X(i, 0) = x_abc + x_de;
    p.y(i) = 0.5 * x_de + u;
  }
  p.z_names = {"A", "B", "C", "D", "E"};
  const Dataset d(std::move(p));
  EXPECT_EQ(cim_select(d).invalid, (IndexSet{3, 4}));
}

TEST(CimSelect, PluralityConsistencyStrongShares) {
  int hits = 0;
  for (int r = 0; r < 100; ++r) {
    // groups 0.83 apart against just-identified SEs near 0.08
    auto cfg = single_regressor_cell(6000, plurality_alpha(5.0));
    cfg.z_law = ZLaw::uniform_0_1;
    cfg.seed = derive_seed(8, static_cast<std::uint64_t>(r));
    const auto sel = cim_select(generate(cfg));
    hits += IndexSet{0, 1, 2, 3, 4, 5}.is_subset_of(sel.invalid);
  }
  EXPECT_GE(hits, 90);
}

TEST(CimSelect, ExhaustionSuggestsPsif) {
  CimOptions o;
  o.siglevel = 0.999999;
  try {
    cim_select(toy_dataset(), o);
    FAIL();
  } catch (const SelectionExhausted& e) {
    EXPECT_NE(std::string(e.what()).find("psif"), std::string::npos);
    EXPECT_FALSE(e.partial().path.empty());
  }
}

TEST(CimSelect, EachGroupTestedOnce) {
  const auto r = cim_select(toy_dataset());
  std::set<IndexSet> seen;
  for (const auto& e : r.path) EXPECT_TRUE(seen.insert(e.invalid).second);
}
