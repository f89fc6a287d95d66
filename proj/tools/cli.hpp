#pragma once

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shiftshare.hpp"
#include "shiftshare/report.hpp"

namespace shiftshare::cli {

struct RunConfig {
  std::string command;

  std::string data;
  std::string delimiter = ",";
  bool tab = false;
  std::string y;
  std::vector<std::string> x;
  std::vector<std::string> z_list;
  std::string z_stub;
  std::vector<std::string> controls;
  std::string weights;
  std::string cluster;
  std::string unit, time;
  bool constant = false;
  bool first_difference = false;
  bool demean = false;
  std::string vce = "homoskedastic";

  std::string method = "alasso";
  std::string test = "hs";
  double c = 0.1;
  std::optional<double> siglevel;
  double psif = 1.0;

  std::vector<std::string> estimators{"tsls"};
  std::vector<std::string> selections;
  std::string shares, shifts;

  std::string design;
  int reps = 100;
  std::uint64_t seed = kDefaultSeed;
  std::vector<int> P_list, n_grid, invalid_counts;
  std::vector<std::string> methods;
  int threads = 0;

  std::string out;
};

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.command != "simulate") {
    if (!c.data.empty()) {
      j["data"] = c.data;
      j["delimiter"] = c.tab ? "\t" : c.delimiter;
      j["y"] = c.y;
      j["x"] = c.x;
      j["z_list"] = c.z_list;
      j["z_stub"] = c.z_stub;
      j["controls"] = c.controls;
      j["weights"] = c.weights;
      j["cluster"] = c.cluster;
      j["unit"] = c.unit;
      j["time"] = c.time;
      j["constant"] = c.constant;
      j["first_difference"] = c.first_difference;
      j["demean"] = c.demean;
    }
    j["vce"] = c.vce;
  }
  if (c.command == "select") {
    j["method"] = c.method;
    j["test"] = c.test;
    j["c"] = c.c;
    j["siglevel"] = c.siglevel ? json(*c.siglevel) : json(nullptr);
    j["psif"] = c.psif;
  }
  if (c.command == "estimate") {
    j["estimators"] = c.estimators;
    j["selections"] = c.selections;
  }
  if (c.command == "estimate" || c.command == "ssiv") {
    j["shares"] = c.shares;
    j["shifts"] = c.shifts;
    if (c.command == "ssiv") j["selections"] = c.selections;
  }
  if (c.command == "simulate") {
    j["design"] = c.design;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["P"] = c.P_list;
    j["n"] = c.n_grid;
    j["invalid"] = c.invalid_counts;
    j["methods"] = c.methods;
    j["test"] = c.test;
    j["c"] = c.c;
    j["vce"] = c.vce;
  }
  j["out"] = c.out;
  return j;
}

namespace detail {

inline Vce parse_vce(const std::string& s, RunConfig& cfg) {
  if (s == "homoskedastic" || s == "unadjusted") return Vce::homoskedastic;
  if (s == "robust") return Vce::robust;
  if (s == "cluster") {
    if (cfg.cluster.empty())
      shiftshare::detail::fail(ErrorKind::invalid_argument, "vce cluster needs a column: --vce cluster:<column>");
    return Vce::cluster;
  }
  if (s.rfind("cluster:", 0) == 0) {
    cfg.cluster = s.substr(8);
    if (cfg.cluster.empty())
      shiftshare::detail::fail(ErrorKind::invalid_argument, "vce cluster needs a column: --vce cluster:<column>");
    return Vce::cluster;
  }
  shiftshare::detail::fail(ErrorKind::invalid_argument, "unknown vce '", s,
                           "' (expected homoskedastic, robust or cluster:<column>)");
}

inline TestKind parse_test(const std::string& s) {
  if (s == "hs") return TestKind::hs;
  if (s == "ar") return TestKind::ar;
  shiftshare::detail::fail(ErrorKind::invalid_argument, "unknown test '", s, "' (expected hs or ar)");
}

inline char delimiter(const RunConfig& c) {
  if (c.tab) return '\t';
  if (c.delimiter == "\\t" || c.delimiter == "tab") return '\t';
  if (c.delimiter.size() != 1)
    shiftshare::detail::fail(ErrorKind::invalid_argument, "delimiter must be a single character");
  return c.delimiter[0];
}

inline std::vector<std::string> split_commas(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& s : in) {
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Dataset load(RunConfig& cfg, Vce& vce, std::vector<std::string>& warnings) {
  if (cfg.data.empty()) shiftshare::detail::fail(ErrorKind::invalid_argument, "--data is required");
  vce = parse_vce(cfg.vce, cfg);
  const Table t = read_table_file(cfg.data, delimiter(cfg));
  ColumnRoles roles;
  roles.y = cfg.y;
  roles.x = split_commas(cfg.x);
  roles.z_list = split_commas(cfg.z_list);
  if (!cfg.z_stub.empty()) roles.z_stub = cfg.z_stub;
  roles.controls = split_commas(cfg.controls);
  if (!cfg.weights.empty()) roles.weights = cfg.weights;
  if (!cfg.cluster.empty()) roles.cluster = cfg.cluster;
  if (!cfg.unit.empty()) roles.unit = cfg.unit;
  if (!cfg.time.empty()) roles.time = cfg.time;
  roles.add_constant = cfg.constant;
  Dataset d = load_dataset(t, roles);
  if (cfg.first_difference) d = first_difference(d, &warnings);
  if (cfg.demean) d = demean_instruments_within_period(d);
  return d;
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) shiftshare::detail::fail(ErrorKind::io, "cannot open '", path, "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    shiftshare::detail::fail(ErrorKind::io, "'", path, "' is not valid JSON: ", e.what());
  }
}

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out.empty() || cfg.out == "-") {
    out << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) shiftshare::detail::fail(ErrorKind::io, "cannot write '", cfg.out, "'");
  f << text;
  if (!f) shiftshare::detail::fail(ErrorKind::io, "write to '", cfg.out, "' failed");
}

inline json envelope(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = cfg.command;
  j["config"] = to_json(cfg);
  return j;
}

inline ShiftShareInputs load_ss(const RunConfig& cfg) {
  if (cfg.shares.empty() || cfg.shifts.empty())
    shiftshare::detail::fail(ErrorKind::invalid_argument, "--shares and --shifts are required");
  const char delim = delimiter(cfg);
  return load_shift_share(read_table_file(cfg.shares, delim), read_table_file(cfg.shifts, delim));
}

// ---------------------------------------------------------------------------

inline int cmd_select(RunConfig& cfg, std::ostream& out) {
  Vce vce;
  std::vector<std::string> warnings;
  const Moments m(load(cfg, vce, warnings));
  const TestKind test = parse_test(cfg.test);
  SelectionResult r;
  if (cfg.method == "alasso") {
    AlassoOptions o;
    o.test = test;
    o.c = cfg.c;
    o.siglevel = cfg.siglevel;
    o.vce = vce;
    r = alasso_select(m, o);
  } else if (cfg.method == "cim") {
    CimOptions o;
    o.test = test;
    o.c = cfg.c;
    o.siglevel = cfg.siglevel;
    o.vce = vce;
    o.psif = cfg.psif;
    r = cim_select(m, o);
  } else {
    shiftshare::detail::fail(ErrorKind::invalid_argument, "unknown method '", cfg.method,
                             "' (expected alasso or cim)");
  }
  for (const auto& w : warnings) r.warnings.insert(r.warnings.begin(), w);
  json j = envelope(cfg);
  j["selection"] = to_json(r, m.dataset().z_names());
  emit(cfg, j.dump(2) + "\n", out);
  return 0;
}

inline int cmd_estimate(RunConfig& cfg, std::ostream& out) {
  Vce vce;
  std::vector<std::string> warnings;
  const Moments m(load(cfg, vce, warnings));
  const Dataset& d = m.dataset();
  const auto ests = split_commas(cfg.estimators);
  if (ests.empty()) shiftshare::detail::fail(ErrorKind::invalid_argument, "no estimators requested");
  std::optional<ShiftShareInputs> ss;

  struct Column {
    std::string label;
    IndexSet invalid;
  };
  std::vector<Column> columns{{"standard", IndexSet{}}};
  for (const auto& path : cfg.selections) {
    const json sel = read_json_file(path);
    const json& s = sel.contains("selection") ? sel["selection"] : sel;
    std::string label = s.value("method", std::string("selection"));
    for (const auto& c : columns)
      if (c.label == label) label += "_" + std::to_string(columns.size());
    columns.push_back({label, invalid_from_selection(sel, d)});
  }

  json table = json::array();
  json estimates = json::array();
  for (const auto& e : ests) {
    json row;
    row["estimator"] = e;
    json cells = json::object();
    for (const auto& col : columns) {
      const IndexSet valid = col.invalid.complement(d.J());
      EstimateResult r;
      if (e == "tsls") {
        r = fit_2sls(m, valid, col.invalid, vce);
      } else if (e == "liml") {
        r = fit_liml(m, valid, col.invalid, vce);
      } else if (e == "ssiv") {
        if (!ss) ss = load_ss(cfg);
        r = fit_ssiv(d, *ss, valid, col.invalid, vce);
      } else {
        shiftshare::detail::fail(ErrorKind::invalid_argument, "unknown estimator '", e,
                                 "' (expected tsls, liml or ssiv)");
      }
      json cell;
      cell["beta"] = shiftshare::detail::vec_json(r.beta);
      cell["se"] = shiftshare::detail::vec_json(r.se.head(d.P()));
      cell["first_stage"] = shiftshare::detail::num(r.first_stage.value);
      cell["first_stage_kind"] = r.first_stage.kind;
      cells[col.label] = cell;
      json full = to_json(r);
      full["column"] = col.label;
      estimates.push_back(full);
    }
    row["cells"] = cells;
    table.push_back(row);
  }
  json j = envelope(cfg);
  json cols = json::array();
  for (const auto& c : columns) cols.push_back(c.label);
  j["columns"] = cols;
  j["table"] = table;
  j["estimates"] = estimates;
  j["warnings"] = warnings;
  emit(cfg, j.dump(2) + "\n", out);
  return 0;
}

inline void write_sidecar(const RunConfig& cfg, std::ostream& err) {
  const json j = envelope(cfg);
  if (cfg.out.empty() || cfg.out == "-") {
    err << j.dump() << "\n";
    return;
  }
  std::ofstream f(cfg.out + ".json");
  if (!f) shiftshare::detail::fail(ErrorKind::io, "cannot write '", cfg.out, ".json'");
  f << j.dump(2) << "\n";
}

inline int cmd_ssiv(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ShiftShareInputs ss = load_ss(cfg);
  IndexSet classes = IndexSet::range(static_cast<int>(ss.classes().size()));
  if (cfg.selections.size() > 1)
    shiftshare::detail::fail(ErrorKind::invalid_argument, "ssiv takes at most one --selection");
  if (!cfg.selections.empty()) {
    const json sel = read_json_file(cfg.selections[0]);
    const json& s = sel.contains("selection") ? sel["selection"] : sel;
    if (!s.contains("valid") || !s["valid"].is_array())
      shiftshare::detail::fail(ErrorKind::invalid_argument, "selection JSON has no 'valid' list");
    classes = class_set_from_names(ss, s["valid"].get<std::vector<std::string>>());
  }
  std::ostringstream os;
  os << "location,period,ssiv\n";
  for (const auto& c : build_ssiv(ss, classes))
    os << c.location << ',' << format_double(c.period) << ',' << format_double(c.value) << '\n';
  emit(cfg, os.str(), out);
  write_sidecar(cfg, err);
  return 0;
}

inline int cmd_simulate(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.design.empty()) shiftshare::detail::fail(ErrorKind::invalid_argument, "--design is required");
  SweepOptions o;
  o.design = parse_design(cfg.design);
  o.n_grid = cfg.n_grid;
  o.P_list = cfg.P_list;
  o.invalid_counts = cfg.invalid_counts;
  o.cell.reps = cfg.reps;
  o.cell.seed = cfg.seed;
  o.cell.threads = cfg.threads;
  o.cell.test = parse_test(cfg.test);
  o.cell.c = cfg.c;
  RunConfig tmp = cfg;
  o.cell.vce = parse_vce(cfg.vce, tmp);
  if (o.cell.vce == Vce::cluster)
    shiftshare::detail::fail(ErrorKind::invalid_argument, "simulated data have no cluster column");
  o.cell.methods.clear();
  for (const auto& s : split_commas(cfg.methods)) {
    if (s == "standard") o.cell.methods.push_back(Method::standard);
    else if (s == "oracle") o.cell.methods.push_back(Method::oracle);
    else if (s == "alasso") o.cell.methods.push_back(Method::alasso);
    else if (s == "cim") o.cell.methods.push_back(Method::cim);
    else shiftshare::detail::fail(ErrorKind::invalid_argument, "unknown method '", s, "'");
  }
  o.progress = [&err](const std::string& s) { err << s << std::endl; };
  const auto rows = sweep(o);
  std::ostringstream os;
  write_sweep_csv(os, rows);
  emit(cfg, os.str(), out);
  write_sidecar(cfg, err);
  return 0;
}

inline void add_data_options(CLI::App* a, RunConfig& c) {
  a->add_option("--data", c.data, "input table (header row required)");
  a->add_option("--delimiter", c.delimiter, "field delimiter (default ',')");
  a->add_flag("--tab", c.tab, "tab-delimited input");
  a->add_option("--y", c.y, "outcome column");
  a->add_option("--x", c.x, "treatment column (repeatable or comma separated)");
  a->add_option("--z-list", c.z_list, "instrument columns (repeatable or comma separated)");
  a->add_option("--z-stub", c.z_stub, "instrument columns by name prefix");
  a->add_option("--controls", c.controls, "exogenous control columns");
  a->add_option("--weights", c.weights, "analytic weight column");
  a->add_option("--cluster", c.cluster, "cluster id column");
  a->add_option("--unit", c.unit, "panel unit column (location)");
  a->add_option("--time", c.time, "panel period column");
  a->add_flag("--constant", c.constant, "add an intercept to the controls");
  a->add_flag("--first-difference", c.first_difference, "first-difference y and x within unit");
  a->add_flag("--demean", c.demean, "demean instruments within period");
  a->add_option("--vce", c.vce, "homoskedastic | robust | cluster:<column>");
  a->add_option("--out", c.out, "output path (default stdout)");
}

}  // namespace detail

// Returns the process exit code: 0 on success, 1 on a library error, 2 on a
// usage error. Errors are printed to `out` as JSON.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Invalid-share selection and estimation for shift-share IV designs", "shiftshare"};
  app.require_subcommand(1);

  auto* sel = app.add_subcommand("select", "select invalid instruments (adaptive Lasso or CIM)");
  detail::add_data_options(sel, cfg);
  sel->add_option("--method", cfg.method, "alasso | cim")->check(CLI::IsMember({"alasso", "cim"}));
  sel->add_option("--test", cfg.test, "hs | ar")->check(CLI::IsMember({"hs", "ar"}));
  sel->add_option("--c", cfg.c, "threshold constant; level = c / ln(n)")->check(CLI::PositiveNumber);
  sel->add_option("--siglevel", cfg.siglevel, "fixed significance level instead of c / ln(n)");
  sel->add_option("--psif", cfg.psif, "CIM initial critical value factor")->check(CLI::PositiveNumber);

  auto* est = app.add_subcommand("estimate", "2SLS / LIML / SSIV with optional stored selections");
  detail::add_data_options(est, cfg);
  est->add_option("--estimators", cfg.estimators, "tsls, liml, ssiv");
  est->add_option("--selection", cfg.selections, "selection JSON from 'select' (repeatable)");
  est->add_option("--shares", cfg.shares, "long share table: location, class, share");
  est->add_option("--shifts", cfg.shifts, "long shift table: class, period, shift");

  auto* ssc = app.add_subcommand("ssiv", "construct the shift-share instrument column");
  ssc->add_option("--shares", cfg.shares, "long share table: location, class, share");
  ssc->add_option("--shifts", cfg.shifts, "long shift table: class, period, shift");
  ssc->add_option("--selection", cfg.selections, "restrict to the valid classes of a stored selection");
  ssc->add_option("--delimiter", cfg.delimiter, "field delimiter (default ',')");
  ssc->add_flag("--tab", cfg.tab, "tab-delimited input");
  ssc->add_option("--out", cfg.out, "output CSV (default stdout)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo sweep; CSV output");
  sim->add_option("--design", cfg.design, "majority | plurality | weak_strong_grid | multi_regressor");
  sim->add_option("--reps", cfg.reps, "replications per cell")->check(CLI::PositiveNumber);
  sim->add_option("--seed", cfg.seed, "base seed");
  sim->add_option("--P", cfg.P_list, "regressor counts (multi_regressor)");
  sim->add_option("--n", cfg.n_grid, "sample sizes");
  sim->add_option("--invalid", cfg.invalid_counts, "invalid-instrument counts (multi_regressor)");
  sim->add_option("--methods", cfg.methods, "standard, oracle, alasso, cim");
  sim->add_option("--test", cfg.test, "hs | ar")->check(CLI::IsMember({"hs", "ar"}));
  sim->add_option("--c", cfg.c, "threshold constant")->check(CLI::PositiveNumber);
  sim->add_option("--vce", cfg.vce, "homoskedastic | robust");
  sim->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  sim->add_option("--out", cfg.out, "output CSV (default stdout); config goes to <out>.json");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["error"] = {{"kind", "usage"}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    err << app.help();
    return 2;
  }

  try {
    if (sel->parsed()) {
      cfg.command = "select";
      return detail::cmd_select(cfg, out);
    }
    if (est->parsed()) {
      cfg.command = "estimate";
      return detail::cmd_estimate(cfg, out);
    }
    if (ssc->parsed()) {
      cfg.command = "ssiv";
      return detail::cmd_ssiv(cfg, out, err);
    }
    cfg.command = "simulate";
    return detail::cmd_simulate(cfg, out, err);
  } catch (const std::exception& e) {
    json j = error_json(e);
    j["command"] = cfg.command;
    j["config"] = to_json(cfg);
    out << j.dump(2) << "\n";
    return 1;
  }
}

}  // namespace shiftshare::cli
