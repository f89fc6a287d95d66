#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "shiftshare/estimators.hpp"
#include "shiftshare/selection.hpp"

namespace shiftshare {

inline constexpr int kReportSchemaVersion = 1;

using json = nlohmann::ordered_json;

namespace detail {

inline json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
  return a;
}

inline json mat_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline json to_json(const EstimateResult& r) {
  json j;
  j["estimator"] = to_string(r.estimator);
  j["vce"] = to_string(r.vce);
  j["n"] = r.n;
  j["param_names"] = r.param_names;
  j["beta"] = detail::vec_json(r.beta);
  j["alpha"] = detail::vec_json(r.alpha);
  j["controls"] = detail::vec_json(r.controls);
  j["se"] = detail::vec_json(r.se);
  j["vcov"] = detail::mat_json(r.vcov);
  j["first_stage"] = {{"kind", r.first_stage.kind},
                      {"value", detail::num(r.first_stage.value)},
                      {"capped", r.first_stage.capped}};
  if (r.estimator == Estimator::liml) j["kappa"] = r.kappa;
  j["valid"] = r.valid_names;
  j["invalid"] = r.invalid_names;
  j["warnings"] = r.warnings;
  return j;
}

inline json to_json(const PathEntry& e) {
  json j;
  j["tuning"] = detail::num(e.tuning);
  j["invalid"] = e.invalid.one_based();
  j["tested"] = e.tested;
  if (e.tested) {
    j["stat"] = detail::num(e.stat);
    j["df"] = e.df;
    j["p_value"] = detail::num(e.p_value);
  }
  return j;
}

inline json to_json(const SelectionResult& r, const std::vector<std::string>& z_names = {}) {
  json j;
  j["method"] = to_string(r.method);
  j["test"] = to_string(r.test);
  j["vce"] = to_string(r.vce);
  j["threshold"] = r.threshold;
  j["n"] = r.n;
  j["J"] = r.J;
  j["P"] = r.P;
  j["valid"] = r.valid_names;
  j["invalid"] = r.invalid_names;
  j["valid_index"] = r.valid.one_based();
  j["invalid_index"] = r.invalid.one_based();
  j["stopped_at"] = r.stopped_at;
  json path = json::array();
  for (const auto& e : r.path) {
    json pe = to_json(e);
    if (!z_names.empty()) pe["invalid_names"] = names_of(e.invalid, z_names);
    path.push_back(pe);
  }
  j["path"] = path;
  json diag;
  if (r.initial) {
    diag["beta_m"] = detail::vec_json(r.initial->beta_m);
    diag["alpha_m"] = detail::vec_json(r.initial->alpha_m);
    diag["n_combos_used"] = r.initial->n_combos_used;
    diag["dropped_combos"] = r.initial->dropped_combos;
  }
  if (r.alpha_ad) diag["alpha_ad"] = detail::vec_json(*r.alpha_ad);
  if (r.beta_ad) diag["beta_ad"] = detail::vec_json(*r.beta_ad);
  if (r.qualified_majority) diag["qualified_majority_min"] = *r.qualified_majority;
  if (r.method == SelectionMethod::cim) diag["psi0"] = r.psi0;
  j["diagnostics"] = diag.is_null() ? json::object() : diag;
  j["warnings"] = r.warnings;
  return j;
}

// Names of the shares a stored selection marked invalid, checked against the
// dataset's instrument names.
inline IndexSet invalid_from_selection(const json& sel, const Dataset& d) {
  const json& s = sel.contains("selection") ? sel["selection"] : sel;
  if (!s.contains("invalid") || !s["invalid"].is_array())
    detail::fail(ErrorKind::invalid_argument, "selection JSON has no 'invalid' list");
  std::vector<int> idx;
  std::vector<std::string> unknown;
  for (const auto& v : s["invalid"]) {
    const auto name = v.get<std::string>();
    if (auto j = d.z_index(name))
      idx.push_back(*j);
    else
      unknown.push_back(name);
  }
  if (s.contains("valid") && s["valid"].is_array())
    for (const auto& v : s["valid"])
      if (!d.z_index(v.get<std::string>())) unknown.push_back(v.get<std::string>());
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    detail::fail(ErrorKind::missing_column, "selection references instruments not in the data: ", list);
  }
  return IndexSet(std::move(idx));
}

inline json error_json(const std::exception& e) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  json err;
  if (const auto* se = dynamic_cast<const Error*>(&e))
    err["kind"] = std::string(to_string(se->kind()));
  else
    err["kind"] = "internal";
  err["message"] = e.what();
  if (const auto* ex = dynamic_cast<const SelectionExhausted*>(&e)) err["partial"] = to_json(ex->partial());
  j["error"] = err;
  return j;
}

}  // namespace shiftshare
