#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "shiftshare/median_init.hpp"
#include "shiftshare/overid.hpp"

namespace shiftshare {

enum class SelectionMethod { alasso, cim };

inline std::string to_string(SelectionMethod m) { return m == SelectionMethod::alasso ? "alasso" : "cim"; }

// One candidate model along a selection path. tuning is lambda (alasso) or
// psi (cim). Untested entries are listed after the stopping point.
struct PathEntry {
  double tuning = 0.0;
  IndexSet invalid;
  bool tested = false;
  double stat = 0.0;
  int df = 0;
  double p_value = 0.0;
};

struct SelectionResult {
  SelectionMethod method = SelectionMethod::alasso;
  TestKind test = TestKind::hs;
  Vce vce = Vce::homoskedastic;
  double threshold = 0.0;
  IndexSet valid, invalid;
  std::vector<std::string> valid_names, invalid_names;
  std::vector<PathEntry> path;
  int stopped_at = -1;  // index into path
  int n = 0, J = 0, P = 0;

  std::optional<InitialEstimate> initial;  // alasso only
  std::optional<Eigen::VectorXd> alpha_ad;
  std::optional<Eigen::VectorXd> beta_ad;
  std::optional<int> qualified_majority;  // P > 1 only
  double psi0 = 0.0;                      // cim only
  std::vector<std::string> warnings;
};

// No model on the path passed the test. partial() holds the path walked.
class SelectionExhausted : public Error {
 public:
  SelectionExhausted(std::string msg, SelectionResult partial)
      : Error(ErrorKind::exhaustion, std::move(msg)), partial_(std::move(partial)) {}
  const SelectionResult& partial() const { return partial_; }

 private:
  SelectionResult partial_;
};

namespace detail {

inline void finish_selection(SelectionResult& r, const Dataset& d, const IndexSet& invalid) {
  r.invalid = invalid;
  r.valid = invalid.complement(d.J());
  r.invalid_names = names_of(r.invalid, d.z_names());
  r.valid_names = names_of(r.valid, d.z_names());
}

}  // namespace detail
}  // namespace shiftshare
