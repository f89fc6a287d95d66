#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace shiftshare {

// Sorted, duplicate-free set of 0-based column indices. Reports and JSON use
// 1-based positions; everything internal is 0-based.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<int> idx) : idx_(idx) { normalize(); }
  explicit IndexSet(std::vector<int> idx) : idx_(std::move(idx)) { normalize(); }

  static IndexSet range(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return IndexSet(std::move(v));
  }

  int size() const { return static_cast<int>(idx_.size()); }
  bool empty() const { return idx_.empty(); }
  bool contains(int j) const { return std::binary_search(idx_.begin(), idx_.end(), j); }
  const std::vector<int>& indices() const { return idx_; }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }
  int operator[](int i) const { return idx_[static_cast<std::size_t>(i)]; }

  // Elements of {0..universe-1} not in this set.
  IndexSet complement(int universe) const {
    std::vector<int> out;
    for (int j = 0; j < universe; ++j)
      if (!contains(j)) out.push_back(j);
    return IndexSet(std::move(out));
  }

  bool is_subset_of(const IndexSet& other) const {
    return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
  }

  bool intersects(const IndexSet& other) const {
    for (int j : idx_)
      if (other.contains(j)) return true;
    return false;
  }

  std::vector<int> one_based() const {
    std::vector<int> out(idx_);
    for (int& j : out) ++j;
    return out;
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;
  friend auto operator<=>(const IndexSet&, const IndexSet&) = default;

 private:
  void normalize() {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
  }

  std::vector<int> idx_;
};

inline std::vector<std::string> names_of(const IndexSet& s, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(s.size()));
  for (int j : s) out.push_back(names.at(static_cast<std::size_t>(j)));
  return out;
}

inline std::string to_string(const IndexSet& s) {
  std::string out = "{";
  for (int i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i] + 1);
  }
  return out + "}";
}

}  // namespace shiftshare
