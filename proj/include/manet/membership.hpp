#pragma once

#include <span>
#include <string>
#include <vector>

#include "manet/error.hpp"

namespace manet {

/// Enumeration of the 2^K heir clusters over K parent clusters.
///
/// Heir indices are 0-based throughout the library: heir h corresponds to the
/// subset of parents given by the binary expansion of h, bit k (LSB = parent
/// 0) telling whether parent k is a member. Heir 0 is always the empty set.
/// File formats and printed tables use 1-based heir numbers; the shift happens
/// at the io layer.
class MembershipMatrix {
 public:
  static constexpr int kMaxParents = 16;

  MembershipMatrix() = default;

  /// Builds the canonical K* x K enumeration (build_membership_matrix).
  static MembershipMatrix subsets(int parents) {
    if (parents < 1 || parents > kMaxParents)
      throw ConfigError("parent count must be in [1, " + std::to_string(kMaxParents) +
                        "], got " + std::to_string(parents));
    MembershipMatrix u;
    u.parents_ = parents;
    const int heirs = 1 << parents;
    u.members_.resize(heirs);
    for (int h = 0; h < heirs; ++h)
      for (int k = 0; k < parents; ++k)
        if ((h >> k) & 1) u.members_[h].push_back(k);
    return u;
  }

  int parents() const { return parents_; }
  int heirs() const { return static_cast<int>(members_.size()); }

  /// u_{hk}: 1 if parent k belongs to heir h.
  int entry(int h, int k) const {
    check_heir(h);
    if (k < 0 || k >= parents_) throw ConfigError("parent index out of range");
    return (h >> k) & 1;
  }

  /// Sorted parent indices of heir h.
  std::span<const int> members(int h) const {
    check_heir(h);
    return members_[h];
  }

  int subset_size(int h) const { return static_cast<int>(members(h).size()); }

  /// Binary membership vector -> heir index.
  int heir_of(std::span<const int> z) const {
    if (static_cast<int>(z.size()) != parents_)
      throw ConfigError("membership vector length " + std::to_string(z.size()) +
                        " does not match parent count " + std::to_string(parents_));
    int h = 0;
    for (int k = 0; k < parents_; ++k) {
      if (z[k] != 0 && z[k] != 1) throw ConfigError("membership vector entries must be 0 or 1");
      h |= z[k] << k;
    }
    return h;
  }

  /// Heir index -> binary membership vector.
  std::vector<int> parent_set(int h) const {
    check_heir(h);
    std::vector<int> z(parents_);
    for (int k = 0; k < parents_; ++k) z[k] = (h >> k) & 1;
    return z;
  }

  /// "-" for the empty set, else "+"-joined 1-based parent ids ("1+3").
  std::string subset_label(int h) const {
    check_heir(h);
    if (members_[h].empty()) return "-";
    std::string s;
    for (int k : members_[h]) {
      if (!s.empty()) s += '+';
      s += std::to_string(k + 1);
    }
    return s;
  }

 private:
  void check_heir(int h) const {
    if (h < 0 || h >= heirs())
      throw ConfigError("heir index " + std::to_string(h) + " out of range [0, " +
                        std::to_string(heirs()) + ")");
  }

  int parents_ = 0;
  std::vector<std::vector<int>> members_;
};

inline MembershipMatrix build_membership_matrix(int parents) {
  return MembershipMatrix::subsets(parents);
}

}  // namespace manet
