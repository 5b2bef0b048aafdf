#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nsp {

/// An (n, m, 2) Bell scenario: n parties, m settings per party, binary
/// outcomes. All derived sizes are overflow-checked at construction so the
/// rest of the library can index freely.
class Scenario {
 public:
  Scenario(int parties, int settings);

  int parties() const { return parties_; }
  int settings() const { return settings_; }

  /// Ambient dimension (2m)^n of a behaviour vector.
  int dimension() const { return dimension_; }
  /// Number of setting combinations m^n (= number of probability blocks).
  int setting_blocks() const { return blocks_; }
  /// Outcome combinations per block, 2^n.
  int block_size() const { return block_size_; }
  /// Equality-constraint rows: m^n + n(m-1)(2m)^{n-1}.
  int constraint_rows() const { return constraint_rows_; }
  /// Correlator-table size (m+1)^n: each party absent or at one setting.
  int correlator_count() const { return correlator_count_; }
  /// Dimension of the no-signalling affine hull, (m+1)^n - 1.
  int hull_dimension() const { return correlator_count_ - 1; }

  bool operator==(const Scenario&) const = default;

 private:
  int parties_;
  int settings_;
  int dimension_;
  int blocks_;
  int block_size_;
  int constraint_rows_;
  int correlator_count_;
};

/// Lexicographic rank of a settings tuple, party 1 most significant.
int setting_block_rank(const Scenario& sc, std::span<const int> settings);
void setting_block_unrank(const Scenario& sc, int rank, std::span<int> settings);

/// Lexicographic rank of an outcome tuple, party 1 most significant.
int outcome_rank(std::span<const int> outcomes);
void outcome_unrank(int parties, int rank, std::span<int> outcomes);

/// Canonical flat index of an (outcomes, settings) pair: setting-major blocks,
/// outcomes lexicographic within a block. Throws std::domain_error naming the
/// offending coordinate on out-of-range components.
int encode_index(const Scenario& sc, std::span<const int> outcomes, std::span<const int> settings);

/// Inverse of encode_index. Throws std::out_of_range on a bad index.
std::pair<std::vector<int>, std::vector<int>> decode_index(const Scenario& sc, int index);

/// Permutation to the outcome-major component order (outcomes outermost,
/// settings innermost): perm[outcome_major_index] = canonical index.
std::vector<int> outcome_major_permutation(const Scenario& sc);

/// Sorted set of 1-based party indices; may be empty.
class PartySubset {
 public:
  PartySubset() = default;
  explicit PartySubset(std::vector<int> members);
  static PartySubset from_mask(unsigned mask);

  const std::vector<int>& members() const { return members_; }
  bool empty() const { return members_.empty(); }
  int size() const { return static_cast<int>(members_.size()); }
  bool contains(int party) const;
  /// Bitmask with party i on bit i-1; doubles as the canonical subset rank
  /// (so the per-block correlator order for n = 2 is {}, {1}, {2}, {1,2}).
  unsigned mask() const;
  std::string str() const;

  bool operator==(const PartySubset&) const = default;

 private:
  std::vector<int> members_;
};

/// A length-(2m)^n vector of settings-conditional outcome values in canonical
/// index order. Probability-role vectors are validated on construction
/// (nonnegative, each block summing to 1 within 1e-12).
struct BehaviorVector {
  enum class Role { probability, frequency, unconstrained };

  BehaviorVector(Scenario sc, std::vector<double> values, Role r);

  double operator[](int index) const { return entries[index]; }
  double at(std::span<const int> outcomes, std::span<const int> settings) const;

  Scenario scenario;
  std::vector<double> entries;
  Role role;
};

/// The outcome-uniform behaviour with every entry 1/2^n; lies in the
/// no-signalling polytope and is the minimum-norm point of the affine hull.
BehaviorVector uniform_behavior(const Scenario& sc);

}  // namespace nsp
