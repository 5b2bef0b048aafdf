#pragma once

#include <span>
#include <vector>

#include "nsproj/rational.hpp"
#include "nsproj/scenario.hpp"

namespace nsp {

/// Parity function: (-1)^(xor of the outcomes of the parties in `subset`);
/// +1 for the empty subset.
int parity(const PartySubset& subset, std::span<const int> outcomes);

/// Key of a correlator-table entry: one symbol per party, -1 for "absent" or
/// a setting in 0..m-1. There are (m+1)^n keys; the canonical rank is
/// lexicographic with absent sorting before every setting (party 1 most
/// significant), so rank 0 is the empty-subset entry.
struct CorrelatorKey {
  std::vector<int> per_party;

  PartySubset subset() const;
  std::vector<int> subset_settings() const;

  bool operator==(const CorrelatorKey&) const = default;
};

CorrelatorKey make_correlator_key(const Scenario& sc, const PartySubset& subset,
                                  std::span<const int> settings);
int correlator_rank(const Scenario& sc, const CorrelatorKey& key);
CorrelatorKey correlator_unrank(const Scenario& sc, int rank);

/// Values of the uniformly-averaged marginal correlators, indexed by
/// correlator rank, including the empty-subset entry.
struct CorrelatorTable {
  explicit CorrelatorTable(Scenario sc)
      : scenario(sc), values(static_cast<std::size_t>(sc.correlator_count()), 0.0) {}
  CorrelatorTable(Scenario sc, std::vector<double> vals);

  double value(const PartySubset& subset, std::span<const int> settings) const;
  double& at(const PartySubset& subset, std::span<const int> settings);

  Scenario scenario;
  std::vector<double> values;
};

/// Per-setting correlators C^I_x for every subset I and full settings tuple
/// x; index = block rank * 2^n + subset mask. For a strictly no-signalling
/// behaviour the value is independent of the settings of the parties outside
/// I; for weakly-signalling data it is not.
struct SettingwiseCorrelators {
  explicit SettingwiseCorrelators(Scenario sc)
      : scenario(sc), values(static_cast<std::size_t>(sc.dimension()), 0.0) {}

  double value(const PartySubset& subset, std::span<const int> settings) const;

  Scenario scenario;
  std::vector<double> values;
};

SettingwiseCorrelators settingwise_correlators(const BehaviorVector& v);

/// Uniform average of the per-setting correlators over the complementary
/// parties' settings. The empty-subset entry is the mean block sum (1 for a
/// normalised behaviour).
CorrelatorTable umc_from_settingwise(const SettingwiseCorrelators& sw);
CorrelatorTable umc(const BehaviorVector& v);

/// The coefficient vector c with dot(c, v) = umc(v)[subset, settings]:
/// entries chi_I(a) * [x_I = settings] / m^(n-|I|). For nonempty subsets it
/// lies in ker(A_eq) exactly.
struct UmcCoefficientVector {
  Scenario scenario;
  PartySubset subset;
  std::vector<int> settings;
  std::vector<Rational> entries;

  /// m^(n-|I|); entries scaled by it are integers in {-1, 0, +1}.
  long long scale() const;
  std::vector<int> scaled_entries() const;
  std::vector<double> dense() const;
};

UmcCoefficientVector umc_coefficient_vector(const Scenario& sc, const PartySubset& subset,
                                            std::span<const int> settings);

/// All (m+1)^n - 1 nonempty-subset coefficient vectors in canonical rank
/// order (optionally preceded by the empty-subset vector, which is not in the
/// kernel).
std::vector<UmcCoefficientVector> all_umc_coefficient_vectors(const Scenario& sc,
                                                              bool include_empty = false);

/// Inverse formula: p(a|x) = 2^{-n} sum_I chi_I(a) * table[I, x_I]. Exact for
/// tables derived from a no-signalling behaviour.
BehaviorVector probabilities_from_correlators(const CorrelatorTable& table);

}  // namespace nsp
