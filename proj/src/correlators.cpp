#include "nsproj/correlators.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace nsp {

namespace {

/// chi_I(a) from the subset mask (party i on bit i-1) and the outcome rank
/// (party 1 most significant): sign = parity of the overlap popcount.
int parity_from_ranks(int parties, unsigned subset_mask, unsigned outcome_rank_bits) {
  unsigned overlap = 0;
  for (int i = 1; i <= parties; ++i) {
    if (subset_mask & (1u << (i - 1))) overlap ^= (outcome_rank_bits >> (parties - i)) & 1u;
  }
  return overlap ? -1 : 1;
}

}  // namespace

int parity(const PartySubset& subset, std::span<const int> outcomes) {
  int acc = 0;
  for (int party : subset.members()) {
    if (party > static_cast<int>(outcomes.size())) throw std::domain_error("subset party beyond outcome tuple");
    acc ^= outcomes[party - 1] & 1;
  }
  return acc ? -1 : 1;
}

PartySubset CorrelatorKey::subset() const {
  std::vector<int> members;
  for (std::size_t i = 0; i < per_party.size(); ++i) {
    if (per_party[i] >= 0) members.push_back(static_cast<int>(i) + 1);
  }
  return PartySubset(std::move(members));
}

std::vector<int> CorrelatorKey::subset_settings() const {
  std::vector<int> settings;
  for (int value : per_party) {
    if (value >= 0) settings.push_back(value);
  }
  return settings;
}

CorrelatorKey make_correlator_key(const Scenario& sc, const PartySubset& subset,
                                  std::span<const int> settings) {
  if (static_cast<int>(settings.size()) != subset.size()) {
    throw std::domain_error("settings tuple length does not match subset size");
  }
  CorrelatorKey key;
  key.per_party.assign(sc.parties(), -1);
  for (int i = 0; i < subset.size(); ++i) {
    const int party = subset.members()[i];
    if (party > sc.parties()) throw std::domain_error("subset party beyond scenario");
    if (settings[i] < 0 || settings[i] >= sc.settings()) {
      throw std::domain_error("correlator setting " + std::to_string(settings[i]) + " out of range");
    }
    key.per_party[party - 1] = settings[i];
  }
  return key;
}

int correlator_rank(const Scenario& sc, const CorrelatorKey& key) {
  if (static_cast<int>(key.per_party.size()) != sc.parties()) {
    throw std::domain_error("correlator key has wrong party count");
  }
  int rank = 0;
  for (int value : key.per_party) {
    if (value < -1 || value >= sc.settings()) throw std::domain_error("correlator key symbol out of range");
    rank = rank * (sc.settings() + 1) + (value + 1);
  }
  return rank;
}

CorrelatorKey correlator_unrank(const Scenario& sc, int rank) {
  if (rank < 0 || rank >= sc.correlator_count()) throw std::out_of_range("correlator rank out of range");
  CorrelatorKey key;
  key.per_party.assign(sc.parties(), -1);
  for (int i = sc.parties() - 1; i >= 0; --i) {
    key.per_party[i] = rank % (sc.settings() + 1) - 1;
    rank /= sc.settings() + 1;
  }
  return key;
}

CorrelatorTable::CorrelatorTable(Scenario sc, std::vector<double> vals)
    : scenario(sc), values(std::move(vals)) {
  if (static_cast<int>(values.size()) != scenario.correlator_count()) {
    throw std::domain_error("correlator table has wrong size");
  }
}

double CorrelatorTable::value(const PartySubset& subset, std::span<const int> settings) const {
  return values[correlator_rank(scenario, make_correlator_key(scenario, subset, settings))];
}

double& CorrelatorTable::at(const PartySubset& subset, std::span<const int> settings) {
  return values[correlator_rank(scenario, make_correlator_key(scenario, subset, settings))];
}

double SettingwiseCorrelators::value(const PartySubset& subset, std::span<const int> settings) const {
  return values[setting_block_rank(scenario, settings) * scenario.block_size() + subset.mask()];
}

SettingwiseCorrelators settingwise_correlators(const BehaviorVector& v) {
  const Scenario& sc = v.scenario;
  SettingwiseCorrelators out(sc);
  for (int block = 0; block < sc.setting_blocks(); ++block) {
    const int base = block * sc.block_size();
    for (int mask = 0; mask < sc.block_size(); ++mask) {
      double acc = 0.0;
      for (int a = 0; a < sc.block_size(); ++a) {
        acc += parity_from_ranks(sc.parties(), static_cast<unsigned>(mask), static_cast<unsigned>(a)) *
               v.entries[base + a];
      }
      out.values[base + mask] = acc;
    }
  }
  return out;
}

CorrelatorTable umc_from_settingwise(const SettingwiseCorrelators& sw) {
  const Scenario& sc = sw.scenario;
  CorrelatorTable table(sc);
  std::vector<int> block(sc.parties());
  std::vector<double> sums(sc.correlator_count(), 0.0);
  std::vector<int> hits(sc.correlator_count(), 0);

  // Every per-setting correlator (x, I) contributes to exactly one key:
  // the one keeping x_I and dropping the complementary settings.
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    for (int mask = 0; mask < sc.block_size(); ++mask) {
      int rank = 0;
      for (int i = 0; i < sc.parties(); ++i) {
        const bool in_subset = (mask >> i) & 1;
        rank = rank * (sc.settings() + 1) + (in_subset ? block[i] + 1 : 0);
      }
      sums[rank] += sw.values[x * sc.block_size() + mask];
      hits[rank] += 1;
    }
  }
  for (int rank = 0; rank < sc.correlator_count(); ++rank) {
    table.values[rank] = sums[rank] / hits[rank];
  }
  return table;
}

CorrelatorTable umc(const BehaviorVector& v) { return umc_from_settingwise(settingwise_correlators(v)); }

long long UmcCoefficientVector::scale() const {
  long long value = 1;
  for (int i = 0; i < scenario.parties() - subset.size(); ++i) value *= scenario.settings();
  return value;
}

std::vector<int> UmcCoefficientVector::scaled_entries() const {
  const Rational factor(scale());
  std::vector<int> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Rational scaled = entries[i] * factor;
    if (!scaled.is_integer()) throw std::logic_error("scaled coefficient is not an integer");
    out[i] = static_cast<int>(scaled.num());
  }
  return out;
}

std::vector<double> UmcCoefficientVector::dense() const {
  std::vector<double> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) out[i] = entries[i].to_double();
  return out;
}

UmcCoefficientVector umc_coefficient_vector(const Scenario& sc, const PartySubset& subset,
                                            std::span<const int> settings) {
  CorrelatorKey key = make_correlator_key(sc, subset, settings);
  UmcCoefficientVector vec{.scenario = sc,
                           .subset = subset,
                           .settings = {settings.begin(), settings.end()},
                           .entries = std::vector<Rational>(sc.dimension())};
  const Rational weight(1, vec.scale());
  const unsigned mask = subset.mask();

  std::vector<int> block(sc.parties());
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    bool match = true;
    for (int i = 0; i < sc.parties() && match; ++i) {
      if (key.per_party[i] >= 0 && block[i] != key.per_party[i]) match = false;
    }
    if (!match) continue;
    for (int a = 0; a < sc.block_size(); ++a) {
      const int sign = parity_from_ranks(sc.parties(), mask, static_cast<unsigned>(a));
      vec.entries[x * sc.block_size() + a] = sign > 0 ? weight : -weight;
    }
  }
  return vec;
}

std::vector<UmcCoefficientVector> all_umc_coefficient_vectors(const Scenario& sc, bool include_empty) {
  std::vector<UmcCoefficientVector> out;
  out.reserve(sc.correlator_count());
  for (int rank = 0; rank < sc.correlator_count(); ++rank) {
    CorrelatorKey key = correlator_unrank(sc, rank);
    PartySubset subset = key.subset();
    if (subset.empty() && !include_empty) continue;
    out.push_back(umc_coefficient_vector(sc, subset, key.subset_settings()));
  }
  return out;
}

BehaviorVector probabilities_from_correlators(const CorrelatorTable& table) {
  const Scenario& sc = table.scenario;
  std::vector<double> entries(sc.dimension(), 0.0);
  std::vector<int> block(sc.parties());
  const double norm = 1.0 / sc.block_size();

  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    for (int mask = 0; mask < sc.block_size(); ++mask) {
      int rank = 0;
      for (int i = 0; i < sc.parties(); ++i) {
        const bool in_subset = (mask >> i) & 1;
        rank = rank * (sc.settings() + 1) + (in_subset ? block[i] + 1 : 0);
      }
      const double value = table.values[rank];
      if (value == 0.0) continue;
      for (int a = 0; a < sc.block_size(); ++a) {
        entries[x * sc.block_size() + a] +=
            norm * parity_from_ranks(sc.parties(), static_cast<unsigned>(mask), static_cast<unsigned>(a)) * value;
      }
    }
  }
  return BehaviorVector(sc, std::move(entries), BehaviorVector::Role::unconstrained);
}

}  // namespace nsp
