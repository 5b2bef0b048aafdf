#include "nsproj/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nsp {

namespace {

int checked_pow(int base, int exponent, const char* what) {
  long long value = 1;
  for (int i = 0; i < exponent; ++i) {
    value *= base;
    if (value > std::numeric_limits<int>::max()) {
      throw std::domain_error(std::string("scenario too large: ") + what + " overflows");
    }
  }
  return static_cast<int>(value);
}

}  // namespace

Scenario::Scenario(int parties, int settings) : parties_(parties), settings_(settings) {
  if (parties < 1) throw std::domain_error("scenario requires at least one party");
  if (settings < 1) throw std::domain_error("scenario requires at least one setting");
  dimension_ = checked_pow(2 * settings, parties, "(2m)^n");
  blocks_ = checked_pow(settings, parties, "m^n");
  block_size_ = checked_pow(2, parties, "2^n");
  correlator_count_ = checked_pow(settings + 1, parties, "(m+1)^n");
  long long nosig = static_cast<long long>(parties) * (settings - 1) *
                    checked_pow(2 * settings, parties - 1, "(2m)^(n-1)");
  long long rows = nosig + blocks_;
  if (rows > std::numeric_limits<int>::max()) throw std::domain_error("scenario too large: row count overflows");
  constraint_rows_ = static_cast<int>(rows);
}

int setting_block_rank(const Scenario& sc, std::span<const int> settings) {
  if (static_cast<int>(settings.size()) != sc.parties()) {
    throw std::domain_error("settings tuple has wrong length");
  }
  int rank = 0;
  for (int i = 0; i < sc.parties(); ++i) {
    if (settings[i] < 0 || settings[i] >= sc.settings()) {
      throw std::domain_error("setting[" + std::to_string(i + 1) + "] = " + std::to_string(settings[i]) +
                              " out of range 0.." + std::to_string(sc.settings() - 1));
    }
    rank = rank * sc.settings() + settings[i];
  }
  return rank;
}

void setting_block_unrank(const Scenario& sc, int rank, std::span<int> settings) {
  for (int i = sc.parties() - 1; i >= 0; --i) {
    settings[i] = rank % sc.settings();
    rank /= sc.settings();
  }
}

int outcome_rank(std::span<const int> outcomes) {
  int rank = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i] != 0 && outcomes[i] != 1) {
      throw std::domain_error("outcome[" + std::to_string(i + 1) + "] = " + std::to_string(outcomes[i]) +
                              " out of range {0,1}");
    }
    rank = rank * 2 + outcomes[i];
  }
  return rank;
}

void outcome_unrank(int parties, int rank, std::span<int> outcomes) {
  for (int i = parties - 1; i >= 0; --i) {
    outcomes[i] = rank & 1;
    rank >>= 1;
  }
}

int encode_index(const Scenario& sc, std::span<const int> outcomes, std::span<const int> settings) {
  if (static_cast<int>(outcomes.size()) != sc.parties()) {
    throw std::domain_error("outcome tuple has wrong length");
  }
  return setting_block_rank(sc, settings) * sc.block_size() + outcome_rank(outcomes);
}

std::pair<std::vector<int>, std::vector<int>> decode_index(const Scenario& sc, int index) {
  if (index < 0 || index >= sc.dimension()) {
    throw std::out_of_range("flat index " + std::to_string(index) + " out of range 0.." +
                            std::to_string(sc.dimension() - 1));
  }
  std::vector<int> outcomes(sc.parties());
  std::vector<int> settings(sc.parties());
  outcome_unrank(sc.parties(), index % sc.block_size(), outcomes);
  setting_block_unrank(sc, index / sc.block_size(), settings);
  return {std::move(outcomes), std::move(settings)};
}

std::vector<int> outcome_major_permutation(const Scenario& sc) {
  std::vector<int> perm(sc.dimension());
  for (int a = 0; a < sc.block_size(); ++a) {
    for (int x = 0; x < sc.setting_blocks(); ++x) {
      perm[a * sc.setting_blocks() + x] = x * sc.block_size() + a;
    }
  }
  return perm;
}

PartySubset::PartySubset(std::vector<int> members) : members_(std::move(members)) {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i] < 1) throw std::domain_error("party indices are 1-based");
    if (i > 0 && members_[i] <= members_[i - 1]) {
      throw std::domain_error("party subset must be strictly increasing");
    }
  }
}

PartySubset PartySubset::from_mask(unsigned mask) {
  std::vector<int> members;
  for (int party = 1; mask != 0; ++party, mask >>= 1) {
    if (mask & 1u) members.push_back(party);
  }
  return PartySubset(std::move(members));
}

bool PartySubset::contains(int party) const {
  return std::binary_search(members_.begin(), members_.end(), party);
}

unsigned PartySubset::mask() const {
  unsigned mask = 0;
  for (int party : members_) mask |= 1u << (party - 1);
  return mask;
}

std::string PartySubset::str() const {
  std::string out = "{";
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(members_[i]);
  }
  return out + "}";
}

BehaviorVector::BehaviorVector(Scenario sc, std::vector<double> values, Role r)
    : scenario(sc), entries(std::move(values)), role(r) {
  if (static_cast<int>(entries.size()) != scenario.dimension()) {
    throw std::domain_error("behaviour vector has length " + std::to_string(entries.size()) +
                            ", expected " + std::to_string(scenario.dimension()));
  }
  if (role == Role::probability) {
    for (int x = 0; x < scenario.setting_blocks(); ++x) {
      double sum = 0.0;
      for (int a = 0; a < scenario.block_size(); ++a) {
        double p = entries[x * scenario.block_size() + a];
        if (p < 0.0) throw std::domain_error("probability behaviour has a negative entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw std::domain_error("setting block " + std::to_string(x) + " sums to " + std::to_string(sum));
      }
    }
  }
}

double BehaviorVector::at(std::span<const int> outcomes, std::span<const int> settings) const {
  return entries[encode_index(scenario, outcomes, settings)];
}

BehaviorVector uniform_behavior(const Scenario& sc) {
  return BehaviorVector(sc, std::vector<double>(sc.dimension(), 1.0 / sc.block_size()),
                        BehaviorVector::Role::probability);
}

}  // namespace nsp
