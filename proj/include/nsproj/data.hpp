#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nsproj/constraints.hpp"
#include "nsproj/projection.hpp"
#include "nsproj/scenario.hpp"

namespace nsp {

/// Trial counts N(a, x) in canonical flat-index order.
struct CountTable {
  explicit CountTable(Scenario sc)
      : scenario(sc), counts(static_cast<std::size_t>(sc.dimension()), 0) {}

  std::int64_t block_total(int block) const;
  std::int64_t total() const;

  Scenario scenario;
  std::vector<std::int64_t> counts;
};

/// Long-format CSV with header `x1,...,xn,a1,...,an,count`, one row per
/// (x, a); missing rows mean zero. Malformed rows, duplicate keys and
/// negative counts are reported with the line number.
CountTable load_counts(std::istream& in, const Scenario& sc);
CountTable load_counts_text(const std::string& text, const Scenario& sc);

/// Convenience import of the 4x4 grid layout common for (2,2,2) count data:
/// one row per settings pair (00, 01, 10, 11), columns for outcomes
/// 00, 01, 10, 11. Separators: commas and/or whitespace.
CountTable load_grid222(std::istream& in);
CountTable load_grid222_text(const std::string& text);

void write_counts_csv(const CountTable& table, std::ostream& out);

struct Frequencies {
  BehaviorVector behavior;           // f(a|x) = N(a,x)/N(x), frequency role
  SettingsWeights setting_distribution;  // pi(x) = N(x)/N
};

/// Requires every setting block to carry at least one trial.
Frequencies frequencies(const CountTable& table);

struct SignallingEntry {
  std::string label;
  int party;
  int alt_setting;
  double reference_marginal;  // marginal under setting 0
  double alternate_marginal;  // marginal under alt_setting
  double residual;            // reference - alternate
};

struct SignallingReport {
  std::vector<SignallingEntry> entries;  // one per no-signalling row
  double max_abs = 0.0;
  double mean_abs = 0.0;
  double norm_max = 0.0;  // normalisation residual, for completeness
  int worst = -1;         // index of the largest |residual|
};

SignallingReport signalling_report(const BehaviorVector& f, const ConstraintSystem& system);

enum class GenerateMode { sampled, expected };

/// Synthetic counts from a no-signalling base behaviour with a slow drift
/// across sequential fixed-setting blocks. Each setting's trials are split
/// into `blocks` chunks; chunk b samples the base perturbed along a fixed,
/// seed-derived signalling direction scaled by amplitude*(b/blocks - 1/2).
/// The direction is a combination of no-signalling rows recentred to zero
/// block sums, so it leaves every block normalised while violating
/// no-signalling. Deterministic given the seed. In expected mode counts are
/// rounded expectations instead of samples.
CountTable generate_drift_counts(const BehaviorVector& base,
                                 const std::vector<std::int64_t>& trials_per_setting,
                                 double drift_amplitude, int blocks, std::uint64_t seed,
                                 GenerateMode mode = GenerateMode::sampled);

}  // namespace nsp
