#include "nsproj/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nsp {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

std::int64_t parse_count(const std::string& field, int line_no) {
  std::size_t pos = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(field, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse count '" + field + "'");
  }
  if (pos != field.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse count '" + field + "'");
  }
  if (value < 0) throw std::runtime_error("line " + std::to_string(line_no) + ": negative count");
  return value;
}

int parse_small(const std::string& field, int line_no, const char* what) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(field, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + field + "'");
  }
  if (pos != field.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + field + "'");
  }
  return value;
}

}  // namespace

std::int64_t CountTable::block_total(int block) const {
  std::int64_t sum = 0;
  for (int a = 0; a < scenario.block_size(); ++a) sum += counts[block * scenario.block_size() + a];
  return sum;
}

std::int64_t CountTable::total() const {
  std::int64_t sum = 0;
  for (std::int64_t c : counts) sum += c;
  return sum;
}

CountTable load_counts(std::istream& in, const Scenario& sc) {
  const int n = sc.parties();
  CountTable table(sc);
  std::vector<bool> seen(sc.dimension(), false);

  std::string line;
  int line_no = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = split_fields(line);
    if (!header_done) {
      header_done = true;
      if (!fields.empty() && fields[0] == "x1") {
        if (static_cast<int>(fields.size()) != 2 * n + 1 || fields.back() != "count") {
          throw std::runtime_error("line " + std::to_string(line_no) +
                                   ": header must be x1,...,xn,a1,...,an,count");
        }
        continue;  // consumed the header
      }
    }
    if (static_cast<int>(fields.size()) != 2 * n + 1) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " + std::to_string(2 * n + 1) +
                               " fields, found " + std::to_string(fields.size()));
    }
    std::vector<int> settings(n), outcomes(n);
    for (int i = 0; i < n; ++i) settings[i] = parse_small(fields[i], line_no, "setting");
    for (int i = 0; i < n; ++i) outcomes[i] = parse_small(fields[n + i], line_no, "outcome");
    int index = 0;
    try {
      index = encode_index(sc, outcomes, settings);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (seen[index]) {
      std::ostringstream key;
      key << "x=(";
      for (int i = 0; i < n; ++i) key << (i ? "," : "") << settings[i];
      key << ") a=(";
      for (int i = 0; i < n; ++i) key << (i ? "," : "") << outcomes[i];
      key << ")";
      throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate key " + key.str());
    }
    seen[index] = true;
    table.counts[index] = parse_count(fields.back(), line_no);
  }
  return table;
}

CountTable load_counts_text(const std::string& text, const Scenario& sc) {
  std::istringstream in(text);
  return load_counts(in, sc);
}

CountTable load_grid222(std::istream& in) {
  const Scenario sc(2, 2);
  CountTable table(sc);
  std::vector<std::int64_t> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    std::int64_t value = 0;
    while (fields >> value) {
      if (value < 0) throw std::runtime_error("line " + std::to_string(line_no) + ": negative count");
      values.push_back(value);
    }
    if (!fields.eof()) throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse grid entry");
  }
  if (values.size() != 16) {
    throw std::runtime_error("grid import expects 16 counts (4 settings rows x 4 outcome columns), found " +
                             std::to_string(values.size()));
  }
  // Rows are settings pairs 00,01,10,11; columns outcomes 00,01,10,11 - the
  // same lexicographic order as the canonical flat index.
  table.counts.assign(values.begin(), values.end());
  return table;
}

CountTable load_grid222_text(const std::string& text) {
  std::istringstream in(text);
  return load_grid222(in);
}

void write_counts_csv(const CountTable& table, std::ostream& out) {
  const int n = table.scenario.parties();
  for (int i = 1; i <= n; ++i) out << "x" << i << ",";
  for (int i = 1; i <= n; ++i) out << "a" << i << ",";
  out << "count\n";
  for (int index = 0; index < table.scenario.dimension(); ++index) {
    auto [outcomes, settings] = decode_index(table.scenario, index);
    for (int i = 0; i < n; ++i) out << settings[i] << ",";
    for (int i = 0; i < n; ++i) out << outcomes[i] << ",";
    out << table.counts[index] << "\n";
  }
}

Frequencies frequencies(const CountTable& table) {
  const Scenario& sc = table.scenario;
  std::vector<double> entries(sc.dimension());
  std::vector<double> weights(sc.setting_blocks());
  const std::int64_t total = table.total();
  if (total == 0) throw std::domain_error("count table is empty");

  for (int x = 0; x < sc.setting_blocks(); ++x) {
    const std::int64_t block = table.block_total(x);
    if (block == 0) throw std::domain_error("setting block " + std::to_string(x) + " has no trials");
    for (int a = 0; a < sc.block_size(); ++a) {
      const int idx = x * sc.block_size() + a;
      entries[idx] = static_cast<double>(table.counts[idx]) / static_cast<double>(block);
    }
    weights[x] = static_cast<double>(block) / static_cast<double>(total);
  }
  return Frequencies{BehaviorVector(sc, std::move(entries), BehaviorVector::Role::frequency),
                     SettingsWeights(sc, std::move(weights))};
}

SignallingReport signalling_report(const BehaviorVector& f, const ConstraintSystem& system) {
  if (!(f.scenario == system.scenario)) throw std::domain_error("behaviour/system scenario mismatch");
  SignallingReport report;
  report.entries.reserve(system.nosig_count);

  double sum_abs = 0.0;
  for (const SparseRow& row : system.rows) {
    if (row.kind == SparseRow::Kind::norm) {
      report.norm_max = std::max(report.norm_max, std::abs(row.dot(f.entries) - 1.0));
      continue;
    }
    double reference = 0.0;
    double alternate = 0.0;
    for (const auto& [index, coef] : row.support) {
      if (coef > 0) {
        reference += f.entries[index];
      } else {
        alternate += f.entries[index];
      }
    }
    SignallingEntry entry{row.label(), row.party, row.alt_setting, reference, alternate,
                          reference - alternate};
    const double mag = std::abs(entry.residual);
    sum_abs += mag;
    if (report.worst < 0 || mag > report.max_abs) {
      report.worst = static_cast<int>(report.entries.size());
      report.max_abs = mag;
    }
    report.entries.push_back(std::move(entry));
  }
  if (!report.entries.empty()) report.mean_abs = sum_abs / static_cast<double>(report.entries.size());
  return report;
}

CountTable generate_drift_counts(const BehaviorVector& base,
                                 const std::vector<std::int64_t>& trials_per_setting,
                                 double drift_amplitude, int blocks, std::uint64_t seed,
                                 GenerateMode mode) {
  const Scenario& sc = base.scenario;
  if (static_cast<int>(trials_per_setting.size()) != sc.setting_blocks()) {
    throw std::domain_error("trials_per_setting must list all m^n setting blocks");
  }
  if (blocks < 1) throw std::domain_error("block count must be positive");

  const ConstraintSystem system = build_constraint_system(sc);
  if (residual(system, base).max_abs() > 1e-9) {
    throw std::domain_error("base behaviour is not no-signalling");
  }

  std::mt19937_64 rng(seed);

  // Signalling drift direction: random combination of no-signalling rows,
  // recentred so every block still sums to zero (staying a valid probability
  // perturbation), unit-normalised. Lies outside ker(A_eq) by construction.
  std::vector<double> direction(sc.dimension(), 0.0);
  if (system.nosig_count > 0 && drift_amplitude != 0.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 0; r < system.nosig_count; ++r) {
      const double coef = gauss(rng);
      for (const auto& [index, value] : system.rows[r].support) direction[index] += coef * value;
    }
    for (int x = 0; x < sc.setting_blocks(); ++x) {
      double mean = 0.0;
      for (int a = 0; a < sc.block_size(); ++a) mean += direction[x * sc.block_size() + a];
      mean /= sc.block_size();
      for (int a = 0; a < sc.block_size(); ++a) direction[x * sc.block_size() + a] -= mean;
    }
    double norm = 0.0;
    for (double v : direction) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw std::runtime_error("degenerate drift direction");
    for (double& v : direction) v /= norm;
  } else if (system.nosig_count == 0 && drift_amplitude != 0.0) {
    throw std::domain_error("scenario admits no signalling directions (m = 1)");
  }

  CountTable table(sc);
  std::vector<double> expected(sc.dimension(), 0.0);
  std::vector<double> probs(sc.block_size());
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    const std::int64_t trials = trials_per_setting[x];
    if (trials < 0) throw std::domain_error("negative trial count");
    for (int b = 0; b < blocks; ++b) {
      const std::int64_t chunk = trials / blocks + (b < trials % blocks ? 1 : 0);
      const double phase = drift_amplitude * (static_cast<double>(b) / blocks - 0.5);
      for (int a = 0; a < sc.block_size(); ++a) {
        const int idx = x * sc.block_size() + a;
        probs[a] = base.entries[idx] + phase * direction[idx];
        if (probs[a] < -1e-12 || probs[a] > 1.0 + 1e-12) {
          throw std::domain_error("drift amplitude pushes a probability outside [0,1]");
        }
        probs[a] = std::clamp(probs[a], 0.0, 1.0);
      }
      if (mode == GenerateMode::expected) {
        for (int a = 0; a < sc.block_size(); ++a) {
          expected[x * sc.block_size() + a] += static_cast<double>(chunk) * probs[a];
        }
      } else {
        // Multinomial draw as a chain of binomials over the outcomes.
        double remaining_mass = 1.0;
        std::int64_t remaining = chunk;
        for (int a = 0; a < sc.block_size() - 1 && remaining > 0; ++a) {
          const double p = remaining_mass > 0.0 ? std::clamp(probs[a] / remaining_mass, 0.0, 1.0) : 0.0;
          std::binomial_distribution<std::int64_t> binom(remaining, p);
          const std::int64_t drawn = binom(rng);
          table.counts[x * sc.block_size() + a] += drawn;
          remaining -= drawn;
          remaining_mass -= probs[a];
        }
        table.counts[x * sc.block_size() + sc.block_size() - 1] += remaining;
      }
    }
  }
  if (mode == GenerateMode::expected) {
    for (int idx = 0; idx < sc.dimension(); ++idx) table.counts[idx] = std::llround(expected[idx]);
  }
  return table;
}

}  // namespace nsp
