#include "nsproj/constraints.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace nsp {

namespace {

std::vector<int> insert_at(std::span<const int> rest, int position, int value) {
  std::vector<int> full(rest.size() + 1);
  for (int i = 0, j = 0; i < static_cast<int>(full.size()); ++i) {
    full[i] = (i == position) ? value : rest[j++];
  }
  return full;
}

std::string tuple_str(std::span<const int> values) {
  std::string out = "(";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  return out + ")";
}

}  // namespace

double SparseRow::dot(std::span<const double> v) const {
  double acc = 0.0;
  for (const auto& [index, coef] : support) acc += coef * v[index];
  return acc;
}

long long SparseRow::dot_exact(std::span<const int> v) const {
  long long acc = 0;
  for (const auto& [index, coef] : support) acc += static_cast<long long>(coef) * v[index];
  return acc;
}

std::string SparseRow::label() const {
  std::ostringstream out;
  if (kind == Kind::nosig) {
    out << "party " << party << " setting 0 vs " << alt_setting << ", others a=" << tuple_str(rest_outcomes)
        << " x=" << tuple_str(rest_settings);
  } else {
    out << "normalisation x=" << tuple_str(block_settings);
  }
  return out.str();
}

SparseRow nosig_row(const Scenario& sc, int party, int alt_setting, std::span<const int> rest_outcomes,
                    std::span<const int> rest_settings) {
  if (party < 1 || party > sc.parties()) throw std::domain_error("party index out of range");
  if (alt_setting < 1 || alt_setting >= sc.settings()) {
    throw std::domain_error("alternative setting must lie in 1.." + std::to_string(sc.settings() - 1) +
                            " (0 is the reference setting)");
  }
  if (static_cast<int>(rest_outcomes.size()) != sc.parties() - 1 ||
      static_cast<int>(rest_settings.size()) != sc.parties() - 1) {
    throw std::domain_error("no-signalling label tuples must cover the other n-1 parties");
  }

  SparseRow row;
  row.kind = SparseRow::Kind::nosig;
  row.party = party;
  row.alt_setting = alt_setting;
  row.rest_outcomes.assign(rest_outcomes.begin(), rest_outcomes.end());
  row.rest_settings.assign(rest_settings.begin(), rest_settings.end());
  for (int setting : {0, alt_setting}) {
    const int coef = setting == 0 ? 1 : -1;
    std::vector<int> settings = insert_at(rest_settings, party - 1, setting);
    for (int outcome : {0, 1}) {
      std::vector<int> outcomes = insert_at(rest_outcomes, party - 1, outcome);
      row.support.emplace_back(encode_index(sc, outcomes, settings), coef);
    }
  }
  return row;
}

SparseRow norm_row(const Scenario& sc, std::span<const int> settings) {
  SparseRow row;
  row.kind = SparseRow::Kind::norm;
  row.block_settings.assign(settings.begin(), settings.end());
  const int base = setting_block_rank(sc, settings) * sc.block_size();
  for (int a = 0; a < sc.block_size(); ++a) row.support.emplace_back(base + a, 1);
  return row;
}

ConstraintSystem build_constraint_system(const Scenario& sc) {
  ConstraintSystem system{.scenario = sc};
  const int n = sc.parties();
  const int rest_outcome_count = n > 1 ? (1 << (n - 1)) : 1;
  long long rest_setting_count = 1;
  for (int i = 0; i < n - 1; ++i) rest_setting_count *= sc.settings();

  std::vector<int> rest_a(std::max(n - 1, 0));
  std::vector<int> rest_x(std::max(n - 1, 0));
  for (int party = 1; party <= n; ++party) {
    for (int alt = 1; alt < sc.settings(); ++alt) {
      for (int ar = 0; ar < rest_outcome_count; ++ar) {
        outcome_unrank(n - 1, ar, rest_a);
        for (long long xr = 0; xr < rest_setting_count; ++xr) {
          long long rank = xr;
          for (int i = n - 2; i >= 0; --i) {
            rest_x[i] = static_cast<int>(rank % sc.settings());
            rank /= sc.settings();
          }
          system.rows.push_back(nosig_row(sc, party, alt, rest_a, rest_x));
          system.rhs.push_back(0.0);
        }
      }
    }
  }
  system.nosig_count = static_cast<int>(system.rows.size());

  std::vector<int> block(n);
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    system.rows.push_back(norm_row(sc, block));
    system.rhs.push_back(1.0);
  }
  system.norm_count = sc.setting_blocks();
  return system;
}

Eigen::MatrixXd ConstraintSystem::dense() const {
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), scenario.dimension());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [index, coef] : rows[r].support) mat(static_cast<Eigen::Index>(r), index) = coef;
  }
  return mat;
}

ResidualReport residual(const ConstraintSystem& system, const BehaviorVector& v) {
  if (!(v.scenario == system.scenario)) throw std::domain_error("behaviour/system scenario mismatch");
  ResidualReport report;
  report.nosig.reserve(system.nosig_count);
  report.norm.reserve(system.norm_count);
  for (std::size_t r = 0; r < system.rows.size(); ++r) {
    const double value = system.rows[r].dot(v.entries) - system.rhs[r];
    if (system.rows[r].kind == SparseRow::Kind::nosig) {
      report.nosig.push_back(value);
      report.nosig_max = std::max(report.nosig_max, std::abs(value));
    } else {
      report.norm.push_back(value);
      report.norm_max = std::max(report.norm_max, std::abs(value));
    }
  }
  return report;
}

Eigen::MatrixXd kernel_basis(const ConstraintSystem& system) {
  const Eigen::MatrixXd dense = system.dense();
  // JacobiSVD: BDCSVD mis-deflates on these highly degenerate spectra.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double cutoff = 1e-9 * sigma(0);
  const int d = system.scenario.dimension();
  const int expected = system.scenario.hull_dimension();

  int rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  const int kernel_dim = d - rank;
  if (kernel_dim != expected) {
    const double above = rank > 0 ? sigma(rank - 1) : 0.0;
    const double below = rank < sigma.size() ? sigma(rank) : 0.0;
    throw std::runtime_error("kernel dimension " + std::to_string(kernel_dim) + " != expected " +
                             std::to_string(expected) + "; singular values straddle the cutoff (" +
                             std::to_string(above) + " vs " + std::to_string(below) + ")");
  }
  return svd.matrixV().rightCols(kernel_dim);
}

const Eigen::MatrixXd& ensure_kernel_basis(ConstraintSystem& system) {
  if (!system.kernel) system.kernel = kernel_basis(system);
  return *system.kernel;
}

void dump_coordinate_format(const ConstraintSystem& system, std::ostream& out) {
  for (std::size_t r = 0; r < system.rows.size(); ++r) {
    for (const auto& [index, coef] : system.rows[r].support) {
      out << r << ' ' << index << ' ' << coef << '\n';
    }
  }
  out << "# rhs\n";
  for (std::size_t r = 0; r < system.rhs.size(); ++r) out << r << ' ' << system.rhs[r] << '\n';
}

}  // namespace nsp
