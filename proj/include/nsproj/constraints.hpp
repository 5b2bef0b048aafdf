#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nsproj/scenario.hpp"

namespace nsp {

/// One equality row of the system A_eq p = b. No-signalling rows have exactly
/// four nonzeros (+1,+1,-1,-1); normalisation rows have 2^n nonzeros, all +1.
struct SparseRow {
  enum class Kind { nosig, norm };

  Kind kind;
  std::vector<std::pair<int, int>> support;  // (flat index, coefficient)

  // nosig label: the marginal of parties != party is compared between the
  // reference setting 0 and alt_setting for `party`.
  int party = 0;        // 1-based
  int alt_setting = 0;  // in [1, m-1]
  std::vector<int> rest_outcomes;
  std::vector<int> rest_settings;
  // norm label: the setting block.
  std::vector<int> block_settings;

  double dot(std::span<const double> v) const;
  /// Exact dot product against an integer vector.
  long long dot_exact(std::span<const int> v) const;
  std::string label() const;
};

SparseRow nosig_row(const Scenario& sc, int party, int alt_setting,
                    std::span<const int> rest_outcomes, std::span<const int> rest_settings);
SparseRow norm_row(const Scenario& sc, std::span<const int> settings);

/// The full equality system: all n(m-1)(2m)^{n-1} no-signalling rows first,
/// then the m^n normalisation rows. Redundant rows are kept; rank deficiency
/// is handled by the kernel computation.
struct ConstraintSystem {
  Scenario scenario;
  std::vector<SparseRow> rows;
  std::vector<double> rhs;  // 0 for nosig rows, 1 for norm rows
  int nosig_count = 0;
  int norm_count = 0;
  std::optional<Eigen::MatrixXd> kernel;  // filled by ensure_kernel_basis

  Eigen::MatrixXd dense() const;
};

ConstraintSystem build_constraint_system(const Scenario& sc);

struct ResidualReport {
  std::vector<double> nosig;
  std::vector<double> norm;  // A_no v - 1
  double nosig_max = 0.0;
  double norm_max = 0.0;
  double max_abs() const { return nosig_max > norm_max ? nosig_max : norm_max; }
};

ResidualReport residual(const ConstraintSystem& system, const BehaviorVector& v);

/// Orthonormal basis of ker(A_eq), one column per kernel direction, computed
/// by SVD with relative threshold 1e-9. Throws if the singular spectrum does
/// not split cleanly at the expected kernel dimension (m+1)^n - 1, reporting
/// the gap.
Eigen::MatrixXd kernel_basis(const ConstraintSystem& system);

/// Caches the kernel basis inside the system and returns it.
const Eigen::MatrixXd& ensure_kernel_basis(ConstraintSystem& system);

/// Debug dump: `row col coeff` lines, then a `# rhs` section. Not a
/// stability-guaranteed format.
void dump_coordinate_format(const ConstraintSystem& system, std::ostream& out);

}  // namespace nsp
