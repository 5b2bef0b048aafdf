#include <doctest.h>

#include <array>
#include <set>
#include <sstream>

#include "nsproj/constraints.hpp"
#include "nsproj/correlators.hpp"
#include "test_util.hpp"

using nsp::Scenario;

TEST_CASE("nosig_row support and signs") {
  const Scenario sc(2, 2);
  const auto row = nsp::nosig_row(sc, 1, 1, std::array{0}, std::array{0});
  REQUIRE(row.support.size() == 4);
  // +1 on (00|00), (10|00); -1 on (00|10), (10|10).
  std::set<std::pair<int, int>> support(row.support.begin(), row.support.end());
  CHECK(support.count({0, 1}) == 1);
  CHECK(support.count({2, 1}) == 1);
  CHECK(support.count({8, -1}) == 1);
  CHECK(support.count({10, -1}) == 1);

  const auto uniform = nsp::uniform_behavior(sc);
  CHECK(row.dot(uniform.entries) == 0.0);

  const Scenario sc32(3, 2);
  const auto row32 = nsp::nosig_row(sc32, 2, 1, std::array{1, 0}, std::array{0, 1});
  REQUIRE(row32.support.size() == 4);
  int sum = 0;
  for (const auto& [idx, coef] : row32.support) sum += coef;
  CHECK(sum == 0);

  CHECK_THROWS_AS(nsp::nosig_row(sc, 1, 0, std::array{0}, std::array{0}), std::domain_error);
  CHECK_THROWS_AS(nsp::nosig_row(sc, 3, 1, std::array{0}, std::array{0}), std::domain_error);
}

TEST_CASE("nosig_row matches the outcome-major fixture") {
  // Reference tabulation of ns^{1,r=1} with (a2,x2)=(0,0), components listed
  // in outcome-major order (a1 a2 x1 x2 lexicographic).
  const std::array<int, 16> fixture = {1, 0, -1, 0, 0, 0, 0, 0, 1, 0, -1, 0, 0, 0, 0, 0};
  const Scenario sc(2, 2);
  const auto row = nsp::nosig_row(sc, 1, 1, std::array{0}, std::array{0});
  std::vector<int> dense(16, 0);
  for (const auto& [idx, coef] : row.support) dense[idx] = coef;
  const auto perm = nsp::outcome_major_permutation(sc);
  for (int i = 0; i < 16; ++i) CHECK(dense[perm[i]] == fixture[i]);
}

TEST_CASE("norm_row support") {
  const Scenario sc(2, 2);
  const auto row = nsp::norm_row(sc, std::array{0, 0});
  REQUIRE(row.support.size() == 4);
  for (int a = 0; a < 4; ++a) {
    CHECK(row.support[a].first == a);
    CHECK(row.support[a].second == 1);
  }
  CHECK(row.dot(nsp::uniform_behavior(sc).entries) == 1.0);

  // Outcome-major fixture of nrm_(0,0).
  const std::array<int, 16> fixture = {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  std::vector<int> dense(16, 0);
  for (const auto& [idx, coef] : row.support) dense[idx] = coef;
  const auto perm = nsp::outcome_major_permutation(sc);
  for (int i = 0; i < 16; ++i) CHECK(dense[perm[i]] == fixture[i]);

  const auto row32 = nsp::norm_row(Scenario(3, 2), std::array{1, 0, 1});
  CHECK(row32.support.size() == 8);
}

TEST_CASE("build_constraint_system row counts") {
  struct Case {
    Scenario sc;
    int nosig;
    int norm;
    int dim;
  };
  const Case cases[] = {{Scenario(2, 2), 8, 4, 16},
                        {Scenario(2, 3), 24, 9, 36},
                        {Scenario(3, 2), 48, 8, 64},
                        {Scenario(3, 3), 216, 27, 216}};
  for (const auto& c : cases) {
    const auto system = nsp::build_constraint_system(c.sc);
    CHECK(system.nosig_count == c.nosig);
    CHECK(system.norm_count == c.norm);
    CHECK(static_cast<int>(system.rows.size()) == c.sc.constraint_rows());
    CHECK(system.rows.front().kind == nsp::SparseRow::Kind::nosig);
    CHECK(system.rows.back().kind == nsp::SparseRow::Kind::norm);
    for (int r = 0; r < system.nosig_count; ++r) {
      CHECK(system.rows[r].support.size() == 4);
      CHECK(system.rhs[r] == 0.0);
    }
    for (std::size_t r = system.rows.size() - c.norm; r < system.rows.size(); ++r) {
      CHECK(static_cast<int>(system.rows[r].support.size()) == c.sc.block_size());
      CHECK(system.rhs[r] == 1.0);
    }
  }
}

TEST_CASE("residuals on the (2,2,2) count data") {
  const auto f = nsptest::bell222_frequencies();
  const auto system = nsp::build_constraint_system(f.scenario);
  const auto report = nsp::residual(system, f);

  // Party-1 marginal mismatch between y=0 and y=1 at x=0, straight from the
  // counts: 5017/1250580 - 4975/1249152.
  const double expected = 5017.0 / 1250580.0 - 4975.0 / 1249152.0;
  CHECK(expected == doctest::Approx(2.90e-5).epsilon(0.01));
  bool found = false;
  for (int r = 0; r < system.nosig_count; ++r) {
    const auto& row = system.rows[r];
    if (row.party == 2 && row.alt_setting == 1 && row.rest_outcomes == std::vector{0} &&
        row.rest_settings == std::vector{0}) {
      CHECK(report.nosig[r] == doctest::Approx(expected).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);

  CHECK(report.norm_max < 1e-15);  // frequency blocks sum to one by construction
  CHECK(report.nosig_max > 1e-4);  // the data is genuinely weakly-signalling
}

TEST_CASE("residual of the uniform behaviour is zero") {
  for (const Scenario& sc : {Scenario(2, 2), Scenario(3, 2)}) {
    const auto system = nsp::build_constraint_system(sc);
    const auto report = nsp::residual(system, nsp::uniform_behavior(sc));
    CHECK(report.max_abs() == 0.0);
  }
}

TEST_CASE("kernel basis dimension and orthogonality to the rows") {
  for (const Scenario& sc : {Scenario(2, 2), Scenario(2, 3), Scenario(3, 2)}) {
    auto system = nsp::build_constraint_system(sc);
    const Eigen::MatrixXd& basis = nsp::ensure_kernel_basis(system);
    CHECK(basis.cols() == sc.hull_dimension());
    CHECK(basis.rows() == sc.dimension());

    const Eigen::MatrixXd dense = system.dense();
    CHECK((dense * basis).cwiseAbs().maxCoeff() < 1e-12);

    // rank(A_eq) + kernel dim = d, checked through the singular spectrum.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
    const auto& sigma = svd.singularValues();
    const double cutoff = 1e-9 * sigma(0);
    int rank = 0;
    while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
    CHECK(rank + sc.hull_dimension() == sc.dimension());
  }
}

TEST_CASE("every UMC coefficient vector is orthogonal to every row, exactly") {
  for (const Scenario& sc : {Scenario(2, 2), Scenario(2, 3), Scenario(3, 2), Scenario(3, 3)}) {
    const auto system = nsp::build_constraint_system(sc);
    const auto vectors = nsp::all_umc_coefficient_vectors(sc);
    CHECK(static_cast<int>(vectors.size()) == sc.hull_dimension());
    for (const auto& vec : vectors) {
      const std::vector<int> scaled = vec.scaled_entries();
      for (const auto& row : system.rows) {
        CHECK(row.dot_exact(scaled) == 0);
      }
    }
  }
}

TEST_CASE("coordinate-format dump") {
  const Scenario sc(2, 2);
  const auto system = nsp::build_constraint_system(sc);
  std::ostringstream out;
  nsp::dump_coordinate_format(system, out);
  const std::string text = out.str();
  CHECK(text.find("# rhs") != std::string::npos);
  // 8 nosig rows * 4 entries + 4 norm rows * 4 entries = 48 coefficient lines.
  int lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 48 + 1 + 12);
}
