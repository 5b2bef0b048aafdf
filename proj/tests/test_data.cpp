#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nsproj/data.hpp"
#include "nsproj/projection.hpp"
#include "test_util.hpp"

using nsp::Scenario;

TEST_CASE("load_counts") {
  const Scenario sc(2, 2);
  const auto table = nsp::load_counts_text(nsptest::bell222_csv(), sc);

  CHECK(table.total() == 5000000);
  CHECK(table.block_total(0) == 1250580);
  CHECK(table.block_total(1) == 1249152);
  CHECK(table.block_total(2) == 1249656);
  CHECK(table.block_total(3) == 1250612);
  CHECK(table.counts[0] == 3166);  // row `0,0,0,0,3166`

  SUBCASE("missing rows default to zero") {
    const auto sparse = nsp::load_counts_text("x1,x2,a1,a2,count\n0,0,0,0,7\n", sc);
    CHECK(sparse.counts[0] == 7);
    CHECK(sparse.total() == 7);
  }

  SUBCASE("duplicate keys are rejected with the key named") {
    const std::string text = "x1,x2,a1,a2,count\n0,0,0,0,1\n0,0,0,0,2\n";
    CHECK_THROWS_WITH_AS(nsp::load_counts_text(text, sc), doctest::Contains("duplicate key"),
                         std::runtime_error);
  }

  SUBCASE("malformed rows carry the line number") {
    CHECK_THROWS_WITH_AS(nsp::load_counts_text("x1,x2,a1,a2,count\n0,0,0,oops,3\n", sc),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(nsp::load_counts_text("x1,x2,a1,a2,count\n0,0,0,0\n", sc),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_AS(nsp::load_counts_text("x1,x2,a1,a2,count\n0,0,0,0,-3\n", sc), std::runtime_error);
    CHECK_THROWS_WITH_AS(nsp::load_counts_text("x1,x2,a1,a2,count\n0,5,0,0,3\n", sc),
                         doctest::Contains("setting"), std::runtime_error);
  }

  SUBCASE("grid import matches the long format") {
    const std::string grid =
        "3166 1851 2043 1243520\n"
        "3637, 1338, 13544, 1230633\n"
        "3992 13752 1226 1230686\n"
        "357 17648 16841 1215766\n";
    const auto from_grid = nsp::load_grid222_text(grid);
    CHECK(from_grid.counts == table.counts);
  }

  SUBCASE("CSV round trip") {
    std::ostringstream out;
    nsp::write_counts_csv(table, out);
    const auto back = nsp::load_counts_text(out.str(), sc);
    CHECK(back.counts == table.counts);
  }
}

TEST_CASE("frequencies") {
  const auto table = nsp::load_counts_text(nsptest::bell222_csv(), Scenario(2, 2));
  const auto freq = nsp::frequencies(table);

  CHECK(freq.behavior.entries[0] == doctest::Approx(3166.0 / 1250580.0).epsilon(1e-15));
  CHECK(freq.behavior.entries[0] == doctest::Approx(2.5317e-3).epsilon(1e-4));
  for (double pi : freq.setting_distribution.weights) {
    CHECK(std::abs(pi - 0.25) < 3e-4);
  }

  SUBCASE("single-trial table gives a 0/1 indicator") {
    nsp::CountTable tiny(Scenario(2, 2));
    for (int block = 0; block < 4; ++block) tiny.counts[block * 4 + block] = 1;
    const auto f = nsp::frequencies(tiny);
    for (int block = 0; block < 4; ++block) {
      for (int a = 0; a < 4; ++a) {
        CHECK(f.behavior.entries[block * 4 + a] == (a == block ? 1.0 : 0.0));
      }
    }
  }

  SUBCASE("empty block is an error") {
    nsp::CountTable empty(Scenario(2, 2));
    empty.counts[0] = 5;  // only block 0 populated
    CHECK_THROWS_AS(nsp::frequencies(empty), std::domain_error);
  }
}

TEST_CASE("signalling_report") {
  const Scenario sc(2, 2);
  const auto system = nsp::build_constraint_system(sc);

  SUBCASE("count data: the marked marginal pair appears and the worst pair is found") {
    const auto freq = nsp::frequencies(nsp::load_counts_text(nsptest::bell222_csv(), sc));
    const auto report = nsp::signalling_report(freq.behavior, system);
    CHECK(report.entries.size() == 8);

    bool marked_pair_found = false;
    for (const auto& entry : report.entries) {
      if (entry.party == 2 && entry.alt_setting == 1 &&
          std::abs(entry.reference_marginal - 4.0117e-3) < 1e-7) {
        CHECK(entry.alternate_marginal == doctest::Approx(3.9827e-3).epsilon(1e-4));
        marked_pair_found = true;
      }
    }
    CHECK(marked_pair_found);

    // Worst offender straight from the counts: party 1's a=0 marginal at
    // x=1 shifts by 17744/1249656 - 18005/1250612 when party 2 switches.
    const double expected_worst = std::abs(17744.0 / 1249656.0 - 18005.0 / 1250612.0);
    CHECK(report.max_abs == doctest::Approx(expected_worst).epsilon(1e-9));
    const auto& worst = report.entries[report.worst];
    CHECK(worst.party == 2);
    CHECK(worst.label.find("x=(1)") != std::string::npos);
    CHECK(report.mean_abs > 0.0);
    CHECK(report.mean_abs <= report.max_abs);
  }

  SUBCASE("no-signalling behaviours report nothing") {
    std::mt19937_64 rng(59);
    const auto v = nsptest::random_ns_behavior(sc, rng);
    const auto report = nsp::signalling_report(v, system);
    CHECK(report.max_abs <= 1e-14);
  }

  SUBCASE("projected count data is clean to 1e-12") {
    const auto freq = nsp::frequencies(nsp::load_counts_text(nsptest::bell222_csv(), sc));
    const auto projected = nsp::project_l2(freq.behavior);
    const auto report = nsp::signalling_report(projected.value, system);
    CHECK(report.max_abs <= 1e-12);
  }
}

TEST_CASE("weighted projection tracks a heavily-sampled setting") {
  // Nearly all trials land on setting (0,0); weighting by the observed
  // settings distribution penalises deviations there the most, so the
  // weighted projection stays closer to that empirical block than the
  // uniform-average projection does.
  const Scenario sc(2, 2);
  const auto counts = nsp::generate_drift_counts(nsp::uniform_behavior(sc),
                                                 {1000000, 1000, 1000, 1000}, 0.2, 4, 11,
                                                 nsp::GenerateMode::sampled);
  const auto freq = nsp::frequencies(counts);
  const auto weighted = nsp::project_weighted(freq.behavior, freq.setting_distribution);
  const auto plain = nsp::project_l2(freq.behavior);
  double weighted_err = 0.0, plain_err = 0.0;
  for (int a = 0; a < 4; ++a) {
    weighted_err = std::max(weighted_err, std::abs(weighted.value.entries[a] - freq.behavior.entries[a]));
    plain_err = std::max(plain_err, std::abs(plain.value.entries[a] - freq.behavior.entries[a]));
  }
  CHECK(weighted_err < plain_err);
}

TEST_CASE("generate_drift_counts") {
  const Scenario sc(2, 2);
  const auto uniform = nsp::uniform_behavior(sc);
  const std::vector<std::int64_t> trials(4, 1000);

  SUBCASE("zero drift, expected mode: exact expected counts") {
    const auto table =
        nsp::generate_drift_counts(uniform, trials, 0.0, 1, 7, nsp::GenerateMode::expected);
    for (std::int64_t c : table.counts) CHECK(c == 250);
  }

  SUBCASE("drift injects detectable signalling") {
    const auto table = nsp::generate_drift_counts(uniform, std::vector<std::int64_t>(4, 200000), 0.05,
                                                  4, 7, nsp::GenerateMode::expected);
    const auto freq = nsp::frequencies(table);
    const auto report = nsp::signalling_report(freq.behavior, nsp::build_constraint_system(sc));
    CHECK(report.max_abs > 1e-5);
  }

  SUBCASE("determinism: same seed, same table") {
    const auto a = nsp::generate_drift_counts(uniform, trials, 0.03, 4, 123, nsp::GenerateMode::sampled);
    const auto b = nsp::generate_drift_counts(uniform, trials, 0.03, 4, 123, nsp::GenerateMode::sampled);
    CHECK(a.counts == b.counts);
    const auto c = nsp::generate_drift_counts(uniform, trials, 0.03, 4, 124, nsp::GenerateMode::sampled);
    CHECK(a.counts != c.counts);
  }

  SUBCASE("sampled counts concentrate around the base at high statistics") {
    std::mt19937_64 rng(61);
    const auto base = nsptest::random_ns_behavior(sc, rng);
    const auto table = nsp::generate_drift_counts(base, std::vector<std::int64_t>(4, 1000000), 0.0, 1,
                                                  99, nsp::GenerateMode::sampled);
    const auto freq = nsp::frequencies(table);
    CHECK(nsptest::max_abs_diff(freq.behavior.entries, base.entries) < 5e-3);
  }

  SUBCASE("per-block totals follow trials_per_setting") {
    const std::vector<std::int64_t> uneven{10, 20, 30, 47};
    const auto table = nsp::generate_drift_counts(uniform, uneven, 0.0, 3, 5, nsp::GenerateMode::sampled);
    for (int block = 0; block < 4; ++block) CHECK(table.block_total(block) == uneven[block]);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(
        nsp::generate_drift_counts(uniform, trials, 3.0, 2, 1, nsp::GenerateMode::expected),
        std::domain_error);  // drift pushes probabilities outside [0,1]
    const auto signalling = nsptest::bell222_frequencies();
    CHECK_THROWS_AS(
        nsp::generate_drift_counts(signalling, trials, 0.0, 1, 1, nsp::GenerateMode::expected),
        std::domain_error);  // base must be no-signalling
    CHECK_THROWS_AS(
        nsp::generate_drift_counts(uniform, {10, 10}, 0.0, 1, 1, nsp::GenerateMode::expected),
        std::domain_error);  // trials list must cover all blocks
  }
}
