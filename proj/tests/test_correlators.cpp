#include <doctest.h>

#include <array>
#include <random>

#include "nsproj/constraints.hpp"
#include "nsproj/correlators.hpp"
#include "nsproj/json_io.hpp"
#include "test_util.hpp"

using nsp::PartySubset;
using nsp::Scenario;

TEST_CASE("parity function") {
  CHECK(nsp::parity(PartySubset{}, std::array{1, 0, 1}) == 1);
  CHECK(nsp::parity(PartySubset({1, 2}), std::array{0, 1}) == -1);
  CHECK(nsp::parity(PartySubset({1, 3}), std::array{1, 0, 1}) == 1);
  CHECK(nsp::parity(PartySubset({2}), std::array{0, 1}) == -1);
}

TEST_CASE("correlator keys enumerate (m+1)^n ranks") {
  const Scenario sc(2, 2);
  CHECK(nsp::correlator_rank(sc, nsp::make_correlator_key(sc, PartySubset{}, {})) == 0);
  for (int rank = 0; rank < sc.correlator_count(); ++rank) {
    const auto key = nsp::correlator_unrank(sc, rank);
    CHECK(nsp::correlator_rank(sc, key) == rank);
  }
  // absent < setting 0 < setting 1 in the per-party lexicographic order.
  const auto key1 = nsp::correlator_unrank(sc, 1);
  CHECK(key1.per_party == std::vector{-1, 0});
  const auto key3 = nsp::correlator_unrank(sc, 3);
  CHECK(key3.per_party == std::vector{0, -1});
}

TEST_CASE("settingwise correlators") {
  SUBCASE("uniform behaviour") {
    const Scenario sc(2, 2);
    const auto sw = nsp::settingwise_correlators(nsp::uniform_behavior(sc));
    std::array<int, 2> x{0, 1};
    CHECK(sw.value(PartySubset{}, x) == 1.0);
    CHECK(sw.value(PartySubset({1}), x) == 0.0);
    CHECK(sw.value(PartySubset({1, 2}), x) == 0.0);
  }

  SUBCASE("PR box full correlators are (-1)^(x and y)") {
    const auto sw = nsp::settingwise_correlators(nsptest::pr_box());
    const PartySubset both({1, 2});
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        const std::array<int, 2> settings{x, y};
        // brute-force oracle over the four outcomes
        double oracle = 0.0;
        const auto box = nsptest::pr_box();
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const std::array<int, 2> outcomes{a, b};
            oracle += ((a + b) % 2 ? -1 : 1) * box.at(outcomes, settings);
          }
        }
        CHECK(oracle == (x * y == 1 ? -1.0 : 1.0));
        CHECK(sw.value(both, settings) == doctest::Approx(oracle).epsilon(1e-15));
      }
    }
  }

  SUBCASE("count-data party-1 correlator at x=(0,0)") {
    const auto sw = nsp::settingwise_correlators(nsptest::bell222_frequencies());
    const double expected = 2.0 * (5017.0 / 1250580.0) - 1.0;  // 2 P(a=0|00) - 1
    CHECK(sw.value(PartySubset({1}), std::array{0, 0}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(-0.99198).epsilon(1e-5));
  }
}

TEST_CASE("uniformly-averaged correlators") {
  SUBCASE("uniform behaviour") {
    const auto table = nsp::umc(nsp::uniform_behavior(Scenario(2, 3)));
    CHECK(table.value(PartySubset{}, {}) == 1.0);
    for (int rank = 1; rank < table.scenario.correlator_count(); ++rank) {
      CHECK(table.values[rank] == 0.0);
    }
  }

  SUBCASE("count-data party-1 average") {
    const auto table = nsp::umc(nsptest::bell222_frequencies());
    const double c00 = 2.0 * (5017.0 / 1250580.0) - 1.0;
    const double c01 = 2.0 * (4975.0 / 1249152.0) - 1.0;
    const double expected = (c00 + c01) / 2.0;
    CHECK(table.value(PartySubset({1}), std::array{0}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(-0.992005).epsilon(1e-5));
  }

  SUBCASE("no-signalling input: averaged equals per-setting for every fixed rest") {
    std::mt19937_64 rng(7);
    for (const Scenario& sc : {Scenario(2, 2), Scenario(2, 3), Scenario(3, 2)}) {
      const auto v = nsptest::random_ns_behavior(sc, rng);
      const auto sw = nsp::settingwise_correlators(v);
      const auto table = nsp::umc(v);
      std::vector<int> block(sc.parties());
      for (int x = 0; x < sc.setting_blocks(); ++x) {
        nsp::setting_block_unrank(sc, x, block);
        for (int mask = 1; mask < sc.block_size(); ++mask) {
          const auto subset = PartySubset::from_mask(static_cast<unsigned>(mask));
          std::vector<int> sub;
          for (int party : subset.members()) sub.push_back(block[party - 1]);
          CHECK(sw.values[x * sc.block_size() + mask] ==
                doctest::Approx(table.value(subset, sub)).epsilon(1e-11));
        }
      }
    }
  }

  SUBCASE("full-subset entries are per-setting correlators, no averaging") {
    const auto f = nsptest::bell222_frequencies();  // weakly signalling
    const auto sw = nsp::settingwise_correlators(f);
    const auto table = nsp::umc(f);
    const PartySubset both({1, 2});
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        const std::array<int, 2> settings{x, y};
        CHECK(table.value(both, settings) == sw.value(both, settings));
      }
    }
  }

  SUBCASE("linearity") {
    std::mt19937_64 rng(3);
    const Scenario sc(2, 2);
    const auto u = nsptest::random_renormalized(sc, rng);
    const auto v = nsptest::random_renormalized(sc, rng);
    std::vector<double> mix(sc.dimension());
    const double alpha = 0.3, beta = -1.7;
    for (int i = 0; i < sc.dimension(); ++i) mix[i] = alpha * u.entries[i] + beta * v.entries[i];
    const auto t_mix =
        nsp::umc(nsp::BehaviorVector(sc, mix, nsp::BehaviorVector::Role::unconstrained));
    const auto t_u = nsp::umc(u);
    const auto t_v = nsp::umc(v);
    for (int rank = 0; rank < sc.correlator_count(); ++rank) {
      CHECK(t_mix.values[rank] ==
            doctest::Approx(alpha * t_u.values[rank] + beta * t_v.values[rank]).epsilon(1e-12));
    }
  }
}

TEST_CASE("UMC coefficient vectors") {
  const Scenario sc(2, 2);

  SUBCASE("dot(c, v) equals the averaged correlator") {
    std::mt19937_64 rng(11);
    const auto v = nsptest::random_renormalized(sc, rng);
    const auto table = nsp::umc(v);
    for (const auto& vec : nsp::all_umc_coefficient_vectors(sc, /*include_empty=*/true)) {
      double dot = 0.0;
      const auto dense = vec.dense();
      for (int i = 0; i < sc.dimension(); ++i) dot += dense[i] * v.entries[i];
      CHECK(dot == doctest::Approx(table.value(vec.subset, vec.settings)).epsilon(1e-12));
    }
  }

  SUBCASE("outcome-major fixtures for the eight (2,2,2) vectors") {
    // Rows of the reference table: c^{1}_0, c^{1}_1, c^{2}_0, c^{2}_1, then
    // the four full-correlator selectors; components in outcome-major order,
    // in halves of 1 (scale 2 for the marginals, 1 for the fulls).
    struct Fixture {
      PartySubset subset;
      std::vector<int> settings;
      std::array<int, 16> twice;  // entries scaled by 2
    };
    const Fixture fixtures[] = {
        {PartySubset({1}), {0}, {1, 1, 0, 0, 1, 1, 0, 0, -1, -1, 0, 0, -1, -1, 0, 0}},
        {PartySubset({1}), {1}, {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, -1, -1, 0, 0, -1, -1}},
        {PartySubset({2}), {0}, {1, 0, 1, 0, -1, 0, -1, 0, 1, 0, 1, 0, -1, 0, -1, 0}},
        {PartySubset({2}), {1}, {0, 1, 0, 1, 0, -1, 0, -1, 0, 1, 0, 1, 0, -1, 0, -1}},
        {PartySubset({1, 2}), {0, 0}, {2, 0, 0, 0, -2, 0, 0, 0, -2, 0, 0, 0, 2, 0, 0, 0}},
        {PartySubset({1, 2}), {0, 1}, {0, 2, 0, 0, 0, -2, 0, 0, 0, -2, 0, 0, 0, 2, 0, 0}},
        {PartySubset({1, 2}), {1, 0}, {0, 0, 2, 0, 0, 0, -2, 0, 0, 0, -2, 0, 0, 0, 2, 0}},
        {PartySubset({1, 2}), {1, 1}, {0, 0, 0, 2, 0, 0, 0, -2, 0, 0, 0, -2, 0, 0, 0, 2}},
    };
    const auto perm = nsp::outcome_major_permutation(sc);
    for (const auto& fixture : fixtures) {
      const auto vec = nsp::umc_coefficient_vector(sc, fixture.subset, fixture.settings);
      for (int i = 0; i < 16; ++i) {
        CHECK(vec.entries[perm[i]] * nsp::Rational(2) == nsp::Rational(fixture.twice[i]));
      }
    }
  }

  SUBCASE("kernel membership is exact") {
    const auto system = nsp::build_constraint_system(sc);
    for (const auto& vec : nsp::all_umc_coefficient_vectors(sc)) {
      const auto scaled = vec.scaled_entries();
      for (const auto& row : system.rows) CHECK(row.dot_exact(scaled) == 0);
    }
  }
}

TEST_CASE("parity orthogonality identity S(a', a)") {
  for (int n = 1; n <= 4; ++n) {
    const int size = 1 << n;
    for (int a1 = 0; a1 < size; ++a1) {
      for (int a2 = 0; a2 < size; ++a2) {
        long long sum = 0;
        std::vector<int> ta(n), tb(n);
        nsp::outcome_unrank(n, a1, ta);
        nsp::outcome_unrank(n, a2, tb);
        for (int mask = 0; mask < size; ++mask) {
          const auto subset = PartySubset::from_mask(static_cast<unsigned>(mask));
          sum += nsp::parity(subset, ta) * nsp::parity(subset, tb);
        }
        CHECK(sum == (a1 == a2 ? size : 0));
      }
    }
  }
}

TEST_CASE("probabilities_from_correlators") {
  SUBCASE("all-zero nonempty entries reconstruct the uniform behaviour") {
    const Scenario sc(3, 2);
    nsp::CorrelatorTable table(sc);
    table.values[0] = 1.0;
    const auto rebuilt = nsp::probabilities_from_correlators(table);
    for (double p : rebuilt.entries) CHECK(p == doctest::Approx(0.125).epsilon(1e-15));
  }

  SUBCASE("PR-box correlators reconstruct the PR box") {
    const Scenario sc(2, 2);
    nsp::CorrelatorTable table(sc);
    table.values[0] = 1.0;
    const PartySubset both({1, 2});
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        table.at(both, std::array{x, y}) = x * y == 1 ? -1.0 : 1.0;
      }
    }
    const auto rebuilt = nsp::probabilities_from_correlators(table);
    CHECK(nsptest::max_abs_diff(rebuilt.entries, nsptest::pr_box().entries) < 1e-15);
  }

  SUBCASE("round trip on random no-signalling behaviours") {
    std::mt19937_64 rng(23);
    for (const Scenario& sc : {Scenario(2, 2), Scenario(2, 3), Scenario(3, 2), Scenario(3, 3)}) {
      for (int trial = 0; trial < 25; ++trial) {
        const auto v = nsptest::random_ns_behavior(sc, rng);
        const auto rebuilt = nsp::probabilities_from_correlators(nsp::umc(v));
        CHECK(nsptest::max_abs_diff(rebuilt.entries, v.entries) < 1e-12);
      }
    }
  }
}

TEST_CASE("correlator table JSON round trip") {
  const auto table = nsp::umc(nsptest::bell222_frequencies());
  const auto j = nsp::correlator_table_to_json(table);
  const auto parsed = nsp::correlator_table_from_json(j);
  CHECK(nsptest::max_abs_diff(parsed.values, table.values) == 0.0);

  auto truncated = j;
  truncated["entries"].erase(0);
  CHECK_THROWS_WITH_AS(nsp::correlator_table_from_json(truncated), doctest::Contains("missing"),
                       std::runtime_error);
}
