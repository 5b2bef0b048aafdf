#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "nsproj/nsproj.h"
#include "test_util.hpp"

namespace {

struct Fixture {
  nsp_scenario* sc = nullptr;
  nsp_counts* counts = nullptr;
  nsp_behavior* freq = nullptr;
  std::vector<double> pi = std::vector<double>(4, 0.0);

  Fixture() {
    sc = nsp_scenario_create(2, 2);
    REQUIRE(sc);
    counts = nsp_counts_parse_csv(sc, nsptest::bell222_csv().c_str());
    REQUIRE(counts);
    freq = nsp_counts_frequencies(counts, pi.data());
    REQUIRE(freq);
  }
  ~Fixture() {
    nsp_behavior_free(freq);
    nsp_counts_free(counts);
    nsp_scenario_free(sc);
  }
};

}  // namespace

TEST_CASE("scenario handles") {
  nsp_scenario* sc = nsp_scenario_create(3, 2);
  REQUIRE(sc);
  CHECK(nsp_scenario_dimension(sc) == 64);
  CHECK(nsp_scenario_setting_blocks(sc) == 8);
  nsp_scenario_free(sc);

  CHECK(nsp_scenario_create(0, 2) == nullptr);
  CHECK(std::string(nsp_last_error()).find("party") != std::string::npos);
}

TEST_CASE("counts, frequencies and projection through the C surface") {
  Fixture fx;
  CHECK(nsp_counts_total(fx.counts) == 5000000);
  CHECK(nsp_counts_setting_blocks(fx.counts) == 4);
  for (double w : fx.pi) CHECK(std::abs(w - 0.25) < 3e-4);

  std::vector<double> entries(16);
  REQUIRE(nsp_behavior_entries(fx.freq, entries.data(), entries.size()) == NSP_OK);
  CHECK(entries[0] == doctest::Approx(3166.0 / 1250580.0));

  double nosig = 0.0, norm = 0.0;
  REQUIRE(nsp_residual_max(fx.freq, &nosig, &norm) == NSP_OK);
  CHECK(nosig > 1e-5);
  CHECK(norm < 1e-14);

  nsp_behavior* pipeline = nsp_project(fx.freq, "pipeline", nullptr, 0);
  REQUIRE(pipeline);
  REQUIRE(nsp_residual_max(pipeline, &nosig, &norm) == NSP_OK);
  CHECK(nosig <= 1e-12);
  CHECK(norm <= 1e-12);

  nsp_behavior* direct = nsp_project(fx.freq, "direct", nullptr, 0);
  REQUIRE(direct);
  std::vector<double> a(16), b(16);
  nsp_behavior_entries(pipeline, a.data(), 16);
  nsp_behavior_entries(direct, b.data(), 16);
  CHECK(nsptest::max_abs_diff(a, b) < 1e-10);

  nsp_behavior* weighted = nsp_project(fx.freq, "weighted", fx.pi.data(), fx.pi.size());
  REQUIRE(weighted);
  nsp_behavior* ml = nsp_project(fx.freq, "ml", fx.pi.data(), fx.pi.size());
  REQUIRE(ml);

  CHECK(nsp_project(fx.freq, "weighted", nullptr, 0) == nullptr);  // weights required
  CHECK(nsp_project(fx.freq, "sideways", nullptr, 0) == nullptr);
  CHECK(std::string(nsp_last_error()).find("sideways") != std::string::npos);

  nsp_behavior_free(ml);
  nsp_behavior_free(weighted);
  nsp_behavior_free(direct);
  nsp_behavior_free(pipeline);
}

TEST_CASE("expressions and evaluation through the C surface") {
  Fixture fx;
  nsp_expression* chsh = nsp_expression_builtin("chsh", 0, 0);
  REQUIRE(chsh);

  int parties = 0, settings = 0;
  REQUIRE(nsp_expression_scenario(chsh, &parties, &settings) == NSP_OK);
  CHECK(parties == 2);
  CHECK(settings == 2);

  double bound = 0.0;
  int is_le = 0;
  REQUIRE(nsp_expression_bound(chsh, &bound, &is_le) == NSP_OK);
  CHECK(bound == 2.0);
  CHECK(is_le == 1);

  double value = 0.0, margin = 0.0;
  int violated = 0;
  REQUIRE(nsp_evaluate(chsh, fx.freq, 1, &value, &margin, &violated) == NSP_OK);
  CHECK(value == doctest::Approx(nsptest::bell222_chsh_from_counts()).epsilon(1e-12));
  CHECK(violated == 1);
  CHECK(margin == doctest::Approx(value - 2.0));

  char* canonical = nsp_expression_canonical_json(chsh);
  REQUIRE(canonical);
  CHECK(std::string(canonical).find("expanded") != std::string::npos);

  nsp_expression* parsed = nsp_expression_parse_json(canonical);
  // canonical JSON carries the expanded field too, which the parser ignores;
  // the terms/bound/direction schema is shared.
  REQUIRE(parsed);
  double value2 = 0.0;
  REQUIRE(nsp_evaluate(parsed, fx.freq, 0, &value2, nullptr, nullptr) == NSP_OK);
  CHECK(value2 == doctest::Approx(value).epsilon(1e-12));
  nsp_expression_free(parsed);
  nsp_string_free(canonical);

  CHECK(nsp_expression_builtin("unknown", 0, 0) == nullptr);
  CHECK(nsp_expression_builtin("tilted", 0.2, 0.0) == nullptr);

  // Scenario mismatch is flagged.
  nsp_expression* mermin = nsp_expression_builtin("mermin", 0, 0);
  REQUIRE(mermin);
  CHECK(nsp_evaluate(mermin, fx.freq, 0, &value, nullptr, nullptr) == NSP_ERR_INVALID);
  nsp_expression_free(mermin);

  nsp_expression_free(chsh);
}

TEST_CASE("behaviour JSON and synthetic counts through the C surface") {
  Fixture fx;
  char* text = nsp_behavior_to_json(fx.freq);
  REQUIRE(text);
  nsp_behavior* parsed = nsp_behavior_parse_json(text);
  REQUIRE(parsed);
  std::vector<double> a(16), b(16);
  nsp_behavior_entries(fx.freq, a.data(), 16);
  nsp_behavior_entries(parsed, b.data(), 16);
  CHECK(nsptest::max_abs_diff(a, b) == 0.0);
  nsp_behavior_free(parsed);
  nsp_string_free(text);

  CHECK(nsp_behavior_parse_json("{not json") == nullptr);

  nsp_scenario* sc = nsp_scenario_create(2, 2);
  std::vector<double> uniform(16, 0.25);
  nsp_behavior* base = nsp_behavior_create(sc, uniform.data(), uniform.size());
  REQUIRE(base);
  const long long trials[4] = {1000, 1000, 1000, 1000};
  char* csv = nsp_generate_counts_csv(base, trials, 4, 0.0, 1, 7, /*expected_mode=*/1);
  REQUIRE(csv);
  nsp_counts* generation = nsp_counts_parse_csv(sc, csv);
  REQUIRE(generation);
  CHECK(nsp_counts_total(generation) == 4000);
  nsp_counts_free(generation);
  nsp_string_free(csv);
  nsp_behavior_free(base);
  nsp_scenario_free(sc);
}
