#include "nsproj/json_io.hpp"

#include <stdexcept>

namespace nsp {

namespace {

json rational_to_json(const Rational& value) {
  const double as_double = value.to_double();
  if (Rational::from_double(as_double) == value) return json(as_double);
  return json(value.str());
}

Rational rational_from_json(const json& j) {
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) return Rational::from_double(j.get<double>());
  throw std::runtime_error("coefficient must be a number or a rational string");
}

std::vector<int> int_list(const json& j, const char* what) {
  if (!j.is_array()) throw std::runtime_error(std::string(what) + " must be an array");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(v.get<int>());
  return out;
}

}  // namespace

json scenario_to_json(const Scenario& sc) {
  return json{{"n", sc.parties()}, {"m", sc.settings()}};
}

Scenario scenario_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("m")) throw std::runtime_error("scenario needs fields n and m");
  return Scenario(j.at("n").get<int>(), j.at("m").get<int>());
}

json behavior_to_json(const BehaviorVector& v) {
  const char* role = v.role == BehaviorVector::Role::probability  ? "probability"
                     : v.role == BehaviorVector::Role::frequency ? "frequency"
                                                                 : "unconstrained";
  return json{{"scenario", scenario_to_json(v.scenario)}, {"entries", v.entries}, {"role", role}};
}

BehaviorVector behavior_from_json(const json& j) {
  const Scenario sc = scenario_from_json(j.at("scenario"));
  std::vector<double> entries = j.at("entries").get<std::vector<double>>();
  BehaviorVector::Role role = BehaviorVector::Role::unconstrained;
  if (j.contains("role")) {
    const std::string text = j.at("role").get<std::string>();
    if (text == "probability") {
      role = BehaviorVector::Role::probability;
    } else if (text == "frequency") {
      role = BehaviorVector::Role::frequency;
    } else if (text != "unconstrained") {
      throw std::runtime_error("unknown behaviour role '" + text + "'");
    }
  }
  return BehaviorVector(sc, std::move(entries), role);
}

json correlator_table_to_json(const CorrelatorTable& table) {
  json entries = json::array();
  for (int rank = 0; rank < table.scenario.correlator_count(); ++rank) {
    const CorrelatorKey key = correlator_unrank(table.scenario, rank);
    entries.push_back(json{{"I", key.subset().members()},
                           {"xI", key.subset_settings()},
                           {"value", table.values[rank]}});
  }
  return json{{"scenario", scenario_to_json(table.scenario)}, {"entries", entries}};
}

CorrelatorTable correlator_table_from_json(const json& j) {
  const Scenario sc = scenario_from_json(j.at("scenario"));
  CorrelatorTable table(sc);
  std::vector<bool> seen(sc.correlator_count(), false);
  for (const auto& entry : j.at("entries")) {
    const PartySubset subset{int_list(entry.at("I"), "I")};
    const std::vector<int> settings = int_list(entry.at("xI"), "xI");
    const int rank = correlator_rank(sc, make_correlator_key(sc, subset, settings));
    seen[rank] = true;
    table.values[rank] = entry.at("value").get<double>();
  }
  std::string missing;
  for (int rank = 0; rank < sc.correlator_count(); ++rank) {
    if (seen[rank]) continue;
    const CorrelatorKey key = correlator_unrank(sc, rank);
    if (!missing.empty()) missing += ", ";
    missing += key.subset().str();
    if (!key.subset_settings().empty()) {
      missing += "@(";
      const auto settings = key.subset_settings();
      for (std::size_t i = 0; i < settings.size(); ++i) {
        if (i) missing += ",";
        missing += std::to_string(settings[i]);
      }
      missing += ")";
    }
  }
  if (!missing.empty()) throw std::runtime_error("correlator table is missing entries: " + missing);
  return table;
}

json expression_to_json(const BellExpression& expr) {
  json terms = json::array();
  for (const ProbTerm& term : expr.prob_terms) {
    terms.push_back(json{{"kind", "prob"},
                         {"a", term.outcomes},
                         {"x", term.settings},
                         {"coef", rational_to_json(term.coef)}});
  }
  for (const CorrTerm& term : expr.corr_terms) {
    terms.push_back(json{{"kind", "corr"},
                         {"I", term.subset.members()},
                         {"xI", term.settings},
                         {"coef", rational_to_json(term.coef)}});
  }
  json out{{"scenario", scenario_to_json(expr.scenario)},
           {"terms", terms},
           {"bound", rational_to_json(expr.bound)},
           {"direction", expr.direction == Direction::le ? "le" : "ge"}};
  if (!expr.name.empty()) out["name"] = expr.name;
  return out;
}

BellExpression expression_from_json(const json& j) {
  BellExpression expr{.scenario = scenario_from_json(j.at("scenario"))};
  expr.bound = rational_from_json(j.at("bound"));
  if (j.contains("direction")) {
    const std::string text = j.at("direction").get<std::string>();
    if (text == "le") {
      expr.direction = Direction::le;
    } else if (text == "ge") {
      expr.direction = Direction::ge;
    } else {
      throw std::runtime_error("direction must be 'le' or 'ge'");
    }
  }
  if (j.contains("name")) expr.name = j.at("name").get<std::string>();
  for (const auto& term : j.at("terms")) {
    const std::string kind = term.at("kind").get<std::string>();
    if (kind == "prob") {
      expr.prob_terms.push_back(ProbTerm{int_list(term.at("a"), "a"), int_list(term.at("x"), "x"),
                                         rational_from_json(term.at("coef"))});
    } else if (kind == "corr") {
      expr.corr_terms.push_back(CorrTerm{PartySubset(int_list(term.at("I"), "I")),
                                         int_list(term.at("xI"), "xI"),
                                         rational_from_json(term.at("coef"))});
    } else {
      throw std::runtime_error("unknown term kind '" + kind + "'");
    }
  }
  if (expr.prob_terms.empty() && expr.corr_terms.empty()) {
    throw std::runtime_error("expression has no terms");
  }
  check_forms_agree(expr);
  return expr;
}

json canonical_to_json(const CanonicalForm& canon) {
  json terms = json::array();
  for (const CorrTerm& term : canon.corr_terms()) {
    terms.push_back(json{{"kind", "corr"},
                         {"I", term.subset.members()},
                         {"xI", term.settings},
                         {"coef", rational_to_json(term.coef)}});
  }
  json expanded = json::array();
  for (const Rational& coef : canon.expanded) expanded.push_back(rational_to_json(coef));
  json out{{"scenario", scenario_to_json(canon.scenario)},
           {"terms", terms},
           {"expanded", expanded},
           {"bound", rational_to_json(canon.bound)},
           {"direction", canon.direction == Direction::le ? "le" : "ge"}};
  if (!canon.name.empty()) out["name"] = canon.name;
  return out;
}

json signalling_report_to_json(const SignallingReport& report) {
  json rows = json::array();
  for (const SignallingEntry& entry : report.entries) {
    rows.push_back(json{{"label", entry.label},
                        {"party", entry.party},
                        {"alt_setting", entry.alt_setting},
                        {"reference_marginal", entry.reference_marginal},
                        {"alternate_marginal", entry.alternate_marginal},
                        {"residual", entry.residual}});
  }
  json out{{"rows", rows},
           {"max_abs", report.max_abs},
           {"mean_abs", report.mean_abs},
           {"norm_max", report.norm_max}};
  if (report.worst >= 0) out["worst"] = report.entries[report.worst].label;
  return out;
}

json weights_to_json(const SettingsWeights& weights) {
  return json{{"scenario", scenario_to_json(weights.scenario)}, {"weights", weights.weights}};
}

SettingsWeights weights_from_json(const json& j, const Scenario& sc) {
  if (j.is_array()) return SettingsWeights(sc, j.get<std::vector<double>>());
  if (j.contains("scenario")) {
    const Scenario parsed = scenario_from_json(j.at("scenario"));
    if (!(parsed == sc)) throw std::runtime_error("weights scenario does not match the data scenario");
  }
  return SettingsWeights(sc, j.at("weights").get<std::vector<double>>());
}

}  // namespace nsp
