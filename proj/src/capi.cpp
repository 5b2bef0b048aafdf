#include "nsproj/nsproj.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsproj/bell.hpp"
#include "nsproj/constraints.hpp"
#include "nsproj/data.hpp"
#include "nsproj/json_io.hpp"
#include "nsproj/projection.hpp"
#include "nsproj/scenario.hpp"

struct nsp_scenario {
  nsp::Scenario sc;
};
struct nsp_counts {
  nsp::CountTable table;
};
struct nsp_behavior {
  nsp::BehaviorVector v;
};
struct nsp_expression {
  nsp::BellExpression expr;
};

namespace {

thread_local std::string g_last_error;
thread_local nsp_status g_last_status = NSP_OK;

void set_error(const std::string& message, nsp_status status) {
  g_last_error = message;
  g_last_status = status;
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

nsp_status classify(const std::exception& e) {
  if (dynamic_cast<const nsp::ConvergenceError*>(&e)) return NSP_ERR_CONVERGENCE;
  if (dynamic_cast<const std::domain_error*>(&e)) return NSP_ERR_INVALID;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return NSP_ERR_INVALID;
  if (dynamic_cast<const std::runtime_error*>(&e)) return NSP_ERR_PARSE;
  return NSP_ERR_INTERNAL;
}

/// Runs `fn` returning a heap pointer; converts exceptions into NULL +
/// nsp_last_error/nsp_last_status.
template <typename Fn>
auto guarded(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    set_error(e.what(), classify(e));
    return nullptr;
  } catch (...) {
    set_error("unknown error", NSP_ERR_INTERNAL);
    return nullptr;
  }
}

template <typename Fn>
nsp_status guarded_status(Fn&& fn) {
  try {
    fn();
    return NSP_OK;
  } catch (const std::exception& e) {
    const nsp_status status = classify(e);
    set_error(e.what(), status);
    return status;
  } catch (...) {
    set_error("unknown error", NSP_ERR_INTERNAL);
    return NSP_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* nsp_last_error(void) { return g_last_error.c_str(); }

nsp_status nsp_last_status(void) { return g_last_status; }

void nsp_string_free(char* text) { std::free(text); }

nsp_scenario* nsp_scenario_create(int parties, int settings) {
  return guarded([&]() -> nsp_scenario* { return new nsp_scenario{nsp::Scenario(parties, settings)}; });
}

void nsp_scenario_free(nsp_scenario* sc) { delete sc; }

int nsp_scenario_dimension(const nsp_scenario* sc) { return sc ? sc->sc.dimension() : 0; }

int nsp_scenario_setting_blocks(const nsp_scenario* sc) { return sc ? sc->sc.setting_blocks() : 0; }

nsp_counts* nsp_counts_parse_csv(const nsp_scenario* sc, const char* text) {
  return guarded([&]() -> nsp_counts* {
    if (!sc || !text) throw std::invalid_argument("null argument");
    return new nsp_counts{nsp::load_counts_text(text, sc->sc)};
  });
}

nsp_counts* nsp_counts_parse_grid222(const char* text) {
  return guarded([&]() -> nsp_counts* {
    if (!text) throw std::invalid_argument("null argument");
    return new nsp_counts{nsp::load_grid222_text(text)};
  });
}

char* nsp_counts_to_csv(const nsp_counts* counts) {
  return guarded([&]() -> char* {
    if (!counts) throw std::invalid_argument("null argument");
    std::ostringstream out;
    nsp::write_counts_csv(counts->table, out);
    return dup_string(out.str());
  });
}

long long nsp_counts_total(const nsp_counts* counts) { return counts ? counts->table.total() : 0; }

int nsp_counts_setting_blocks(const nsp_counts* counts) {
  return counts ? counts->table.scenario.setting_blocks() : 0;
}

void nsp_counts_free(nsp_counts* counts) { delete counts; }

nsp_behavior* nsp_behavior_create(const nsp_scenario* sc, const double* entries, size_t length) {
  return guarded([&]() -> nsp_behavior* {
    if (!sc || !entries) throw std::invalid_argument("null argument");
    std::vector<double> values(entries, entries + length);
    return new nsp_behavior{
        nsp::BehaviorVector(sc->sc, std::move(values), nsp::BehaviorVector::Role::unconstrained)};
  });
}

nsp_behavior* nsp_behavior_parse_json(const char* text) {
  return guarded([&]() -> nsp_behavior* {
    if (!text) throw std::invalid_argument("null argument");
    return new nsp_behavior{nsp::behavior_from_json(nsp::json::parse(text))};
  });
}

char* nsp_behavior_to_json(const nsp_behavior* behavior) {
  return guarded([&]() -> char* {
    if (!behavior) throw std::invalid_argument("null argument");
    return dup_string(nsp::behavior_to_json(behavior->v).dump(2));
  });
}

int nsp_behavior_dimension(const nsp_behavior* behavior) {
  return behavior ? behavior->v.scenario.dimension() : 0;
}

nsp_status nsp_behavior_entries(const nsp_behavior* behavior, double* out, size_t length) {
  return guarded_status([&] {
    if (!behavior || !out) throw std::invalid_argument("null argument");
    if (length != behavior->v.entries.size()) throw std::invalid_argument("buffer length mismatch");
    std::memcpy(out, behavior->v.entries.data(), length * sizeof(double));
  });
}

void nsp_behavior_free(nsp_behavior* behavior) { delete behavior; }

nsp_behavior* nsp_counts_frequencies(const nsp_counts* counts, double* setting_distribution) {
  return guarded([&]() -> nsp_behavior* {
    if (!counts) throw std::invalid_argument("null argument");
    nsp::Frequencies freq = nsp::frequencies(counts->table);
    if (setting_distribution) {
      std::memcpy(setting_distribution, freq.setting_distribution.weights.data(),
                  freq.setting_distribution.weights.size() * sizeof(double));
    }
    return new nsp_behavior{std::move(freq.behavior)};
  });
}

nsp_behavior* nsp_project(const nsp_behavior* behavior, const char* method, const double* weights,
                          size_t weights_length) {
  return guarded([&]() -> nsp_behavior* {
    if (!behavior || !method) throw std::invalid_argument("null argument");
    const nsp::Scenario sc = behavior->v.scenario;
    const std::string name(method);
    auto parse_weights = [&]() {
      if (!weights) throw std::invalid_argument("method '" + name + "' requires settings weights");
      if (weights_length != static_cast<size_t>(sc.setting_blocks())) {
        throw std::invalid_argument("weights length must equal the number of setting blocks");
      }
      return nsp::SettingsWeights(sc, std::vector<double>(weights, weights + weights_length));
    };

    if (name == "pipeline") {
      return new nsp_behavior{nsp::project_l2(behavior->v).value};
    }
    if (name == "direct") {
      nsp::ConstraintSystem system = nsp::build_constraint_system(sc);
      return new nsp_behavior{nsp::project_direct(behavior->v, system).value};
    }
    if (name == "weighted") {
      return new nsp_behavior{nsp::project_weighted(behavior->v, parse_weights()).value};
    }
    if (name == "nonneg") {
      nsp::ConstraintSystem system = nsp::build_constraint_system(sc);
      return new nsp_behavior{nsp::project_nonneg(behavior->v, system)};
    }
    if (name == "ml") {
      nsp::ConstraintSystem system = nsp::build_constraint_system(sc);
      return new nsp_behavior{nsp::estimate_ml(behavior->v, parse_weights(), system)};
    }
    throw std::invalid_argument("unknown projection method '" + name + "'");
  });
}

nsp_status nsp_residual_max(const nsp_behavior* behavior, double* nosig_max, double* norm_max) {
  return guarded_status([&] {
    if (!behavior) throw std::invalid_argument("null argument");
    const nsp::ConstraintSystem system = nsp::build_constraint_system(behavior->v.scenario);
    const nsp::ResidualReport report = nsp::residual(system, behavior->v);
    if (nosig_max) *nosig_max = report.nosig_max;
    if (norm_max) *norm_max = report.norm_max;
  });
}

char* nsp_signalling_report_json(const nsp_behavior* behavior) {
  return guarded([&]() -> char* {
    if (!behavior) throw std::invalid_argument("null argument");
    const nsp::ConstraintSystem system = nsp::build_constraint_system(behavior->v.scenario);
    return dup_string(nsp::signalling_report_to_json(nsp::signalling_report(behavior->v, system)).dump(2));
  });
}

nsp_expression* nsp_expression_builtin(const char* name, double alpha, double beta) {
  return guarded([&]() -> nsp_expression* {
    if (!name) throw std::invalid_argument("null argument");
    return new nsp_expression{nsp::builtin(name, alpha, beta)};
  });
}

nsp_expression* nsp_expression_parse_json(const char* text) {
  return guarded([&]() -> nsp_expression* {
    if (!text) throw std::invalid_argument("null argument");
    return new nsp_expression{nsp::expression_from_json(nsp::json::parse(text))};
  });
}

char* nsp_expression_to_json(const nsp_expression* expr) {
  return guarded([&]() -> char* {
    if (!expr) throw std::invalid_argument("null argument");
    return dup_string(nsp::expression_to_json(expr->expr).dump(2));
  });
}

char* nsp_expression_canonical_json(const nsp_expression* expr) {
  return guarded([&]() -> char* {
    if (!expr) throw std::invalid_argument("null argument");
    return dup_string(nsp::canonical_to_json(nsp::canonicalize(expr->expr)).dump(2));
  });
}

nsp_status nsp_expression_scenario(const nsp_expression* expr, int* parties, int* settings) {
  return guarded_status([&] {
    if (!expr) throw std::invalid_argument("null argument");
    if (parties) *parties = expr->expr.scenario.parties();
    if (settings) *settings = expr->expr.scenario.settings();
  });
}

nsp_status nsp_expression_bound(const nsp_expression* expr, double* bound, int* is_le) {
  return guarded_status([&] {
    if (!expr) throw std::invalid_argument("null argument");
    if (bound) *bound = expr->expr.bound.to_double();
    if (is_le) *is_le = expr->expr.direction == nsp::Direction::le ? 1 : 0;
  });
}

void nsp_expression_free(nsp_expression* expr) { delete expr; }

nsp_status nsp_evaluate(const nsp_expression* expr, const nsp_behavior* behavior, int canonical,
                        double* value, double* margin, int* violated) {
  return guarded_status([&] {
    if (!expr || !behavior) throw std::invalid_argument("null argument");
    nsp::Evaluation eval = canonical != 0 ? nsp::evaluate(nsp::canonicalize(expr->expr), behavior->v)
                                          : nsp::evaluate(expr->expr, behavior->v);
    if (value) *value = eval.value;
    if (margin) *margin = eval.margin;
    if (violated) *violated = eval.violated ? 1 : 0;
  });
}

char* nsp_generate_counts_csv(const nsp_behavior* base, const long long* trials_per_setting,
                              size_t length, double drift_amplitude, int blocks,
                              unsigned long long seed, int expected_mode) {
  return guarded([&]() -> char* {
    if (!base || !trials_per_setting) throw std::invalid_argument("null argument");
    std::vector<std::int64_t> trials(trials_per_setting, trials_per_setting + length);
    const nsp::CountTable table = nsp::generate_drift_counts(
        base->v, trials, drift_amplitude, blocks, seed,
        expected_mode ? nsp::GenerateMode::expected : nsp::GenerateMode::sampled);
    std::ostringstream out;
    nsp::write_counts_csv(table, out);
    return dup_string(out.str());
  });
}

}  // extern "C"
