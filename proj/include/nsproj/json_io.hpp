#pragma once

#include <string>

#include <json.hpp>

#include "nsproj/bell.hpp"
#include "nsproj/correlators.hpp"
#include "nsproj/data.hpp"
#include "nsproj/projection.hpp"
#include "nsproj/scenario.hpp"

namespace nsp {

using json = nlohmann::json;

json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const json& j);

/// {"scenario": {...}, "entries": [...], "role": "..."} with entries in
/// canonical flat-index order.
json behavior_to_json(const BehaviorVector& v);
BehaviorVector behavior_from_json(const json& j);

/// {"scenario": {...}, "entries": [{"I": [...], "xI": [...], "value": ...}]}
/// with the empty subset encoded as empty arrays.
json correlator_table_to_json(const CorrelatorTable& table);
CorrelatorTable correlator_table_from_json(const json& j);

/// {"scenario": {...}, "terms": [{"kind": "prob", "a": [...], "x": [...],
/// "coef": ...} | {"kind": "corr", "I": [...], "xI": [...], "coef": ...}],
/// "bound": ..., "direction": "le"|"ge", "name": optional}. Coefficients are
/// written as numbers when exactly representable as doubles and as "n/d"
/// strings otherwise; both (plus decimal strings) are accepted on input.
json expression_to_json(const BellExpression& expr);
BellExpression expression_from_json(const json& j);

/// Canonical form as the same term schema (correlator terms only) plus the
/// expanded probability-coefficient vector.
json canonical_to_json(const CanonicalForm& canon);

json signalling_report_to_json(const SignallingReport& report);

json weights_to_json(const SettingsWeights& weights);
SettingsWeights weights_from_json(const json& j, const Scenario& sc);

}  // namespace nsp
