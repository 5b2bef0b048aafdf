#include "nsproj/bell.hpp"

#include <cmath>
#include <stdexcept>

#include "nsproj/projection.hpp"

namespace nsp {

namespace {

void validate_prob_term(const Scenario& sc, const ProbTerm& term) {
  if (static_cast<int>(term.outcomes.size()) != sc.parties() ||
      static_cast<int>(term.settings.size()) != sc.parties()) {
    throw std::domain_error("probability term tuples do not match the scenario");
  }
  encode_index(sc, term.outcomes, term.settings);  // range checks
}

void validate_corr_term(const Scenario& sc, const CorrTerm& term) {
  make_correlator_key(sc, term.subset, term.settings);  // range checks
}

Evaluation judge(double value, const Rational& bound, Direction direction) {
  const double b = bound.to_double();
  const double margin = direction == Direction::le ? value - b : b - value;
  return Evaluation{value, margin > 0.0, margin};
}

}  // namespace

std::vector<CorrTerm> CanonicalForm::corr_terms() const {
  std::vector<CorrTerm> terms;
  for (int rank = 0; rank < scenario.correlator_count(); ++rank) {
    if (beta[rank].is_zero()) continue;
    CorrelatorKey key = correlator_unrank(scenario, rank);
    terms.push_back(CorrTerm{key.subset(), key.subset_settings(), beta[rank]});
  }
  return terms;
}

namespace {

/// beta[I, x_I] = 2^{-n} sum_a sum_{x_outside} gamma[a, x] chi_I(a).
std::vector<Rational> beta_from_prob_terms(const Scenario& sc, const std::vector<ProbTerm>& terms) {
  std::vector<Rational> beta(sc.correlator_count());
  const Rational norm(1, sc.block_size());
  for (const ProbTerm& term : terms) {
    validate_prob_term(sc, term);
    for (int mask = 0; mask < sc.block_size(); ++mask) {
      const PartySubset subset = PartySubset::from_mask(static_cast<unsigned>(mask));
      std::vector<int> sub_settings;
      sub_settings.reserve(subset.size());
      for (int party : subset.members()) sub_settings.push_back(term.settings[party - 1]);
      const int rank = correlator_rank(sc, make_correlator_key(sc, subset, sub_settings));
      const int sign = parity(subset, term.outcomes);
      beta[rank] += term.coef * norm * Rational(sign);
    }
  }
  return beta;
}

std::vector<Rational> beta_from_corr_terms(const Scenario& sc, const std::vector<CorrTerm>& terms) {
  std::vector<Rational> beta(sc.correlator_count());
  for (const CorrTerm& term : terms) {
    validate_corr_term(sc, term);
    beta[correlator_rank(sc, make_correlator_key(sc, term.subset, term.settings))] += term.coef;
  }
  return beta;
}

}  // namespace

void check_forms_agree(const BellExpression& expr) {
  if (!expr.has_prob() || !expr.has_corr()) return;
  const auto from_prob = beta_from_prob_terms(expr.scenario, expr.prob_terms);
  const auto from_corr = beta_from_corr_terms(expr.scenario, expr.corr_terms);
  for (int rank = 0; rank < expr.scenario.correlator_count(); ++rank) {
    const double gap = (from_prob[rank] - from_corr[rank]).to_double();
    if (std::abs(gap) > 1e-10) {
      const CorrelatorKey key = correlator_unrank(expr.scenario, rank);
      throw std::domain_error("probability and correlator forms disagree on the no-signalling hull at " +
                              key.subset().str());
    }
  }
}

CanonicalForm canonicalize(const BellExpression& expr) {
  const Scenario& sc = expr.scenario;
  if (!expr.has_prob() && !expr.has_corr()) {
    throw std::domain_error("Bell expression has neither probability nor correlator terms");
  }

  CanonicalForm canon{.scenario = sc,
                      .beta = std::vector<Rational>(sc.correlator_count()),
                      .expanded = std::vector<Rational>(sc.dimension()),
                      .bound = expr.bound,
                      .direction = expr.direction,
                      .name = expr.name};

  canon.beta = expr.has_prob() ? beta_from_prob_terms(sc, expr.prob_terms)
                               : beta_from_corr_terms(sc, expr.corr_terms);

  // Expanded coefficients: gamma'[a, x] = sum_I beta[I, x_I] chi_I(a) / m^{n-|I|}.
  std::vector<int> block(sc.parties());
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    for (int mask = 0; mask < sc.block_size(); ++mask) {
      int rank = 0;
      long long averaged = 1;
      for (int i = 0; i < sc.parties(); ++i) {
        const bool in_subset = (mask >> i) & 1;
        rank = rank * (sc.settings() + 1) + (in_subset ? block[i] + 1 : 0);
        if (!in_subset) averaged *= sc.settings();
      }
      const Rational coef = canon.beta[rank];
      if (coef.is_zero()) continue;
      const Rational weighted = coef * Rational(1, averaged);
      const PartySubset subset = PartySubset::from_mask(static_cast<unsigned>(mask));
      std::vector<int> outcomes(sc.parties());
      for (int a = 0; a < sc.block_size(); ++a) {
        outcome_unrank(sc.parties(), a, outcomes);
        const int sign = parity(subset, outcomes);
        canon.expanded[x * sc.block_size() + a] += sign > 0 ? weighted : -weighted;
      }
    }
  }
  return canon;
}

Evaluation evaluate(const BellExpression& expr, const BehaviorVector& v) {
  if (!(expr.scenario == v.scenario)) throw std::domain_error("expression/behaviour scenario mismatch");
  double value = 0.0;
  if (expr.has_prob()) {
    for (const ProbTerm& term : expr.prob_terms) {
      validate_prob_term(expr.scenario, term);
      value += term.coef.to_double() * v.entries[encode_index(expr.scenario, term.outcomes, term.settings)];
    }
  } else if (expr.has_corr()) {
    const CorrelatorTable table = umc(v);
    for (const CorrTerm& term : expr.corr_terms) {
      validate_corr_term(expr.scenario, term);
      value += term.coef.to_double() * table.value(term.subset, term.settings);
    }
  } else {
    throw std::domain_error("Bell expression has no terms");
  }
  return judge(value, expr.bound, expr.direction);
}

Evaluation evaluate(const CanonicalForm& canon, const BehaviorVector& v) {
  if (!(canon.scenario == v.scenario)) throw std::domain_error("expression/behaviour scenario mismatch");
  double value = 0.0;
  for (int i = 0; i < canon.scenario.dimension(); ++i) {
    if (!canon.expanded[i].is_zero()) value += canon.expanded[i].to_double() * v.entries[i];
  }
  return judge(value, canon.bound, canon.direction);
}

BellExpression builtin(std::string_view name, double alpha, double beta) {
  auto full = [](std::vector<int> settings, Rational coef) {
    const int parties = static_cast<int>(settings.size());
    std::vector<int> members(parties);
    for (int i = 0; i < parties; ++i) members[i] = i + 1;
    return CorrTerm{PartySubset(members), std::move(settings), coef};
  };

  if (name == "chsh") {
    BellExpression expr{.scenario = Scenario(2, 2), .bound = 2, .name = "chsh"};
    expr.corr_terms = {full({0, 0}, 1), full({0, 1}, 1), full({1, 0}, 1), full({1, 1}, -1)};
    return expr;
  }
  if (name == "mermin") {
    BellExpression expr{.scenario = Scenario(3, 2), .bound = 2, .name = "mermin"};
    expr.corr_terms = {full({0, 0, 1}, 1), full({0, 1, 0}, 1), full({1, 0, 0}, 1), full({1, 1, 1}, -1)};
    return expr;
  }
  if (name == "tilted") {
    if (!(alpha >= 1.0) || !(beta >= 0.0)) {
      throw std::invalid_argument("tilted inequality requires alpha >= 1 and beta >= 0");
    }
    const Rational a = Rational::from_double(alpha);
    const Rational b = Rational::from_double(beta);
    BellExpression expr{.scenario = Scenario(2, 2), .bound = b + Rational(2) * a, .name = "tilted"};
    expr.corr_terms = {CorrTerm{PartySubset({1}), {0}, b},
                       full({0, 0}, a),
                       full({0, 1}, a),
                       full({1, 0}, 1),
                       full({1, 1}, -1)};
    return expr;
  }
  if (name == "i3322") {
    BellExpression expr{.scenario = Scenario(2, 3), .bound = 4, .name = "i3322"};
    const PartySubset first({1});
    const PartySubset second({2});
    expr.corr_terms = {CorrTerm{first, {0}, 1},  CorrTerm{first, {1}, 1},
                       CorrTerm{second, {0}, -1}, CorrTerm{second, {1}, -1},
                       full({0, 0}, 1),           full({0, 1}, 1),
                       full({1, 0}, 1),           full({1, 1}, 1),
                       full({2, 0}, 1),           full({2, 1}, -1),
                       full({0, 2}, 1),           full({1, 2}, -1)};
    return expr;
  }
  if (name == "losr_gtnl") {
    BellExpression expr{.scenario = Scenario(3, 2), .bound = 4, .name = "losr_gtnl"};
    expr.corr_terms = {CorrTerm{PartySubset({1, 2}), {0, 0}, 1},
                       CorrTerm{PartySubset({1, 2}), {0, 1}, 1},
                       full({1, 0, 1}, 1),
                       full({1, 1, 1}, -1),
                       CorrTerm{PartySubset({1, 3}), {0, 0}, 2}};
    return expr;
  }
  throw std::invalid_argument("unknown Bell expression '" + std::string(name) + "'");
}

InvarianceReport invariance_check(const BellExpression& expr, const BehaviorVector& v) {
  const double raw = evaluate(expr, v).value;
  const double projected = evaluate(expr, project_l2(v).value).value;
  return InvarianceReport{raw, projected, std::abs(raw - projected)};
}

}  // namespace nsp
