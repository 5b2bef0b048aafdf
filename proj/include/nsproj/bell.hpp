#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsproj/correlators.hpp"
#include "nsproj/rational.hpp"
#include "nsproj/scenario.hpp"

namespace nsp {

enum class Direction { le, ge };

/// One probability-coefficient term gamma * p(a|x).
struct ProbTerm {
  std::vector<int> outcomes;
  std::vector<int> settings;
  Rational coef;
};

/// One correlator term beta * C[I, x_I], read as the uniformly-averaged
/// marginal correlator of the subset.
struct CorrTerm {
  PartySubset subset;
  std::vector<int> settings;
  Rational coef;
};

/// A Bell functional with a bound: probability-coefficient form, correlator
/// form, or both (when both are present they must agree on every
/// no-signalling behaviour).
struct BellExpression {
  Scenario scenario;
  std::vector<ProbTerm> prob_terms;
  std::vector<CorrTerm> corr_terms;
  Rational bound;
  Direction direction = Direction::le;
  std::string name;

  bool has_prob() const { return !prob_terms.empty(); }
  bool has_corr() const { return !corr_terms.empty(); }
};

/// Projection-invariant rewrite of a Bell expression: coefficients beta over
/// correlator ranks, plus the expanded probability-coefficient vector
/// obtained by substituting the UMC definitions. The expanded vector of the
/// nonempty-subset part lies in ker(A_eq), which is what makes the value
/// insensitive to the L2 projection.
struct CanonicalForm {
  Scenario scenario;
  std::vector<Rational> beta;      // indexed by correlator rank
  std::vector<Rational> expanded;  // gamma' over the d flat indices
  Rational bound;
  Direction direction = Direction::le;
  std::string name;

  std::vector<CorrTerm> corr_terms() const;  // nonzero beta entries
};

/// Rewrites the expression over uniformly-averaged marginal correlators:
/// beta[I, x_I] = 2^{-n} sum_a sum_{x outside I} gamma[a, x] chi_I(a) for
/// probability-form input; correlator-form input passes through with the UMC
/// reinterpretation. Exact in rational arithmetic.
CanonicalForm canonicalize(const BellExpression& expr);

/// For expressions carrying both forms: verifies they agree as functionals on
/// the no-signalling hull (equal canonical coefficients to 1e-10). Throws
/// std::domain_error when they disagree; no-op when only one form is present.
void check_forms_agree(const BellExpression& expr);

struct Evaluation {
  double value;
  bool violated;
  double margin;  // signed distance past the bound in the violating direction
};

/// Evaluates the expression as written: the probability form when present,
/// otherwise the correlator form under the UMC reading.
Evaluation evaluate(const BellExpression& expr, const BehaviorVector& v);
Evaluation evaluate(const CanonicalForm& canon, const BehaviorVector& v);

/// Built-in inequality library: "chsh", "mermin", "tilted" (parameters
/// alpha >= 1, beta >= 0), "i3322", "losr_gtnl". Stored in correlator form.
BellExpression builtin(std::string_view name, double alpha = 1.0, double beta = 0.0);

struct InvarianceReport {
  double value_raw;
  double value_projected;
  double difference;
};

/// Evaluates the expression before and after the L2 projection of v. For
/// canonicalised (correlator-form) expressions the difference vanishes; raw
/// probability forms may shift by residual-weighted amounts.
InvarianceReport invariance_check(const BellExpression& expr, const BehaviorVector& v);

}  // namespace nsp
