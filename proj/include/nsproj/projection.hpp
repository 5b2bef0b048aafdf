#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nsproj/constraints.hpp"
#include "nsproj/correlators.hpp"
#include "nsproj/rational.hpp"
#include "nsproj/scenario.hpp"

namespace nsp {

/// Thrown when an iterative routine exhausts its budget; carries the final
/// gap or objective in the message.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The three linear maps whose composition realises the closed-form
/// projection onto the no-signalling affine hull:
///   T1 (d x d): probabilities -> per-setting correlators, one parity block
///       per setting (a Walsh-Hadamard block up to row order);
///   T2 ((m+1)^n x d): uniform averaging over complementary settings;
///   T3 (d x (m+1)^n): inverse formula back to probabilities.
/// Row/column orders follow the canonical flat index, the per-block subset
/// mask, and the correlator rank. Entries are exact rationals with double
/// mirrors for fast application. The composite T3*T2*T1 is idempotent.
struct PipelineMaps {
  Scenario scenario;
  RationalMatrix t1, t2, t3;
  Eigen::MatrixXd t1d, t2d, t3d;

  RationalMatrix composite() const { return t3.multiply(t2.multiply(t1)); }
};

PipelineMaps build_pipeline_maps(const Scenario& sc);

/// Strictly positive weight per setting block; expands to the diagonal matrix
/// D with D(a,x) = weight(x). Uniform weights reduce every weighted operation
/// to the unweighted one.
struct SettingsWeights {
  SettingsWeights(Scenario sc, std::vector<double> w);
  static SettingsWeights uniform(const Scenario& sc);

  double weighted_dot(std::span<const double> a, std::span<const double> b) const;
  Eigen::VectorXd diagonal() const;  // length d

  Scenario scenario;
  std::vector<double> weights;  // per setting block, length m^n
};

/// Result of an affine projection; the value has unconstrained role and may
/// contain negative entries, flagged via min_entry.
struct Projection {
  BehaviorVector value;
  double min_entry;

  bool has_negative() const { return min_entry < -1e-12; }
};

/// Closed-form L2 projection onto the affine hull via the three-map pipeline.
/// The empty-subset correlator is pinned to 1 so the image satisfies the
/// normalisation rows even for unnormalised input.
Projection project_l2(const PipelineMaps& maps, const BehaviorVector& v);
Projection project_l2(const BehaviorVector& v);

/// Direct projector B (B^T B)^{-1} B^T through an explicit kernel basis,
/// displaced by the uniform behaviour; the oracle route for project_l2.
Projection project_direct(const BehaviorVector& v, const Eigen::MatrixXd& kernel);
Projection project_direct(const BehaviorVector& v, ConstraintSystem& system);

/// Weighted L2 projection: minimises ||v - p||_D over the affine hull. The
/// closed form replaces the uniform average with the weight-proportional
/// average of the per-setting correlators.
Projection project_weighted(const BehaviorVector& v, const SettingsWeights& weights);
/// Oracle route via B (B^T D B)^{-1} B^T D.
Projection project_weighted_direct(const BehaviorVector& v, const SettingsWeights& weights,
                                   ConstraintSystem& system);

/// Euclidean projection onto the no-signalling polytope (affine hull +
/// nonnegativity) by Dykstra's alternating projections; returns a
/// probability-role behaviour. Throws if the iteration budget is exhausted,
/// reporting the last gap.
BehaviorVector project_nonneg(const BehaviorVector& v, const ConstraintSystem& system);

/// Settings-weighted log-likelihood sum_x pi(x) sum_a f(a|x) log2 p(a|x),
/// with probabilities floored at 1e-12 inside the logarithm.
double ml_objective(const BehaviorVector& freq, const SettingsWeights& pi, const BehaviorVector& p);

/// Maximum-likelihood no-signalling estimate by projected gradient ascent
/// with backtracking; monotone in the objective. Throws on non-convergence
/// with the final objective and gradient norm.
BehaviorVector estimate_ml(const BehaviorVector& freq, const SettingsWeights& pi,
                           const ConstraintSystem& system);

}  // namespace nsp
