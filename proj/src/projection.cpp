#include "nsproj/projection.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace nsp {

namespace {

constexpr double kLogFloor = 1e-12;

int parity_from_ranks(int parties, unsigned subset_mask, unsigned outcome_bits) {
  unsigned overlap = 0;
  for (int i = 1; i <= parties; ++i) {
    if (subset_mask & (1u << (i - 1))) overlap ^= (outcome_bits >> (parties - i)) & 1u;
  }
  return overlap ? -1 : 1;
}

/// Correlator rank of the key keeping block[i] for parties in `mask`.
int key_rank_for(const Scenario& sc, std::span<const int> block, int mask) {
  int rank = 0;
  for (int i = 0; i < sc.parties(); ++i) {
    const bool in_subset = (mask >> i) & 1;
    rank = rank * (sc.settings() + 1) + (in_subset ? block[i] + 1 : 0);
  }
  return rank;
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Projection wrap(const Scenario& sc, Eigen::VectorXd entries) {
  std::vector<double> out(entries.data(), entries.data() + entries.size());
  const double min_entry = entries.minCoeff();
  return Projection{BehaviorVector(sc, std::move(out), BehaviorVector::Role::unconstrained), min_entry};
}

Eigen::MatrixXd to_double(const RationalMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out(r, c) = m(r, c).to_double();
  }
  return out;
}

BehaviorVector clamp_to_probability(const Scenario& sc, const Eigen::VectorXd& entries) {
  std::vector<double> out(sc.dimension());
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    double sum = 0.0;
    for (int a = 0; a < sc.block_size(); ++a) {
      const double value = std::max(entries[x * sc.block_size() + a], 0.0);
      out[x * sc.block_size() + a] = value;
      sum += value;
    }
    for (int a = 0; a < sc.block_size(); ++a) out[x * sc.block_size() + a] /= sum;
  }
  return BehaviorVector(sc, std::move(out), BehaviorVector::Role::probability);
}

}  // namespace

PipelineMaps build_pipeline_maps(const Scenario& sc) {
  const int n = sc.parties();
  const int d = sc.dimension();
  const int block_size = sc.block_size();
  const int keys = sc.correlator_count();

  PipelineMaps maps{.scenario = sc,
                    .t1 = RationalMatrix(d, d),
                    .t2 = RationalMatrix(keys, d),
                    .t3 = RationalMatrix(d, keys)};

  std::vector<int> block(n);
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    const int base = x * block_size;
    for (int mask = 0; mask < block_size; ++mask) {
      const int key = key_rank_for(sc, block, mask);
      long long averaged = 1;
      for (int i = 0; i < n; ++i) {
        if (!((mask >> i) & 1)) averaged *= sc.settings();
      }
      const Rational weight(1, averaged);
      for (int a = 0; a < block_size; ++a) {
        const int sign = parity_from_ranks(n, static_cast<unsigned>(mask), static_cast<unsigned>(a));
        // T1: per-setting parity block.
        maps.t1(base + mask, base + a) = Rational(sign);
        // T3: inverse formula, 2^{-n} chi_I(a) on the matching key.
        maps.t3(base + a, key) = Rational(sign, block_size);
      }
      // T2: weight-1/m^{n-|I|} selector of this block's contribution.
      maps.t2(key, base + mask) = weight;
    }
  }

  maps.t1d = to_double(maps.t1);
  maps.t2d = to_double(maps.t2);
  maps.t3d = to_double(maps.t3);
  return maps;
}

SettingsWeights::SettingsWeights(Scenario sc, std::vector<double> w)
    : scenario(sc), weights(std::move(w)) {
  if (static_cast<int>(weights.size()) != scenario.setting_blocks()) {
    throw std::domain_error("weights must cover the m^n setting blocks");
  }
  for (double weight : weights) {
    if (!(weight > 0.0)) throw std::domain_error("settings weights must be strictly positive");
  }
}

SettingsWeights SettingsWeights::uniform(const Scenario& sc) {
  return SettingsWeights(sc, std::vector<double>(sc.setting_blocks(), 1.0 / sc.setting_blocks()));
}

double SettingsWeights::weighted_dot(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  for (int x = 0; x < scenario.setting_blocks(); ++x) {
    double block = 0.0;
    for (int i = 0; i < scenario.block_size(); ++i) {
      const int idx = x * scenario.block_size() + i;
      block += a[idx] * b[idx];
    }
    acc += weights[x] * block;
  }
  return acc;
}

Eigen::VectorXd SettingsWeights::diagonal() const {
  Eigen::VectorXd diag(scenario.dimension());
  for (int x = 0; x < scenario.setting_blocks(); ++x) {
    for (int i = 0; i < scenario.block_size(); ++i) diag[x * scenario.block_size() + i] = weights[x];
  }
  return diag;
}

Projection project_l2(const PipelineMaps& maps, const BehaviorVector& v) {
  if (!(v.scenario == maps.scenario)) throw std::domain_error("behaviour/maps scenario mismatch");
  Eigen::VectorXd t1 = maps.t1d * to_eigen(v.entries);
  Eigen::VectorXd t2 = maps.t2d * t1;
  t2[0] = 1.0;  // empty-subset correlator: normalisation of the image
  return wrap(maps.scenario, maps.t3d * t2);
}

Projection project_l2(const BehaviorVector& v) { return project_l2(build_pipeline_maps(v.scenario), v); }

Projection project_direct(const BehaviorVector& v, const Eigen::MatrixXd& kernel) {
  const Scenario& sc = v.scenario;
  if (kernel.rows() != sc.dimension()) throw std::domain_error("kernel basis has wrong row count");
  const Eigen::VectorXd displaced =
      to_eigen(v.entries) - Eigen::VectorXd::Constant(sc.dimension(), 1.0 / sc.block_size());
  const Eigen::MatrixXd gram = kernel.transpose() * kernel;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const auto& sigma = svd.singularValues();
    throw std::runtime_error("kernel Gram matrix not positive definite; condition estimate " +
                             std::to_string(sigma(0) / sigma(sigma.size() - 1)));
  }
  Eigen::VectorXd projected = kernel * llt.solve(kernel.transpose() * displaced);
  projected.array() += 1.0 / sc.block_size();
  return wrap(sc, std::move(projected));
}

Projection project_direct(const BehaviorVector& v, ConstraintSystem& system) {
  if (!(v.scenario == system.scenario)) throw std::domain_error("behaviour/system scenario mismatch");
  return project_direct(v, ensure_kernel_basis(system));
}

Projection project_weighted(const BehaviorVector& v, const SettingsWeights& weights) {
  const Scenario& sc = v.scenario;
  if (!(sc == weights.scenario)) throw std::domain_error("behaviour/weights scenario mismatch");

  const SettingwiseCorrelators sw = settingwise_correlators(v);
  std::vector<double> numer(sc.correlator_count(), 0.0);
  std::vector<double> denom(sc.correlator_count(), 0.0);
  std::vector<int> block(sc.parties());
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    setting_block_unrank(sc, x, block);
    for (int mask = 0; mask < sc.block_size(); ++mask) {
      const int key = key_rank_for(sc, block, mask);
      numer[key] += weights.weights[x] * sw.values[x * sc.block_size() + mask];
      denom[key] += weights.weights[x];
    }
  }

  CorrelatorTable table(sc);
  for (int key = 0; key < sc.correlator_count(); ++key) table.values[key] = numer[key] / denom[key];
  table.values[0] = 1.0;

  BehaviorVector rebuilt = probabilities_from_correlators(table);
  double min_entry = rebuilt.entries[0];
  for (double entry : rebuilt.entries) min_entry = std::min(min_entry, entry);
  return Projection{std::move(rebuilt), min_entry};
}

Projection project_weighted_direct(const BehaviorVector& v, const SettingsWeights& weights,
                                   ConstraintSystem& system) {
  const Scenario& sc = v.scenario;
  if (!(sc == weights.scenario) || !(sc == system.scenario)) {
    throw std::domain_error("behaviour/weights/system scenario mismatch");
  }
  const Eigen::MatrixXd& kernel = ensure_kernel_basis(system);
  const Eigen::VectorXd diag = weights.diagonal();
  const Eigen::MatrixXd weighted = diag.asDiagonal() * kernel;
  const Eigen::MatrixXd gram = kernel.transpose() * weighted;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("weighted kernel Gram matrix not positive definite");
  }
  const Eigen::VectorXd displaced =
      to_eigen(v.entries) - Eigen::VectorXd::Constant(sc.dimension(), 1.0 / sc.block_size());
  Eigen::VectorXd projected = kernel * llt.solve(weighted.transpose() * displaced);
  projected.array() += 1.0 / sc.block_size();
  return wrap(sc, std::move(projected));
}

BehaviorVector project_nonneg(const BehaviorVector& v, const ConstraintSystem& system) {
  const Scenario& sc = v.scenario;
  if (!(sc == system.scenario)) throw std::domain_error("behaviour/system scenario mismatch");
  const PipelineMaps maps = build_pipeline_maps(sc);

  auto affine = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd t2 = maps.t2d * (maps.t1d * x);
    t2[0] = 1.0;
    return Eigen::VectorXd(maps.t3d * t2);
  };

  Eigen::VectorXd x = to_eigen(v.entries);
  Eigen::VectorXd y = affine(x);
  if (y.minCoeff() >= -1e-12) return clamp_to_probability(sc, y);

  // Dykstra between the affine hull (no correction needed for an affine set)
  // and the nonnegative orthant.
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(sc.dimension());
  constexpr int kMaxSweeps = 100000;
  double gap = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    y = affine(x);
    Eigen::VectorXd shifted = y + correction;
    Eigen::VectorXd clamped = shifted.cwiseMax(0.0);
    correction = shifted - clamped;
    gap = (clamped - x).lpNorm<Eigen::Infinity>();
    x = std::move(clamped);
    if (gap < 1e-12) return clamp_to_probability(sc, affine(x));
  }
  throw ConvergenceError("nonnegative projection did not converge in " + std::to_string(kMaxSweeps) +
                         " sweeps; last gap " + std::to_string(gap));
}

double ml_objective(const BehaviorVector& freq, const SettingsWeights& pi, const BehaviorVector& p) {
  const Scenario& sc = freq.scenario;
  double acc = 0.0;
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    double block = 0.0;
    for (int a = 0; a < sc.block_size(); ++a) {
      const int idx = x * sc.block_size() + a;
      if (freq.entries[idx] > 0.0) {
        block += freq.entries[idx] * std::log2(std::max(p.entries[idx], kLogFloor));
      }
    }
    acc += pi.weights[x] * block;
  }
  return acc;
}

BehaviorVector estimate_ml(const BehaviorVector& freq, const SettingsWeights& pi,
                           const ConstraintSystem& system) {
  const Scenario& sc = freq.scenario;
  if (!(sc == pi.scenario) || !(sc == system.scenario)) {
    throw std::domain_error("frequency/weights/system scenario mismatch");
  }
  for (int x = 0; x < sc.setting_blocks(); ++x) {
    double sum = 0.0;
    for (int a = 0; a < sc.block_size(); ++a) sum += freq.entries[x * sc.block_size() + a];
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::domain_error("frequency block " + std::to_string(x) + " is not normalised");
    }
  }
  double pi_sum = 0.0;
  for (double w : pi.weights) pi_sum += w;
  if (std::abs(pi_sum - 1.0) > 1e-9) throw std::domain_error("settings distribution must sum to 1");

  BehaviorVector current = project_nonneg(freq, system);
  double objective = ml_objective(freq, pi, current);

  constexpr int kMaxIters = 500;
  constexpr double kTol = 1e-12;
  double step = 1.0;
  int stalled = 0;
  double gradient_norm = 0.0;

  for (int iter = 0; iter < kMaxIters; ++iter) {
    std::vector<double> ascent(sc.dimension());
    gradient_norm = 0.0;
    for (int x = 0; x < sc.setting_blocks(); ++x) {
      for (int a = 0; a < sc.block_size(); ++a) {
        const int idx = x * sc.block_size() + a;
        const double g = pi.weights[x] * freq.entries[idx] /
                         (std::max(current.entries[idx], kLogFloor) * std::numbers::ln2);
        ascent[idx] = g;
        gradient_norm = std::max(gradient_norm, std::abs(g));
      }
    }

    bool improved = false;
    double trial_step = step * 2.0;
    while (trial_step > 1e-14) {
      std::vector<double> shifted(sc.dimension());
      for (int i = 0; i < sc.dimension(); ++i) shifted[i] = current.entries[i] + trial_step * ascent[i];
      BehaviorVector candidate = project_nonneg(
          BehaviorVector(sc, std::move(shifted), BehaviorVector::Role::unconstrained), system);
      const double candidate_objective = ml_objective(freq, pi, candidate);
      if (candidate_objective > objective) {
        const double gain = candidate_objective - objective;
        current = std::move(candidate);
        objective = candidate_objective;
        step = trial_step;
        improved = true;
        stalled = gain < kTol * (1.0 + std::abs(objective)) ? stalled + 1 : 0;
        break;
      }
      trial_step /= 2.0;
    }

    if (!improved || stalled >= 3) return current;
  }
  throw ConvergenceError("ML estimate did not converge: objective " + std::to_string(objective) +
                         ", gradient norm " + std::to_string(gradient_norm));
}

}  // namespace nsp
