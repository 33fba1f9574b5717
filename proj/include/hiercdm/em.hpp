#pragma once

// Maximum-likelihood fitting of restricted latent class models by EM with
// multiple starts.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hiercdm/models.hpp"

namespace hiercdm {

enum class InitStrategy { Uniform, Random };

struct FitConfig {
  int max_iters = 1000;
  /// Stop when the absolute log-likelihood change falls below this.
  double loglik_tol = 1e-6;
  int n_starts = 5;
  std::uint64_t seed = 1;
  /// Uniform runs only the deterministic start, whatever n_starts says.
  InitStrategy init = InitStrategy::Random;
  double eps = kProbEps;
  /// Each warm start whose proportions vanish on part of the support is
  /// also tried after blending 10% uniform mass into it.
  bool smooth_warm_starts = true;
  bool keep_traces = true;
  /// When false and warm starts are supplied, the deterministic start is
  /// skipped (random starts still run when n_starts > 1).
  bool default_start = true;
};

void validate_config(const FitConfig& cfg);

/// Initial values for one EM run.
struct StartPoint {
  ItemParams items;
  ProportionVector p;
};

/// Distinct response patterns with their multiplicities.
struct PatternData {
  Eigen::MatrixXd R;  // U x J, entries 0/1
  Eigen::VectorXd w;  // U nonnegative weights
  /// Pattern row of every respondent of the source data.
  std::vector<int> respondent_pattern;

  int U() const { return static_cast<int>(R.rows()); }
  int J() const { return static_cast<int>(R.cols()); }
  double total_weight() const { return w.sum(); }
};

PatternData compress(const ResponseMatrix& data);

struct StartTrace {
  int start = 0;
  double loglik = 0.0;
  int iters = 0;
  bool converged = false;
  std::vector<double> trace;
};

struct CdmFit {
  ModelKind kind = ModelKind::Dina;
  ItemParams params;
  ProportionVector p;
  double loglik = 0.0;
  int iters = 0;
  bool converged = false;
  int n_free_params = 0;
  int best_start = 0;
  std::vector<StartTrace> starts;
  /// Items whose fitted success probability for masters does not exceed
  /// that of non-masters (1 - s <= g, or full-pattern <= zero-pattern).
  std::vector<int> flipped_items;
  /// Items with a constant observed response.
  std::vector<int> constant_items;

  StartPoint as_start() const { return {params, p}; }
};

/// Starts are: the deterministic start, n_starts - 1 seeded random starts,
/// then the supplied warm starts (mapped onto `support`). The best final
/// log-likelihood wins; ties go to the earlier start.
CdmFit fit_em(ModelKind kind, const QMatrix& q, const ProfileSet& support, const ResponseMatrix& data,
              const FitConfig& cfg, const std::vector<StartPoint>& warm = {});
CdmFit fit_em(ModelKind kind, const QMatrix& q, const ProfileSet& support, const PatternData& data,
              const FitConfig& cfg, const std::vector<StartPoint>& warm = {});

/// N x |support| posterior class probabilities.
Eigen::MatrixXd posterior_profiles(const CdmFit& fit, const QMatrix& q, const ResponseMatrix& data);

/// Derivative of loglik / N along the direction moving mass from the
/// all-zero profile to `alpha_out`, evaluated at the fit.
double boundary_score(const CdmFit& fit0, const QMatrix& q, const ResponseMatrix& data, ProfileCode alpha_out);

}  // namespace hiercdm
