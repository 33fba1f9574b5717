#pragma once

// Monte Carlo experiments: Q-matrix generation, data-generating truths,
// repeated tests with rejection-rate aggregation and QQ export.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hiercdm/hypothesis.hpp"

namespace hiercdm {

enum class HierarchyShape { Linear, Convergent, Divergent, Unstructured };

HierarchyShape parse_shape(const std::string& name);
std::string to_string(HierarchyShape shape);
/// Linear works for any K (1 -> 2 -> ... -> K); the other shapes need K = 4.
Hierarchy shape_hierarchy(HierarchyShape shape, int K);

/// Two stacked K x K identity blocks followed by J - 2K uniformly drawn
/// nonzero rows.
QMatrix generate_q(int K, int J, std::uint64_t seed);

struct Truth {
  ItemParams params;
  ProportionVector p;
};

/// DINA/DINO: s = g = 1 - theta_plus. GDINA: each table rises linearly in
/// the number of possessed required attributes from 1 - theta_plus to
/// theta_plus. Proportions are uniform over `support`. theta_plus = 1
/// gives the noiseless model.
Truth make_truth(ModelKind kind, const QMatrix& q, const ProfileSet& support, double theta_plus);

enum class TruthKind { Null, Alternative };

struct ExperimentConfig {
  ModelKind model = ModelKind::Dina;
  int K = 4;
  int J = 30;
  int N = 500;
  Hierarchy hierarchy;
  /// Alternative hierarchy; nullopt = all 2^K profiles.
  std::optional<Hierarchy> alt_hierarchy;
  TruthKind truth = TruthKind::Null;
  double theta_plus = 0.9;
  int reps = 200;
  int B = 200;
  std::vector<TestMethod> methods{TestMethod::ParametricBoot};
  std::uint64_t seed = 1;
  /// Fixed Q; generated from the seed when absent.
  std::optional<QMatrix> q;
  FitConfig fit;
  int boot_random_starts = 0;
  int threads = 0;
};

void validate_experiment(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct RepResult {
  double lambda_obs = 0.0;
  /// Aligned with ExperimentConfig::methods; NaN when the rep failed.
  std::vector<double> p_values;
  bool null_converged = false;
  bool alt_converged = false;
  std::string error;
};

struct MethodSummary {
  TestMethod method = TestMethod::ParametricBoot;
  int reps_used = 0;
  double rejection_rate = 0.0;
  double standard_error = 0.0;
  std::vector<double> sorted_p;
};

struct ExperimentResult {
  QMatrix q;
  std::vector<RepResult> reps;
  std::vector<MethodSummary> methods;
  int failed_reps = 0;
  int nonconverged_reps = 0;
  double wall_seconds = 0.0;

  const MethodSummary& summary(TestMethod m) const;
  /// Observed statistics of successful reps.
  std::vector<double> lambdas() const;
};

inline constexpr double kRejectionLevel = 0.05;

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Rejection rate and its binomial standard error for p-values at `level`.
MethodSummary summarize_pvalues(TestMethod method, std::vector<double> p_values, double level = kRejectionLevel);

nlohmann::json to_json(const ExperimentResult& result, const ExperimentConfig& cfg);
/// Reads back the per-method sorted p-values of an experiment JSON.
ExperimentResult experiment_result_from_json(const nlohmann::json& j);

struct QQRow {
  double expected = 0.0;
  double observed = 0.0;
};

/// (i / (R + 1), p_(i)) for the sorted p-values of `method`.
std::vector<QQRow> qq_export(const ExperimentResult& result, TestMethod method);

/// One-sample Kolmogorov distance to U(0,1).
double ks_uniform(std::vector<double> values);
/// One-sample Kolmogorov distance to a distribution with CDF `cdf` and left
/// limits `cdf_left` (they differ only at atoms).
double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf,
                   const std::function<double(double)>& cdf_left);
/// Kolmogorov distance between observed statistics and 0.5 chi2_0 + 0.5 chi2_1.
double ks_chibar(std::vector<double> lambdas);

}  // namespace hiercdm
