#pragma once

// Likelihood-ratio tests of a hierarchy: the statistic, analytic reference
// distributions and the parametric / nonparametric bootstrap.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hiercdm/em.hpp"

namespace hiercdm {

enum class TestMethod { ParametricBoot, NonparametricBoot, NaiveChisq, Chibar };

/// Short CLI names: pboot, npboot, chisq, chibar.
std::string to_string(TestMethod m);
TestMethod parse_test_method(const std::string& name);
bool is_bootstrap(TestMethod m);

/// -2 (l0 - l1). Values within kNestingSlack of zero become 0; values below
/// -kNestingSlack raise NestingError.
double lrt_statistic(double null_loglik, double alt_loglik);
double lrt_statistic(const CdmFit& fit0, const CdmFit& fit1);

inline constexpr double kNestingSlack = 1e-6;

/// P(chi2_df >= x); df = 0 is the point mass at zero.
double chisq_survival(double x, int df);
double naive_chisq_pvalue(double lambda, int df);
/// sum_m w_m P(chi2_{df_m} >= lambda); equals 1 at lambda = 0.
double chibar_pvalue(double lambda, const std::vector<double>& weights, const std::vector<int>& dfs);
/// CDF of 0.5 chi2_0 + 0.5 chi2_1 at x.
double chibar_cdf(double x);
/// (1 + #{boot >= observed}) / (B + 1).
double bootstrap_pvalue(double lambda_obs, const std::vector<double>& boot);

/// Null and alternative supports. The null support must lie inside the
/// alternative one.
struct Hypotheses {
  ProfileSet null_support;
  ProfileSet alt_support;

  /// alt = nullopt means the unrestricted set of all 2^K profiles.
  static Hypotheses from(const Hierarchy& null_h, const std::optional<Hierarchy>& alt_h = std::nullopt);
  Hypotheses(ProfileSet null_support, ProfileSet alt_support);
  int naive_df() const { return alt_support.size() - null_support.size(); }
};

struct TestConfig {
  ModelKind model = ModelKind::Dina;
  /// Settings of the two observed-data fits.
  FitConfig fit;
  /// Random starts (beyond the deterministic one) in every replicate fit;
  /// replicate fits are also warm-started from the observed fits.
  int boot_random_starts = 0;
  int threads = 0;
  std::optional<int> df_override;
};

struct ObservedFits {
  CdmFit null_fit;
  CdmFit alt_fit;
  double lambda = 0.0;
};

/// Null fit, then the alternative fit warm-started from it.
ObservedFits fit_observed(const QMatrix& q, const Hypotheses& hyp, const PatternData& data, const TestConfig& cfg);

struct FitSummary {
  double loglik = 0.0;
  bool converged = false;
  int n_free_params = 0;
  int iters = 0;
  int support_size = 0;
};

FitSummary summarize(const CdmFit& fit);

struct BootSummary {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double median = 0.0;
  double q95 = 0.0;
  double max = 0.0;
};

struct TestReport {
  TestMethod method = TestMethod::ParametricBoot;
  double lambda_obs = 0.0;
  int B = 0;
  double p_value = 1.0;
  std::uint64_t seed = 0;
  std::optional<int> df;
  std::vector<double> boot_lambdas;
  std::optional<BootSummary> boot_summary;
  int exceed_count = 0;
  /// Replicates whose refits broke nesting twice; recorded as lambda = 0.
  int nesting_failures = 0;
  FitSummary null_fit;
  FitSummary alt_fit;
};

nlohmann::json to_json(const TestReport& report, bool emit_lambdas);

/// Runs one test. When `observed` is given its fits are reused instead of
/// refitting the observed data; it must come from the same inputs.
TestReport run_test(TestMethod method, const QMatrix& q, const Hypotheses& hyp, const ResponseMatrix& data, int B,
                    std::uint64_t seed, const TestConfig& cfg, const ObservedFits* observed = nullptr);

TestReport parametric_bootstrap_test(const QMatrix& q, const Hierarchy& h0, const ResponseMatrix& data, int B,
                                     const TestConfig& cfg, std::uint64_t seed);
TestReport nonparametric_bootstrap_test(const QMatrix& q, const Hierarchy& h0, const ResponseMatrix& data, int B,
                                        const TestConfig& cfg, std::uint64_t seed);

}  // namespace hiercdm
