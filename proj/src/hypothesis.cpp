#include "hiercdm/hypothesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "hiercdm/errors.hpp"
#include "hiercdm/parallel.hpp"
#include "hiercdm/random.hpp"

namespace hiercdm {

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::ParametricBoot: return "pboot";
    case TestMethod::NonparametricBoot: return "npboot";
    case TestMethod::NaiveChisq: return "chisq";
    case TestMethod::Chibar: return "chibar";
  }
  return "?";
}

TestMethod parse_test_method(const std::string& name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "pboot" || s == "parametric_boot") return TestMethod::ParametricBoot;
  if (s == "npboot" || s == "nonparametric_boot") return TestMethod::NonparametricBoot;
  if (s == "chisq" || s == "naive_chisq") return TestMethod::NaiveChisq;
  if (s == "chibar") return TestMethod::Chibar;
  throw UnknownMethod("unknown test method '" + name + "'");
}

bool is_bootstrap(TestMethod m) {
  return m == TestMethod::ParametricBoot || m == TestMethod::NonparametricBoot;
}

double lrt_statistic(double null_loglik, double alt_loglik) {
  const double lambda = -2.0 * (null_loglik - alt_loglik);
  if (lambda < -kNestingSlack) throw NestingError(null_loglik, alt_loglik);
  // Differences inside the optimizer's resolution count as an exact tie.
  return lambda < kNestingSlack ? 0.0 : lambda;
}

double lrt_statistic(const CdmFit& fit0, const CdmFit& fit1) { return lrt_statistic(fit0.loglik, fit1.loglik); }

double chisq_survival(double x, int df) {
  if (df < 0) throw InvalidDf("negative degrees of freedom");
  if (df == 0) return x <= 0.0 ? 1.0 : 0.0;
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double naive_chisq_pvalue(double lambda, int df) {
  if (df < 1) throw InvalidDf("naive chi-squared test needs df >= 1, got " + std::to_string(df));
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  return chisq_survival(lambda, df);
}

double chibar_pvalue(double lambda, const std::vector<double>& weights, const std::vector<int>& dfs) {
  if (weights.size() != dfs.size() || weights.empty()) throw WeightError("weights and dfs must be nonempty and equal length");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw WeightError("negative mixture weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw WeightError("mixture weights sum to " + std::to_string(total));
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (lambda == 0.0) return 1.0;
  double p = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) p += weights[m] * chisq_survival(lambda, dfs[m]);
  return p;
}

double chibar_cdf(double x) {
  if (x < 0.0) return 0.0;
  return 1.0 - 0.5 * chisq_survival(x, 1);
}

double bootstrap_pvalue(double lambda_obs, const std::vector<double>& boot) {
  const auto exceed = std::count_if(boot.begin(), boot.end(), [&](double v) { return v >= lambda_obs; });
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(boot.size()) + 1.0);
}

// ---------------------------------------------------------------------------

Hypotheses::Hypotheses(ProfileSet null_support, ProfileSet alt_support)
    : null_support(std::move(null_support)), alt_support(std::move(alt_support)) {
  if (!this->null_support.is_subset_of(this->alt_support)) {
    throw NotASubset("the null profile set is not contained in the alternative profile set");
  }
}

Hypotheses Hypotheses::from(const Hierarchy& null_h, const std::optional<Hierarchy>& alt_h) {
  if (alt_h && alt_h->K() != null_h.K()) throw DimensionMismatch("null and alternative hierarchies differ in K");
  return Hypotheses(induce_profile_set(null_h),
                    alt_h ? induce_profile_set(*alt_h) : ProfileSet::full(null_h.K()));
}

ObservedFits fit_observed(const QMatrix& q, const Hypotheses& hyp, const PatternData& data, const TestConfig& cfg) {
  ObservedFits out;
  out.null_fit = fit_em(cfg.model, q, hyp.null_support, data, cfg.fit);
  out.alt_fit = fit_em(cfg.model, q, hyp.alt_support, data, cfg.fit, {out.null_fit.as_start()});
  out.lambda = lrt_statistic(out.null_fit, out.alt_fit);
  return out;
}

FitSummary summarize(const CdmFit& fit) {
  return {fit.loglik, fit.converged, fit.n_free_params, fit.iters, fit.p.size()};
}

namespace {

double quantile(const std::vector<double>& sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootSummary summarize_boot(const std::vector<double>& v) {
  std::vector<double> s(v);
  std::sort(s.begin(), s.end());
  BootSummary b;
  b.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  double ss = 0.0;
  for (double x : s) ss += (x - b.mean) * (x - b.mean);
  b.sd = s.size() > 1 ? std::sqrt(ss / static_cast<double>(s.size() - 1)) : 0.0;
  b.min = s.front();
  b.max = s.back();
  b.median = quantile(s, 0.5);
  b.q95 = quantile(s, 0.95);
  return b;
}

// Resampled data as multiplicities over the observed patterns.
PatternData resample(const PatternData& obs, Rng& rng) {
  const std::size_t N = obs.respondent_pattern.size();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(obs.U());
  for (std::size_t i = 0; i < N; ++i) counts(obs.respondent_pattern[uniform_index(rng, N)]) += 1.0;
  std::vector<int> keep;
  for (int u = 0; u < obs.U(); ++u) {
    if (counts(u) > 0.0) keep.push_back(u);
  }
  PatternData out;
  out.R.resize(static_cast<Eigen::Index>(keep.size()), obs.J());
  out.w.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.R.row(static_cast<Eigen::Index>(r)) = obs.R.row(keep[r]);
    out.w(static_cast<Eigen::Index>(r)) = counts(keep[r]);
  }
  return out;
}

struct ReplicateOutcome {
  double lambda = 0.0;
  bool nesting_failed = false;
};

ReplicateOutcome replicate_lambda(const QMatrix& q, const Hypotheses& hyp, const PatternData& data,
                                  const ObservedFits& obs, const TestConfig& cfg, std::uint64_t seed,
                                  bool warm_from_observed_alt) {
  FitConfig fc = cfg.fit;
  fc.n_starts = 1 + cfg.boot_random_starts;
  fc.seed = seed;
  fc.keep_traces = false;
  fc.default_start = false;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      fc.n_starts = std::max(cfg.fit.n_starts, fc.n_starts) + 2;
      fc.default_start = true;
    }
    const CdmFit f0 = fit_em(cfg.model, q, hyp.null_support, data, fc, {obs.null_fit.as_start()});
    std::vector<StartPoint> warm{f0.as_start()};
    if (warm_from_observed_alt) warm.push_back(obs.alt_fit.as_start());
    const CdmFit f1 = fit_em(cfg.model, q, hyp.alt_support, data, fc, warm);
    try {
      return {lrt_statistic(f0, f1), false};
    } catch (const NestingError&) {
    }
  }
  return {0.0, true};
}

}  // namespace

TestReport run_test(TestMethod method, const QMatrix& q, const Hypotheses& hyp, const ResponseMatrix& data, int B,
                    std::uint64_t seed, const TestConfig& cfg, const ObservedFits* observed) {
  if (data.J() != q.J()) throw DimensionMismatch("response columns differ from Q rows");
  if (is_bootstrap(method) && B < 1) throw std::invalid_argument("bootstrap needs B >= 1");
  const PatternData patterns = compress(data);
  ObservedFits local;
  if (!observed) {
    local = fit_observed(q, hyp, patterns, cfg);
    observed = &local;
  }

  TestReport rep;
  rep.method = method;
  rep.seed = seed;
  rep.lambda_obs = observed->lambda;
  rep.null_fit = summarize(observed->null_fit);
  rep.alt_fit = summarize(observed->alt_fit);

  switch (method) {
    case TestMethod::NaiveChisq: {
      const int df = cfg.df_override.value_or(hyp.naive_df());
      rep.df = df;
      rep.p_value = naive_chisq_pvalue(rep.lambda_obs, df);
      return rep;
    }
    case TestMethod::Chibar: {
      if (hyp.naive_df() != 1) {
        throw InvalidDf("the 0.5/0.5 chi-bar-squared reference needs exactly one excluded profile, got " +
                        std::to_string(hyp.naive_df()));
      }
      rep.df = 1;
      rep.p_value = chibar_pvalue(rep.lambda_obs, {0.5, 0.5}, {0, 1});
      return rep;
    }
    default: break;
  }

  const bool parametric = method == TestMethod::ParametricBoot;
  const std::uint64_t tag = parametric ? kTagParametric : kTagNonparametric;
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(B));
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t b) {
    const std::uint64_t sub = derive_seed(seed, tag, b);
    PatternData boot;
    if (parametric) {
      const auto sim = simulate_responses(observed->null_fit.params, observed->null_fit.p, q, data.N(), sub);
      boot = compress(sim.responses);
    } else {
      Rng rng(sub);
      boot = resample(patterns, rng);
    }
    outcomes[b] = replicate_lambda(q, hyp, boot, *observed, cfg, derive_seed(sub, kTagStarts, 0), !parametric);
  });

  rep.B = B;
  for (const auto& o : outcomes) {
    rep.boot_lambdas.push_back(o.lambda);
    rep.nesting_failures += o.nesting_failed ? 1 : 0;
  }
  rep.exceed_count = static_cast<int>(
      std::count_if(rep.boot_lambdas.begin(), rep.boot_lambdas.end(), [&](double v) { return v >= rep.lambda_obs; }));
  rep.p_value = bootstrap_pvalue(rep.lambda_obs, rep.boot_lambdas);
  rep.boot_summary = summarize_boot(rep.boot_lambdas);
  return rep;
}

TestReport parametric_bootstrap_test(const QMatrix& q, const Hierarchy& h0, const ResponseMatrix& data, int B,
                                     const TestConfig& cfg, std::uint64_t seed) {
  return run_test(TestMethod::ParametricBoot, q, Hypotheses::from(h0), data, B, seed, cfg);
}

TestReport nonparametric_bootstrap_test(const QMatrix& q, const Hierarchy& h0, const ResponseMatrix& data, int B,
                                        const TestConfig& cfg, std::uint64_t seed) {
  return run_test(TestMethod::NonparametricBoot, q, Hypotheses::from(h0), data, B, seed, cfg);
}

nlohmann::json to_json(const TestReport& r, bool emit_lambdas) {
  auto fit_json = [](const FitSummary& f) {
    return nlohmann::json{{"loglik", f.loglik},
                          {"converged", f.converged},
                          {"n_free_params", f.n_free_params},
                          {"iters", f.iters},
                          {"support_size", f.support_size}};
  };
  nlohmann::json j = {{"schema", "hiercdm.test_report/1"},
                      {"method", to_string(r.method)},
                      {"lambda_obs", r.lambda_obs},
                      {"B", r.B},
                      {"p_value", r.p_value},
                      {"seed", r.seed},
                      {"null_fit", fit_json(r.null_fit)},
                      {"alt_fit", fit_json(r.alt_fit)}};
  if (r.df) j["df"] = *r.df;
  if (r.boot_summary) {
    const auto& b = *r.boot_summary;
    j["boot_summary"] = {{"mean", b.mean}, {"sd", b.sd},   {"min", b.min},
                         {"median", b.median}, {"q95", b.q95}, {"max", b.max}};
    j["exceed_count"] = r.exceed_count;
    j["nesting_failures"] = r.nesting_failures;
  }
  if (emit_lambdas && !r.boot_lambdas.empty()) j["boot_lambdas"] = r.boot_lambdas;
  return j;
}

}  // namespace hiercdm
