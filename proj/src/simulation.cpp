#include "hiercdm/simulation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>

#include "hiercdm/errors.hpp"
#include "hiercdm/io.hpp"
#include "hiercdm/parallel.hpp"
#include "hiercdm/random.hpp"

namespace hiercdm {

HierarchyShape parse_shape(const std::string& name) {
  if (name == "linear") return HierarchyShape::Linear;
  if (name == "convergent") return HierarchyShape::Convergent;
  if (name == "divergent") return HierarchyShape::Divergent;
  if (name == "unstructured") return HierarchyShape::Unstructured;
  throw std::invalid_argument("unknown hierarchy shape '" + name + "'");
}

std::string to_string(HierarchyShape shape) {
  switch (shape) {
    case HierarchyShape::Linear: return "linear";
    case HierarchyShape::Convergent: return "convergent";
    case HierarchyShape::Divergent: return "divergent";
    case HierarchyShape::Unstructured: return "unstructured";
  }
  return "?";
}

Hierarchy shape_hierarchy(HierarchyShape shape, int K) {
  if (shape == HierarchyShape::Linear) {
    std::vector<Edge> edges;
    for (int k = 1; k < K; ++k) edges.push_back({k, k + 1});
    return Hierarchy(K, edges);
  }
  if (K != 4) throw DimensionMismatch(to_string(shape) + " hierarchy is defined for K = 4 only");
  switch (shape) {
    case HierarchyShape::Convergent: return Hierarchy(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
    case HierarchyShape::Divergent: return Hierarchy(4, {{1, 2}, {1, 3}, {3, 4}});
    default: return Hierarchy(4, {{1, 2}, {1, 3}, {1, 4}});
  }
}

QMatrix generate_q(int K, int J, std::uint64_t seed) {
  if (K < 1 || K > kMaxEnumerableK) throw KTooLarge("K must lie in [1, 20]");
  if (J < 2 * K) throw TooFewItems("J = " + std::to_string(J) + " is below 2K = " + std::to_string(2 * K));
  std::vector<ProfileCode> masks;
  for (int block = 0; block < 2; ++block) {
    for (int k = 0; k < K; ++k) masks.push_back(attribute_bit(K, k));
  }
  Rng rng(seed);
  const std::uint64_t nonzero = (std::uint64_t{1} << K) - 1;
  while (static_cast<int>(masks.size()) < J) masks.push_back(static_cast<ProfileCode>(1 + uniform_index(rng, nonzero)));
  return QMatrix::from_row_masks(K, std::move(masks));
}

Truth make_truth(ModelKind kind, const QMatrix& q, const ProfileSet& support, double theta_plus) {
  if (!(theta_plus > 0.5 && theta_plus <= 1.0)) throw std::invalid_argument("theta_plus must lie in (0.5, 1]");
  const double theta_minus = 1.0 - theta_plus;
  ItemParams params;
  if (kind == ModelKind::Gdina) {
    std::vector<std::vector<double>> tables;
    for (int j = 0; j < q.J(); ++j) {
      const int width = std::popcount(q.row_mask(j));
      std::vector<double> t(std::size_t{1} << width);
      for (std::size_t p = 0; p < t.size(); ++p) {
        t[p] = theta_minus + (theta_plus - theta_minus) * std::popcount(p) / width;
      }
      tables.push_back(std::move(t));
    }
    params = ItemParams::gdina(std::move(tables));
  } else {
    params = ItemParams::dina(std::vector<double>(static_cast<std::size_t>(q.J()), theta_minus),
                              std::vector<double>(static_cast<std::size_t>(q.J()), theta_minus));
    params.kind = kind;
  }
  return {std::move(params), ProportionVector::uniform(support)};
}

// ---------------------------------------------------------------------------

void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (cfg.N < 1) throw std::invalid_argument("N must be at least 1");
  if (cfg.methods.empty()) throw UnknownMethod("no test methods requested");
  if (cfg.hierarchy.K() != cfg.K) throw DimensionMismatch("hierarchy K differs from experiment K");
  if (cfg.q && (cfg.q->K() != cfg.K || cfg.q->J() != cfg.J)) throw DimensionMismatch("fixed Q has the wrong shape");
  const bool any_boot = std::any_of(cfg.methods.begin(), cfg.methods.end(), is_bootstrap);
  if (any_boot && cfg.B < 1) throw std::invalid_argument("B must be at least 1");
  if (!(cfg.theta_plus > 0.5 && cfg.theta_plus <= 1.0)) throw std::invalid_argument("theta_plus must lie in (0.5, 1]");
  validate_config(cfg.fit);
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("model")) cfg.model = parse_model_kind(j["model"].get<std::string>());
    cfg.K = j.value("K", cfg.K);
    cfg.J = j.value("J", cfg.J);
    cfg.N = j.value("N", cfg.N);
    const nlohmann::json h = j.value("hierarchy", nlohmann::json("linear"));
    cfg.hierarchy = h.is_string() ? shape_hierarchy(parse_shape(h.get<std::string>()), cfg.K)
                                  : hierarchy_from_json(h.contains("K") ? h : nlohmann::json{{"K", cfg.K}, {"edges", h.at("edges")}});
    if (j.contains("alt_hierarchy") && !j["alt_hierarchy"].is_null()) {
      const auto& a = j["alt_hierarchy"];
      cfg.alt_hierarchy = hierarchy_from_json(a.contains("K") ? a : nlohmann::json{{"K", cfg.K}, {"edges", a.at("edges")}});
    }
    if (j.contains("truth")) {
      const auto t = j["truth"].get<std::string>();
      if (t == "null") {
        cfg.truth = TruthKind::Null;
      } else if (t == "alternative") {
        cfg.truth = TruthKind::Alternative;
      } else {
        throw std::invalid_argument("truth must be null or alternative");
      }
    }
    cfg.theta_plus = j.value("theta_plus", cfg.theta_plus);
    cfg.reps = j.value("reps", cfg.reps);
    cfg.B = j.value("B", cfg.B);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j["methods"]) cfg.methods.push_back(parse_test_method(m.get<std::string>()));
    }
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("q") && !j["q"].is_null()) {
      std::vector<ProfileCode> masks;
      for (const auto& row : j["q"]) {
        if (static_cast<int>(row.size()) != cfg.K) throw DimensionMismatch("Q row length differs from K");
        ProfileCode m = 0;
        for (int k = 0; k < cfg.K; ++k) {
          if (row[k].get<int>()) m |= attribute_bit(cfg.K, k);
        }
        masks.push_back(m);
      }
      cfg.q = QMatrix::from_row_masks(cfg.K, std::move(masks));
    }
    if (j.contains("fit")) cfg.fit = fit_config_from_json(j["fit"], cfg.fit);
    cfg.boot_random_starts = j.value("boot_random_starts", cfg.boot_random_starts);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("experiment config", 0, 0, e.what());
  }
  validate_experiment(cfg);
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json methods = nlohmann::json::array();
  for (TestMethod m : cfg.methods) methods.push_back(to_string(m));
  nlohmann::json j = {{"model", to_string(cfg.model)},
                      {"K", cfg.K},
                      {"J", cfg.J},
                      {"N", cfg.N},
                      {"hierarchy", to_json(cfg.hierarchy)},
                      {"alt_hierarchy", cfg.alt_hierarchy ? to_json(*cfg.alt_hierarchy) : nlohmann::json(nullptr)},
                      {"truth", cfg.truth == TruthKind::Null ? "null" : "alternative"},
                      {"theta_plus", cfg.theta_plus},
                      {"reps", cfg.reps},
                      {"B", cfg.B},
                      {"methods", methods},
                      {"seed", cfg.seed},
                      {"fit", to_json(cfg.fit)},
                      {"boot_random_starts", cfg.boot_random_starts}};
  if (cfg.q) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < cfg.q->J(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int k = 0; k < cfg.K; ++k) row.push_back((*cfg.q)(r, k));
      rows.push_back(row);
    }
    j["q"] = rows;
  }
  return j;
}

// ---------------------------------------------------------------------------

const MethodSummary& ExperimentResult::summary(TestMethod m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw UnknownMethod("method " + to_string(m) + " is not part of this experiment");
}

std::vector<double> ExperimentResult::lambdas() const {
  std::vector<double> out;
  for (const auto& r : reps) {
    if (r.error.empty()) out.push_back(r.lambda_obs);
  }
  return out;
}

MethodSummary summarize_pvalues(TestMethod method, std::vector<double> p_values, double level) {
  MethodSummary s;
  s.method = method;
  std::erase_if(p_values, [](double p) { return std::isnan(p); });
  std::sort(p_values.begin(), p_values.end());
  s.reps_used = static_cast<int>(p_values.size());
  if (s.reps_used > 0) {
    const auto rejected = std::count_if(p_values.begin(), p_values.end(), [&](double p) { return p <= level; });
    s.rejection_rate = static_cast<double>(rejected) / s.reps_used;
    s.standard_error = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / s.reps_used);
  }
  s.sorted_p = std::move(p_values);
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_experiment(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.q = cfg.q ? *cfg.q : generate_q(cfg.K, cfg.J, derive_seed(cfg.seed, kTagQ, 0));
  const Hypotheses hyp = Hypotheses::from(cfg.hierarchy, cfg.alt_hierarchy);
  const ProfileSet& truth_support = cfg.truth == TruthKind::Null ? hyp.null_support : hyp.alt_support;
  const Truth truth = make_truth(cfg.model, result.q, truth_support, cfg.theta_plus);

  TestConfig tc;
  tc.model = cfg.model;
  tc.boot_random_starts = cfg.boot_random_starts;
  tc.threads = 1;

  result.reps.resize(static_cast<std::size_t>(cfg.reps));
  parallel_for(result.reps.size(), cfg.threads, [&](std::size_t r) {
    RepResult& rep = result.reps[r];
    rep.p_values.assign(cfg.methods.size(), std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t rep_seed = derive_seed(cfg.seed, kTagRep, r);
    try {
      const auto data = simulate_responses(truth.params, truth.p, result.q, cfg.N, derive_seed(rep_seed, kTagData, 0));
      TestConfig local = tc;
      local.fit = cfg.fit;
      local.fit.seed = derive_seed(rep_seed, kTagStarts, 0);
      local.fit.keep_traces = false;
      const ObservedFits obs = fit_observed(result.q, hyp, compress(data.responses), local);
      rep.lambda_obs = obs.lambda;
      rep.null_converged = obs.null_fit.converged;
      rep.alt_converged = obs.alt_fit.converged;
      for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const TestReport tr = run_test(cfg.methods[m], result.q, hyp, data.responses, cfg.B,
                                       derive_seed(rep_seed, static_cast<std::uint64_t>(cfg.methods[m]), 1), local,
                                       &obs);
        rep.p_values[m] = tr.p_value;
      }
    } catch (const std::exception& e) {
      rep.error = e.what();
      std::fill(rep.p_values.begin(), rep.p_values.end(), std::numeric_limits<double>::quiet_NaN());
    }
  });

  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    std::vector<double> ps;
    for (const auto& rep : result.reps) ps.push_back(rep.p_values[m]);
    result.methods.push_back(summarize_pvalues(cfg.methods[m], std::move(ps)));
  }
  for (const auto& rep : result.reps) {
    result.failed_reps += rep.error.empty() ? 0 : 1;
    result.nonconverged_reps += rep.error.empty() && !(rep.null_converged && rep.alt_converged) ? 1 : 0;
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

nlohmann::json to_json(const ExperimentResult& result, const ExperimentConfig& cfg) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& s : result.methods) {
    methods.push_back({{"method", to_string(s.method)},
                       {"reps_used", s.reps_used},
                       {"rejection_rate", s.rejection_rate},
                       {"standard_error", s.standard_error},
                       {"sorted_p", s.sorted_p}});
  }
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : result.reps) {
    nlohmann::json p = nlohmann::json::array();
    for (double v : r.p_values) p.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    nlohmann::json entry = {{"lambda_obs", r.lambda_obs},
                            {"p_values", p},
                            {"null_converged", r.null_converged},
                            {"alt_converged", r.alt_converged}};
    if (!r.error.empty()) entry["error"] = r.error;
    reps.push_back(std::move(entry));
  }
  nlohmann::json q = nlohmann::json::array();
  for (int j = 0; j < result.q.J(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < result.q.K(); ++k) row.push_back(result.q(j, k));
    q.push_back(row);
  }
  return {{"schema", "hiercdm.experiment_result/1"},
          {"config", to_json(cfg)},
          {"q", q},
          {"methods", methods},
          {"reps", reps},
          {"failed_reps", result.failed_reps},
          {"nonconverged_reps", result.nonconverged_reps},
          {"wall_seconds", result.wall_seconds}};
}

ExperimentResult experiment_result_from_json(const nlohmann::json& j) {
  ExperimentResult out;
  try {
    for (const auto& m : j.at("methods")) {
      MethodSummary s;
      s.method = parse_test_method(m.at("method").get<std::string>());
      s.reps_used = m.at("reps_used").get<int>();
      s.rejection_rate = m.at("rejection_rate").get<double>();
      s.standard_error = m.at("standard_error").get<double>();
      s.sorted_p = m.at("sorted_p").get<std::vector<double>>();
      out.methods.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("experiment result", 0, 0, e.what());
  }
  return out;
}

std::vector<QQRow> qq_export(const ExperimentResult& result, TestMethod method) {
  const MethodSummary& s = result.summary(method);
  std::vector<double> p(s.sorted_p);
  std::sort(p.begin(), p.end());
  std::vector<QQRow> rows;
  const double denom = static_cast<double>(p.size()) + 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) rows.push_back({static_cast<double>(i + 1) / denom, p[i]});
  return rows;
}

double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf,
                   const std::function<double(double)>& cdf_left) {
  if (values.empty()) throw std::invalid_argument("no values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t k = i;
    while (k < values.size() && values[k] == values[i]) ++k;
    const double below = static_cast<double>(i) / n;  // empirical CDF just left of the value
    const double at = static_cast<double>(k) / n;
    d = std::max({d, std::abs(at - cdf(values[i])), std::abs(below - cdf_left(values[i]))});
    i = k;
  }
  return d;
}

double ks_uniform(std::vector<double> values) {
  auto cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  return ks_distance(std::move(values), cdf, cdf);
}

double ks_chibar(std::vector<double> lambdas) {
  return ks_distance(std::move(lambdas), chibar_cdf, [](double x) { return x <= 0.0 ? 0.0 : chibar_cdf(x); });
}

}  // namespace hiercdm
