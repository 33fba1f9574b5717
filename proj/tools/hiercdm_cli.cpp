// hiercdm command-line front end. Every subcommand writes a run manifest
// next to its output; `hiercdm replay MANIFEST` re-executes the recorded
// command line.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hiercdm/errors.hpp"
#include "hiercdm/hypothesis.hpp"
#include "hiercdm/io.hpp"
#include "hiercdm/random.hpp"
#include "hiercdm/simulation.hpp"
#include "hiercdm/testability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hiercdm;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> artifacts;
  std::string started = utc_now();
};

void write_manifest(const Manifest& m, const std::string& explicit_path, const std::string& out_path) {
  std::string path = explicit_path;
  if (path.empty()) path = out_path.empty() ? "hiercdm-" + m.subcommand + ".manifest.json" : out_path + ".manifest.json";
  json j = {{"schema", "hiercdm.manifest/1"},
            {"tool", "hiercdm"},
            {"version", kVersion},
            {"subcommand", m.subcommand},
            {"argv", m.argv},
            {"config", m.config},
            {"seed", m.seed ? json(*m.seed) : json(nullptr)},
            {"artifacts", m.artifacts},
            {"cwd", fs::current_path().string()},
            {"started", m.started},
            {"finished", utc_now()}};
  write_text_file(path, j.dump(2) + "\n");
}

// JSON to --out or stdout.
void emit(const json& j, const std::string& out, Manifest& m) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text_file(out, j.dump(2) + "\n");
    m.artifacts.push_back(out);
  }
}

template <typename Writer>
void write_csv_file(const std::string& path, Writer&& w) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  w(out);
  if (!out) throw Error("write to '" + path + "' failed");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "3>2,2>1" -> edges (3,2), (2,1).
std::vector<Edge> parse_edge_list(const std::string& s) {
  std::vector<Edge> edges;
  for (const auto& tok : split(s, ',')) {
    const auto parts = split(tok, '>');
    if (parts.size() != 2) throw std::invalid_argument("edge '" + tok + "' is not of the form k>l");
    edges.push_back({std::stoi(parts[0]), std::stoi(parts[1])});
  }
  return edges;
}

Hierarchy edges_hierarchy(int K, const json& edges, const std::string& source) {
  if (edges.is_null()) return Hierarchy(K, {});
  return hierarchy_from_json(json{{"K", K}, {"edges", edges}}, source);
}

void apply_threads(int threads) {
  if (threads > 0) setenv("HIERCDM_THREADS", std::to_string(threads).c_str(), 1);
}

// ---- check ----------------------------------------------------------------

struct CheckArgs {
  std::string q, hierarchy, model_class = "dina", conditional, out, manifest;
  bool generic = false;
  int max_set_size = 0;
  std::int64_t budget = 1'000'000;
  int threads = 0;
};

int cmd_check(const CheckArgs& a, Manifest& m) {
  const QMatrix q = read_q_csv(a.q);
  const Hierarchy h = read_hierarchy_json(a.hierarchy);
  if (h.K() != q.K()) throw DimensionMismatch("hierarchy K differs from Q columns");
  TestabilityReport rep;
  std::string mode;
  if (!a.conditional.empty()) {
    if (a.model_class != "dina") throw std::invalid_argument("--conditional is available for --model-class dina only");
    rep = check_dina_conditional(q, h, parse_edge_list(a.conditional));
    mode = "dina_conditional";
  } else if (a.generic) {
    rep = check_general_generic(q, h);
    mode = "general_generic";
  } else if (a.model_class == "general") {
    rep = check_general_strict(q, h, {a.max_set_size, a.budget});
    mode = "general_strict";
  } else {
    rep = check_dina_strict(q, h);
    mode = "dina_strict";
  }
  json j = to_json(rep);
  j["schema"] = "hiercdm.testability/1";
  j["mode"] = mode;
  m.config = {{"q", a.q}, {"hierarchy", a.hierarchy}, {"mode", mode}, {"conditional", a.conditional},
              {"max_set_size", a.max_set_size}, {"budget", a.budget}};
  emit(j, a.out, m);
  switch (rep.verdict) {
    case Verdict::Satisfied: return 0;
    case Verdict::Violated: return 2;
    case Verdict::Inconclusive: return 3;
  }
  return 3;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string q, data, hierarchy, model = "dina", init = "random", config, out, manifest;
  int max_iters = 1000, starts = 5, threads = 0;
  double tol = 1e-6;
  std::uint64_t seed = 1;
};

FitConfig fit_config_of(const std::string& config_path, int max_iters, double tol, int starts, std::uint64_t seed,
                        const std::string& init) {
  FitConfig fc;
  fc.max_iters = max_iters;
  fc.loglik_tol = tol;
  fc.n_starts = starts;
  fc.seed = seed;
  fc.init = init == "uniform" ? InitStrategy::Uniform : InitStrategy::Random;
  if (!config_path.empty()) fc = fit_config_from_json(read_json_file(config_path), fc);
  validate_config(fc);
  return fc;
}

int cmd_fit(const FitArgs& a, Manifest& m) {
  const QMatrix q = read_q_csv(a.q);
  const ResponseMatrix data = read_responses_csv(a.data, q.J());
  const ModelKind kind = parse_model_kind(a.model);
  const ProfileSet support = a.hierarchy.empty() ? ProfileSet::full(q.K()) : induce_profile_set(read_hierarchy_json(a.hierarchy));
  if (support.K() != q.K()) throw DimensionMismatch("hierarchy K differs from Q columns");
  const FitConfig fc = fit_config_of(a.config, a.max_iters, a.tol, a.starts, a.seed, a.init);
  const CdmFit fit = fit_em(kind, q, support, data, fc);
  json j = fit_to_json(fit, q);
  j["N"] = data.N();
  m.seed = fc.seed;
  m.config = {{"q", a.q}, {"data", a.data}, {"hierarchy", a.hierarchy}, {"model", a.model}, {"fit", to_json(fc)}};
  emit(j, a.out, m);
  return 0;
}

// ---- test -----------------------------------------------------------------

struct TestArgs {
  std::string q, data, null_h, alt_h, model = "dina", methods = "pboot", preset, out, manifest, config;
  int B = 200, starts = 5, boot_starts = 0, threads = 0, max_iters = 1000;
  double tol = 1e-6;
  std::optional<int> df;
  std::uint64_t seed = 1;
  bool emit_lambdas = false;
};

void warn_testability(const QMatrix& q, const Hierarchy& h0, ModelKind kind) {
  const TestabilityReport rep = kind == ModelKind::Gdina ? check_general_generic(q, h0) : check_dina_strict(q, h0);
  if (rep.verdict != Verdict::Satisfied) {
    std::cerr << "warning: testability conditions for the null hierarchy are " << to_string(rep.verdict)
              << "; the test may have no power\n";
  }
}

json run_methods(const std::vector<TestMethod>& methods, const QMatrix& q, const Hypotheses& hyp,
                 const ResponseMatrix& data, const TestArgs& a, const TestConfig& tc) {
  const ObservedFits obs = fit_observed(q, hyp, compress(data), tc);
  json reports = json::array();
  for (TestMethod method : methods) {
    json r = to_json(run_test(method, q, hyp, data, a.B, a.seed, tc, &obs), a.emit_lambdas);
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string resolve_preset(const std::string& name) {
  if (fs::exists(name)) return name;
  const fs::path bundled = fs::path(HIERCDM_DATA_DIR) / "presets" / (name + "_battery.json");
  if (fs::exists(bundled)) return bundled.string();
  throw Error("no preset file or bundled preset named '" + name + "'");
}

int cmd_test(const TestArgs& a, Manifest& m) {
  std::vector<TestMethod> methods;
  for (const auto& s : split(a.methods, ',')) methods.push_back(parse_test_method(s));
  if (methods.empty()) throw std::invalid_argument("--method is empty");

  TestConfig tc;
  tc.fit = fit_config_of(a.config, a.max_iters, a.tol, a.starts, a.seed, "random");
  tc.boot_random_starts = a.boot_starts;
  tc.threads = a.threads;
  tc.df_override = a.df;
  m.seed = a.seed;

  json out;
  if (!a.preset.empty()) {
    const std::string preset_path = resolve_preset(a.preset);
    const json preset = read_json_file(preset_path);
    const fs::path base = fs::path(preset_path).parent_path();
    const std::string q_path = a.q.empty() ? (base / preset.at("q").get<std::string>()).string() : a.q;
    const QMatrix q = read_q_csv(q_path);
    const int J = preset.value("J", q.J());
    if (q.J() != J) throw ColumnCountMismatch(q_path + ": preset expects " + std::to_string(J) + " items");
    const ResponseMatrix data = read_responses_csv(a.data, J);
    tc.model = parse_model_kind(preset.value("model", a.model));
    json settings = json::array();
    for (const auto& s : preset.at("settings")) {
      const Hierarchy h0 = edges_hierarchy(q.K(), s.at("null"), preset_path);
      std::optional<Hierarchy> h1;
      if (s.contains("alt") && !s["alt"].is_null()) h1 = edges_hierarchy(q.K(), s["alt"], preset_path);
      warn_testability(q, h0, tc.model);
      const Hypotheses hyp = Hypotheses::from(h0, h1);
      settings.push_back({{"label", s.at("label")}, {"reports", run_methods(methods, q, hyp, data, a, tc)}});
    }
    out = {{"schema", "hiercdm.battery_result/1"}, {"preset", preset_path}, {"settings", settings}};
    m.config = {{"preset", preset_path}, {"q", q_path}};
  } else {
    if (a.q.empty() || a.null_h.empty()) throw std::invalid_argument("--q and --null-hierarchy are required without --preset");
    const QMatrix q = read_q_csv(a.q);
    const ResponseMatrix data = read_responses_csv(a.data, q.J());
    tc.model = parse_model_kind(a.model);
    const Hierarchy h0 = read_hierarchy_json(a.null_h);
    if (h0.K() != q.K()) throw DimensionMismatch("hierarchy K differs from Q columns");
    std::optional<Hierarchy> h1;
    if (!a.alt_h.empty()) h1 = read_hierarchy_json(a.alt_h);
    warn_testability(q, h0, tc.model);
    const Hypotheses hyp = Hypotheses::from(h0, h1);
    json reports = run_methods(methods, q, hyp, data, a, tc);
    out = reports.size() == 1 ? reports[0] : json{{"schema", "hiercdm.test_reports/1"}, {"reports", reports}};
    m.config = {{"q", a.q}, {"null_hierarchy", a.null_h}, {"alt_hierarchy", a.alt_h}, {"model", a.model}};
  }
  m.config["data"] = a.data;
  m.config["methods"] = a.methods;
  m.config["B"] = a.B;
  m.config["boot_random_starts"] = a.boot_starts;
  m.config["fit"] = to_json(tc.fit);
  if (a.df) m.config["df"] = *a.df;
  emit(out, a.out, m);
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimArgs {
  std::string q, hierarchy, shape, model = "dina", params, out, profiles_out, q_out, truth_out, manifest;
  int K = 0, J = 0, N = 500, threads = 0;
  double theta_plus = 0.9;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimArgs& a, Manifest& m) {
  if (a.out.empty()) throw std::invalid_argument("--out is required");
  QMatrix q;
  bool generated = false;
  if (!a.q.empty()) {
    q = read_q_csv(a.q);
  } else {
    if (a.K < 1 || a.J < 1) throw std::invalid_argument("give --q, or --K and --J to generate one");
    q = generate_q(a.K, a.J, derive_seed(a.seed, kTagQ, 0));
    generated = true;
  }
  ProfileSet support = ProfileSet::full(q.K());
  if (!a.hierarchy.empty()) {
    const Hierarchy h = read_hierarchy_json(a.hierarchy);
    if (h.K() != q.K()) throw DimensionMismatch("hierarchy K differs from Q columns");
    support = induce_profile_set(h);
  } else if (!a.shape.empty()) {
    support = induce_profile_set(shape_hierarchy(parse_shape(a.shape), q.K()));
  }
  const ModelKind kind = parse_model_kind(a.model);
  Truth truth = make_truth(kind, q, support, a.theta_plus);
  if (!a.params.empty()) truth.params = params_from_json(read_json_file(a.params), q);
  const SimulatedData sim = simulate_responses(truth.params, truth.p, q, a.N, derive_seed(a.seed, kTagData, 0));

  write_csv_file(a.out, [&](std::ostream& o) { write_responses_csv(o, sim.responses); });
  m.artifacts.push_back(a.out);
  const std::string prof = a.profiles_out.empty() ? a.out + ".profiles.csv" : a.profiles_out;
  write_csv_file(prof, [&](std::ostream& o) {
    for (int idx : sim.profile_index) {
      const ProfileCode c = support[idx];
      for (int k = 0; k < q.K(); ++k) o << (k ? "," : "") << (has_attribute(c, q.K(), k) ? 1 : 0);
      o << '\n';
    }
  });
  m.artifacts.push_back(prof);
  if (generated || !a.q_out.empty()) {
    const std::string qp = a.q_out.empty() ? a.out + ".q.csv" : a.q_out;
    write_csv_file(qp, [&](std::ostream& o) { write_q_csv(o, q); });
    m.artifacts.push_back(qp);
  }
  const std::string tp = a.truth_out.empty() ? a.out + ".truth.json" : a.truth_out;
  write_text_file(tp, json{{"schema", "hiercdm.truth/1"},
                           {"params", params_to_json(truth.params, q)},
                           {"proportions", to_json(truth.p)}}
                          .dump(2) +
                          "\n");
  m.artifacts.push_back(tp);
  m.seed = a.seed;
  m.config = {{"q", a.q}, {"K", q.K()}, {"J", q.J()}, {"N", a.N}, {"model", a.model}, {"hierarchy", a.hierarchy},
              {"shape", a.shape}, {"theta_plus", a.theta_plus}, {"params", a.params}};
  return 0;
}

// ---- experiment / qq --------------------------------------------------------

struct ExpArgs {
  std::string config, out, qq_dir, manifest;
  std::optional<int> reps, B;
  std::optional<std::uint64_t> seed;
  bool full_scale = false;
  int threads = 0;
};

std::string qq_csv(const std::vector<QQRow>& rows) {
  std::ostringstream o;
  o.precision(17);
  o << "expected,observed\n";
  for (const auto& r : rows) o << r.expected << ',' << r.observed << '\n';
  return o.str();
}

int cmd_experiment(const ExpArgs& a, Manifest& m) {
  if (a.out.empty()) throw std::invalid_argument("--out is required");
  ExperimentConfig cfg = experiment_from_json(read_json_file(a.config));
  if (a.full_scale) {
    cfg.reps = 500;
    cfg.B = 500;
  }
  if (a.reps) cfg.reps = *a.reps;
  if (a.B) cfg.B = *a.B;
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads > 0) cfg.threads = a.threads;
  validate_experiment(cfg);
  const ExperimentResult res = run_experiment(cfg);
  write_text_file(a.out, to_json(res, cfg).dump(2) + "\n");
  m.artifacts.push_back(a.out);
  const fs::path dir = a.qq_dir.empty() ? fs::path(a.out).parent_path() : fs::path(a.qq_dir);
  const std::string stem = fs::path(a.out).stem().string();
  for (TestMethod method : cfg.methods) {
    const fs::path p = dir / (stem + "." + to_string(method) + ".qq.csv");
    write_text_file(p.string(), qq_csv(qq_export(res, method)));
    m.artifacts.push_back(p.string());
  }
  for (const auto& s : res.methods) {
    std::cerr << to_string(s.method) << ": rejection rate " << s.rejection_rate << " +/- " << 2 * s.standard_error
              << " over " << s.reps_used << " reps\n";
  }
  m.seed = cfg.seed;
  m.config = to_json(cfg);
  return 0;
}

struct QqArgs {
  std::string in, method, out, manifest;
  int threads = 0;
};

int cmd_qq(const QqArgs& a, Manifest& m) {
  const ExperimentResult res = experiment_result_from_json(read_json_file(a.in));
  const std::string csv = qq_csv(qq_export(res, parse_test_method(a.method)));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(a.out, csv);
    m.artifacts.push_back(a.out);
  }
  m.config = {{"in", a.in}, {"method", a.method}};
  return 0;
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& path) {
  const json j = read_json_file(path);
  if (j.value("schema", "") != "hiercdm.manifest/1") throw std::invalid_argument(path + " is not a hiercdm manifest");
  auto argv = j.at("argv").get<std::vector<std::string>>();
  if (j.contains("cwd")) fs::current_path(j["cwd"].get<std::string>());
  return run(argv);
}

int run(std::vector<std::string> args) {
  CLI::App app{"Testability checks and likelihood-ratio tests for attribute hierarchies in cognitive diagnosis models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto add_common = [](CLI::App* sub, std::string& manifest, int& threads) {
    sub->add_option("--manifest", manifest, "Run manifest path (default: <out>.manifest.json)");
    sub->add_option("--threads", threads, "Worker threads (default: HIERCDM_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
  };

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Check sufficient testability conditions of a hierarchy");
  check->add_option("--q", ca.q, "Q-matrix CSV")->required()->check(CLI::ExistingFile);
  check->add_option("--hierarchy", ca.hierarchy, "Hierarchy JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--model-class", ca.model_class, "dina or general")->check(CLI::IsMember({"dina", "general"}));
  check->add_flag("--generic", ca.generic, "Generic testability for general models");
  check->add_option("--conditional", ca.conditional, "Tested edges given the rest, e.g. 1>2,2>3 (DINA)");
  check->add_option("--max-set-size", ca.max_set_size, "Largest item set tried by the general search (0 = K + 2)");
  check->add_option("--budget", ca.budget, "Search budget of the general strict check");
  check->add_option("--out", ca.out, "Output JSON (default stdout)");
  add_common(check, ca.manifest, ca.threads);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a model by EM on a restricted profile set");
  fit->add_option("--q", fa.q, "Q-matrix CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--data", fa.data, "Response CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--hierarchy", fa.hierarchy, "Hierarchy JSON (default: all profiles)")->check(CLI::ExistingFile);
  fit->add_option("--model", fa.model, "dina, dino or gdina");
  fit->add_option("--max-iters", fa.max_iters, "EM iteration cap");
  fit->add_option("--tol", fa.tol, "Absolute log-likelihood change for convergence");
  fit->add_option("--starts", fa.starts, "Number of starts");
  fit->add_option("--init", fa.init, "uniform or random")->check(CLI::IsMember({"uniform", "random"}));
  fit->add_option("--seed", fa.seed, "Seed of the random starts");
  fit->add_option("--fit-config", fa.config, "Fit settings JSON overriding the flags")->check(CLI::ExistingFile);
  fit->add_option("--out", fa.out, "Output JSON (default stdout)");
  add_common(fit, fa.manifest, fa.threads);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Likelihood-ratio test of a null hierarchy");
  test->add_option("--q", ta.q, "Q-matrix CSV")->check(CLI::ExistingFile);
  test->add_option("--data", ta.data, "Response CSV")->required()->check(CLI::ExistingFile);
  test->add_option("--null-hierarchy", ta.null_h, "Null hierarchy JSON")->check(CLI::ExistingFile);
  test->add_option("--alt-hierarchy", ta.alt_h, "Alternative hierarchy JSON (default: all profiles)")
      ->check(CLI::ExistingFile);
  test->add_option("--preset", ta.preset, "Battery preset JSON, or 'ecpe' for the bundled one");
  test->add_option("--model", ta.model, "dina, dino or gdina (a preset sets its own)");
  test->add_option("--method", ta.methods, "Comma-separated list of pboot, npboot, chisq, chibar");
  test->add_option("--B", ta.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
  test->add_option("--seed", ta.seed, "Seed of bootstrap draws and random starts");
  test->add_option("--df", ta.df, "Degrees of freedom of the naive chi-squared test");
  test->add_option("--starts", ta.starts, "Starts of the observed-data fits");
  test->add_option("--boot-starts", ta.boot_starts, "Extra random starts in every replicate fit");
  test->add_option("--max-iters", ta.max_iters, "EM iteration cap");
  test->add_option("--tol", ta.tol, "Absolute log-likelihood change for convergence");
  test->add_option("--fit-config", ta.config, "Fit settings JSON overriding the flags")->check(CLI::ExistingFile);
  test->add_flag("--emit-lambdas", ta.emit_lambdas, "Include every bootstrap statistic");
  test->add_option("--out", ta.out, "Output JSON (default stdout)");
  add_common(test, ta.manifest, ta.threads);

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate responses from a model");
  sim->add_option("--q", sa.q, "Q-matrix CSV")->check(CLI::ExistingFile);
  sim->add_option("--K", sa.K, "Attributes of a generated Q");
  sim->add_option("--J", sa.J, "Items of a generated Q");
  sim->add_option("--hierarchy", sa.hierarchy, "Hierarchy JSON of the true profile set")->check(CLI::ExistingFile);
  sim->add_option("--shape", sa.shape, "linear, convergent, divergent or unstructured");
  sim->add_option("--model", sa.model, "dina, dino or gdina");
  sim->add_option("--theta-plus", sa.theta_plus, "Success probability of full masters");
  sim->add_option("--params", sa.params, "Item parameter JSON replacing the generated truth")->check(CLI::ExistingFile);
  sim->add_option("--N", sa.N, "Respondents")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sa.seed, "Seed");
  sim->add_option("--out", sa.out, "Response CSV")->required();
  sim->add_option("--profiles-out", sa.profiles_out, "True profile CSV (default <out>.profiles.csv)");
  sim->add_option("--q-out", sa.q_out, "Q CSV (default <out>.q.csv when generated)");
  sim->add_option("--truth-out", sa.truth_out, "Truth JSON (default <out>.truth.json)");
  add_common(sim, sa.manifest, sa.threads);

  ExpArgs ea;
  auto* exp = app.add_subcommand("experiment", "Monte Carlo rejection rates of the tests");
  exp->add_option("--config", ea.config, "ExperimentConfig JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", ea.out, "ExperimentResult JSON")->required();
  exp->add_option("--qq-dir", ea.qq_dir, "Directory of the per-method QQ CSVs (default: next to --out)");
  exp->add_option("--reps", ea.reps, "Override replications");
  exp->add_option("--B", ea.B, "Override bootstrap replicates");
  exp->add_option("--seed", ea.seed, "Override seed");
  exp->add_flag("--full-scale", ea.full_scale, "500 replications with B = 500");
  add_common(exp, ea.manifest, ea.threads);

  QqArgs qa;
  auto* qq = app.add_subcommand("qq", "QQ table of one method from an experiment result");
  qq->add_option("--in", qa.in, "ExperimentResult JSON")->required()->check(CLI::ExistingFile);
  qq->add_option("--method", qa.method, "pboot, npboot, chisq or chibar")->required();
  qq->add_option("--out", qa.out, "CSV (default stdout)");
  add_common(qq, qa.manifest, qa.threads);

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Manifest m;
  m.argv = args;
  auto finish = [&](int code, const std::string& manifest, const std::string& out) {
    write_manifest(m, manifest, out);
    return code;
  };
  if (*check) {
    apply_threads(ca.threads);
    m.subcommand = "check";
    return finish(cmd_check(ca, m), ca.manifest, ca.out);
  }
  if (*fit) {
    apply_threads(fa.threads);
    m.subcommand = "fit";
    return finish(cmd_fit(fa, m), fa.manifest, fa.out);
  }
  if (*test) {
    apply_threads(ta.threads);
    m.subcommand = "test";
    return finish(cmd_test(ta, m), ta.manifest, ta.out);
  }
  if (*sim) {
    apply_threads(sa.threads);
    m.subcommand = "simulate";
    return finish(cmd_simulate(sa, m), sa.manifest, sa.out);
  }
  if (*exp) {
    apply_threads(ea.threads);
    m.subcommand = "experiment";
    return finish(cmd_experiment(ea, m), ea.manifest, ea.out);
  }
  if (*qq) {
    apply_threads(qa.threads);
    m.subcommand = "qq";
    return finish(cmd_qq(qa, m), qa.manifest, qa.out);
  }
  return cmd_replay(replay_path);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
