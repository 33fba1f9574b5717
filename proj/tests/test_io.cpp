#include <doctest.h>

#include <bit>
#include <sstream>

#include "hiercdm/errors.hpp"
#include "hiercdm/io.hpp"
#include "hiercdm/simulation.hpp"

using namespace hiercdm;

namespace {

template <class F>
std::pair<int, int> parse_position(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return {e.line(), e.column()};
  }
  return {-1, -1};
}

}  // namespace

TEST_CASE("binary CSV parsing reports line and column") {
  std::istringstream ok("1,0\n\n0, 1\r\n");
  const QMatrix q = parse_q_csv(ok, "ok");
  CHECK(q == QMatrix{{1, 0}, {0, 1}});
  CHECK(parse_position([] {
          std::istringstream in("1,0\n0,x\n");
          parse_binary_csv(in, "bad");
        }) == std::pair{2, 3});
  CHECK(parse_position([] {
          std::istringstream in("1,0\n1,0,1\n");
          parse_binary_csv(in, "bad");
        }).first == 2);
  CHECK(parse_position([] {
          std::istringstream in("1,,0\n");
          parse_binary_csv(in, "bad");
        }) == std::pair{1, 3});
  std::istringstream zero("0,0\n");
  CHECK_THROWS_AS(parse_q_csv(zero, "z"), ParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_binary_csv(empty, "e"), ParseError);
  try {
    std::istringstream in("1,2\n");
    parse_binary_csv(in, "file.csv");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()) == "file.csv:1:3: expected 0 or 1, found '2'");
  }
}

TEST_CASE("response CSVs round-trip and check the column count") {
  const QMatrix q = generate_q(3, 9, 1);
  const Truth t = make_truth(ModelKind::Dina, q, ProfileSet::full(3), 0.8);
  const ResponseMatrix r = simulate_responses(t.params, t.p, q, 25, 3).responses;
  std::ostringstream out;
  write_responses_csv(out, r);
  std::istringstream in(out.str());
  CHECK(parse_responses_csv(in, "r", 9) == r);
  std::istringstream again(out.str());
  CHECK_THROWS_AS(parse_responses_csv(again, "r", 28), ColumnCountMismatch);
  std::ostringstream qs;
  write_q_csv(qs, q);
  std::istringstream qin(qs.str());
  CHECK(parse_q_csv(qin, "q") == q);
}

TEST_CASE("hierarchy JSON") {
  const Hierarchy h = hierarchy_from_json(nlohmann::json::parse(R"({"K": 3, "edges": [[3, 2], [2, 1]]})"));
  CHECK(h.contains({3, 2}));
  CHECK(hierarchy_from_json(to_json(h)) == h);
  CHECK_THROWS_AS(hierarchy_from_json(nlohmann::json::parse(R"({"edges": []})")), ParseError);
  CHECK_THROWS_AS(hierarchy_from_json(nlohmann::json::parse(R"({"K": 2, "edges": [[1, 2], [2, 1]]})")), CycleError);
  CHECK_THROWS_AS(hierarchy_from_json(nlohmann::json::parse(R"({"K": 2, "edges": [[1, 3]]})")), IndexError);
  CHECK_THROWS_AS(hierarchy_from_json(nlohmann::json::parse(R"({"K": 2, "edges": [1]})")), ParseError);
}

TEST_CASE("JSON syntax errors carry a position") {
  const auto pos = parse_position([] { parse_json("{\n  \"K\": 2,\n  oops\n}", "h.json"); });
  CHECK(pos.first == 3);
  CHECK(pos.second >= 3);
}

TEST_CASE("item parameter JSON round-trips") {
  const QMatrix q{{1, 1, 0}, {0, 0, 1}};
  const ItemParams dina = ItemParams::dina({0.1, 0.2}, {0.3, 0.4});
  CHECK(params_from_json(params_to_json(dina, q), q) == dina);
  const ItemParams gd = ItemParams::gdina({{0.1, 0.3, 0.6, 0.9}, {0.2, 0.8}});
  const nlohmann::json j = params_to_json(gd, q);
  CHECK(j["items"][0]["required"] == nlohmann::json::array({1, 2}));
  CHECK(j["items"][0]["theta"]["10"] == 0.6);
  CHECK(params_from_json(j, q) == gd);
  CHECK_THROWS(params_from_json({{"model", "dina"}, {"slip", {0.1}}, {"guess", {0.1}}}, q));
}

TEST_CASE("fit configs merge over defaults") {
  const FitConfig cfg = fit_config_from_json({{"n_starts", 9}, {"init_strategy", "uniform"}});
  CHECK(cfg.n_starts == 9);
  CHECK(cfg.init == InitStrategy::Uniform);
  CHECK(cfg.max_iters == FitConfig{}.max_iters);
  const FitConfig back = fit_config_from_json(to_json(cfg));
  CHECK(back.n_starts == 9);
  CHECK(back.loglik_tol == cfg.loglik_tol);
}

TEST_CASE("bundled ECPE Q fixture") {
  const QMatrix q = read_q_csv(std::string(HIERCDM_TEST_DATA_DIR) + "/ecpe_q.csv");
  CHECK(q.J() == 28);
  int single = 0;
  for (int j = 0; j < 28; ++j) single += std::popcount(q.row_mask(j)) == 1;
  CHECK(single == 19);
  CHECK(q.row_mask(0) == parse_profile("110"));
  CHECK(q.row_mask(27) == parse_profile("001"));
}
