#include <doctest.h>

#include <functional>
#include <random>

#include "hiercdm/errors.hpp"
#include "hiercdm/io.hpp"
#include "hiercdm/testability.hpp"

using namespace hiercdm;

namespace {

ConditionStatus status_of(const TestabilityReport& r, const std::string& id) {
  const ConditionResult* c = r.find(id);
  REQUIRE(c != nullptr);
  return c->status;
}

const QMatrix kFiveItemQ{{1, 0}, {1, 1}, {1, 0}, {1, 1}, {1, 1}};
const QMatrix kSixItemQ{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}, {1, 1}};
const QMatrix kNineItemQ{{1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0},
                         {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
const QMatrix kGeneralSixQ{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}, {1, 1}};
const QMatrix kGenericNineQ{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 0},
                            {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {1, 1, 1}};
const QMatrix kFourItemQ{{0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 1, 1}};

// All DAGs on K = 3 nodes, by subsets of the six ordered pairs.
std::vector<Hierarchy> all_dags3() {
  std::vector<Edge> pairs;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      if (a != b) pairs.push_back({a, b});
  std::vector<Hierarchy> out;
  for (int m = 0; m < 64; ++m) {
    std::vector<Edge> e;
    for (int i = 0; i < 6; ++i)
      if (m >> i & 1) e.push_back(pairs[i]);
    try {
      out.emplace_back(3, e);
    } catch (const CycleError&) {
    }
  }
  return out;
}

// Hand-executed DINA conditions: identity rows, column sums of the
// sparsified Q, distinct columns of the densified remainder.
std::array<bool, 3> dina_oracle(const QMatrix& q, const Hierarchy& h) {
  const int K = q.K();
  std::vector<int> unit(K, -1);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < q.J() && unit[k] < 0; ++j) {
      bool is_unit = true;
      for (int l = 0; l < K; ++l) is_unit &= q(j, l) == (l == k ? 1 : 0);
      if (is_unit) unit[k] = j;
    }
  bool c1 = true;
  for (int u : unit) c1 &= u >= 0;
  const QMatrix s = sparsify(q, h);
  bool c2 = true;
  for (int k = 0; k < K; ++k) {
    int n = 0;
    for (int j = 0; j < q.J(); ++j) n += s(j, k);
    c2 &= n >= 3;
  }
  std::vector<int> rest;
  for (int j = 0; j < q.J(); ++j)
    if (std::find(unit.begin(), unit.end(), j) == unit.end()) rest.push_back(j);
  bool c3 = true;
  if (rest.empty()) {
    c3 = K == 1;
  } else {
    const QMatrix d = densify(q.select_rows(rest), h);
    for (int a = 0; a < K; ++a)
      for (int b = a + 1; b < K; ++b) {
        bool same = true;
        for (int j = 0; j < d.J(); ++j) same &= d(j, a) == d(j, b);
        c3 &= !same;
      }
  }
  return {c1, c2, c3};
}

// Brute force over ordered row choices for both blocks, then a cover check.
bool generic_blocks_oracle(const QMatrix& q) {
  const int K = q.K();
  const int J = q.J();
  std::vector<int> pick(2 * K, -1);
  std::vector<char> used(J, 0);
  std::function<bool(int)> rec = [&](int slot) -> bool {
    if (slot == 2 * K) {
      for (int k = 0; k < K; ++k) {
        bool covered = false;
        for (int j = 0; j < J; ++j) covered |= !used[j] && q(j, k);
        if (!covered) return false;
      }
      return true;
    }
    const int k = slot % K;
    for (int j = 0; j < J; ++j) {
      if (used[j] || !q(j, k)) continue;
      used[j] = 1;
      if (rec(slot + 1)) return true;
      used[j] = 0;
    }
    return false;
  };
  return rec(0);
}

}  // namespace

TEST_CASE("five-item Q without a (0,1) row is violated at the identity condition") {
  const Hierarchy h(2, {{1, 2}});
  const TestabilityReport r = check_dina_strict(kFiveItemQ, h);
  CHECK(r.verdict == Verdict::Violated);
  CHECK(status_of(r, "1") == ConditionStatus::Fail);
  CHECK(r.find("1")->witness["missing_attributes"] == nlohmann::json::array({2}));
}

TEST_CASE("six-item Q with I_2 satisfies the DINA conditions") {
  const TestabilityReport r = check_dina_strict(kSixItemQ, Hierarchy(2, {{1, 2}}));
  CHECK(r.verdict == Verdict::Satisfied);
  CHECK(r.find("1")->witness["identity_rows"] == nlohmann::json::array({1, 2}));
  CHECK(r.find("2")->witness["column_ones"] == nlohmann::json::array({3, 3}));
}

TEST_CASE("conditional check on the nine-item example") {
  const Hierarchy h0(3, {{1, 2}, {2, 3}});
  const TestabilityReport r = check_dina_conditional(kNineItemQ, h0, {{1, 2}});
  CHECK(r.verdict == Verdict::Satisfied);
  CHECK(status_of(r, "1*") == ConditionStatus::Pass);
  CHECK(r.find("1*")->witness["single_attribute_rows"]["1"] == 1);
  CHECK(r.find("1*")->witness["single_attribute_rows"]["2"] == 2);
  CHECK_THROWS_AS(check_dina_conditional(kNineItemQ, h0, {{1, 3}}), NotASubset);
}

TEST_CASE("conditional check with an empty tested subset") {
  const Hierarchy h0(3, {{1, 2}, {2, 3}});
  const TestabilityReport r = check_dina_conditional(kNineItemQ, h0, {});
  const TestabilityReport strict = check_dina_strict(kNineItemQ, h0);
  CHECK(status_of(r, "1*") == ConditionStatus::Pass);
  CHECK(status_of(r, "2") == status_of(strict, "2"));
  CHECK(r.find("1*")->witness["single_attribute_rows"].empty());
}

TEST_CASE("conditional check fails without a pure item for attribute 2") {
  // S(Q) holds I_3 via (1,1,0) -> (0,1,0), but no original row targets only
  // attribute 2.
  const QMatrix q{{1, 0, 0}, {1, 1, 0}, {0, 0, 1}, {1, 0, 0}, {1, 1, 0}, {1, 0, 0}};
  const Hierarchy h0(3, {{1, 2}, {2, 3}});
  const QMatrix s = sparsify(q, h0);
  CHECK(s == QMatrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0}});
  const TestabilityReport r = check_dina_conditional(q, h0, {{1, 2}});
  CHECK(r.verdict == Verdict::Violated);
  CHECK(status_of(r, "1*") == ConditionStatus::Fail);
  CHECK(r.find("1*")->witness["attributes_without_single_item"] == nlohmann::json::array({2}));
}

TEST_CASE("stacked identities agree with the hand oracle for every K=3 hierarchy") {
  const QMatrix i3x3{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0},
                     {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const Hierarchy& h : all_dags3()) {
    const TestabilityReport r = check_dina_strict(i3x3, h);
    const auto want = dina_oracle(i3x3, h);
    CHECK(status_of(r, "1") == ConditionStatus::Pass);
    CHECK(status_of(r, "2") == ConditionStatus::Pass);
    CHECK((status_of(r, "3") == ConditionStatus::Pass) == want[2]);
  }
}

TEST_CASE("DINA checker agrees with the hand oracle on random inputs") {
  std::mt19937_64 rng(17);
  const auto dags = all_dags3();
  std::uniform_int_distribution<int> row(1, 7);
  for (int t = 0; t < 200; ++t) {
    std::vector<ProfileCode> masks;
    const int J = 4 + t % 6;
    for (int j = 0; j < J; ++j) masks.push_back(static_cast<ProfileCode>(row(rng)));
    const QMatrix q = QMatrix::from_row_masks(3, masks);
    const Hierarchy& h = dags[t % dags.size()];
    const TestabilityReport r = check_dina_strict(q, h);
    const auto want = dina_oracle(q, h);
    CHECK((status_of(r, "1") == ConditionStatus::Pass) == want[0]);
    CHECK((status_of(r, "2") == ConditionStatus::Pass) == want[1]);
    CHECK((status_of(r, "3") == ConditionStatus::Pass) == want[2]);
    if (r.verdict == Verdict::Satisfied) CHECK(profile_separation(q, induce_profile_set(h)).separated);
  }
}

TEST_CASE("DINA strict verdict implies separation at K=4") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> row(1, 15);
  int satisfied = 0;
  for (int t = 0; t < 300; ++t) {
    std::vector<ProfileCode> masks{8, 4, 2, 1};
    for (int j = 0; j < 8; ++j) masks.push_back(static_cast<ProfileCode>(row(rng)));
    const QMatrix q = QMatrix::from_row_masks(4, masks);
    std::vector<Edge> e;
    for (int a = 1; a <= 4; ++a)
      for (int b = a + 1; b <= 4; ++b)
        if (rng() % 3 == 0) e.push_back({a, b});
    const Hierarchy h(4, e);
    if (check_dina_strict(q, h).verdict == Verdict::Satisfied) {
      ++satisfied;
      CHECK(profile_separation(q, induce_profile_set(h)).separated);
    }
  }
  CHECK(satisfied > 0);
}

TEST_CASE("general strict check finds the lexicographically first certificate") {
  const Hierarchy h(2, {{1, 2}});
  const TestabilityReport r = check_general_strict(kGeneralSixQ, h);
  CHECK(r.verdict == Verdict::Satisfied);
  REQUIRE(r.general_certificate);
  CHECK(r.general_certificate->s1 == std::vector<int>{0, 1});
  CHECK(r.general_certificate->s2 == std::vector<int>{2, 3});
  CHECK(r.find("1")->witness["S1"] == nlohmann::json::array({1, 2}));
  CHECK(r.find("1")->witness["S2"] == nlohmann::json::array({3, 4}));
  // Comparable pairs (10)>(00), (11)>(00), (11)>(10) separated by items 5, 6, 6.
  std::map<std::pair<std::string, std::string>, int> items;
  for (const auto& s : r.find("2")->witness["separators"]) {
    items[{s["better"].get<std::string>(), s["worse"].get<std::string>()}] = s["item"].get<int>();
  }
  CHECK(items.size() == 3);
  CHECK(items.at({"10", "00"}) == 5);
  CHECK(items.at({"11", "10"}) == 6);
  CHECK((items.at({"11", "00"}) == 5 || items.at({"11", "00"}) == 6));
  CHECK(verify_general_certificate(kGeneralSixQ, h, *r.general_certificate).empty());
}

TEST_CASE("certificate re-checker rejects broken certificates") {
  const Hierarchy h(2, {{1, 2}});
  GeneralCertificate cert = *check_general_strict(kGeneralSixQ, h).general_certificate;
  GeneralCertificate overlap = cert;
  overlap.s2 = {1, 3};
  CHECK_FALSE(verify_general_certificate(kGeneralSixQ, h, overlap).empty());
  GeneralCertificate no_sep = cert;
  no_sep.separators.pop_back();
  CHECK_FALSE(verify_general_certificate(kGeneralSixQ, h, no_sep).empty());
  GeneralCertificate inside = cert;
  inside.separators[0].item = 0;
  CHECK_FALSE(verify_general_certificate(kGeneralSixQ, h, inside).empty());
}

TEST_CASE("general strict check is violated at separation for the five-item Q") {
  const TestabilityReport r = check_general_strict(kFiveItemQ, Hierarchy(2, {{1, 2}}));
  CHECK(r.verdict == Verdict::Violated);
  CHECK(status_of(r, "3") == ConditionStatus::Fail);
  CHECK(r.find("3")->witness["null_profile"] == "00");
  CHECK(r.find("3")->witness["excluded_profile"] == "01");
  const SeparationResult sep = profile_separation(kFiveItemQ, induce_profile_set(Hierarchy(2, {{1, 2}})));
  CHECK_FALSE(sep.separated);
  CHECK(sep.violating_pair->first == parse_profile("00"));
  CHECK(sep.violating_pair->second == parse_profile("01"));
}

TEST_CASE("separation holds for the four-item three-attribute example") {
  const Hierarchy h(3, {{1, 2}, {2, 3}});
  const TestabilityReport r = check_general_strict(kFourItemQ, h);
  CHECK(status_of(r, "3") == ConditionStatus::Pass);
}

TEST_CASE("general strict search stays honest on the nine-item generic example") {
  const Hierarchy h(3, {{1, 2}, {2, 3}});
  const TestabilityReport r = check_general_strict(kGenericNineQ, h);
  CHECK(r.verdict != Verdict::Satisfied);
  CHECK(status_of(r, "3") == ConditionStatus::Pass);
}

TEST_CASE("tiny budget makes the strict search inconclusive") {
  const TestabilityReport r = check_general_strict(kGeneralSixQ, Hierarchy(2, {{1, 2}}), {0, 3});
  CHECK(r.verdict == Verdict::Inconclusive);
  CHECK(r.search_budget_hit);
  CHECK_THROWS_AS(check_general_strict(kGeneralSixQ, Hierarchy(2, {{1, 2}}), {1, 100}), std::invalid_argument);
}

TEST_CASE("generic check on the worked examples") {
  const TestabilityReport r7 = check_general_generic(kGenericNineQ, Hierarchy(3, {{1, 2}, {2, 3}}));
  CHECK(r7.verdict == Verdict::Satisfied);
  REQUIRE(r7.matching_certificate);
  CHECK(verify_matching_certificate(kGenericNineQ, *r7.matching_certificate).empty());
  const TestabilityReport r6 = check_general_generic(kGeneralSixQ, Hierarchy(2, {{1, 2}}));
  CHECK(r6.verdict == Verdict::Satisfied);
  CHECK(verify_matching_certificate(kGeneralSixQ, *r6.matching_certificate).empty());
}

TEST_CASE("generic check reports an uncovered attribute") {
  const QMatrix q{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}};
  const TestabilityReport r = check_general_generic(q, Hierarchy(2, {{1, 2}}));
  CHECK(r.verdict == Verdict::Violated);
  CHECK(status_of(r, "1") == ConditionStatus::Pass);
  CHECK(status_of(r, "2") == ConditionStatus::Fail);
  CHECK(r.find("2")->witness["remaining_column_sums"] == nlohmann::json::array({1, 0}));
}

TEST_CASE("generic check needs the right blocks, not the first matching") {
  // Rows 1 and 4 are the only rows hitting attribute 2 besides (1,1); a
  // careless matching spends (1,1) inside a block.
  const QMatrix q{{1, 1}, {1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}};
  const TestabilityReport r = check_general_generic(q, Hierarchy(2, {}));
  CHECK(generic_blocks_oracle(q));
  CHECK(status_of(r, "2") == ConditionStatus::Pass);
  CHECK(verify_matching_certificate(q, *r.matching_certificate).empty());
}

TEST_CASE("generic blocks agree with brute force on random Q") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 300; ++t) {
    const int K = 2 + t % 2;
    const int J = 2 * K + t % 4;
    std::uniform_int_distribution<int> row(1, (1 << K) - 1);
    std::vector<ProfileCode> masks;
    for (int j = 0; j < J; ++j) masks.push_back(static_cast<ProfileCode>(row(rng)));
    const QMatrix q = QMatrix::from_row_masks(K, masks);
    const TestabilityReport r = check_general_generic(q, Hierarchy(K, {}));
    const bool got = status_of(r, "1") == ConditionStatus::Pass && status_of(r, "2") == ConditionStatus::Pass;
    CHECK(got == generic_blocks_oracle(q));
    if (got) CHECK(verify_matching_certificate(q, *r.matching_certificate).empty());
  }
}

TEST_CASE("ECPE Q under its linear hierarchy is generically testable") {
  const QMatrix q = read_q_csv(std::string(HIERCDM_TEST_DATA_DIR) + "/ecpe_q.csv");
  CHECK(q.J() == 28);
  CHECK(q.K() == 3);
  const Hierarchy h = read_hierarchy_json(std::string(HIERCDM_TEST_DATA_DIR) + "/hierarchies/ecpe_linear.json");
  CHECK(check_general_generic(q, h).verdict == Verdict::Satisfied);
}

TEST_CASE("profile separation with an identity submatrix holds for every K=3 hierarchy") {
  const QMatrix q{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}};
  for (const Hierarchy& h : all_dags3()) CHECK(profile_separation(q, induce_profile_set(h)).separated);
  CHECK(profile_separation(kGenericNineQ, induce_profile_set(Hierarchy(3, {{1, 2}, {2, 3}}))).separated);
}

TEST_CASE("reports are deterministic and dimension-checked") {
  const Hierarchy h(2, {{1, 2}});
  CHECK(to_json(check_general_strict(kGeneralSixQ, h)) == to_json(check_general_strict(kGeneralSixQ, h)));
  CHECK(to_json(check_general_generic(kGeneralSixQ, h)) == to_json(check_general_generic(kGeneralSixQ, h)));
  CHECK_THROWS_AS(check_dina_strict(kSixItemQ, Hierarchy(3, {})), DimensionMismatch);
  CHECK_THROWS_AS(check_general_generic(kSixItemQ, Hierarchy(3, {})), DimensionMismatch);
}
