#include <doctest.h>

#include <random>

#include "hiercdm/errors.hpp"
#include "hiercdm/qmatrix.hpp"

using namespace hiercdm;

namespace {

ProfileSet profiles(int K, std::initializer_list<const char*> bits) {
  std::vector<ProfileCode> codes;
  for (const char* b : bits) codes.push_back(parse_profile(b));
  return ProfileSet(K, codes);
}

// Reachability by Floyd-Warshall over an adjacency matrix.
std::vector<std::vector<bool>> reach_oracle(int K, const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> r(K, std::vector<bool>(K, false));
  for (const Edge& e : edges) r[e.from - 1][e.to - 1] = true;
  for (int m = 0; m < K; ++m)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        if (r[i][m] && r[m][j]) r[i][j] = true;
  return r;
}

// Random DAG: edges only from lower to higher index after a shuffle.
Hierarchy random_dag(int K, std::mt19937_64& rng, double density) {
  std::vector<int> perm(K);
  for (int i = 0; i < K; ++i) perm[i] = i + 1;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution coin(density);
  std::vector<Edge> edges;
  for (int a = 0; a < K; ++a)
    for (int b = a + 1; b < K; ++b)
      if (coin(rng)) edges.push_back({perm[a], perm[b]});
  return Hierarchy(K, edges);
}

QMatrix random_q(int K, int J, std::mt19937_64& rng) {
  std::uniform_int_distribution<ProfileCode> d(1, (ProfileCode{1} << K) - 1);
  std::vector<ProfileCode> rows;
  for (int j = 0; j < J; ++j) rows.push_back(d(rng));
  return QMatrix::from_row_masks(K, rows);
}

}  // namespace

TEST_CASE("profile codes put attribute 1 in the top bit") {
  CHECK(parse_profile("101") == 5u);
  CHECK(profile_string(6, 3) == "110");
  CHECK(has_attribute(parse_profile("100"), 3, 0));
  CHECK_FALSE(has_attribute(parse_profile("100"), 3, 2));
}

TEST_CASE("validate_hierarchy") {
  CHECK(validate_hierarchy(2, {{1, 2}}).edges().size() == 1);
  CHECK_THROWS_AS(validate_hierarchy(2, {{1, 2}, {2, 1}}), CycleError);
  CHECK_THROWS_AS(validate_hierarchy(2, {{1, 3}}), IndexError);
  CHECK_THROWS_AS(validate_hierarchy(2, {{1, 1}}), Error);
  const Hierarchy lin = validate_hierarchy(4, {{1, 2}, {2, 3}, {3, 4}});
  CHECK(lin.edges().size() == 3);
  CHECK(validate_hierarchy(3, {{1, 2}, {1, 2}}).edges().size() == 1);
}

TEST_CASE("transitive closure of a chain and of nothing") {
  const Hierarchy c = transitive_closure(Hierarchy(3, {{1, 2}, {2, 3}}));
  CHECK(c.edges() == std::vector<Edge>{{1, 2}, {1, 3}, {2, 3}});
  CHECK(transitive_closure(Hierarchy(3, {})).edges().empty());
}

TEST_CASE("transitive closure agrees with Floyd-Warshall and is idempotent") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 60; ++t) {
    const int K = 2 + t % 5;
    const Hierarchy h = random_dag(K, rng, 0.4);
    const Hierarchy c = transitive_closure(h);
    const auto r = reach_oracle(K, h.edges());
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) CHECK(c.contains({i + 1, j + 1}) == r[i][j]);
    CHECK(transitive_closure(c) == c);
    CHECK(induce_profile_set(h) == induce_profile_set(c));
  }
}

TEST_CASE("induced profile sets of the four K=4 shapes") {
  const ProfileSet lin = induce_profile_set(Hierarchy(4, {{1, 2}, {2, 3}, {3, 4}}));
  CHECK(lin == profiles(4, {"0000", "1000", "1100", "1110", "1111"}));
  const ProfileSet conv = induce_profile_set(Hierarchy(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}}));
  CHECK(conv == profiles(4, {"0000", "1000", "1010", "1100", "1110", "1111"}));
  const ProfileSet div = induce_profile_set(Hierarchy(4, {{1, 2}, {1, 3}, {3, 4}}));
  CHECK(div == profiles(4, {"0000", "1000", "1010", "1011", "1100", "1110", "1111"}));
  const ProfileSet uns = induce_profile_set(Hierarchy(4, {{1, 2}, {1, 3}, {1, 4}}));
  CHECK(uns.size() == 9);
  CHECK(uns[0] == 0u);
  for (int i = 1; i < uns.size(); ++i) CHECK(has_attribute(uns[i], 4, 0));
  CHECK(induce_profile_set(Hierarchy(3, {})).size() == 8);
}

TEST_CASE("induce_profile_set guards large K") {
  CHECK_THROWS_AS(induce_profile_set(Hierarchy(21, {})), KTooLarge);
}

TEST_CASE("sparsify and densify on the two-attribute worked example") {
  const QMatrix q{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}, {1, 1}};
  const Hierarchy h(2, {{1, 2}});
  CHECK(sparsify(q, h) == QMatrix{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}, {0, 1}});
  const QMatrix qstar{{1, 0}, {0, 1}, {1, 0}, {1, 1}};
  CHECK(densify(qstar, h) == QMatrix{{1, 0}, {1, 1}, {1, 0}, {1, 1}});
}

TEST_CASE("equivalent Q-matrices under a linear chain") {
  const Hierarchy h(3, {{1, 2}, {2, 3}});
  const QMatrix q2{{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
  const QMatrix q1{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK(sparsify(q2, h) == q1);
  CHECK(densify(q1, h) == q2);
  // Without closure, row (1,1,1) would only lose attribute 2.
  CHECK(sparsify(QMatrix{{1, 0, 1}}, h) == QMatrix{{0, 0, 1}});
}

TEST_CASE("sparsify/densify properties on random inputs") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const int K = 2 + t % 4;
    const Hierarchy h = random_dag(K, rng, 0.5);
    const QMatrix q = random_q(K, 8, rng);
    const QMatrix s = sparsify(q, h);
    const QMatrix d = densify(q, h);
    CHECK(sparsify(s, h) == s);
    CHECK(densify(d, h) == d);
    CHECK(sparsify(q, Hierarchy(K, {})) == q);
    for (int j = 0; j < q.J(); ++j) {
      CHECK((s.row_mask(j) & ~q.row_mask(j)) == 0u);
      CHECK((q.row_mask(j) & ~d.row_mask(j)) == 0u);
    }
    std::vector<int> rev;
    for (int j = q.J() - 1; j >= 0; --j) rev.push_back(j);
    CHECK(sparsify(q.select_rows(rev), h) == s.select_rows(rev));
    CHECK_THROWS_AS(sparsify(q, Hierarchy(K + 1, {})), DimensionMismatch);
  }
}

TEST_CASE("constraint matrix of the partial-order example") {
  const QMatrix q{{1, 0}, {0, 1}, {1, 0}, {1, 1}};
  const ProfileSet a = profiles(2, {"00", "10", "11"});
  const ConstraintMatrix g = constraint_matrix(q, a);
  CHECK(g.entries == BinaryMatrix{{0, 1, 1}, {0, 0, 1}, {0, 1, 1}, {0, 0, 1}});
  const std::vector<int> s{0, 1};
  CHECK(partial_order_holds(g, s, 1, 0));
  CHECK(partial_order_holds(g, s, 2, 1));
  CHECK_FALSE(partial_order_holds(g, s, 0, 1));
  const std::vector<int> s2{2, 3};
  CHECK(partial_orders_equal(g, s, s2));
  CHECK(partial_orders_equal(g, s, s));
  const std::vector<int> none;
  CHECK(partial_order_holds(g, none, 0, 2));
}

TEST_CASE("partial orders differ for swapped columns") {
  ConstraintMatrix g{BinaryMatrix{{0, 1}, {1, 0}}, profiles(1, {"0", "1"})};
  const std::vector<int> s1{0};
  const std::vector<int> s2{1};
  // Hand oracle: under {1}, col1 >= col0 only; under {2}, col0 >= col1 only.
  CHECK(partial_order_holds(g, s1, 1, 0));
  CHECK_FALSE(partial_order_holds(g, s1, 0, 1));
  CHECK(partial_order_holds(g, s2, 0, 1));
  CHECK_FALSE(partial_orders_equal(g, s1, s2));
  CHECK_THROWS_AS(partial_order_holds(g, std::vector<int>{5}, 0, 1), IndexError);
}

TEST_CASE("constraint matrices of the nine-item three-attribute example") {
  const QMatrix q{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 0},
                  {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {1, 1, 1}};
  const ProfileSet a0 = induce_profile_set(Hierarchy(3, {{1, 2}, {2, 3}}));
  CHECK(a0 == profiles(3, {"000", "100", "110", "111"}));
  CHECK(constraint_matrix(q, a0).entries == BinaryMatrix{{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 0, 1},
                                                          {0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 0, 1},
                                                          {0, 0, 1, 1}, {0, 0, 0, 1}, {0, 0, 0, 1}});
  // Printed column order (010),(001),(101),(011); ours is ascending.
  const ProfileSet ac = a0.complement();
  CHECK(ac == profiles(3, {"001", "010", "011", "101"}));
  const ConstraintMatrix gc = constraint_matrix(q, ac);
  const std::vector<int> printed_order{1, 0, 3, 2};
  CHECK(gc.entries.select_columns(printed_order) ==
        BinaryMatrix{{0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 1, 1}, {0, 0, 0, 0}, {1, 0, 0, 1},
                     {0, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 0}});
}

TEST_CASE("ideal responses of the testability-vs-identifiability example") {
  const QMatrix q{{0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 1, 1}};
  const ProfileSet a0 = induce_profile_set(Hierarchy(3, {{1, 2}, {2, 3}}));
  const ConstraintMatrix g = ideal_response(q, a0, IdealRule::Dina);
  CHECK(g.entries == BinaryMatrix{{0, 0, 1, 1}, {0, 0, 0, 1}, {0, 0, 1, 1}, {0, 0, 0, 1}});
  const ConstraintMatrix gc = ideal_response(q, a0.complement(), IdealRule::Dina);
  const std::vector<int> printed_order{1, 0, 3, 2};
  CHECK(gc.entries.select_columns(printed_order) ==
        BinaryMatrix{{1, 0, 0, 1}, {0, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}});
}

TEST_CASE("DINO ideal response and DINA <= DINO") {
  const QMatrix q{{1, 1}};
  const ProfileSet a = profiles(2, {"10"});
  CHECK(ideal_response(q, a, IdealRule::Dina)(0, 0) == 0);
  CHECK(ideal_response(q, a, IdealRule::Dino)(0, 0) == 1);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const int K = 2 + t % 3;
    const QMatrix qq = random_q(K, 6, rng);
    const ProfileSet full = ProfileSet::full(K);
    const ConstraintMatrix dina = ideal_response(qq, full, IdealRule::Dina);
    const ConstraintMatrix dino = ideal_response(qq, full, IdealRule::Dino);
    CHECK(dina.entries == constraint_matrix(qq, full).entries);
    for (int j = 0; j < qq.J(); ++j) {
      for (int c = 0; c < full.size(); ++c) {
        // Direct enumeration oracle.
        bool all = true, any = false;
        for (int k = 0; k < K; ++k) {
          if (qq(j, k)) {
            all = all && has_attribute(full[c], K, k);
            any = any || has_attribute(full[c], K, k);
          }
        }
        CHECK(dina(j, c) == (all ? 1 : 0));
        CHECK(dino(j, c) == (any ? 1 : 0));
        CHECK(dina(j, c) <= dino(j, c));
      }
    }
  }
}

TEST_CASE("constraint matrix restricts columnwise and has a zero column for the empty profile") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const int K = 3;
    const QMatrix q = random_q(K, 7, rng);
    const Hierarchy h = random_dag(K, rng, 0.5);
    const ProfileSet a = induce_profile_set(h);
    const ConstraintMatrix full = constraint_matrix(q, ProfileSet::full(K));
    const ConstraintMatrix sub = constraint_matrix(q, a);
    for (int c = 0; c < a.size(); ++c) {
      const int fc = static_cast<int>(a[c]);
      for (int j = 0; j < q.J(); ++j) CHECK(sub(j, c) == full(j, fc));
    }
    for (int j = 0; j < q.J(); ++j) CHECK(sub(j, 0) == 0);
  }
}

TEST_CASE("partial orders are reflexive and transitive") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const QMatrix q = random_q(3, 6, rng);
    const ConstraintMatrix g = constraint_matrix(q, ProfileSet::full(3));
    std::vector<int> s;
    for (int j = 0; j < q.J(); ++j)
      if (rng() & 1) s.push_back(j);
    for (int a = 0; a < 8; ++a) {
      CHECK(partial_order_holds(g, s, a, a));
      for (int b = 0; b < 8; ++b)
        for (int c = 0; c < 8; ++c)
          if (partial_order_holds(g, s, a, b) && partial_order_holds(g, s, b, c)) {
            CHECK(partial_order_holds(g, s, a, c));
          }
    }
  }
}

TEST_CASE("QMatrix rejects empty rows") {
  CHECK_THROWS(QMatrix{{0, 0}});
}
