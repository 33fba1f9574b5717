#include "hiercdm/testability.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "hiercdm/errors.hpp"

namespace hiercdm {

using nlohmann::json;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied: return "Satisfied";
    case Verdict::Violated: return "Violated";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

std::string to_string(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::Pass: return "pass";
    case ConditionStatus::Fail: return "fail";
    case ConditionStatus::Unknown: return "unknown";
  }
  return "?";
}

const ConditionResult* TestabilityReport::find(const std::string& id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

json to_json(const TestabilityReport& report) {
  json conds = json::array();
  for (const auto& c : report.conditions) {
    json entry = {{"id", c.id}, {"status", to_string(c.status)}, {"witness", c.witness}};
    if (!c.note.empty()) entry["note"] = c.note;
    conds.push_back(std::move(entry));
  }
  return {{"verdict", to_string(report.verdict)},
          {"conditions", std::move(conds)},
          {"search_budget_hit", report.search_budget_hit}};
}

namespace {

json one_based(const std::vector<int>& idx) {
  json out = json::array();
  for (int i : idx) out.push_back(i + 1);
  return out;
}

void finalize(TestabilityReport& r) {
  bool any_fail = false;
  bool any_unknown = false;
  for (const auto& c : r.conditions) {
    any_fail |= c.status == ConditionStatus::Fail;
    any_unknown |= c.status == ConditionStatus::Unknown;
  }
  r.verdict = any_fail ? Verdict::Violated : any_unknown ? Verdict::Inconclusive : Verdict::Satisfied;
}

void require_same_k(const QMatrix& q, const Hierarchy& h) {
  if (q.K() != h.K()) {
    throw DimensionMismatch("Q has K = " + std::to_string(q.K()) + " but the hierarchy has K = " +
                            std::to_string(h.K()));
  }
}

// First row equal to the unit vector of each attribute, or -1.
std::vector<int> first_unit_rows(const QMatrix& q) {
  std::vector<int> rows(static_cast<std::size_t>(q.K()), -1);
  for (int k = 0; k < q.K(); ++k) {
    const ProfileCode unit = attribute_bit(q.K(), k);
    for (int j = 0; j < q.J(); ++j) {
      if (q.row_mask(j) == unit) {
        rows[k] = j;
        break;
      }
    }
  }
  return rows;
}

ConditionResult identity_condition(const std::string& id, const std::vector<int>& unit_rows) {
  ConditionResult c{id, ConditionStatus::Pass, json::object(), ""};
  std::vector<int> missing;
  json rows = json::array();
  for (std::size_t k = 0; k < unit_rows.size(); ++k) {
    if (unit_rows[k] < 0) {
      missing.push_back(static_cast<int>(k));
      rows.push_back(nullptr);
    } else {
      rows.push_back(unit_rows[k] + 1);
    }
  }
  c.witness["identity_rows"] = rows;
  if (!missing.empty()) {
    c.status = ConditionStatus::Fail;
    c.witness["missing_attributes"] = one_based(missing);
  }
  return c;
}

// Sparsified Q has at least three ones in every column.
ConditionResult three_ones_condition(const QMatrix& sparse) {
  ConditionResult c{"2", ConditionStatus::Pass, json::object(), ""};
  std::vector<int> counts(static_cast<std::size_t>(sparse.K()), 0);
  for (int j = 0; j < sparse.J(); ++j) {
    for (int k = 0; k < sparse.K(); ++k) counts[k] += sparse(j, k);
  }
  std::vector<int> short_cols;
  for (int k = 0; k < sparse.K(); ++k) {
    if (counts[k] < 3) short_cols.push_back(k);
  }
  c.witness["column_ones"] = counts;
  if (!short_cols.empty()) {
    c.status = ConditionStatus::Fail;
    c.witness["deficient_attributes"] = one_based(short_cols);
  }
  return c;
}

// Densified remainder (Q minus `removed` rows) has K distinct columns.
ConditionResult distinct_columns_condition(const QMatrix& q, const Hierarchy& h, const std::vector<int>& removed) {
  ConditionResult c{"3", ConditionStatus::Pass, json::object(), ""};
  std::vector<int> keep;
  for (int j = 0; j < q.J(); ++j) {
    if (std::find(removed.begin(), removed.end(), j) == removed.end()) keep.push_back(j);
  }
  c.witness["remainder_rows"] = one_based(keep);
  std::vector<std::vector<std::uint8_t>> cols(static_cast<std::size_t>(q.K()));
  if (!keep.empty()) {
    const QMatrix dense = densify(q.select_rows(keep), h);
    for (int k = 0; k < q.K(); ++k) {
      for (int j = 0; j < dense.J(); ++j) cols[k].push_back(static_cast<std::uint8_t>(dense(j, k)));
    }
  }
  for (int a = 0; a < q.K(); ++a) {
    for (int b = a + 1; b < q.K(); ++b) {
      if (cols[a] == cols[b]) {
        c.status = ConditionStatus::Fail;
        c.witness["equal_columns"] = {a + 1, b + 1};
        return c;
      }
    }
  }
  return c;
}

ConditionResult separation_condition(const QMatrix& q, const ProfileSet& a0, const std::string& id) {
  ConditionResult c{id, ConditionStatus::Pass, json::object(), ""};
  const SeparationResult sep = profile_separation(q, a0);
  c.witness["separated"] = sep.separated;
  if (!sep.separated) {
    c.status = ConditionStatus::Fail;
    c.witness["null_profile"] = profile_string(sep.violating_pair->first, q.K());
    c.witness["excluded_profile"] = profile_string(sep.violating_pair->second, q.K());
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

SeparationResult profile_separation(const QMatrix& q, const ProfileSet& a0) {
  if (q.K() != a0.K()) throw DimensionMismatch("profile_separation: K mismatch");
  const ProfileSet comp = a0.complement();
  auto column_of = [&](ProfileCode alpha) {
    std::vector<std::uint8_t> col(static_cast<std::size_t>(q.J()));
    for (int j = 0; j < q.J(); ++j) col[j] = dominates(alpha, q.row_mask(j)) ? 1 : 0;
    return col;
  };
  std::map<std::vector<std::uint8_t>, ProfileCode> first_excluded;
  for (ProfileCode c : comp.codes()) first_excluded.emplace(column_of(c), c);
  SeparationResult out;
  for (ProfileCode a : a0.codes()) {
    auto it = first_excluded.find(column_of(a));
    if (it != first_excluded.end()) {
      out.separated = false;
      out.violating_pair = std::make_pair(a, it->second);
      return out;
    }
  }
  return out;
}

TestabilityReport check_dina_strict(const QMatrix& q, const Hierarchy& h) {
  require_same_k(q, h);
  TestabilityReport r;
  const std::vector<int> unit_rows = first_unit_rows(q);
  r.conditions.push_back(identity_condition("1", unit_rows));
  r.conditions.push_back(three_ones_condition(sparsify(q, h)));
  std::vector<int> removed;
  for (int j : unit_rows) {
    if (j >= 0) removed.push_back(j);
  }
  r.conditions.push_back(distinct_columns_condition(q, h, removed));
  finalize(r);
  return r;
}

TestabilityReport check_dina_conditional(const QMatrix& q, const Hierarchy& h0, const std::vector<Edge>& subset) {
  require_same_k(q, h0);
  for (const Edge& e : subset) {
    if (!h0.contains(e)) {
      throw NotASubset("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                       " is not in the null hierarchy");
    }
  }
  TestabilityReport r;
  const QMatrix sparse = sparsify(q, h0);
  const std::vector<int> sparse_units = first_unit_rows(sparse);
  ConditionResult c1 = identity_condition("1*", sparse_units);

  // Attributes touched by the tested edges need an item that targets only
  // them in the original Q.
  std::set<int> involved;
  for (const Edge& e : subset) {
    involved.insert(e.from - 1);
    involved.insert(e.to - 1);
  }
  const std::vector<int> q_units = first_unit_rows(q);
  json single = json::object();
  std::vector<int> lacking;
  for (int k : involved) {
    if (q_units[k] < 0) {
      lacking.push_back(k);
      single[std::to_string(k + 1)] = nullptr;
    } else {
      single[std::to_string(k + 1)] = q_units[k] + 1;
    }
  }
  c1.witness["single_attribute_rows"] = single;
  if (!lacking.empty()) {
    c1.status = ConditionStatus::Fail;
    c1.witness["attributes_without_single_item"] = one_based(lacking);
  }
  r.conditions.push_back(std::move(c1));
  r.conditions.push_back(three_ones_condition(sparse));
  std::vector<int> removed;
  for (int j : sparse_units) {
    if (j >= 0) removed.push_back(j);
  }
  r.conditions.push_back(distinct_columns_condition(q, h0, removed));
  finalize(r);
  return r;
}

// ---------------------------------------------------------------------------
// General strict testability: bounded search for (S1, S2).

namespace {

struct Candidate {
  std::vector<int> items;
  std::vector<std::uint64_t> relation;  // bit a*m+b set iff a >=_S b, a != b
};

class GeneralSearch {
 public:
  GeneralSearch(const ConstraintMatrix& g, int cap, std::int64_t budget)
      : g_(g), m_(g.columns()), cap_(cap), budget_(budget) {
    words_ = (static_cast<std::size_t>(m_) * m_ + 63) / 64;
  }

  std::optional<GeneralCertificate> run() {
    const int J = g_.J();
    int min_size = 0;
    while ((std::int64_t{1} << min_size) < m_) ++min_size;
    min_size = std::max(min_size, 1);
    if (min_size > cap_ || 2 * min_size > J) return std::nullopt;
    for (int total = 2 * min_size; total <= std::min(2 * cap_, J); ++total) {
      for (int a = min_size; 2 * a <= total; ++a) {
        const int b = total - a;
        if (b > cap_) continue;
        if (!ensure_size(a) || !ensure_size(b)) return std::nullopt;
        for (std::size_t i = 0; i < by_size_[a].size(); ++i) {
          const Candidate& s1 = by_size_[a][i];
          auto bucket = buckets_[b].find(s1.relation);
          if (bucket == buckets_[b].end()) continue;
          for (std::size_t idx : bucket->second) {
            if (a == b && idx <= i) continue;
            if (--budget_ < 0) {
              budget_hit_ = true;
              return std::nullopt;
            }
            const Candidate& s2 = by_size_[b][idx];
            if (auto cert = try_pair(s1, s2)) return cert;
          }
        }
      }
    }
    return std::nullopt;
  }

  bool budget_hit() const { return budget_hit_; }

 private:
  // Lazily enumerate all item sets of `size` with distinct restricted columns.
  bool ensure_size(int size) {
    if (by_size_.count(size)) return true;
    auto& list = by_size_[size];
    auto& bucket = buckets_[size];
    const int J = g_.J();
    std::vector<int> idx(static_cast<std::size_t>(size));
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::uint64_t> sig(static_cast<std::size_t>(m_));
    while (true) {
      if (--budget_ < 0) {
        budget_hit_ = true;
        return false;
      }
      for (int c = 0; c < m_; ++c) {
        std::uint64_t s = 0;
        for (int t = 0; t < size; ++t) s = (s << 1) | g_(idx[t], c);
        sig[c] = s;
      }
      std::vector<std::uint64_t> sorted(sig);
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) {
        Candidate cand{idx, std::vector<std::uint64_t>(words_, 0)};
        for (int a = 0; a < m_; ++a) {
          for (int b = 0; b < m_; ++b) {
            if (a != b && (sig[b] & ~sig[a]) == 0) {
              const std::size_t bit = static_cast<std::size_t>(a) * m_ + b;
              cand.relation[bit / 64] |= std::uint64_t{1} << (bit % 64);
            }
          }
        }
        bucket[cand.relation].push_back(list.size());
        list.push_back(std::move(cand));
      }
      // Next combination in lexicographic order.
      int t = size - 1;
      while (t >= 0 && idx[t] == J - size + t) --t;
      if (t < 0) break;
      ++idx[t];
      for (int u = t + 1; u < size; ++u) idx[u] = idx[u - 1] + 1;
    }
    return true;
  }

  std::optional<GeneralCertificate> try_pair(const Candidate& s1, const Candidate& s2) const {
    std::vector<char> used(static_cast<std::size_t>(g_.J()), 0);
    for (int j : s1.items) used[j] = 1;
    for (int j : s2.items) {
      if (used[j]) return std::nullopt;
      used[j] = 1;
    }
    GeneralCertificate cert{s1.items, s2.items, {}};
    for (int a = 0; a < m_; ++a) {
      for (int b = 0; b < m_; ++b) {
        const std::size_t bit = static_cast<std::size_t>(a) * m_ + b;
        if (!((s1.relation[bit / 64] >> (bit % 64)) & 1)) continue;
        int sep = -1;
        for (int j = 0; j < g_.J(); ++j) {
          if (!used[j] && g_(j, a) != g_(j, b)) {
            sep = j;
            break;
          }
        }
        if (sep < 0) return std::nullopt;
        cert.separators.push_back({a, b, sep});
      }
    }
    return cert;
  }

  const ConstraintMatrix& g_;
  int m_;
  int cap_;
  std::int64_t budget_;
  std::size_t words_ = 0;
  bool budget_hit_ = false;
  std::map<int, std::vector<Candidate>> by_size_;
  std::map<int, std::map<std::vector<std::uint64_t>, std::vector<std::size_t>>> buckets_;
};

}  // namespace

TestabilityReport check_general_strict(const QMatrix& q, const Hierarchy& h, GeneralSearchLimits limits) {
  require_same_k(q, h);
  int cap = limits.max_set_size == 0 ? q.K() + 2 : limits.max_set_size;
  if (cap < q.K()) throw std::invalid_argument("set-size cap must be at least K");
  cap = std::min({cap, q.J(), 63});

  const ProfileSet a0 = induce_profile_set(h);
  const ConstraintMatrix g = constraint_matrix(q, a0);
  GeneralSearch search(g, cap, limits.pair_budget);
  const auto cert = search.run();

  TestabilityReport r;
  r.search_budget_hit = search.budget_hit();
  ConditionResult c1{"1", ConditionStatus::Unknown, json::object(), ""};
  ConditionResult c2{"2", ConditionStatus::Unknown, json::object(), ""};
  if (cert) {
    c1.status = ConditionStatus::Pass;
    c1.witness = {{"S1", one_based(cert->s1)}, {"S2", one_based(cert->s2)}};
    c2.status = ConditionStatus::Pass;
    json seps = json::array();
    for (const auto& s : cert->separators) {
      seps.push_back({{"better", profile_string(a0[s.better], q.K())},
                      {"worse", profile_string(a0[s.worse], q.K())},
                      {"item", s.item + 1}});
    }
    c2.witness = {{"separators", std::move(seps)}};
    r.general_certificate = cert;
  } else {
    const std::string why = search.budget_hit()
                                ? "search budget exhausted before a certificate was found"
                                : "no certificate with item sets of size <= " + std::to_string(cap);
    c1.note = why;
    c2.note = why;
  }
  r.conditions.push_back(std::move(c1));
  r.conditions.push_back(std::move(c2));
  r.conditions.push_back(separation_condition(q, a0, "3"));
  finalize(r);
  return r;
}

std::string verify_general_certificate(const QMatrix& q, const Hierarchy& h, const GeneralCertificate& cert) {
  const ProfileSet a0 = induce_profile_set(h);
  const int m = a0.size();
  // Rebuild the constraint matrix directly from the definition.
  auto gamma = [&](int j, int a) { return dominates(a0[a], q.row_mask(j)) ? 1 : 0; };
  std::set<int> s1(cert.s1.begin(), cert.s1.end());
  std::set<int> s2(cert.s2.begin(), cert.s2.end());
  if (s1.size() != cert.s1.size() || s2.size() != cert.s2.size()) return "duplicate items in a set";
  for (int j : s1) {
    if (j < 0 || j >= q.J()) return "item out of range";
    if (s2.count(j)) return "S1 and S2 overlap";
  }
  for (int j : s2) {
    if (j < 0 || j >= q.J()) return "item out of range";
  }
  auto geq = [&](const std::set<int>& s, int a, int b) {
    for (int j : s) {
      if (gamma(j, a) < gamma(j, b)) return false;
    }
    return true;
  };
  for (const auto* s : {&s1, &s2}) {
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        bool same = true;
        for (int j : *s) same &= gamma(j, a) == gamma(j, b);
        if (same) return "restricted columns are not distinct";
      }
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (geq(s1, a, b) != geq(s2, a, b)) return "induced orders differ";
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (a == b || !geq(s1, a, b)) continue;
      const auto it = std::find_if(cert.separators.begin(), cert.separators.end(),
                                   [&](const SeparatorWitness& s) { return s.better == a && s.worse == b; });
      if (it == cert.separators.end()) return "comparable pair without separator";
      if (it->item < 0 || it->item >= q.J() || s1.count(it->item) || s2.count(it->item)) {
        return "separator item must lie outside S1 and S2";
      }
      if (gamma(it->item, a) == gamma(it->item, b)) return "separator does not separate";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Generic testability via capacity-2 bipartite matching.

namespace {

// Assigns two distinct rows to every attribute (rows used at most once),
// skipping rows marked in `excluded`. Kuhn's augmenting paths over slots in
// attribute order, rows ascending. Returns slot -> row, or empty.
std::vector<int> double_matching(const QMatrix& q, const std::vector<char>& excluded) {
  const int K = q.K();
  const int slots = 2 * K;
  std::vector<int> row_to_slot(static_cast<std::size_t>(q.J()), -1);
  std::vector<int> slot_to_row(static_cast<std::size_t>(slots), -1);
  std::vector<char> visited;

  auto augment = [&](auto&& self, int slot) -> bool {
    const int k = slot / 2;
    for (int j = 0; j < q.J(); ++j) {
      if (excluded[j] || visited[j] || !q(j, k)) continue;
      visited[j] = 1;
      if (row_to_slot[j] < 0 || self(self, row_to_slot[j])) {
        row_to_slot[j] = slot;
        slot_to_row[slot] = j;
        return true;
      }
    }
    return false;
  };

  for (int s = 0; s < slots; ++s) {
    visited.assign(static_cast<std::size_t>(q.J()), 0);
    if (!augment(augment, s)) return {};
  }
  return slot_to_row;
}

// Reserve, per uncovered attribute, one row outside the blocks, keeping a
// double matching feasible on the remaining rows. Exhaustive with pruning.
bool reserve_covers(const QMatrix& q, int k, std::vector<char>& reserved) {
  if (k == q.K()) return true;
  for (int j = 0; j < q.J(); ++j) {
    if (reserved[j] && q(j, k)) return reserve_covers(q, k + 1, reserved);
  }
  for (int j = 0; j < q.J(); ++j) {
    if (reserved[j] || !q(j, k)) continue;
    reserved[j] = 1;
    if (!double_matching(q, reserved).empty() && reserve_covers(q, k + 1, reserved)) return true;
    reserved[j] = 0;
  }
  return false;
}

MatchingCertificate certificate_from(const QMatrix& q, const std::vector<int>& slot_to_row) {
  MatchingCertificate cert;
  std::vector<char> in_block(static_cast<std::size_t>(q.J()), 0);
  for (int k = 0; k < q.K(); ++k) {
    const int r0 = slot_to_row[2 * k];
    const int r1 = slot_to_row[2 * k + 1];
    cert.block1_rows.push_back(std::min(r0, r1));
    cert.block2_rows.push_back(std::max(r0, r1));
    in_block[r0] = in_block[r1] = 1;
  }
  for (int k = 0; k < q.K(); ++k) {
    int cover = -1;
    for (int j = 0; j < q.J(); ++j) {
      if (!in_block[j] && q(j, k)) {
        cover = j;
        break;
      }
    }
    cert.cover_rows.push_back(cover);
  }
  return cert;
}

json block_json(const std::vector<int>& rows) {
  json out = json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.push_back({{"row", rows[k] + 1}, {"attribute", static_cast<int>(k) + 1}});
  }
  return out;
}

}  // namespace

TestabilityReport check_general_generic(const QMatrix& q, const Hierarchy& h) {
  require_same_k(q, h);
  TestabilityReport r;
  ConditionResult c1{"1", ConditionStatus::Fail, json::object(), ""};
  ConditionResult c2{"2", ConditionStatus::Fail, json::object(), ""};

  const std::vector<char> none(static_cast<std::size_t>(q.J()), 0);
  const std::vector<int> plain = double_matching(q, none);
  if (plain.empty()) {
    c1.note = "no two disjoint row blocks with a unit diagonal exist";
    c2.note = "not evaluated: condition 1 fails";
  } else {
    std::vector<char> reserved(none);
    const bool ok = reserve_covers(q, 0, reserved);
    const std::vector<int> slots = ok ? double_matching(q, reserved) : plain;
    MatchingCertificate cert = certificate_from(q, slots);
    c1.status = ConditionStatus::Pass;
    c1.witness = {{"Q1", block_json(cert.block1_rows)}, {"Q2", block_json(cert.block2_rows)}};
    std::vector<int> sums(static_cast<std::size_t>(q.K()), 0);
    std::vector<char> in_block(static_cast<std::size_t>(q.J()), 0);
    for (int k = 0; k < q.K(); ++k) in_block[cert.block1_rows[k]] = in_block[cert.block2_rows[k]] = 1;
    for (int j = 0; j < q.J(); ++j) {
      if (in_block[j]) continue;
      for (int k = 0; k < q.K(); ++k) sums[k] += q(j, k);
    }
    c2.witness["remaining_column_sums"] = sums;
    if (ok) {
      c2.status = ConditionStatus::Pass;
      c2.witness["cover_rows"] = one_based(cert.cover_rows);
      r.matching_certificate = std::move(cert);
    } else {
      c2.note = "every choice of the two blocks leaves some attribute uncovered";
    }
  }
  r.conditions.push_back(std::move(c1));
  r.conditions.push_back(std::move(c2));
  r.conditions.push_back(separation_condition(q, induce_profile_set(h), "3"));
  finalize(r);
  return r;
}

std::string verify_matching_certificate(const QMatrix& q, const MatchingCertificate& cert) {
  const int K = q.K();
  if (static_cast<int>(cert.block1_rows.size()) != K || static_cast<int>(cert.block2_rows.size()) != K ||
      static_cast<int>(cert.cover_rows.size()) != K) {
    return "certificate has the wrong number of rows";
  }
  std::set<int> used;
  for (const auto* block : {&cert.block1_rows, &cert.block2_rows}) {
    for (int k = 0; k < K; ++k) {
      const int j = (*block)[k];
      if (j < 0 || j >= q.J()) return "row out of range";
      if (!used.insert(j).second) return "row used twice across blocks";
      if (!q(j, k)) return "block diagonal entry is zero";
    }
  }
  for (int k = 0; k < K; ++k) {
    const int j = cert.cover_rows[k];
    if (j < 0 || j >= q.J()) return "cover row out of range";
    if (used.count(j)) return "cover row lies inside a block";
    if (!q(j, k)) return "cover row does not require its attribute";
  }
  return {};
}

}  // namespace hiercdm
