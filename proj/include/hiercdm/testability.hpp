#pragma once

// Sufficient-condition checkers for strict and generic testability of an
// attribute hierarchy given a Q-matrix. Every check returns a report listing
// each condition with a witness (on pass) or a counterexample (on failure).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hiercdm/qmatrix.hpp"

namespace hiercdm {

enum class Verdict { Satisfied, Violated, Inconclusive };
enum class ConditionStatus { Pass, Fail, Unknown };

std::string to_string(Verdict v);
std::string to_string(ConditionStatus s);

/// Witness JSON uses 1-based item and attribute labels, profiles as bit
/// strings.
struct ConditionResult {
  std::string id;
  ConditionStatus status = ConditionStatus::Unknown;
  nlohmann::json witness;
  std::string note;
};

/// Certificate for the general-CDM strict conditions: two disjoint item
/// sets with equal induced orders and, per comparable profile pair, an
/// outside item separating them. Indices are 0-based.
struct SeparatorWitness {
  int better = 0;  // column index into the null profile set
  int worse = 0;
  int item = 0;
};

struct GeneralCertificate {
  std::vector<int> s1;
  std::vector<int> s2;
  std::vector<SeparatorWitness> separators;
};

/// Certificate for the generic conditions: two disjoint row blocks, each
/// with a row -> attribute bijection on q = 1, plus rows outside both blocks
/// that cover every attribute. Indices are 0-based.
struct MatchingCertificate {
  std::vector<int> block1_rows;   // block1_rows[k] is matched to attribute k
  std::vector<int> block2_rows;
  std::vector<int> cover_rows;    // cover_rows[k] is an outside row with q_{j,k} = 1
};

struct TestabilityReport {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<ConditionResult> conditions;
  bool search_budget_hit = false;
  std::optional<GeneralCertificate> general_certificate;
  std::optional<MatchingCertificate> matching_certificate;

  const ConditionResult* find(const std::string& id) const;
};

nlohmann::json to_json(const TestabilityReport& report);

struct SeparationResult {
  bool separated = true;
  /// First (alpha in A0, alpha' in the complement) with equal constraint
  /// columns, scanning both sets in canonical order.
  std::optional<std::pair<ProfileCode, ProfileCode>> violating_pair;
};

/// Every constraint column of A0 differs from every column of its complement.
SeparationResult profile_separation(const QMatrix& q, const ProfileSet& a0);

/// DINA strict testability: identity submatrix, three ones per column of the
/// sparsified Q, and K distinct columns in the densified remainder.
TestabilityReport check_dina_strict(const QMatrix& q, const Hierarchy& h);

/// DINA testability of the edges in `subset` given the rest of h0.
TestabilityReport check_dina_conditional(const QMatrix& q, const Hierarchy& h0,
                                         const std::vector<Edge>& subset);

struct GeneralSearchLimits {
  /// Largest item-set size tried for S1 and S2; 0 selects K + 2.
  int max_set_size = 0;
  /// Global budget on enumerated candidate sets plus examined pairs.
  std::int64_t pair_budget = 1'000'000;
};

/// General-CDM strict testability with a bounded certificate search.
TestabilityReport check_general_strict(const QMatrix& q, const Hierarchy& h,
                                       GeneralSearchLimits limits = {});

/// General-CDM generic testability, solved exactly by bipartite matching.
TestabilityReport check_general_generic(const QMatrix& q, const Hierarchy& h);

/// Independent re-check of a general-strict certificate against the
/// conditions it claims. Returns an empty string when valid, else the reason.
std::string verify_general_certificate(const QMatrix& q, const Hierarchy& h,
                                       const GeneralCertificate& cert);

/// Independent re-check of a matching certificate.
std::string verify_matching_certificate(const QMatrix& q, const MatchingCertificate& cert);

}  // namespace hiercdm
