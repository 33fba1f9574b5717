#pragma once

// Q-matrices, attribute hierarchies, profile sets and the binary matrices
// derived from them.
//
// Attribute profiles are stored as integer codes with attribute 1 in the most
// significant of the K low bits, so ascending code order is the canonical
// profile order, e.g. for K = 3 the profile (1,0,1) has code 0b101 = 5.
// Item indices in this API are 0-based; attribute indices inside hierarchy
// edges are 1-based to match the file formats.

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hiercdm {

using ProfileCode = std::uint32_t;

/// Largest K for which 2^K profiles are enumerated.
inline constexpr int kMaxEnumerableK = 20;

/// Bit of attribute k (0-based) inside a K-attribute profile code.
constexpr ProfileCode attribute_bit(int K, int k) { return ProfileCode{1} << (K - 1 - k); }

constexpr bool has_attribute(ProfileCode code, int K, int k) {
  return (code & attribute_bit(K, k)) != 0;
}

/// True iff `a` possesses every attribute of `b` (componentwise a >= b).
constexpr bool dominates(ProfileCode a, ProfileCode b) { return (a & b) == b; }

std::string profile_string(ProfileCode code, int K);
ProfileCode parse_profile(const std::string& bits);

/// Dense row-major 0/1 matrix.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(int rows, int cols);
  BinaryMatrix(std::initializer_list<std::initializer_list<int>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::uint8_t operator()(int r, int c) const { return data_[index(r, c)]; }
  std::uint8_t& operator()(int r, int c) { return data_[index(r, c)]; }
  std::vector<std::uint8_t> column(int c) const;
  std::span<const std::uint8_t> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  /// Columns reordered as `order` (each entry an existing column index).
  BinaryMatrix select_columns(std::span<const int> order) const;

  bool operator==(const BinaryMatrix&) const = default;

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> data_;
};

/// J x K structural matrix; every row requires at least one attribute.
class QMatrix {
 public:
  QMatrix() = default;
  explicit QMatrix(BinaryMatrix entries);
  QMatrix(std::initializer_list<std::initializer_list<int>> rows);
  static QMatrix from_row_masks(int K, std::vector<ProfileCode> masks);

  int J() const { return static_cast<int>(masks_.size()); }
  int K() const { return K_; }
  int operator()(int j, int k) const { return has_attribute(masks_[j], K_, k) ? 1 : 0; }
  /// Row j as a profile code (the required-attribute pattern q_j).
  ProfileCode row_mask(int j) const { return masks_[j]; }
  const std::vector<ProfileCode>& row_masks() const { return masks_; }
  /// 0-based attribute indices required by item j, ascending.
  std::vector<int> required_attributes(int j) const;
  BinaryMatrix to_binary() const;
  /// Submatrix of the given rows, in the given order.
  QMatrix select_rows(std::span<const int> rows) const;

  bool operator==(const QMatrix&) const = default;

 private:
  int K_ = 0;
  std::vector<ProfileCode> masks_;
};

/// Prerequisite relation k -> l (1-based attribute indices).
struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Attribute hierarchy: a DAG of prerequisite edges over K attributes.
class Hierarchy {
 public:
  Hierarchy() = default;
  /// Throws IndexError for out-of-range endpoints and CycleError for cycles.
  /// Duplicate edges are removed.
  Hierarchy(int K, std::vector<Edge> edges);

  int K() const { return K_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool empty() const { return edges_.empty(); }
  /// Mask of every attribute that must be present when attribute l
  /// (0-based) is present, following edges transitively.
  ProfileCode prerequisites(int l) const { return prereq_[l]; }
  bool respects(ProfileCode profile) const;
  bool contains(const Edge& e) const;

  bool operator==(const Hierarchy&) const = default;

 private:
  int K_ = 0;
  std::vector<Edge> edges_;
  std::vector<ProfileCode> prereq_;
};

Hierarchy validate_hierarchy(int K, std::vector<Edge> edges);
Hierarchy transitive_closure(const Hierarchy& h);

/// Distinct profiles over K attributes, kept in canonical (ascending) order.
class ProfileSet {
 public:
  ProfileSet() = default;
  ProfileSet(int K, std::vector<ProfileCode> codes);
  static ProfileSet full(int K);

  int K() const { return K_; }
  int size() const { return static_cast<int>(codes_.size()); }
  bool empty() const { return codes_.empty(); }
  ProfileCode operator[](int i) const { return codes_[i]; }
  const std::vector<ProfileCode>& codes() const { return codes_; }
  std::optional<int> index_of(ProfileCode code) const;
  bool contains(ProfileCode code) const { return index_of(code).has_value(); }
  bool is_subset_of(const ProfileSet& other) const;
  /// All profiles over K attributes that are not in this set.
  ProfileSet complement() const;

  bool operator==(const ProfileSet&) const = default;

 private:
  int K_ = 0;
  std::vector<ProfileCode> codes_;
};

ProfileSet induce_profile_set(const Hierarchy& h, int max_k = kMaxEnumerableK);

/// Definition-1 sparsification over the transitive closure of h: every
/// prerequisite of a required attribute is cleared.
QMatrix sparsify(const QMatrix& q, const Hierarchy& h);
/// Definition-2 densification over the transitive closure of h: every
/// prerequisite of a required attribute is set.
QMatrix densify(const QMatrix& q, const Hierarchy& h);

/// Gamma_{j,a} = I(profile a possesses all attributes required by item j).
struct ConstraintMatrix {
  BinaryMatrix entries;
  ProfileSet profiles;

  int J() const { return entries.rows(); }
  int columns() const { return entries.cols(); }
  std::uint8_t operator()(int j, int a) const { return entries(j, a); }
};

enum class IdealRule { Dina, Dino };

ConstraintMatrix constraint_matrix(const QMatrix& q, const ProfileSet& a);
ConstraintMatrix ideal_response(const QMatrix& q, const ProfileSet& a, IdealRule rule);

/// a >=_S b under g: g(j,a) >= g(j,b) for every item j in S.
bool partial_order_holds(const ConstraintMatrix& g, std::span<const int> items, int a, int b);
/// True iff >=_{s1} and >=_{s2} agree on every ordered column pair.
bool partial_orders_equal(const ConstraintMatrix& g, std::span<const int> s1, std::span<const int> s2);

}  // namespace hiercdm
