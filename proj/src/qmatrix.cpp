#include "hiercdm/qmatrix.hpp"

#include <algorithm>
#include <sstream>

#include "hiercdm/errors.hpp"

namespace hiercdm {

std::string profile_string(ProfileCode code, int K) {
  std::string s(static_cast<std::size_t>(K), '0');
  for (int k = 0; k < K; ++k) {
    if (has_attribute(code, K, k)) s[k] = '1';
  }
  return s;
}

ProfileCode parse_profile(const std::string& bits) {
  const int K = static_cast<int>(bits.size());
  if (K == 0 || K > 31) throw Error("profile string must have 1..31 bits: '" + bits + "'");
  ProfileCode code = 0;
  for (int k = 0; k < K; ++k) {
    if (bits[k] == '1') {
      code |= attribute_bit(K, k);
    } else if (bits[k] != '0') {
      throw Error("profile string must contain only 0/1: '" + bits + "'");
    }
  }
  return code;
}

// ---------------------------------------------------------------------------
// BinaryMatrix

BinaryMatrix::BinaryMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0) {
  if (rows < 0 || cols < 0) throw DimensionMismatch("negative matrix dimension");
}

BinaryMatrix::BinaryMatrix(std::initializer_list<std::initializer_list<int>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
  data_.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) throw DimensionMismatch("ragged matrix literal");
    for (int v : r) {
      if (v != 0 && v != 1) throw Error("binary matrix entries must be 0 or 1");
      data_.push_back(static_cast<std::uint8_t>(v));
    }
  }
}

std::vector<std::uint8_t> BinaryMatrix::column(int c) const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(rows_));
  for (int r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

BinaryMatrix BinaryMatrix::select_columns(std::span<const int> order) const {
  BinaryMatrix out(rows_, static_cast<int>(order.size()));
  for (int c = 0; c < out.cols(); ++c) {
    if (order[c] < 0 || order[c] >= cols_) throw IndexError("column index out of range");
    for (int r = 0; r < rows_; ++r) out(r, c) = (*this)(r, order[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// QMatrix

QMatrix::QMatrix(BinaryMatrix entries) {
  if (entries.rows() < 1 || entries.cols() < 1) {
    throw DimensionMismatch("Q-matrix needs J >= 1 and K >= 1");
  }
  if (entries.cols() > 31) throw KTooLarge("Q-matrix supports at most 31 attributes");
  K_ = entries.cols();
  masks_.resize(static_cast<std::size_t>(entries.rows()));
  for (int j = 0; j < entries.rows(); ++j) {
    ProfileCode m = 0;
    for (int k = 0; k < K_; ++k) {
      if (entries(j, k) > 1) throw Error("Q-matrix entries must be 0 or 1");
      if (entries(j, k)) m |= attribute_bit(K_, k);
    }
    if (m == 0) throw Error("Q-matrix row " + std::to_string(j + 1) + " requires no attribute");
    masks_[j] = m;
  }
}

QMatrix::QMatrix(std::initializer_list<std::initializer_list<int>> rows)
    : QMatrix(BinaryMatrix(rows)) {}

QMatrix QMatrix::from_row_masks(int K, std::vector<ProfileCode> masks) {
  if (K < 1 || K > 31 || masks.empty()) throw DimensionMismatch("Q-matrix needs J >= 1 and K in 1..31");
  const ProfileCode all = (ProfileCode{1} << K) - 1;
  for (std::size_t j = 0; j < masks.size(); ++j) {
    if (masks[j] == 0 || (masks[j] & ~all) != 0) {
      throw Error("invalid Q-matrix row " + std::to_string(j + 1));
    }
  }
  QMatrix q;
  q.K_ = K;
  q.masks_ = std::move(masks);
  return q;
}

std::vector<int> QMatrix::required_attributes(int j) const {
  std::vector<int> out;
  for (int k = 0; k < K_; ++k) {
    if (has_attribute(masks_[j], K_, k)) out.push_back(k);
  }
  return out;
}

BinaryMatrix QMatrix::to_binary() const {
  BinaryMatrix out(J(), K_);
  for (int j = 0; j < J(); ++j) {
    for (int k = 0; k < K_; ++k) out(j, k) = static_cast<std::uint8_t>((*this)(j, k));
  }
  return out;
}

QMatrix QMatrix::select_rows(std::span<const int> rows) const {
  std::vector<ProfileCode> masks;
  masks.reserve(rows.size());
  for (int r : rows) {
    if (r < 0 || r >= J()) throw IndexError("row index out of range");
    masks.push_back(masks_[r]);
  }
  return from_row_masks(K_, std::move(masks));
}

// ---------------------------------------------------------------------------
// Hierarchy

namespace {

// Returns one directed cycle (as 1-based attribute labels) or empty.
std::vector<int> find_cycle(int K, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(K));
  for (const Edge& e : edges) adj[e.from - 1].push_back(e.to - 1);
  std::vector<int> color(static_cast<std::size_t>(K), 0);
  std::vector<int> parent(static_cast<std::size_t>(K), -1);
  std::vector<int> cycle;

  // Iterative DFS so deep chains do not blow the stack.
  for (int root = 0; root < K && cycle.empty(); ++root) {
    if (color[root] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty() && cycle.empty()) {
      auto& [v, next] = stack.back();
      if (next < adj[v].size()) {
        const int w = adj[v][next++];
        if (color[w] == 0) {
          color[w] = 1;
          parent[w] = v;
          stack.emplace_back(w, 0);
        } else if (color[w] == 1) {
          for (int x = v; x != w; x = parent[x]) cycle.push_back(x + 1);
          cycle.push_back(w + 1);
          std::reverse(cycle.begin(), cycle.end());
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
  return cycle;
}

}  // namespace

Hierarchy::Hierarchy(int K, std::vector<Edge> edges) : K_(K) {
  if (K < 1) throw IndexError("hierarchy needs K >= 1");
  if (K > 31) throw KTooLarge("hierarchy supports at most 31 attributes");
  for (const Edge& e : edges) {
    if (e.from < 1 || e.from > K || e.to < 1 || e.to > K) {
      throw IndexError("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                       " has an endpoint outside [1," + std::to_string(K) + "]");
    }
    if (e.from == e.to) throw CycleError("self-loop on attribute " + std::to_string(e.from));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (auto cycle = find_cycle(K, edges); !cycle.empty()) {
    std::ostringstream msg;
    msg << "hierarchy contains a cycle: ";
    for (int v : cycle) msg << v << " -> ";
    msg << cycle.front();
    throw CycleError(msg.str());
  }
  edges_ = std::move(edges);

  // Reachability by repeated relaxation; K is small.
  std::vector<ProfileCode> direct(static_cast<std::size_t>(K), 0);
  for (const Edge& e : edges_) direct[e.to - 1] |= attribute_bit(K, e.from - 1);
  prereq_ = direct;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int l = 0; l < K; ++l) {
      ProfileCode m = prereq_[l];
      for (int k = 0; k < K; ++k) {
        if (has_attribute(prereq_[l], K, k)) m |= prereq_[k];
      }
      if (m != prereq_[l]) {
        prereq_[l] = m;
        changed = true;
      }
    }
  }
}

bool Hierarchy::respects(ProfileCode profile) const {
  for (int l = 0; l < K_; ++l) {
    if (has_attribute(profile, K_, l) && !dominates(profile, prereq_[l])) return false;
  }
  return true;
}

bool Hierarchy::contains(const Edge& e) const {
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

Hierarchy validate_hierarchy(int K, std::vector<Edge> edges) { return Hierarchy(K, std::move(edges)); }

Hierarchy transitive_closure(const Hierarchy& h) {
  std::vector<Edge> edges;
  for (int l = 0; l < h.K(); ++l) {
    for (int k = 0; k < h.K(); ++k) {
      if (has_attribute(h.prerequisites(l), h.K(), k)) edges.push_back({k + 1, l + 1});
    }
  }
  return Hierarchy(h.K(), std::move(edges));
}

// ---------------------------------------------------------------------------
// ProfileSet

ProfileSet::ProfileSet(int K, std::vector<ProfileCode> codes) : K_(K), codes_(std::move(codes)) {
  if (K < 1 || K > 31) throw KTooLarge("profile sets support 1..31 attributes");
  const ProfileCode all = (ProfileCode{1} << K) - 1;
  for (ProfileCode c : codes_) {
    if ((c & ~all) != 0) throw IndexError("profile code does not fit in K bits");
  }
  std::sort(codes_.begin(), codes_.end());
  if (std::adjacent_find(codes_.begin(), codes_.end()) != codes_.end()) {
    throw Error("profile set contains duplicate profiles");
  }
}

ProfileSet ProfileSet::full(int K) {
  if (K > kMaxEnumerableK) throw KTooLarge("K exceeds the enumeration cap");
  std::vector<ProfileCode> codes(std::size_t{1} << K);
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<ProfileCode>(i);
  return ProfileSet(K, std::move(codes));
}

std::optional<int> ProfileSet::index_of(ProfileCode code) const {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
  if (it == codes_.end() || *it != code) return std::nullopt;
  return static_cast<int>(it - codes_.begin());
}

bool ProfileSet::is_subset_of(const ProfileSet& other) const {
  return K_ == other.K_ && std::includes(other.codes_.begin(), other.codes_.end(), codes_.begin(), codes_.end());
}

ProfileSet ProfileSet::complement() const {
  if (K_ > kMaxEnumerableK) throw KTooLarge("K exceeds the enumeration cap");
  std::vector<ProfileCode> out;
  const ProfileCode n = ProfileCode{1} << K_;
  for (ProfileCode c = 0; c < n; ++c) {
    if (!std::binary_search(codes_.begin(), codes_.end(), c)) out.push_back(c);
  }
  return ProfileSet(K_, std::move(out));
}

ProfileSet induce_profile_set(const Hierarchy& h, int max_k) {
  if (h.K() > max_k) {
    throw KTooLarge("K = " + std::to_string(h.K()) + " exceeds the profile enumeration cap " +
                    std::to_string(max_k));
  }
  std::vector<ProfileCode> codes;
  const ProfileCode n = ProfileCode{1} << h.K();
  for (ProfileCode c = 0; c < n; ++c) {
    if (h.respects(c)) codes.push_back(c);
  }
  return ProfileSet(h.K(), std::move(codes));
}

// ---------------------------------------------------------------------------
// Q-matrix transforms

namespace {

void require_same_k(const QMatrix& q, int K, const char* what) {
  if (q.K() != K) {
    throw DimensionMismatch(std::string(what) + ": Q has K = " + std::to_string(q.K()) +
                            " but the other argument has K = " + std::to_string(K));
  }
}

ProfileCode closed_prerequisites(ProfileCode row, const Hierarchy& h) {
  ProfileCode m = 0;
  for (int l = 0; l < h.K(); ++l) {
    if (has_attribute(row, h.K(), l)) m |= h.prerequisites(l);
  }
  return m;
}

}  // namespace

QMatrix sparsify(const QMatrix& q, const Hierarchy& h) {
  require_same_k(q, h.K(), "sparsify");
  std::vector<ProfileCode> rows(q.row_masks());
  for (auto& r : rows) r &= ~closed_prerequisites(r, h);
  return QMatrix::from_row_masks(q.K(), std::move(rows));
}

QMatrix densify(const QMatrix& q, const Hierarchy& h) {
  require_same_k(q, h.K(), "densify");
  std::vector<ProfileCode> rows(q.row_masks());
  for (auto& r : rows) r |= closed_prerequisites(r, h);
  return QMatrix::from_row_masks(q.K(), std::move(rows));
}

ConstraintMatrix constraint_matrix(const QMatrix& q, const ProfileSet& a) {
  return ideal_response(q, a, IdealRule::Dina);
}

ConstraintMatrix ideal_response(const QMatrix& q, const ProfileSet& a, IdealRule rule) {
  require_same_k(q, a.K(), "constraint matrix");
  BinaryMatrix g(q.J(), a.size());
  for (int j = 0; j < q.J(); ++j) {
    const ProfileCode req = q.row_mask(j);
    for (int c = 0; c < a.size(); ++c) {
      const bool hit = rule == IdealRule::Dina ? dominates(a[c], req) : (a[c] & req) != 0;
      g(j, c) = hit ? 1 : 0;
    }
  }
  return {std::move(g), a};
}

namespace {

void check_items(const ConstraintMatrix& g, std::span<const int> items) {
  for (int j : items) {
    if (j < 0 || j >= g.J()) throw IndexError("item index " + std::to_string(j) + " out of range");
  }
}

void check_column(const ConstraintMatrix& g, int a) {
  if (a < 0 || a >= g.columns()) throw IndexError("column index " + std::to_string(a) + " out of range");
}

bool order_holds_unchecked(const ConstraintMatrix& g, std::span<const int> items, int a, int b) {
  for (int j : items) {
    if (g(j, a) < g(j, b)) return false;
  }
  return true;
}

}  // namespace

bool partial_order_holds(const ConstraintMatrix& g, std::span<const int> items, int a, int b) {
  check_items(g, items);
  check_column(g, a);
  check_column(g, b);
  return order_holds_unchecked(g, items, a, b);
}

bool partial_orders_equal(const ConstraintMatrix& g, std::span<const int> s1, std::span<const int> s2) {
  check_items(g, s1);
  check_items(g, s2);
  for (int a = 0; a < g.columns(); ++a) {
    for (int b = 0; b < g.columns(); ++b) {
      if (order_holds_unchecked(g, s1, a, b) != order_holds_unchecked(g, s2, a, b)) return false;
    }
  }
  return true;
}

}  // namespace hiercdm
