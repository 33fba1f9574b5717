#include "hiercdm/models.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "hiercdm/errors.hpp"
#include "hiercdm/random.hpp"

namespace hiercdm {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dina: return "dina";
    case ModelKind::Dino: return "dino";
    case ModelKind::Gdina: return "gdina";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "dina") return ModelKind::Dina;
  if (lower == "dino") return ModelKind::Dino;
  if (lower == "gdina") return ModelKind::Gdina;
  throw UnknownMethod("unknown model '" + name + "'");
}

// ---------------------------------------------------------------------------

ProportionVector::ProportionVector(ProfileSet support, std::vector<double> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
  if (support_.empty()) throw EmptySupport("proportion vector over an empty profile set");
  if (static_cast<int>(probs_.size()) != support_.size()) {
    throw DimensionMismatch("proportion vector length differs from its support");
  }
  double total = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("proportions must be finite and nonnegative");
    total += v;
  }
  if (total <= 0.0) throw std::invalid_argument("proportions sum to zero");
  for (double& v : probs_) v /= total;
}

ProportionVector ProportionVector::uniform(ProfileSet support) {
  const auto n = static_cast<std::size_t>(support.size());
  return ProportionVector(std::move(support), std::vector<double>(n, 1.0));
}

double ProportionVector::prob_of(ProfileCode code) const {
  const auto idx = support_.index_of(code);
  return idx ? probs_[*idx] : 0.0;
}

ProportionVector ProportionVector::mapped_to(const ProfileSet& target) const {
  if (target.K() != support_.K()) throw DimensionMismatch("proportion mapping across different K");
  std::vector<double> out(static_cast<std::size_t>(target.size()), 0.0);
  for (int a = 0; a < size(); ++a) {
    const auto idx = target.index_of(support_[a]);
    if (idx) {
      out[*idx] = probs_[a];
    } else if (probs_[a] > 0.0) {
      throw NotASubset("profile " + profile_string(support_[a], support_.K()) + " has mass outside the target set");
    }
  }
  return ProportionVector(target, std::move(out));
}

// ---------------------------------------------------------------------------

ResponseMatrix::ResponseMatrix(int N, int J)
    : N_(N), J_(J), data_(static_cast<std::size_t>(N) * static_cast<std::size_t>(J), 0) {
  if (N < 0 || J < 0) throw std::invalid_argument("negative response matrix dimensions");
}

ResponseMatrix ResponseMatrix::select_rows(const std::vector<int>& rows) const {
  ResponseMatrix out(static_cast<int>(rows.size()), J_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= N_) throw IndexError("respondent index out of range");
    std::copy_n(row(rows[r]), J_, out.data_.begin() + static_cast<std::ptrdiff_t>(r * J_));
  }
  return out;
}

// ---------------------------------------------------------------------------

ItemParams ItemParams::dina(std::vector<double> slip, std::vector<double> guess) {
  if (slip.size() != guess.size()) throw DimensionMismatch("slip and guess lengths differ");
  return ItemParams{ModelKind::Dina, std::move(slip), std::move(guess), {}};
}

ItemParams ItemParams::dino(std::vector<double> slip, std::vector<double> guess) {
  ItemParams p = dina(std::move(slip), std::move(guess));
  p.kind = ModelKind::Dino;
  return p;
}

ItemParams ItemParams::gdina(std::vector<std::vector<double>> tables) {
  return ItemParams{ModelKind::Gdina, {}, {}, std::move(tables)};
}

int ItemParams::J() const {
  return static_cast<int>(kind == ModelKind::Gdina ? tables.size() : slip.size());
}

int ItemParams::count() const {
  if (kind != ModelKind::Gdina) return 2 * J();
  int n = 0;
  for (const auto& t : tables) n += static_cast<int>(t.size());
  return n;
}

void validate_params(const ItemParams& params, const QMatrix& q) {
  if (params.J() != q.J()) throw DimensionMismatch("item parameters cover " + std::to_string(params.J()) +
                                                   " items but Q has " + std::to_string(q.J()));
  auto check = [](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("item probability outside [0,1]");
  };
  if (params.kind == ModelKind::Gdina) {
    for (int j = 0; j < q.J(); ++j) {
      const std::size_t expect = std::size_t{1} << std::popcount(q.row_mask(j));
      if (params.tables[j].size() != expect) {
        throw DimensionMismatch("GDINA table of item " + std::to_string(j + 1) + " has " +
                                std::to_string(params.tables[j].size()) + " entries, expected " +
                                std::to_string(expect));
      }
      for (double v : params.tables[j]) check(v);
    }
  } else {
    if (params.guess.size() != params.slip.size()) throw DimensionMismatch("slip and guess lengths differ");
    for (double v : params.slip) check(v);
    for (double v : params.guess) check(v);
  }
}

ItemParams clamp_params(const ItemParams& params, double eps) {
  ItemParams out = params;
  auto clamp = [eps](double& v) { v = std::clamp(v, eps, 1.0 - eps); };
  std::for_each(out.slip.begin(), out.slip.end(), clamp);
  std::for_each(out.guess.begin(), out.guess.end(), clamp);
  for (auto& t : out.tables) std::for_each(t.begin(), t.end(), clamp);
  return out;
}

int reduced_pattern(const QMatrix& q, int j, ProfileCode alpha) {
  int pattern = 0;
  for (int k = 0; k < q.K(); ++k) {
    if (q(j, k)) pattern = (pattern << 1) | (has_attribute(alpha, q.K(), k) ? 1 : 0);
  }
  return pattern;
}

ItemParams gdina_from_dina(const QMatrix& q, const std::vector<double>& slip, const std::vector<double>& guess) {
  if (static_cast<int>(slip.size()) != q.J() || static_cast<int>(guess.size()) != q.J()) {
    throw DimensionMismatch("slip/guess length differs from J");
  }
  std::vector<std::vector<double>> tables(static_cast<std::size_t>(q.J()));
  for (int j = 0; j < q.J(); ++j) {
    const std::size_t size = std::size_t{1} << std::popcount(q.row_mask(j));
    tables[j].assign(size, guess[j]);
    tables[j].back() = 1.0 - slip[j];
  }
  return ItemParams::gdina(std::move(tables));
}

double item_prob(const ItemParams& params, const QMatrix& q, int j, ProfileCode alpha) {
  if (j < 0 || j >= q.J() || j >= params.J()) throw IndexError("item index out of range");
  const ProfileCode mask = q.row_mask(j);
  switch (params.kind) {
    case ModelKind::Dina: return dominates(alpha, mask) ? 1.0 - params.slip[j] : params.guess[j];
    case ModelKind::Dino: return (alpha & mask) != 0 ? 1.0 - params.slip[j] : params.guess[j];
    case ModelKind::Gdina: return params.tables[j].at(static_cast<std::size_t>(reduced_pattern(q, j, alpha)));
  }
  return 0.0;
}

Eigen::MatrixXd item_prob_matrix(const ItemParams& params, const QMatrix& q, const ProfileSet& support) {
  if (q.K() != support.K()) throw DimensionMismatch("Q and profile set disagree on K");
  validate_params(params, q);
  Eigen::MatrixXd theta(q.J(), support.size());
  for (int a = 0; a < support.size(); ++a) {
    for (int j = 0; j < q.J(); ++j) theta(j, a) = item_prob(params, q, j, support[a]);
  }
  return theta;
}

Eigen::MatrixXd class_logliks(const ItemParams& params, const QMatrix& q, const ProfileSet& support,
                              const ResponseMatrix& data) {
  if (data.J() != q.J()) throw DimensionMismatch("response columns differ from Q rows");
  const Eigen::MatrixXd theta = item_prob_matrix(params, q, support);
  Eigen::MatrixXd out(data.N(), support.size());
  for (int i = 0; i < data.N(); ++i) {
    const std::uint8_t* r = data.row(i);
    for (int a = 0; a < support.size(); ++a) {
      double s = 0.0;
      for (int j = 0; j < q.J(); ++j) s += std::log(r[j] ? theta(j, a) : 1.0 - theta(j, a));
      out(i, a) = s;
    }
  }
  return out;
}

double marginal_loglik(const ItemParams& params, const ProportionVector& p, const QMatrix& q,
                       const ResponseMatrix& data) {
  if (p.size() == 0) throw EmptySupport("marginal likelihood over an empty support");
  const Eigen::MatrixXd ll = class_logliks(params, q, p.support(), data);
  double total = 0.0;
  for (int i = 0; i < data.N(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < p.size(); ++a) {
      if (p[a] > 0.0) mx = std::max(mx, ll(i, a) + std::log(p[a]));
    }
    if (!std::isfinite(mx)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (int a = 0; a < p.size(); ++a) {
      if (p[a] > 0.0) s += std::exp(ll(i, a) + std::log(p[a]) - mx);
    }
    total += mx + std::log(s);
  }
  return total;
}

SimulatedData simulate_responses(const ItemParams& params, const ProportionVector& p, const QMatrix& q, int N,
                                 std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("N must be at least 1");
  const Eigen::MatrixXd theta = item_prob_matrix(params, q, p.support());
  std::vector<double> cumulative(p.probs().size());
  std::partial_sum(p.probs().begin(), p.probs().end(), cumulative.begin());
  Rng rng(seed);
  SimulatedData out{ResponseMatrix(N, q.J()), std::vector<int>(static_cast<std::size_t>(N))};
  for (int i = 0; i < N; ++i) {
    const double u = uniform01(rng) * cumulative.back();
    int a = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    a = std::min(a, p.size() - 1);
    out.profile_index[i] = a;
    for (int j = 0; j < q.J(); ++j) out.responses(i, j) = uniform01(rng) < theta(j, a) ? 1 : 0;
  }
  return out;
}

}  // namespace hiercdm
