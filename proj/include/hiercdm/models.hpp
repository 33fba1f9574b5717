#pragma once

// Item response kernels (DINA, DINO, saturated GDINA), proportion vectors,
// the marginal likelihood and response simulation.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hiercdm/qmatrix.hpp"

namespace hiercdm {

enum class ModelKind { Dina, Dino, Gdina };

std::string to_string(ModelKind kind);
/// Accepts "dina", "dino", "gdina" (case-insensitive).
ModelKind parse_model_kind(const std::string& name);

inline constexpr double kProbEps = 1e-4;

/// Probabilities over a profile set. The constructor normalizes, so inputs
/// need only be nonnegative with a positive total.
class ProportionVector {
 public:
  ProportionVector() = default;
  ProportionVector(ProfileSet support, std::vector<double> probs);
  static ProportionVector uniform(ProfileSet support);

  const ProfileSet& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  int size() const { return support_.size(); }
  double operator[](int i) const { return probs_[i]; }
  /// Probability of `code`, 0 when it lies outside the support.
  double prob_of(ProfileCode code) const;
  /// Same proportions re-expressed over `target`, which must contain every
  /// profile with positive mass.
  ProportionVector mapped_to(const ProfileSet& target) const;

 private:
  ProfileSet support_;
  std::vector<double> probs_;
};

/// N x J binary responses, row-major.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(int N, int J);

  int N() const { return N_; }
  int J() const { return J_; }
  std::uint8_t operator()(int i, int j) const { return data_[index(i, j)]; }
  std::uint8_t& operator()(int i, int j) { return data_[index(i, j)]; }
  const std::uint8_t* row(int i) const { return data_.data() + index(i, 0); }
  ResponseMatrix select_rows(const std::vector<int>& rows) const;

  bool operator==(const ResponseMatrix&) const = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * J_ + j; }
  int N_ = 0;
  int J_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Item parameters. DINA/DINO use slip/guess; GDINA uses one table per item
/// over the 2^{|K_j|} reduced patterns of its required attributes, where the
/// first required attribute is the most significant pattern bit.
struct ItemParams {
  ModelKind kind = ModelKind::Dina;
  std::vector<double> slip;
  std::vector<double> guess;
  std::vector<std::vector<double>> tables;

  static ItemParams dina(std::vector<double> slip, std::vector<double> guess);
  static ItemParams dino(std::vector<double> slip, std::vector<double> guess);
  static ItemParams gdina(std::vector<std::vector<double>> tables);

  int J() const;
  /// Number of free item parameters.
  int count() const;
  bool operator==(const ItemParams&) const = default;
};

/// Throws DimensionMismatch unless params fit q (J, and GDINA table sizes).
void validate_params(const ItemParams& params, const QMatrix& q);

/// Copy with every probability clamped to [eps, 1 - eps].
ItemParams clamp_params(const ItemParams& params, double eps = kProbEps);

/// Index of alpha restricted to the attributes item j requires.
int reduced_pattern(const QMatrix& q, int j, ProfileCode alpha);

/// GDINA tables reproducing a DINA item: full pattern -> 1 - s, else g.
ItemParams gdina_from_dina(const QMatrix& q, const std::vector<double>& slip, const std::vector<double>& guess);

/// P(R_j = 1 | alpha).
double item_prob(const ItemParams& params, const QMatrix& q, int j, ProfileCode alpha);

/// J x |support| matrix of success probabilities.
Eigen::MatrixXd item_prob_matrix(const ItemParams& params, const QMatrix& q, const ProfileSet& support);

/// Sum over respondents of log sum_alpha p_alpha prod_j P(R_ij | alpha).
double marginal_loglik(const ItemParams& params, const ProportionVector& p, const QMatrix& q,
                       const ResponseMatrix& data);

/// N x |support| matrix of log P(R_i | alpha).
Eigen::MatrixXd class_logliks(const ItemParams& params, const QMatrix& q, const ProfileSet& support,
                              const ResponseMatrix& data);

struct SimulatedData {
  ResponseMatrix responses;
  /// Index into the support of each respondent's drawn profile.
  std::vector<int> profile_index;
};

SimulatedData simulate_responses(const ItemParams& params, const ProportionVector& p, const QMatrix& q, int N,
                                 std::uint64_t seed);

}  // namespace hiercdm
