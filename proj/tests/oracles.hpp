#pragma once

// Slow reference computations shared by the unit tests and the acceptance
// binary. Nothing here calls the library's likelihood code.

#include <cmath>
#include <random>
#include <vector>

#include "hiercdm/models.hpp"

namespace oracle {

using namespace hiercdm;

inline bool possesses_all(const QMatrix& q, int j, ProfileCode alpha) {
  for (int k = 0; k < q.K(); ++k) {
    const bool has = (alpha >> (q.K() - 1 - k)) & 1U;
    if (q(j, k) && !has) return false;
  }
  return true;
}

inline bool possesses_any(const QMatrix& q, int j, ProfileCode alpha) {
  for (int k = 0; k < q.K(); ++k) {
    const bool has = (alpha >> (q.K() - 1 - k)) & 1U;
    if (q(j, k) && has) return true;
  }
  return false;
}

inline double theta(const ItemParams& params, const QMatrix& q, int j, ProfileCode alpha) {
  switch (params.kind) {
    case ModelKind::Dina: return possesses_all(q, j, alpha) ? 1.0 - params.slip[j] : params.guess[j];
    case ModelKind::Dino: return possesses_any(q, j, alpha) ? 1.0 - params.slip[j] : params.guess[j];
    case ModelKind::Gdina: {
      std::size_t pattern = 0;
      for (int k = 0; k < q.K(); ++k) {
        if (!q(j, k)) continue;
        pattern = 2 * pattern + ((alpha >> (q.K() - 1 - k)) & 1U);
      }
      return params.tables[j][pattern];
    }
  }
  return 0.0;
}

// Plain products and sums; fine for the small N and J used here.
inline double respondent_lik(const ItemParams& params, const QMatrix& q, const ResponseMatrix& data, int i,
                             ProfileCode alpha) {
  double l = 1.0;
  for (int j = 0; j < q.J(); ++j) {
    const double t = theta(params, q, j, alpha);
    l *= data(i, j) ? t : 1.0 - t;
  }
  return l;
}

inline double loglik(const ItemParams& params, const std::vector<ProfileCode>& codes, const std::vector<double>& probs,
                     const QMatrix& q, const ResponseMatrix& data) {
  double total = 0.0;
  for (int i = 0; i < data.N(); ++i) {
    double s = 0.0;
    for (std::size_t a = 0; a < codes.size(); ++a) s += probs[a] * respondent_lik(params, q, data, i, codes[a]);
    total += std::log(s);
  }
  return total;
}

inline double loglik(const ItemParams& params, const ProportionVector& p, const QMatrix& q, const ResponseMatrix& data) {
  return loglik(params, p.support().codes(), p.probs(), q, data);
}

// Best DINA log-likelihood among n uniform draws of (s, g) and Dirichlet(1)
// proportions over the support.
inline double random_search_dina(const QMatrix& q, const ProfileSet& support, const ResponseMatrix& data, int n,
                                 unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(kProbEps, 1.0 - kProbEps);
  std::exponential_distribution<double> expo(1.0);
  double best = -INFINITY;
  for (int t = 0; t < n; ++t) {
    std::vector<double> s(q.J()), g(q.J());
    for (int j = 0; j < q.J(); ++j) {
      s[j] = unit(rng);
      g[j] = unit(rng);
    }
    std::vector<double> w(support.size());
    double total = 0.0;
    for (double& v : w) total += v = expo(rng);
    for (double& v : w) v /= total;
    best = std::max(best, loglik(ItemParams::dina(s, g), support.codes(), w, q, data));
  }
  return best;
}

// Central difference of loglik / N in the mass of alpha_out, taken from the
// all-zero profile.
inline double score_finite_difference(const ItemParams& params, const ProportionVector& p, const QMatrix& q,
                                      const ResponseMatrix& data, ProfileCode alpha_out, double h) {
  std::vector<ProfileCode> codes = p.support().codes();
  std::vector<double> probs = p.probs();
  codes.push_back(alpha_out);
  probs.push_back(0.0);
  const std::size_t base = static_cast<std::size_t>(*p.support().index_of(0));
  auto at = [&](double t) {
    std::vector<double> w = probs;
    w.back() = t;
    w[base] -= t;
    return loglik(params, codes, w, q, data) / data.N();
  };
  return (at(h) - at(-h)) / (2.0 * h);
}

// Standard deviation of one respondent's boundary-score term under the
// model (params, p), by enumeration of all 2^J response patterns.
inline double score_term_sd(const ItemParams& params, const ProportionVector& p, const QMatrix& q,
                            ProfileCode alpha_out) {
  const int J = q.J();
  double second = 0.0;
  for (std::uint64_t pat = 0; pat < (std::uint64_t{1} << J); ++pat) {
    auto lik = [&](ProfileCode a) {
      double l = 1.0;
      for (int j = 0; j < J; ++j) {
        const double t = theta(params, q, j, a);
        l *= (pat >> j & 1U) ? t : 1.0 - t;
      }
      return l;
    };
    double marginal = 0.0;
    for (int a = 0; a < p.size(); ++a) marginal += p[a] * lik(p.support()[a]);
    const double diff = lik(alpha_out) - lik(0);
    second += diff * diff / marginal;
  }
  return std::sqrt(second);
}

}  // namespace oracle
