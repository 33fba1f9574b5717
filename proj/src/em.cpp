#include "hiercdm/em.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "hiercdm/errors.hpp"
#include "hiercdm/random.hpp"

namespace hiercdm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Fixed structure of one (model, Q, support) combination.
struct Layout {
  ModelKind kind;
  int J;
  int A;
  Eigen::MatrixXd gamma;                 // DINA/DINO ideal responses, J x A
  std::vector<std::vector<int>> pattern; // GDINA reduced pattern per [j][a]
  std::vector<int> table_size;           // GDINA 2^{|K_j|}
};

Layout make_layout(ModelKind kind, const QMatrix& q, const ProfileSet& support) {
  Layout L{kind, q.J(), support.size(), {}, {}, {}};
  if (kind == ModelKind::Gdina) {
    L.pattern.assign(static_cast<std::size_t>(q.J()), std::vector<int>(static_cast<std::size_t>(support.size())));
    for (int j = 0; j < q.J(); ++j) {
      L.table_size.push_back(1 << std::popcount(q.row_mask(j)));
      for (int a = 0; a < support.size(); ++a) L.pattern[j][a] = reduced_pattern(q, j, support[a]);
    }
  } else {
    const auto ideal = ideal_response(q, support, kind == ModelKind::Dina ? IdealRule::Dina : IdealRule::Dino);
    L.gamma.resize(q.J(), support.size());
    for (int j = 0; j < q.J(); ++j) {
      for (int a = 0; a < support.size(); ++a) L.gamma(j, a) = ideal(j, a);
    }
  }
  return L;
}

Eigen::MatrixXd theta_of(const Layout& L, const ItemParams& params) {
  Eigen::MatrixXd theta(L.J, L.A);
  if (L.kind == ModelKind::Gdina) {
    for (int j = 0; j < L.J; ++j) {
      for (int a = 0; a < L.A; ++a) theta(j, a) = params.tables[j][L.pattern[j][a]];
    }
  } else {
    for (int j = 0; j < L.J; ++j) {
      const double hi = 1.0 - params.slip[j];
      const double lo = params.guess[j];
      for (int a = 0; a < L.A; ++a) theta(j, a) = L.gamma(j, a) != 0.0 ? hi : lo;
    }
  }
  return theta;
}

ItemParams deterministic_items(const Layout& L) {
  if (L.kind != ModelKind::Gdina) {
    ItemParams p = ItemParams::dina(std::vector<double>(L.J, 0.2), std::vector<double>(L.J, 0.2));
    p.kind = L.kind;
    return p;
  }
  std::vector<std::vector<double>> tables;
  for (int j = 0; j < L.J; ++j) {
    const int size = L.table_size[j];
    const int width = std::countr_zero(static_cast<unsigned>(size));
    std::vector<double> t(static_cast<std::size_t>(size));
    for (int pat = 0; pat < size; ++pat) t[pat] = 0.2 + 0.6 * std::popcount(static_cast<unsigned>(pat)) / width;
    tables.push_back(std::move(t));
  }
  return ItemParams::gdina(std::move(tables));
}

StartPoint random_start(const Layout& L, const ProfileSet& support, Rng& rng) {
  std::vector<double> probs(static_cast<std::size_t>(L.A));
  for (double& v : probs) v = standard_exponential(rng);
  ItemParams items;
  if (L.kind != ModelKind::Gdina) {
    std::vector<double> s(static_cast<std::size_t>(L.J)), g(static_cast<std::size_t>(L.J));
    for (int j = 0; j < L.J; ++j) {
      s[j] = uniform(rng, 0.05, 0.35);
      g[j] = uniform(rng, 0.05, 0.35);
    }
    items = ItemParams::dina(std::move(s), std::move(g));
    items.kind = L.kind;
  } else {
    std::vector<std::vector<double>> tables;
    for (int j = 0; j < L.J; ++j) {
      const int size = L.table_size[j];
      const int width = std::countr_zero(static_cast<unsigned>(size));
      const double lo = uniform(rng, 0.05, 0.35);
      const double hi = uniform(rng, 0.65, 0.95);
      std::vector<double> t(static_cast<std::size_t>(size));
      for (int pat = 0; pat < size; ++pat) {
        const double level = lo + (hi - lo) * std::popcount(static_cast<unsigned>(pat)) / width;
        t[pat] = std::clamp(level + uniform(rng, -0.05, 0.05), 0.02, 0.98);
      }
      tables.push_back(std::move(t));
    }
    items = ItemParams::gdina(std::move(tables));
  }
  return {std::move(items), ProportionVector(support, std::move(probs))};
}

struct RunResult {
  ItemParams params;
  std::vector<double> p;
  double loglik = kNegInf;
  int iters = 0;
  bool converged = false;
  std::vector<double> trace;
};

// E-step: fills `post` with posterior class probabilities and returns the
// weighted log-likelihood.
double e_step(const PatternData& data, const Eigen::MatrixXd& theta, const std::vector<double>& p,
              Eigen::MatrixXd& post) {
  const Eigen::Index A = theta.cols();
  const Eigen::MatrixXd log_fail = (1.0 - theta.array()).log().matrix();
  const Eigen::MatrixXd logit = theta.array().log().matrix() - log_fail;
  post.noalias() = data.R * logit;
  Eigen::RowVectorXd offset = log_fail.colwise().sum();
  for (Eigen::Index a = 0; a < A; ++a) offset(a) += p[a] > 0.0 ? std::log(p[a]) : kNegInf;
  post.rowwise() += offset;
  const Eigen::VectorXd mx = post.rowwise().maxCoeff();
  post.colwise() -= mx;
  post.array() = post.array().exp();  // separate statement keeps exp vectorized
  const Eigen::VectorXd s = post.rowwise().sum();
  post.array().colwise() /= s.array();
  const double total = data.w.dot((mx.array() + s.array().log()).matrix());
  return total;
}

void m_step(const Layout& L, const PatternData& data, const Eigen::MatrixXd& post, double eps, ItemParams& params,
            std::vector<double>& p) {
  const Eigen::MatrixXd W = post.array().colwise() * data.w.array();
  const Eigen::RowVectorXd n = W.colwise().sum();
  const Eigen::MatrixXd M = data.R.transpose() * W;  // J x A expected positives
  const double total = n.sum();
  for (int a = 0; a < L.A; ++a) p[a] = n(a) / total;

  auto clamp = [eps](double v) { return std::clamp(v, eps, 1.0 - eps); };
  if (L.kind != ModelKind::Gdina) {
    for (int j = 0; j < L.J; ++j) {
      double pos1 = 0, mass1 = 0, pos0 = 0, mass0 = 0;
      for (int a = 0; a < L.A; ++a) {
        if (L.gamma(j, a) != 0.0) {
          pos1 += M(j, a);
          mass1 += n(a);
        } else {
          pos0 += M(j, a);
          mass0 += n(a);
        }
      }
      if (mass1 > 0.0) params.slip[j] = clamp(1.0 - pos1 / mass1);
      if (mass0 > 0.0) params.guess[j] = clamp(pos0 / mass0);
    }
  } else {
    for (int j = 0; j < L.J; ++j) {
      std::vector<double> pos(static_cast<std::size_t>(L.table_size[j]), 0.0);
      std::vector<double> mass(pos.size(), 0.0);
      for (int a = 0; a < L.A; ++a) {
        pos[L.pattern[j][a]] += M(j, a);
        mass[L.pattern[j][a]] += n(a);
      }
      for (std::size_t t = 0; t < pos.size(); ++t) {
        if (mass[t] > 0.0) params.tables[j][t] = clamp(pos[t] / mass[t]);
      }
    }
  }
}

RunResult run_em(const Layout& L, const PatternData& data, const StartPoint& start, const FitConfig& cfg) {
  RunResult r;
  r.params = clamp_params(start.items, cfg.eps);
  r.p = start.p.probs();
  Eigen::MatrixXd post(data.U(), L.A);
  double prev = kNegInf;
  for (int it = 0;; ++it) {
    const double ll = e_step(data, theta_of(L, r.params), r.p, post);
    if (cfg.keep_traces) r.trace.push_back(ll);
    r.loglik = ll;
    if (it > 0 && std::abs(ll - prev) < cfg.loglik_tol) {
      r.converged = true;
      break;
    }
    if (it == cfg.max_iters) break;
    prev = ll;
    m_step(L, data, post, cfg.eps, r.params, r.p);
    r.iters = it + 1;
  }
  return r;
}

}  // namespace

void validate_config(const FitConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(cfg.loglik_tol > 0.0)) throw std::invalid_argument("loglik_tol must be positive");
  if (cfg.n_starts < 1) throw std::invalid_argument("n_starts must be at least 1");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 0.5)");
}

PatternData compress(const ResponseMatrix& data) {
  std::map<std::vector<std::uint8_t>, int> index;
  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<double> counts;
  PatternData out;
  out.respondent_pattern.resize(static_cast<std::size_t>(data.N()));
  for (int i = 0; i < data.N(); ++i) {
    std::vector<std::uint8_t> row(data.row(i), data.row(i) + data.J());
    auto [it, inserted] = index.emplace(row, static_cast<int>(rows.size()));
    if (inserted) {
      rows.push_back(std::move(row));
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
    out.respondent_pattern[i] = it->second;
  }
  out.R.resize(static_cast<Eigen::Index>(rows.size()), data.J());
  out.w.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t u = 0; u < rows.size(); ++u) {
    for (int j = 0; j < data.J(); ++j) out.R(static_cast<Eigen::Index>(u), j) = rows[u][j];
    out.w(static_cast<Eigen::Index>(u)) = counts[u];
  }
  return out;
}

CdmFit fit_em(ModelKind kind, const QMatrix& q, const ProfileSet& support, const ResponseMatrix& data,
              const FitConfig& cfg, const std::vector<StartPoint>& warm) {
  if (data.J() != q.J()) throw DimensionMismatch("response columns differ from Q rows");
  return fit_em(kind, q, support, compress(data), cfg, warm);
}

CdmFit fit_em(ModelKind kind, const QMatrix& q, const ProfileSet& support, const PatternData& data,
              const FitConfig& cfg, const std::vector<StartPoint>& warm) {
  validate_config(cfg);
  if (support.empty()) throw EmptySupport("cannot fit over an empty profile set");
  if (support.K() != q.K()) throw DimensionMismatch("support and Q disagree on K");
  if (data.J() != q.J()) throw DimensionMismatch("response columns differ from Q rows");
  if (data.U() == 0 || !(data.total_weight() > 0.0)) throw std::invalid_argument("no responses to fit");

  const Layout L = make_layout(kind, q, support);
  std::vector<StartPoint> starts;
  if (cfg.default_start || warm.empty()) {
    starts.push_back({deterministic_items(L), ProportionVector::uniform(support)});
  }
  if (cfg.init == InitStrategy::Random) {
    for (int s = 1; s < cfg.n_starts; ++s) {
      Rng rng(derive_seed(cfg.seed, kTagStarts, static_cast<std::uint64_t>(s)));
      starts.push_back(random_start(L, support, rng));
    }
  }
  for (const StartPoint& w : warm) {
    if (w.items.kind != kind) throw std::invalid_argument("warm start of a different model kind");
    validate_params(w.items, q);
    const ProportionVector mapped = w.p.mapped_to(support);
    starts.push_back({w.items, mapped});
    const bool has_gap = std::any_of(mapped.probs().begin(), mapped.probs().end(), [](double v) { return v == 0.0; });
    if (cfg.smooth_warm_starts && has_gap) {
      std::vector<double> blend(mapped.probs());
      for (double& v : blend) v = 0.9 * v + 0.1 / support.size();
      starts.push_back({w.items, ProportionVector(support, std::move(blend))});
    }
  }

  CdmFit fit;
  fit.kind = kind;
  RunResult best;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    RunResult r = run_em(L, data, starts[s], cfg);
    fit.starts.push_back({static_cast<int>(s), r.loglik, r.iters, r.converged, r.trace});
    if (s == 0 || r.loglik > best.loglik) {
      best = std::move(r);
      fit.best_start = static_cast<int>(s);
    }
  }
  fit.params = std::move(best.params);
  fit.p = ProportionVector(support, std::move(best.p));
  fit.loglik = best.loglik;
  fit.iters = best.iters;
  fit.converged = best.converged;
  fit.n_free_params = (support.size() - 1) + fit.params.count();

  for (int j = 0; j < q.J(); ++j) {
    const bool flipped = kind == ModelKind::Gdina ? fit.params.tables[j].back() <= fit.params.tables[j].front()
                                                  : 1.0 - fit.params.slip[j] <= fit.params.guess[j];
    if (flipped) fit.flipped_items.push_back(j);
    double ones = 0.0;
    for (int u = 0; u < data.U(); ++u) ones += data.w(u) * data.R(u, j);
    if (ones == 0.0 || ones == data.total_weight()) fit.constant_items.push_back(j);
  }
  return fit;
}

Eigen::MatrixXd posterior_profiles(const CdmFit& fit, const QMatrix& q, const ResponseMatrix& data) {
  Eigen::MatrixXd ll = class_logliks(fit.params, q, fit.p.support(), data);
  for (int i = 0; i < data.N(); ++i) {
    double mx = kNegInf;
    for (int a = 0; a < fit.p.size(); ++a) {
      ll(i, a) = fit.p[a] > 0.0 ? ll(i, a) + std::log(fit.p[a]) : kNegInf;
      mx = std::max(mx, ll(i, a));
    }
    double s = 0.0;
    for (int a = 0; a < fit.p.size(); ++a) {
      ll(i, a) = std::isfinite(ll(i, a)) ? std::exp(ll(i, a) - mx) : 0.0;
      s += ll(i, a);
    }
    ll.row(i) /= s;
  }
  return ll;
}

double boundary_score(const CdmFit& fit0, const QMatrix& q, const ResponseMatrix& data, ProfileCode alpha_out) {
  const ProfileSet& support = fit0.p.support();
  if (!support.contains(0)) throw BaseProfileMissing("the all-zero profile must be in the null support");
  if (support.contains(alpha_out)) throw std::invalid_argument("alpha_out already lies in the support");
  if (data.N() == 0) throw std::invalid_argument("no responses");
  const Eigen::MatrixXd ll = class_logliks(fit0.params, q, support, data);
  const ProfileSet pair(q.K(), {0, alpha_out});
  const Eigen::MatrixXd edge = class_logliks(fit0.params, q, pair, data);
  double total = 0.0;
  for (int i = 0; i < data.N(); ++i) {
    double mx = kNegInf;
    for (int a = 0; a < fit0.p.size(); ++a) {
      if (fit0.p[a] > 0.0) mx = std::max(mx, ll(i, a) + std::log(fit0.p[a]));
    }
    double s = 0.0;
    for (int a = 0; a < fit0.p.size(); ++a) {
      if (fit0.p[a] > 0.0) s += std::exp(ll(i, a) + std::log(fit0.p[a]) - mx);
    }
    const double log_marginal = mx + std::log(s);
    total += std::exp(edge(i, 1) - log_marginal) - std::exp(edge(i, 0) - log_marginal);
  }
  return total / data.N();
}

}  // namespace hiercdm
