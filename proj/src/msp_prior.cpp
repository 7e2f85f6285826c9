#include "aspr/msp_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "aspr/samplers.hpp"

namespace aspr {

namespace {

// Rebuilds weights from sticks; the last weight absorbs the floating-point
// remainder so the vector sums to one exactly.
void recompute_weights(MspState& state) {
  const int T = static_cast<int>(state.sticks.size());
  state.weights.assign(T, 0.0);
  double remaining = 1.0;
  for (int t = 0; t + 1 < T; ++t) {
    state.weights[t] = state.sticks[t] * remaining;
    remaining *= 1.0 - state.sticks[t];
  }
  // The last weight absorbs the truncation remainder so the left-to-right
  // sum is exactly one: with prefix <= 1 the assignment below adds a single
  // rounding and the final accumulation lands on one (Sterbenz for prefix
  // >= 1/2, a sub-half-ulp perturbation below). Rounding can push the prefix
  // above one; shaving the excess off the largest prefix weight (which
  // dwarfs it) restores prefix <= 1 within a couple of passes.
  for (int pass = 0; pass < 8; ++pass) {
    const double prefix =
        std::accumulate(state.weights.begin(), state.weights.end() - 1, 0.0);
    if (prefix <= 1.0) {
      state.weights[T - 1] = 1.0 - prefix;
      break;
    }
    *std::max_element(state.weights.begin(), state.weights.end() - 1) -=
        prefix - 1.0;
  }
}

std::vector<int> cluster_counts(const MspState& state) {
  std::vector<int> n(state.atom_mu.size(), 0);
  for (int c : state.assignments) ++n[c];
  return n;
}

int sample_categorical_log(const Eigen::VectorXd& logp, RngStream& rng) {
  const double m = logp.maxCoeff();
  Eigen::VectorXd w = (logp.array() - m).exp();
  const double u = rng.uniform() * w.sum();
  double acc = 0.0;
  for (int t = 0; t < w.size(); ++t) {
    acc += w(t);
    if (u <= acc) return t;
  }
  return static_cast<int>(w.size()) - 1;
}

// psi_j | beta_j, atom: the exponential scale-mixture conditional. Near the
// atom the inverse-Gaussian mean diverges, so fall back to the prior.
double draw_local_scale(double beta_j, double mu, double tau, RngStream& rng) {
  const double r = std::abs(beta_j - mu);
  if (r < 1e-12) return rng.exponential(0.5 * tau * tau);
  const double inv = inverse_gaussian_sample(tau / r, tau * tau, rng);
  return 1.0 / inv;
}

}  // namespace

MspState msp_init(const MspConfig& cfg, int p, RngStream& rng) {
  if (p < 1) throw std::invalid_argument("msp_init: p must be >= 1");
  if (cfg.T < 2) throw std::invalid_argument("msp_init: truncation T must be >= 2");
  MspState state;
  state.atom_mu.resize(cfg.T);
  state.atom_tau.resize(cfg.T);
  state.sticks.resize(cfg.T);
  state.atom_mu[0] = 0.0;
  state.atom_tau[0] = gamma_sample(cfg.a0, cfg.b0, rng);
  for (int t = 1; t < cfg.T; ++t) {
    state.atom_mu[t] = cfg.c + std::sqrt(cfg.d) * rng.normal();
    state.atom_tau[t] = gamma_sample(cfg.a1, cfg.b1, rng);
  }
  for (int t = 0; t + 1 < cfg.T; ++t) state.sticks[t] = beta_sample(1.0, cfg.alpha, rng);
  state.sticks[cfg.T - 1] = 1.0;
  recompute_weights(state);
  state.assignments.assign(p, 0);
  state.local_scales.resize(p);
  const double rate0 = 0.5 * state.atom_tau[0] * state.atom_tau[0];
  for (int j = 0; j < p; ++j) state.local_scales[j] = rng.exponential(rate0);
  return state;
}

Eigen::VectorXd assignment_log_probs(const MspState& state, double beta_j) {
  const int T = static_cast<int>(state.atom_mu.size());
  Eigen::VectorXd logp(T);
  for (int t = 0; t < T; ++t) {
    const double lw = state.weights[t] > 0.0 ? std::log(state.weights[t])
                                             : -std::numeric_limits<double>::infinity();
    logp(t) = lw + de_logpdf(beta_j, state.atom_mu[t], state.atom_tau[t]);
  }
  return logp;
}

void update_assignments(MspState& state, const Eigen::VectorXd& beta, RngStream& rng) {
  const int p = static_cast<int>(state.assignments.size());
  if (beta.size() != p) {
    throw std::invalid_argument("update_assignments: beta length mismatch");
  }
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd logp = assignment_log_probs(state, beta(j));
    const int c = sample_categorical_log(logp, rng);
    state.assignments[j] = c;
    state.local_scales[j] =
        draw_local_scale(beta(j), state.atom_mu[c], state.atom_tau[c], rng);
  }
}

void update_sticks(MspState& state, const MspConfig& cfg, RngStream& rng) {
  const int T = static_cast<int>(state.sticks.size());
  const std::vector<int> n = cluster_counts(state);
  int after = std::accumulate(n.begin(), n.end(), 0);
  for (int t = 0; t + 1 < T; ++t) {
    after -= n[t];
    state.sticks[t] = beta_sample(1.0 + n[t], cfg.alpha + after, rng);
  }
  state.sticks[T - 1] = 1.0;
  recompute_weights(state);
}

void update_atoms(MspState& state, const MspConfig& cfg, const Eigen::VectorXd& beta,
                  RngStream& rng) {
  const int T = static_cast<int>(state.atom_mu.size());
  const std::vector<int> n = cluster_counts(state);
  for (int t = 0; t < T; ++t) {
    const double a = t == 0 ? cfg.a0 : cfg.a1;
    const double b = t == 0 ? cfg.b0 : cfg.b1;
    if (n[t] == 0) {
      if (t > 0) state.atom_mu[t] = cfg.c + std::sqrt(cfg.d) * rng.normal();
      state.atom_tau[t] = gamma_sample(a, b, rng);
      continue;
    }
    if (t > 0) {
      // Location: normal-normal under beta_j | psi_j ~ N(mu_t, psi_j).
      double prec = 1.0 / cfg.d;
      double wsum = cfg.c / cfg.d;
      for (int j = 0; j < beta.size(); ++j) {
        if (state.assignments[j] != t) continue;
        prec += 1.0 / state.local_scales[j];
        wsum += beta(j) / state.local_scales[j];
      }
      state.atom_mu[t] = wsum / prec + rng.normal() / std::sqrt(prec);
    }
    // Rate: conjugate Gamma against the marginal double-exponential kernel.
    double abs_sum = 0.0;
    for (int j = 0; j < beta.size(); ++j) {
      if (state.assignments[j] == t) abs_sum += std::abs(beta(j) - state.atom_mu[t]);
    }
    state.atom_tau[t] = gamma_sample(a + n[t], 1.0 / (1.0 / b + abs_sum), rng);
  }
}

void update_local_scales(MspState& state, const Eigen::VectorXd& beta, RngStream& rng) {
  for (int j = 0; j < beta.size(); ++j) {
    const int c = state.assignments[j];
    state.local_scales[j] =
        draw_local_scale(beta(j), state.atom_mu[c], state.atom_tau[c], rng);
  }
}

CoefConditional coef_full_conditional(const MspState& state, const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& phi,
                                      const Eigen::MatrixXd& X, double sigma2,
                                      double gamma0, double lambda0) {
  const int n = static_cast<int>(g.size());
  const int p = static_cast<int>(X.cols());
  if (phi.size() != n || (p > 0 && X.rows() != n)) {
    throw std::invalid_argument("coef_full_conditional: dimension mismatch");
  }
  const Eigen::ArrayXd w = phi.array() / sigma2;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p + 1, p + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p + 1);
  A(0, 0) = lambda0 + w.sum();
  b(0) = lambda0 * gamma0 + (w * g.array()).sum();
  if (p > 0) {
    const Eigen::MatrixXd Xw = w.matrix().asDiagonal() * X;
    A.block(0, 1, 1, p) = Xw.colwise().sum();
    A.block(1, 0, p, 1) = A.block(0, 1, 1, p).transpose();
    A.block(1, 1, p, p) = X.transpose() * Xw;
    b.tail(p) = Xw.transpose() * g;
    for (int j = 0; j < p; ++j) {
      A(j + 1, j + 1) += 1.0 / state.local_scales[j];
      b(j + 1) += state.atom_mu[state.assignments[j]] / state.local_scales[j];
    }
  }

  CoefConditional cond;
  try {
    cond.precision = SpdMatrix(A);
  } catch (const NotSpdError&) {
    A.diagonal().array() += 1e-10;
    cond.precision = SpdMatrix(A);  // a second failure propagates
  }
  cond.mean = cond.precision.solve(b);
  return cond;
}

CoefState update_coefficients(const MspState& state, const Eigen::VectorXd& g,
                              const Eigen::VectorXd& phi, const Eigen::MatrixXd& X,
                              double sigma2, double gamma0, double lambda0,
                              RngStream& rng) {
  const CoefConditional cond = coef_full_conditional(state, g, phi, X, sigma2,
                                                     gamma0, lambda0);
  const int dim = static_cast<int>(cond.mean.size());
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = rng.normal();
  // x = mean + L^{-T} z has covariance (L L')^{-1}, the posterior covariance.
  const Eigen::VectorXd draw =
      cond.mean + cond.precision.cholesky_lower().transpose().triangularView<Eigen::Upper>().solve(z);
  CoefState coef;
  coef.gamma = draw(0);
  coef.beta = draw.tail(dim - 1);
  return coef;
}

double tail_weight(const MspState& state) { return state.weights.back(); }

}  // namespace aspr
