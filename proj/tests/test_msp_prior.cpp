#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "aspr/aspr_model.hpp"
#include "aspr/mathutil.hpp"
#include "aspr/msp_prior.hpp"
#include "aspr/rng.hpp"
#include "aspr/samplers.hpp"
#include "test_util.hpp"

using namespace aspr;

namespace {

double weight_sum(const MspState& s) {
  return std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
}

// Exact prior draw of the full shrinkage state plus coefficients, used as
// the reference side of the joint-distribution checks. msp_init is an
// initialization convention (all coefficients start in cluster one), not a
// prior draw, so assignments and scales are re-drawn here.
struct PriorDraw {
  MspState state;
  CoefState coef;
};

PriorDraw draw_prior(const MspConfig& cfg, int p, double gamma0, double lambda0,
                     RngStream& rng) {
  PriorDraw d;
  d.state = msp_init(cfg, p, rng);
  for (int j = 0; j < p; ++j) {
    double u = rng.uniform(), acc = 0.0;
    int c = cfg.T - 1;
    for (int t = 0; t < cfg.T; ++t) {
      acc += d.state.weights[t];
      if (u <= acc) {
        c = t;
        break;
      }
    }
    d.state.assignments[j] = c;
    const double tau = d.state.atom_tau[c];
    d.state.local_scales[j] = rng.exponential(0.5 * tau * tau);
  }
  d.coef.gamma = gamma0 + rng.normal() / std::sqrt(lambda0);
  d.coef.beta.resize(p);
  for (int j = 0; j < p; ++j) {
    d.coef.beta(j) = d.state.atom_mu[d.state.assignments[j]] +
                     std::sqrt(d.state.local_scales[j]) * rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("msp_init draws the prior with the pinned first atom") {
  MspConfig cfg;
  cfg.T = 10;
  RngStream rng(3, 0);

  double pi1_sum = 0.0;
  std::vector<double> locations;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    const MspState s = msp_init(cfg, 4, rng);
    CHECK(s.atom_mu[0] == 0.0);
    CHECK(s.sticks.back() == 1.0);
    CHECK(weight_sum(s) == 1.0);
    for (int j = 0; j < 4; ++j) CHECK(s.assignments[j] == 0);
    pi1_sum += s.weights[0];
    for (int t = 1; t < cfg.T; ++t) locations.push_back(s.atom_mu[t]);
  }
  // alpha = 1 makes the first stick Beta(1,1): mean one half.
  CHECK(pi1_sum / reps == doctest::Approx(0.5).epsilon(0.01));

  // Location prior: Pr(mu in [-1,1]) = 2*Phi(1/sqrt(d)) - 1 = 0.990.
  double inside = 0.0;
  for (double m : locations) inside += std::abs(m) <= 1.0;
  CHECK(inside / locations.size() == doctest::Approx(0.990).epsilon(0.005 / 0.990));
  CHECK(2.0 * norm_cdf(1.0 / std::sqrt(cfg.d)) - 1.0 ==
        doctest::Approx(0.990).epsilon(0.001));
}

TEST_CASE("assignment probabilities: dominance, symmetry, enumeration") {
  MspConfig cfg;
  cfg.T = 2;
  RngStream rng(5, 0);
  MspState s = msp_init(cfg, 1, rng);

  SUBCASE("a coefficient at zero with a huge first-atom rate stays in cluster one") {
    s.atom_tau[0] = 1e4;
    s.atom_mu[1] = 5.0;
    s.atom_tau[1] = 1.0;
    s.weights = {0.5, 0.5};
    int in_first = 0;
    for (int r = 0; r < 1000; ++r) {
      update_assignments(s, Eigen::VectorXd::Zero(1), rng);
      in_first += s.assignments[0] == 0;
    }
    CHECK(in_first == 1000);
  }

  SUBCASE("identical atoms with equal weights split evenly") {
    s.atom_mu = {0.0, 0.0};
    s.atom_tau = {2.0, 2.0};
    s.weights = {0.5, 0.5};
    const Eigen::VectorXd lp = assignment_log_probs(s, 0.7);
    CHECK(std::abs(lp(0) - lp(1)) < 1e-12);
  }

  SUBCASE("empirical frequencies match the enumerated conditional") {
    s.atom_mu = {0.0, 1.0};
    s.atom_tau = {3.0, 1.5};
    s.weights = {0.7, 0.3};
    const double beta = 0.4;
    const Eigen::VectorXd lp = assignment_log_probs(s, beta);
    const double p0 = 1.0 / (1.0 + std::exp(lp(1) - lp(0)));

    const int n = 100000;
    int count0 = 0;
    Eigen::VectorXd bvec = Eigen::VectorXd::Constant(1, beta);
    for (int r = 0; r < n; ++r) {
      update_assignments(s, bvec, rng);
      count0 += s.assignments[0] == 0;
    }
    const double freq = static_cast<double>(count0) / n;
    const double se = std::sqrt(p0 * (1.0 - p0) / n);
    CHECK(std::abs(freq - p0) < 3.0 * se);
  }
}

TEST_CASE("update_sticks draws the conjugate Beta posteriors") {
  MspConfig cfg;
  cfg.T = 4;
  RngStream rng(7, 0);

  SUBCASE("all coefficients in the first cluster") {
    const int p = 6;
    MspState s = msp_init(cfg, p, rng);
    const int n = 50000;
    std::vector<double> v1(n);
    for (int r = 0; r < n; ++r) {
      update_sticks(s, cfg, rng);
      CHECK(weight_sum(s) == 1.0);
      v1[r] = s.sticks[0];
    }
    // V_1 ~ Beta(1+p, 1): mean (p+1)/(p+2).
    const double expect = (p + 1.0) / (p + 2.0);
    CHECK(std::abs(testutil::sample_mean(v1) - expect) < 4.0 * testutil::iid_se(v1));
  }

  SUBCASE("no coefficients gives the prior Beta(1, alpha)") {
    MspState s = msp_init(cfg, 1, rng);
    s.assignments.clear();
    s.local_scales.clear();
    const int n = 50000;
    std::vector<double> v2(n);
    for (int r = 0; r < n; ++r) {
      update_sticks(s, cfg, rng);
      v2[r] = s.sticks[1];
    }
    CHECK(std::abs(testutil::sample_mean(v2) - 0.5) < 4.0 * testutil::iid_se(v2));
  }

  SUBCASE("middle stick conditions on later-cluster counts only") {
    MspState s = msp_init(cfg, 5, rng);
    s.assignments = {1, 1, 2, 3, 3};  // n = (0, 2, 1, 2)
    const int n = 50000;
    std::vector<double> v(n);
    for (int r = 0; r < n; ++r) {
      update_sticks(s, cfg, rng);
      v[r] = s.sticks[1];
    }
    // V_2 ~ Beta(1+2, 1+3): mean 3/7.
    CHECK(std::abs(testutil::sample_mean(v) - 3.0 / 7.0) < 4.0 * testutil::iid_se(v));
  }
}

TEST_CASE("update_atoms conjugate conditionals and prior refresh") {
  MspConfig cfg;
  cfg.T = 3;
  RngStream rng(11, 0);

  SUBCASE("empty clusters are refreshed from the prior") {
    MspState s = msp_init(cfg, 1, rng);
    s.assignments = {0};
    const int n = 50000;
    std::vector<double> mus(n), taus(n);
    const Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
    for (int r = 0; r < n; ++r) {
      update_atoms(s, cfg, beta, rng);
      mus[r] = s.atom_mu[2];
      taus[r] = s.atom_tau[2];
    }
    CHECK(std::abs(testutil::sample_mean(mus)) < 4.0 * testutil::iid_se(mus));
    CHECK(testutil::sample_sd(mus) == doctest::Approx(std::sqrt(cfg.d)).epsilon(0.03));
    CHECK(std::abs(testutil::sample_mean(taus) - cfg.a1 * cfg.b1) <
          4.0 * testutil::iid_se(taus));
  }

  SUBCASE("a single coefficient sitting on the pinned atom") {
    MspState s = msp_init(cfg, 1, rng);
    s.assignments = {0};
    const int n = 50000;
    std::vector<double> taus(n);
    const Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
    for (int r = 0; r < n; ++r) {
      update_atoms(s, cfg, beta, rng);
      taus[r] = s.atom_tau[0];
    }
    // Gamma(a0 + 1, b0): the absolute deviation term vanishes.
    const double expect = (cfg.a0 + 1.0) * cfg.b0;
    CHECK(std::abs(testutil::sample_mean(taus) - expect) < 4.0 * testutil::iid_se(taus));
  }

  SUBCASE("tight scales pull a location atom onto the shared coefficient value") {
    const int p = 8;
    MspState s = msp_init(cfg, p, rng);
    const double m = 0.8;
    Eigen::VectorXd beta = Eigen::VectorXd::Constant(p, m);
    std::fill(s.assignments.begin(), s.assignments.end(), 1);
    std::fill(s.local_scales.begin(), s.local_scales.end(), 1e-6);
    const int n = 20000;
    std::vector<double> mus(n);
    for (int r = 0; r < n; ++r) {
      // Restore the frozen conditioning state mutated by the update.
      std::fill(s.local_scales.begin(), s.local_scales.end(), 1e-6);
      update_atoms(s, cfg, beta, rng);
      mus[r] = s.atom_mu[1];
    }
    const double prec = 1.0 / cfg.d + p / 1e-6;
    const double expect_mean = (m * p / 1e-6) / prec;
    CHECK(std::abs(testutil::sample_mean(mus) - expect_mean) <
          4.0 * testutil::iid_se(mus) + 1e-9);
    CHECK(testutil::sample_sd(mus) ==
          doctest::Approx(1.0 / std::sqrt(prec)).epsilon(0.05));
  }
}

TEST_CASE("update_local_scales: positivity, prior fallback, DE marginal") {
  MspConfig cfg;
  cfg.T = 2;
  RngStream rng(13, 0);

  SUBCASE("outputs strictly positive") {
    MspState s = msp_init(cfg, 3, rng);
    Eigen::VectorXd beta(3);
    beta << -0.4, 0.0, 2.5;
    for (int r = 0; r < 2000; ++r) {
      update_local_scales(s, beta, rng);
      for (double psi : s.local_scales) CHECK(psi > 0.0);
    }
  }

  SUBCASE("a coefficient exactly on its atom draws from the prior exponential") {
    MspState s = msp_init(cfg, 1, rng);
    s.assignments = {0};
    s.atom_tau[0] = 2.0;
    const int n = 50000;
    std::vector<double> psis(n);
    for (int r = 0; r < n; ++r) {
      update_local_scales(s, Eigen::VectorXd::Zero(1), rng);
      psis[r] = s.local_scales[0];
    }
    // Exp(rate tau^2/2): mean 2/tau^2 = 0.5.
    CHECK(std::abs(testutil::sample_mean(psis) - 0.5) < 4.0 * testutil::iid_se(psis));
  }

  SUBCASE("gibbs over (beta, psi) reproduces the double exponential marginal") {
    MspState s = msp_init(cfg, 1, rng);
    s.assignments = {0};
    s.atom_mu[0] = 0.0;
    s.atom_tau[0] = 1.0;
    double beta = 0.3;
    std::vector<double> draws;
    draws.reserve(40000);
    for (int r = 0; r < 200000; ++r) {
      update_local_scales(s, Eigen::VectorXd::Constant(1, beta), rng);
      beta = std::sqrt(s.local_scales[0]) * rng.normal();
      if (r % 5 == 4) draws.push_back(beta);
    }
    // DE(0, 1) CDF.
    const auto cdf = [](double x) {
      return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
    };
    CHECK(testutil::ks_statistic(draws, cdf) < 0.015);
  }
}

TEST_CASE("coefficient conditional matches closed forms") {
  MspConfig cfg;
  cfg.T = 2;
  RngStream rng(17, 0);
  const double sigma2 = kSigma2;

  SUBCASE("intercept-only model is the normal-normal update") {
    MspState s = msp_init(cfg, 1, rng);
    s.assignments.clear();
    s.local_scales.clear();
    const int n = 40;
    Eigen::VectorXd g(n), phi(n);
    for (int i = 0; i < n; ++i) {
      g(i) = rng.normal() * 2.0 - 1.0;
      phi(i) = 0.5 + rng.uniform();
    }
    const Eigen::MatrixXd X(n, 0);
    const double gamma0 = -2.2, lambda0 = 2.42;
    const CoefConditional cond =
        coef_full_conditional(s, g, phi, X, sigma2, gamma0, lambda0);
    const double prec = lambda0 + phi.sum() / sigma2;
    const double mean = (lambda0 * gamma0 + g.dot(phi) / sigma2) / prec;
    REQUIRE(cond.mean.size() == 1);
    CHECK(std::abs(cond.mean(0) - mean) < 1e-10);
    CHECK(std::abs(cond.precision(0, 0) - prec) < 1e-10);
  }

  SUBCASE("vanishing local scales pin the coefficients to their atom locations") {
    const int n = 30, p = 3;
    MspState s = msp_init(cfg, p, rng);
    s.atom_mu = {0.0, 1.5};
    s.assignments = {1, 0, 1};
    s.local_scales = {1e-12, 1e-12, 1e-12};
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd g(n), phi(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
      g(i) = rng.normal();
      phi(i) = 1.0;
    }
    const CoefState draw =
        update_coefficients(s, g, phi, X, sigma2, -2.2, 2.42, rng);
    CHECK(std::abs(draw.beta(0) - 1.5) < 1e-3);
    CHECK(std::abs(draw.beta(1) - 0.0) < 1e-3);
    CHECK(std::abs(draw.beta(2) - 1.5) < 1e-3);
  }

  SUBCASE("draw moments match the weighted-ridge posterior") {
    const int n = 50, p = 3;
    MspState s = msp_init(cfg, p, rng);
    s.atom_mu = {0.0, 0.9};
    s.assignments = {0, 1, 0};
    s.local_scales = {0.2, 0.7, 0.05};
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd g(n), phi(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
      g(i) = 0.3 * X(i, 0) + rng.normal();
      phi(i) = 0.4 + rng.uniform();
    }
    const double gamma0 = -2.2, lambda0 = 2.42;

    // Independent oracle: assemble the precision and mean directly.
    Eigen::MatrixXd Xt(n, p + 1);
    Xt.col(0).setOnes();
    Xt.rightCols(p) = X;
    Eigen::MatrixXd A = Xt.transpose() * phi.asDiagonal() * Xt / sigma2;
    Eigen::VectorXd b = Xt.transpose() * (phi.asDiagonal() * g) / sigma2;
    A(0, 0) += lambda0;
    b(0) += lambda0 * gamma0;
    for (int j = 0; j < p; ++j) {
      A(j + 1, j + 1) += 1.0 / s.local_scales[j];
      b(j + 1) += s.atom_mu[s.assignments[j]] / s.local_scales[j];
    }
    const Eigen::VectorXd post_mean = A.ldlt().solve(b);
    const Eigen::MatrixXd post_cov = A.inverse();

    const int reps = 100000;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p + 1);
    std::vector<double> gamma_draws(reps);
    for (int r = 0; r < reps; ++r) {
      const CoefState d = update_coefficients(s, g, phi, X, sigma2, gamma0,
                                              lambda0, rng);
      acc(0) += d.gamma;
      acc.tail(p) += d.beta;
      gamma_draws[r] = d.gamma;
    }
    acc /= reps;
    for (int k = 0; k <= p; ++k) {
      const double se = std::sqrt(post_cov(k, k) / reps);
      CHECK(std::abs(acc(k) - post_mean(k)) < 4.0 * se);
    }
    CHECK(testutil::sample_sd(gamma_draws) ==
          doctest::Approx(std::sqrt(post_cov(0, 0))).epsilon(0.02));
  }
}

TEST_CASE("conditional construction commutes with coefficient permutation") {
  MspConfig cfg;
  cfg.T = 3;
  RngStream rng(19, 0);
  const int n = 25, p = 4;
  MspState s = msp_init(cfg, p, rng);
  s.assignments = {0, 1, 2, 1};
  s.local_scales = {0.3, 0.9, 0.1, 0.5};
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd g(n), phi(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    g(i) = rng.normal();
    phi(i) = 0.5 + rng.uniform();
  }

  const std::vector<int> perm = {2, 0, 3, 1};
  MspState sp = s;
  Eigen::MatrixXd Xp(n, p);
  for (int j = 0; j < p; ++j) {
    sp.assignments[j] = s.assignments[perm[j]];
    sp.local_scales[j] = s.local_scales[perm[j]];
    Xp.col(j) = X.col(perm[j]);
  }

  const CoefConditional a = coef_full_conditional(s, g, phi, X, kSigma2, -2.2, 2.42);
  const CoefConditional b = coef_full_conditional(sp, g, phi, Xp, kSigma2, -2.2, 2.42);
  CHECK(std::abs(a.mean(0) - b.mean(0)) < 1e-9);
  for (int j = 0; j < p; ++j) {
    CHECK(std::abs(a.mean(perm[j] + 1) - b.mean(j + 1)) < 1e-9);
  }
}

TEST_CASE("shrinkage-block gibbs leaves the prior invariant") {
  // Successive-substitution consistency for the whole step-(e) block at
  // small scale: alternate [draw pseudo-data given coefficients] with [run
  // every conditional update]; the coefficient marginals must stay in the
  // prior. Compared against direct prior draws on first and second moments.
  MspConfig cfg;
  cfg.T = 5;
  const int p = 5, n = 20;
  const double gamma0 = -2.2, lambda0 = 2.42;
  RngStream rng(23, 0);

  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  }
  X.rowwise() -= X.colwise().mean();  // the block assumes centered predictors

  const int cycles = 20000;

  // Direct prior draws.
  std::vector<std::vector<double>> prior_beta(p), prior_beta2(p);
  std::vector<double> prior_gamma(cycles), prior_gamma2(cycles);
  for (int r = 0; r < cycles; ++r) {
    const PriorDraw d = draw_prior(cfg, p, gamma0, lambda0, rng);
    prior_gamma[r] = d.coef.gamma;
    prior_gamma2[r] = d.coef.gamma * d.coef.gamma;
    for (int j = 0; j < p; ++j) {
      prior_beta[j].push_back(d.coef.beta(j));
      prior_beta2[j].push_back(d.coef.beta(j) * d.coef.beta(j));
    }
  }

  // Successive substitution.
  PriorDraw cur = draw_prior(cfg, p, gamma0, lambda0, rng);
  std::vector<std::vector<double>> chain_beta(p), chain_beta2(p);
  std::vector<double> chain_gamma(cycles), chain_gamma2(cycles);
  Eigen::VectorXd g(n), phi(n);
  for (int r = 0; r < cycles; ++r) {
    const Eigen::VectorXd eta =
        (X * cur.coef.beta).array() + cur.coef.gamma;
    for (int i = 0; i < n; ++i) {
      phi(i) = gamma_sample(0.5 * kNu, 2.0 / kNu, rng);
      g(i) = eta(i) + std::sqrt(kSigma2 / phi(i)) * rng.normal();
    }
    update_assignments(cur.state, cur.coef.beta, rng);
    update_sticks(cur.state, cfg, rng);
    update_atoms(cur.state, cfg, cur.coef.beta, rng);
    update_local_scales(cur.state, cur.coef.beta, rng);
    cur.coef = update_coefficients(cur.state, g, phi, X, kSigma2, gamma0,
                                   lambda0, rng);

    chain_gamma[r] = cur.coef.gamma;
    chain_gamma2[r] = cur.coef.gamma * cur.coef.gamma;
    for (int j = 0; j < p; ++j) {
      chain_beta[j].push_back(cur.coef.beta(j));
      chain_beta2[j].push_back(cur.coef.beta(j) * cur.coef.beta(j));
    }
  }

  const auto agree = [](const std::vector<double>& direct,
                        const std::vector<double>& chain) {
    const double se_d = testutil::iid_se(direct);
    const double se_c = testutil::batch_means_se(chain, 100);
    const double gap = std::abs(testutil::sample_mean(direct) -
                                testutil::sample_mean(chain));
    return gap < 4.0 * std::sqrt(se_d * se_d + se_c * se_c);
  };

  CHECK(agree(prior_gamma, chain_gamma));
  CHECK(agree(prior_gamma2, chain_gamma2));
  for (int j = 0; j < p; ++j) {
    CAPTURE(j);
    CHECK(agree(prior_beta[j], chain_beta[j]));
    CHECK(agree(prior_beta2[j], chain_beta2[j]));
  }
}

TEST_CASE("state invariants survive a long mixed update sequence") {
  MspConfig cfg;  // production defaults: T = 50
  RngStream rng(29, 0);
  const int p = 12;
  MspState s = msp_init(cfg, p, rng);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta(j) = rng.normal() * 0.5;

  for (int r = 0; r < 2000; ++r) {
    update_assignments(s, beta, rng);
    update_sticks(s, cfg, rng);
    update_atoms(s, cfg, beta, rng);
    update_local_scales(s, beta, rng);

    CHECK(s.atom_mu[0] == 0.0);
    CHECK(weight_sum(s) == 1.0);
    CHECK(tail_weight(s) < 1e-6);
    for (double w : s.weights) CHECK(w >= 0.0);
    for (double t : s.atom_tau) CHECK(t > 0.0);
    for (double psi : s.local_scales) CHECK(psi > 0.0);
    for (int c : s.assignments) {
      CHECK(c >= 0);
      CHECK(c < cfg.T);
    }
  }
}
