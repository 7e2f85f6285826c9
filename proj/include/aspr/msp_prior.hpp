#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "aspr/rng.hpp"
#include "aspr/spd_matrix.hpp"

namespace aspr {

// Hyperparameters of the multiple shrinkage prior: a truncated stick-breaking
// mixture of double exponentials whose first atom is pinned at zero. Gamma
// parameters follow the shape/scale convention (mean = shape * scale) and d
// is the variance of the nonzero atom locations.
struct MspConfig {
  double c = 0.0;
  double d = 0.1507;
  double a0 = 30.0;
  double b0 = 30.0;
  double a1 = 6.5;
  double b1 = 6.5;
  double alpha = 1.0;
  int T = 50;
};

// Mutable sampler state for the shrinkage prior. atom_mu[0] == 0 always and
// sticks[T-1] == 1 (the truncation convention); weights sum to one exactly,
// the last entry absorbing the rounding remainder.
struct MspState {
  std::vector<double> atom_mu;       // T locations
  std::vector<double> atom_tau;      // T double-exponential rates, > 0
  std::vector<double> sticks;        // T stick fractions in (0,1], last = 1
  std::vector<double> weights;       // T mixture weights, sum exactly 1
  std::vector<int> assignments;      // p cluster indices in [0, T)
  std::vector<double> local_scales;  // p conditional variances psi_j > 0
};

// Intercept and coefficient vector on the log-odds scale.
struct CoefState {
  double gamma = 0.0;
  Eigen::VectorXd beta;
};

// Gaussian full conditional of (gamma, beta), intercept first.
struct CoefConditional {
  Eigen::VectorXd mean;
  SpdMatrix precision;
};

MspState msp_init(const MspConfig& cfg, int p, RngStream& rng);

// Unnormalized log posterior over clusters for one coefficient value:
// log pi_t + log DE(beta_j | mu_t, tau_t). Exposed for enumeration tests.
Eigen::VectorXd assignment_log_probs(const MspState& state, double beta_j);

// Reassigns every coefficient to a cluster with the local scale marginalized
// out, then redraws each psi_j from its conditional under the new assignment.
void update_assignments(MspState& state, const Eigen::VectorXd& beta, RngStream& rng);

// Conjugate Beta draws for the stick fractions given assignment counts;
// recomputes the weights.
void update_sticks(MspState& state, const MspConfig& cfg, RngStream& rng);

// Atom locations (t >= 1) from their Gaussian conditionals given the local
// scales, then rates from their Gamma conditionals with the local scales
// marginalized out. Empty clusters are refreshed from the prior.
void update_atoms(MspState& state, const MspConfig& cfg, const Eigen::VectorXd& beta,
                  RngStream& rng);

// 1/psi_j ~ InverseGaussian(tau/|beta_j - mu|, tau^2); a coefficient sitting
// exactly on its atom falls back to the prior exponential.
void update_local_scales(MspState& state, const Eigen::VectorXd& beta, RngStream& rng);

// Posterior mean and precision of (gamma, beta) for the weighted Gaussian
// pseudo-data model g_i ~ N(gamma + x_i'beta, sigma2/phi_i) with priors
// gamma ~ N(gamma0, 1/lambda0) and beta_j ~ N(mu_{c_j}, psi_j).
CoefConditional coef_full_conditional(const MspState& state, const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& phi,
                                      const Eigen::MatrixXd& X, double sigma2,
                                      double gamma0, double lambda0);

// One joint Gaussian draw of (gamma, beta) from the conditional above.
CoefState update_coefficients(const MspState& state, const Eigen::VectorXd& g,
                              const Eigen::VectorXd& phi, const Eigen::MatrixXd& X,
                              double sigma2, double gamma0, double lambda0,
                              RngStream& rng);

// Weight of the truncation remainder (the last, absorbing cluster).
double tail_weight(const MspState& state);

}  // namespace aspr
