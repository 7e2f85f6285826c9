#pragma once

#include <Eigen/Dense>
#include <utility>

#include "aspr/rng.hpp"
#include "aspr/spd_matrix.hpp"

namespace aspr {

// Multivariate normal draw via the cached Cholesky factor of cov.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const SpdMatrix& cov,
                           RngStream& rng);

// Exact log density of N_s(y | mean, cov).
double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                  const SpdMatrix& cov);

// Inverse-Wishart draw by Bartlett decomposition; E[draw] = scale/(df-s-1)
// for df > s+1. Requires df >= s. Samples are assembled from triangular
// factors without inverting any full matrix.
SpdMatrix inv_wishart_sample(double df, const SpdMatrix& scale, RngStream& rng);

// Normal-inverse-Wishart draw: Sigma ~ IW(rho, Sigma0), theta | Sigma ~
// N(theta0, Sigma/psi).
std::pair<Eigen::VectorXd, SpdMatrix> niw_sample(const Eigen::VectorXd& theta0,
                                                 double psi, double rho,
                                                 const SpdMatrix& sigma0,
                                                 RngStream& rng);

enum class Truncate {
  kBelow,  // support (bound, +inf): truncated below at bound
  kAbove,  // support (-inf, bound): truncated above at bound
};

// Truncated normal draw. Inverse-CDF for mild truncation; switches to an
// exponential-proposal rejection sampler once the standardized bound exceeds
// 4, where the inverse CDF loses accuracy.
double trunc_normal_sample(double mean, double sd, double bound, Truncate side,
                           RngStream& rng);

// Gamma draw in the shape/scale convention: mean = shape * scale,
// variance = shape * scale^2.
double gamma_sample(double shape, double scale, RngStream& rng);

double beta_sample(double a, double b, RngStream& rng);

double chi_squared_sample(double df, RngStream& rng);

// Inverse-Gaussian draw (Michael-Schucany-Haas); mean mu, variance mu^3/lambda.
double inverse_gaussian_sample(double mu, double lambda, RngStream& rng);

// Log density of the double exponential with location mu and RATE tau:
// (tau/2) exp(-tau |x - mu|).
double de_logpdf(double x, double mu, double tau);

}  // namespace aspr
