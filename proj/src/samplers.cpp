#include "aspr/samplers.hpp"

#include <cmath>
#include <stdexcept>

#include "aspr/mathutil.hpp"

namespace aspr {

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const SpdMatrix& cov,
                           RngStream& rng) {
  if (cov.dim() != mean.size()) {
    throw std::invalid_argument("mvn_sample: mean/cov dimension mismatch");
  }
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + cov.cholesky_lower() * z;
}

double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                  const SpdMatrix& cov) {
  if (cov.dim() != mean.size() || y.size() != mean.size()) {
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  }
  const Eigen::VectorXd u =
      cov.cholesky_lower().triangularView<Eigen::Lower>().solve(y - mean);
  const double s = static_cast<double>(y.size());
  return -0.5 * (s * std::log(2.0 * M_PI) + cov.log_det() + u.squaredNorm());
}

SpdMatrix inv_wishart_sample(double df, const SpdMatrix& scale, RngStream& rng) {
  const int s = scale.dim();
  if (!(df >= s)) {
    throw std::invalid_argument("inv_wishart_sample: need df >= dim");
  }
  // Bartlett factor A of a Wishart(df, I) draw.
  Eigen::MatrixXd bart = Eigen::MatrixXd::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    bart(i, i) = std::sqrt(chi_squared_sample(df - i, rng));
    for (int j = 0; j < i; ++j) bart(i, j) = rng.normal();
  }
  // With Sigma^{-1} = L^{-T} A A' L^{-1} (L the scale factor), the draw is
  // Sigma = (L A^{-T})(L A^{-T})': triangular solves only.
  Eigen::MatrixXd t =
      bart.triangularView<Eigen::Lower>().solve(scale.cholesky_lower().transpose());
  return SpdMatrix(t.transpose() * t);
}

std::pair<Eigen::VectorXd, SpdMatrix> niw_sample(const Eigen::VectorXd& theta0,
                                                 double psi, double rho,
                                                 const SpdMatrix& sigma0,
                                                 RngStream& rng) {
  if (!(psi > 0.0)) throw std::invalid_argument("niw_sample: need psi > 0");
  SpdMatrix sigma = inv_wishart_sample(rho, sigma0, rng);
  SpdMatrix scaled(sigma.matrix() / psi);
  Eigen::VectorXd theta = mvn_sample(theta0, scaled, rng);
  return {std::move(theta), std::move(sigma)};
}

namespace {

// Standardized draw from N(0,1) restricted to (alpha, +inf).
double std_lower_truncated(double alpha, RngStream& rng) {
  if (alpha <= 4.0) {
    // Inverse CDF through the survival function, which stays accurate when
    // alpha is far in the left tail.
    const double sf_alpha = norm_sf(alpha);
    const double sf = sf_alpha * rng.uniform();
    return -norm_quantile(sf);
  }
  // Exponential-proposal rejection (Robert-style) for deep tail truncation.
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double x = alpha + rng.exponential(lambda);
    const double d = x - lambda;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
  }
}

}  // namespace

double trunc_normal_sample(double mean, double sd, double bound, Truncate side,
                           RngStream& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("trunc_normal_sample: need sd > 0");
  if (side == Truncate::kBelow) {
    const double alpha = (bound - mean) / sd;
    double draw = mean + sd * std_lower_truncated(alpha, rng);
    // Clamp away roundoff landing exactly on the bound.
    return draw > bound ? draw : std::nextafter(bound, std::numeric_limits<double>::infinity());
  }
  const double alpha = (mean - bound) / sd;
  double draw = mean - sd * std_lower_truncated(alpha, rng);
  return draw < bound ? draw : std::nextafter(bound, -std::numeric_limits<double>::infinity());
}

double gamma_sample(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("gamma_sample: need shape, scale > 0");
  }
  if (shape < 1.0) {
    // Boost the shape and correct with a power of a uniform.
    const double g = gamma_sample(shape + 1.0, 1.0, rng);
    return scale * g * std::pow(rng.uniform(), 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

double beta_sample(double a, double b, RngStream& rng) {
  const double x = gamma_sample(a, 1.0, rng);
  const double y = gamma_sample(b, 1.0, rng);
  return x / (x + y);
}

double chi_squared_sample(double df, RngStream& rng) {
  return gamma_sample(0.5 * df, 2.0, rng);
}

double inverse_gaussian_sample(double mu, double lambda, RngStream& rng) {
  if (!(mu > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("inverse_gaussian_sample: need mu, lambda > 0");
  }
  const double nu = rng.normal();
  const double y = nu * nu;
  const double x = mu + 0.5 * mu * mu * y / lambda -
                   0.5 * (mu / lambda) *
                       std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (rng.uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

double de_logpdf(double x, double mu, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("de_logpdf: need tau > 0");
  return std::log(0.5 * tau) - tau * std::abs(x - mu);
}

}  // namespace aspr
