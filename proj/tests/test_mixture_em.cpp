#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "aspr/mixture_em.hpp"
#include "aspr/rng.hpp"
#include "aspr/samplers.hpp"
#include "test_util.hpp"

using namespace aspr;

namespace {

Eigen::MatrixXd two_component_data(int n, double weight, const Eigen::VectorXd& t1,
                                   const Eigen::VectorXd& t2, const SpdMatrix& s1,
                                   const SpdMatrix& s2, RngStream& rng,
                                   std::vector<int>* labels = nullptr) {
  Eigen::MatrixXd Y(n, t1.size());
  if (labels) labels->resize(n);
  for (int i = 0; i < n; ++i) {
    const bool first = rng.uniform() < weight;
    Y.row(i) = (first ? mvn_sample(t1, s1, rng) : mvn_sample(t2, s2, rng)).transpose();
    if (labels) (*labels)[i] = first ? 1 : 0;
  }
  return Y;
}

}  // namespace

TEST_CASE("single-normal data collapses to one effective component") {
  RngStream rng(3, 0);
  const int n = 400;
  Eigen::VectorXd mu(2);
  mu << 1.0, -2.0;
  Eigen::MatrixXd c(2, 2);
  c << 2.0, 0.5, 0.5, 1.0;
  const SpdMatrix cov(c);
  Eigen::MatrixXd Y(n, 2);
  for (int i = 0; i < n; ++i) Y.row(i) = mvn_sample(mu, cov, rng).transpose();

  const MixtureFit fit = em_fit(Y, EmOptions{}, rng);

  // Single-normal maximum likelihood: sample mean and 1/n covariance.
  const Eigen::RowVector2d ybar = Y.colwise().mean();
  const Eigen::MatrixXd centered = Y.rowwise() - ybar;
  const SpdMatrix mle_cov(Eigen::MatrixXd(centered.transpose() * centered / n));
  double mle_loglik = 0.0;
  for (int i = 0; i < n; ++i) {
    mle_loglik += mvn_logpdf(Y.row(i).transpose(), ybar.transpose(), mle_cov);
  }

  const double gain = fit.loglik_trace.back() - mle_loglik;
  CHECK(gain >= -1e-6);  // the mixture family nests the single normal
  // Best-of-restarts EM picks up a little spurious structure in finite
  // samples; the gain must stay negligible per observation (no real split).
  CHECK(gain / n < 0.05);
  // The fitted mixture's overall moments still match the single normal.
  const Eigen::VectorXd mix_mean = fit.weight * fit.components[0].theta +
                                   (1.0 - fit.weight) * fit.components[1].theta;
  CHECK((mix_mean - Y.colwise().mean().transpose()).norm() < 0.3);
}

TEST_CASE("well-separated mixture is recovered within tight relative error") {
  RngStream rng(5, 0);
  Eigen::VectorXd t1(2), t2(2);
  t1 << 0.0, 0.0;
  t2 << 6.0, 6.0;  // six pooled SDs apart per coordinate at unit variance
  const SpdMatrix unit = SpdMatrix::identity(2);
  const Eigen::MatrixXd Y = two_component_data(1000, 0.3, t1, t2, unit, unit, rng);

  const MixtureFit fit = em_fit(Y, EmOptions{}, rng);
  const double sep = (t2 - t1).norm();

  REQUIRE(fit.weight <= 0.5);
  CHECK(std::abs(fit.weight - 0.3) < 0.05);
  CHECK((fit.components[0].theta - t1).norm() / sep < 0.05);
  CHECK((fit.components[1].theta - t2).norm() / sep < 0.05);
  for (int h = 0; h < 2; ++h) {
    CHECK(fit.components[h].sigma(0, 0) == doctest::Approx(1.0).epsilon(0.15));
    CHECK(fit.components[h].sigma(1, 1) == doctest::Approx(1.0).epsilon(0.15));
  }
  CHECK(fit.converged);
}

TEST_CASE("log likelihood is monotone along every kept run") {
  RngStream rng(7, 0);
  for (int rep = 0; rep < 25; ++rep) {
    RngStream data_rng = rng.split(rep);
    // Random two-component problems with varying separation and weight.
    Eigen::VectorXd t1(2), t2(2);
    t1 << 0.0, 0.0;
    const double gap = 1.0 + 4.0 * data_rng.uniform();
    t2 << gap, -gap;
    const double w = 0.15 + 0.5 * data_rng.uniform();
    const Eigen::MatrixXd Y =
        two_component_data(150, w, t1, t2, SpdMatrix::identity(2),
                           SpdMatrix::identity(2), data_rng);
    RngStream fit_rng = rng.split(1000 + rep);
    const MixtureFit fit = em_fit(Y, EmOptions{}, fit_rng);
    for (size_t k = 1; k < fit.loglik_trace.size(); ++k) {
      CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-8);
    }
  }
}

TEST_CASE("responsibilities recompute to their stored values and sum to one") {
  RngStream rng(9, 0);
  Eigen::VectorXd t1(2), t2(2);
  t1 << 0.0, 0.0;
  t2 << 3.0, 3.0;
  const Eigen::MatrixXd Y = two_component_data(
      200, 0.4, t1, t2, SpdMatrix::identity(2), SpdMatrix::identity(2), rng);
  const MixtureFit fit = em_fit(Y, EmOptions{}, rng);

  for (int i = 0; i < Y.rows(); ++i) {
    CHECK(std::abs(fit.responsibilities.row(i).sum() - 1.0) < 1e-10);
  }
  Eigen::MatrixXd resp;
  const double ll = mixture_loglik(Y, fit.components, fit.weight, &resp);
  CHECK(std::abs(ll - fit.loglik_trace.back()) < 1e-9);
  CHECK((resp - fit.responsibilities).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("label_minority ordering and tie-break") {
  ComponentParams low, high;
  low.theta = Eigen::VectorXd::Constant(2, 237.0);
  low.sigma = SpdMatrix::identity(2);
  high.theta = Eigen::VectorXd::Constant(2, 273.0);
  high.sigma = SpdMatrix::identity(2);

  MixtureFit fit;
  fit.components = {high, low};
  fit.responsibilities = Eigen::MatrixXd::Zero(0, 2);

  SUBCASE("majority-first input is swapped") {
    fit.weight = 0.7;
    const MixtureFit out = label_minority(fit);
    CHECK(out.weight == doctest::Approx(0.3));
    CHECK(out.components[0].theta(0) == 237.0);
  }
  SUBCASE("minority-first input is unchanged") {
    fit.weight = 0.3;
    const MixtureFit out = label_minority(fit);
    CHECK(out.weight == doctest::Approx(0.3));
    CHECK(out.components[0].theta(0) == 273.0);
  }
  SUBCASE("exact tie puts the smaller first coordinate first") {
    fit.weight = 0.5;
    const MixtureFit out = label_minority(fit);
    CHECK(out.components[0].theta(0) == 237.0);
  }
  SUBCASE("idempotent") {
    fit.weight = 0.7;
    const MixtureFit once = label_minority(fit);
    const MixtureFit twice = label_minority(once);
    CHECK(twice.weight == once.weight);
    CHECK(twice.components[0].theta == once.components[0].theta);
  }
}

TEST_CASE("map_allocate thresholds responsibilities at one half") {
  MixtureFit fit;
  fit.weight = 0.3;
  fit.components[0].theta = Eigen::VectorXd::Zero(1);
  fit.components[0].sigma = SpdMatrix::identity(1);
  fit.components[1] = fit.components[0];
  fit.responsibilities.resize(3, 2);
  fit.responsibilities << 0.9, 0.1, 0.5, 0.5, 0.2, 0.8;
  const std::vector<int> z = map_allocate(fit);
  CHECK(z[0] == 1);
  CHECK(z[1] == 0);  // exact tie goes to the healthy group
  CHECK(z[2] == 0);
}

TEST_CASE("map allocation beats chance on mixture data") {
  RngStream rng(13, 0);
  Eigen::VectorXd t1(2), t2(2);
  t1 << 237.0, 2000.0;
  t2 << 273.0, 3180.0;
  Eigen::MatrixXd c1(2, 2), c2(2, 2);
  c1 << 830.0, 1000.0, 1000.0, 500000.0;
  c2 << 97.0, 2170.0, 2170.0, 235000.0;
  std::vector<int> truth;
  const Eigen::MatrixXd Y = two_component_data(600, 0.15, t1, t2, SpdMatrix(c1),
                                               SpdMatrix(c2), rng, &truth);
  const MixtureFit fit = em_fit(Y, EmOptions{}, rng);
  const std::vector<int> z = map_allocate(fit);
  int agree = 0;
  for (size_t i = 0; i < truth.size(); ++i) agree += z[i] == truth[i];
  const double accuracy = static_cast<double>(agree) / truth.size();
  CHECK(accuracy > 0.75);  // well above the 0.5 chance line
}

TEST_CASE("large-sample fit approaches the generating parameters") {
  RngStream rng(17, 0);
  Eigen::VectorXd t1(2), t2(2);
  t1 << 0.0, 0.0;
  t2 << 4.0, 4.0;
  Eigen::MatrixXd c(2, 2);
  c << 1.5, 0.4, 0.4, 0.8;
  const SpdMatrix cov(c);
  const Eigen::MatrixXd Y = two_component_data(5000, 0.25, t1, t2, cov, cov, rng);
  const MixtureFit fit = em_fit(Y, EmOptions{}, rng);

  CHECK(std::abs(fit.weight - 0.25) < 0.02);
  CHECK((fit.components[0].theta - t1).cwiseAbs().maxCoeff() < 0.1);
  CHECK((fit.components[1].theta - t2).cwiseAbs().maxCoeff() < 0.1);
  for (int h = 0; h < 2; ++h) {
    CHECK(fit.components[h].sigma(0, 0) == doctest::Approx(1.5).epsilon(0.06));
    CHECK(fit.components[h].sigma(1, 1) == doctest::Approx(0.8).epsilon(0.06));
    CHECK(fit.components[h].sigma(0, 1) == doctest::Approx(0.4).epsilon(0.25));
  }
}

TEST_CASE("too-few rows are rejected") {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Random(5, 2);
  RngStream rng(1, 0);
  CHECK_THROWS_AS(em_fit(Y, EmOptions{}, rng), std::invalid_argument);
}
