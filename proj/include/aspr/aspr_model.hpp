#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "aspr/mixture_em.hpp"
#include "aspr/msp_prior.hpp"
#include "aspr/rng.hpp"
#include "aspr/spd_matrix.hpp"

namespace aspr {

// Degrees of freedom of the t approximation to the logistic distribution and
// the matching scale: the t variance sigma2*nu/(nu-2) equals the logistic
// variance pi^2/3.
inline constexpr double kNu = 7.3;
inline constexpr double kSigma2 =
    std::numbers::pi * std::numbers::pi * (kNu - 2.0) / (3.0 * kNu);

// Outcomes in original units; predictors stored centered with the removed
// column means retained so reported odds ratios refer to the raw coding.
struct AsprData {
  Eigen::MatrixXd Y;
  Eigen::MatrixXd X;
  Eigen::VectorXd x_offsets;
  std::vector<std::string> outcome_names;
  std::vector<std::string> predictor_names;
};

// Validates dimensions and finiteness, centers X, autogenerates names when
// none are given.
AsprData make_aspr_data(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                        std::vector<std::string> outcome_names = {},
                        std::vector<std::string> predictor_names = {});

// lambda0 is the PRECISION of the intercept prior. plugin mode freezes the
// component parameters (at EM estimates) and samples only the regression.
struct AsprPriors {
  Eigen::VectorXd theta0;
  double psi0 = 1.0;
  double rho0 = 0.0;
  SpdMatrix sigma0;
  double gamma0 = -2.20;
  double lambda0 = 2.42;
  MspConfig msp;
  bool plugin = false;
  std::array<ComponentParams, 2> plugin_components;
};

// Sample-moment component prior plus the elicited regression prior: a 10%
// baseline adverse probability with 95% prior interval (3%, 28.5%).
AsprPriors default_priors(const AsprData& data);

// How step (b) turns the linear predictor into a membership probability.
// kLogistic is the model definition; kProbitGivenPhi conditions on the
// current t-mixture scales, making the augmented joint exact — used by the
// sampler-validation tests only.
enum class WeightLink { kLogistic, kProbitGivenPhi };

struct ChainConfig {
  int n_iter = 11000;
  int burn_in = 1000;
  int thin = 10;
  std::uint64_t seed = 0;
  WeightLink link = WeightLink::kLogistic;
};

// Everything one Gibbs cycle mutates. components[0] is the adverse class
// (z_i = 1), components[1] the healthy class. sign(g_i) matches z_i.
struct ChainState {
  std::array<ComponentParams, 2> components;
  std::vector<int> z;
  Eigen::VectorXd g;
  Eigen::VectorXd phi;
  CoefState coef;
  MspState msp;
};

// Thinned post-burn-in draws plus per-iteration diagnostics.
struct PosteriorSamples {
  int n_subjects = 0;
  std::vector<std::string> predictor_names;
  std::vector<ComponentParams> adverse;   // one entry per stored draw
  std::vector<ComponentParams> healthy;
  Eigen::VectorXd gamma;
  Eigen::MatrixXd beta;        // draws x p
  Eigen::MatrixXd z;           // draws x n, entries 0/1
  Eigen::VectorXd omega_bar;   // training-sample mean adverse weight per draw
  std::vector<double> minority_frac;  // every iteration, length n_iter
  int burn_in = 0;
  double max_tail_weight = 0.0;
};

double omega1(const Eigen::VectorXd& x, const CoefState& coef);

Eigen::VectorXd linear_predictor(const CoefState& coef, const Eigen::MatrixXd& X);

// The five Gibbs blocks. Exposed individually so conjugacy and
// joint-distribution tests can drive them directly.
void gibbs_step_components(ChainState& state, const AsprData& data,
                           const AsprPriors& priors, RngStream& rng);
void gibbs_step_impute_z(ChainState& state, const AsprData& data, WeightLink link,
                         RngStream& rng);
void gibbs_step_augment_g(ChainState& state, const AsprData& data, RngStream& rng);
void gibbs_step_update_phi(ChainState& state, const AsprData& data, RngStream& rng);
void gibbs_step_coefficients(ChainState& state, const AsprData& data,
                             const AsprPriors& priors, RngStream& rng);

// One full cycle (a)-(e); (a) is skipped in plugin mode.
void gibbs_cycle(ChainState& state, const AsprData& data, const AsprPriors& priors,
                 WeightLink link, RngStream& rng);

// Conjugate posterior of one component given its members; n_h = 0 returns
// the prior. Exposed for the conjugacy oracle tests.
struct NiwParams {
  Eigen::VectorXd theta;
  double psi = 0.0;
  double rho = 0.0;
  Eigen::MatrixXd sigma;
};
NiwParams niw_posterior(const Eigen::MatrixXd& Y_members, const AsprPriors& priors);

PosteriorSamples run_chain(const AsprData& data, const AsprPriors& priors,
                           const ChainConfig& config);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double q975 = 0.0;
};

// Mean, SD, central 95% and 90% quantiles for every stored parameter
// (components, intercept, coefficients; not z). Requires >= 100 draws.
std::vector<SummaryRow> posterior_summary(const PosteriorSamples& samples);

// Fraction of stored draws with |beta_j| > eps, per predictor.
Eigen::VectorXd effect_probability(const PosteriorSamples& samples, double eps);

// Per-subject posterior probability of the healthy class, mean of (1 - z_i).
Eigen::VectorXd allocation_probability(const PosteriorSamples& samples);

// Posterior predictive density on grid rows, averaging the two-component
// mixture over draws with the stored training-average weights.
Eigen::VectorXd posterior_predictive_density(const PosteriorSamples& samples,
                                             const Eigen::MatrixXd& grid);

// Rebuilds omega_bar from stored (gamma, beta) and a centered predictor
// matrix; needed after loading samples from CSV, which omits it.
void recompute_omega_bar(PosteriorSamples& samples, const Eigen::MatrixXd& X);

// CSV round trip: one row per draw, columns theta[h][k], Sigma[h][k][l]
// (upper triangle), gamma, beta[name], optionally z[i].
void write_samples_csv(const PosteriorSamples& samples, const std::string& path,
                       bool store_z);
PosteriorSamples read_samples_csv(const std::string& path);

}  // namespace aspr
