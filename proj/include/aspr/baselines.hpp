#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aspr/aspr_model.hpp"
#include "aspr/rng.hpp"

namespace aspr {

// Maximum-likelihood logistic regression fit. estimates(0) is the intercept.
// separation means the coefficients diverged (complete or quasi-complete
// separation); the Wald intervals are then meaningless and flagged as such.
struct LogisticFit {
  Eigen::VectorXd estimates;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  double level = 0.90;
  bool converged = false;
  bool separation = false;
  int n_iter = 0;
};

// Elastic-net regularization path. Coefficients are reported on the original
// predictor scale even though the solver standardizes internally.
struct PenalizedPath {
  Eigen::VectorXd lambda;     // descending
  double a = 1.0;             // L1 mixing weight; 1 = lasso
  Eigen::VectorXd intercepts;
  Eigen::MatrixXd coefs;      // one row per lambda, one column per predictor
  Eigen::VectorXd deviance;   // training binomial deviance per lambda
  std::vector<bool> converged;
};

struct CvResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd mean_deviance;  // held-out, per lambda
  double lambda_star = 0.0;
  int star_index = 0;
};

// Adverse if the outcome falls on the flagged side of the threshold
// (below = true means y < threshold is adverse, the usual clinical coding).
struct CutoffSpec {
  int outcome = 0;
  double threshold = 0.0;
  bool below = true;
};

enum class CutoffCombine { kUnion, kIntersection };

std::vector<int> dichotomize_cutoff(const Eigen::MatrixXd& Y,
                                    const std::vector<CutoffSpec>& cutoffs,
                                    CutoffCombine combine = CutoffCombine::kUnion);

// Parses "gest<259,bw<2500" against the outcome names; '>' marks outcomes
// that are adverse above the threshold.
std::vector<CutoffSpec> parse_cutoffs(const std::string& text,
                                      const std::vector<std::string>& outcome_names);

LogisticFit logit_mle(const std::vector<int>& z, const Eigen::MatrixXd& X,
                      double level = 0.90);

// 100 log-spaced values from the smallest lambda with an all-zero solution
// down to ratio times it.
Eigen::VectorXd default_lambda_grid(const std::vector<int>& z, const Eigen::MatrixXd& X,
                                    double a, int count = 100, double ratio = 1e-4);

// Cyclic coordinate descent on the penalized quadratic approximation of the
// logistic log likelihood, warm-started along the descending grid.
PenalizedPath logit_penalized(const std::vector<int>& z, const Eigen::MatrixXd& X,
                              double a, const Eigen::VectorXd& lambda_grid);

// Largest stationarity violation at grid point k, measured on the solver's
// standardized scale: zero coefficients must have |gradient| <= a*lambda,
// active ones must sit exactly on the subgradient manifold.
double kkt_violation(const PenalizedPath& path, int k, const std::vector<int>& z,
                     const Eigen::MatrixXd& X);

// Stratified k-fold selection of lambda by minimal held-out deviance. A fold
// that ends up one-class is reshuffled with a fresh substream, at most five
// times.
CvResult cv_select_lambda(const std::vector<int>& z, const Eigen::MatrixXd& X, double a,
                          int folds, RngStream& rng);

enum class FirstStage { kTruth, kClassification, kCutoff };
enum class SecondStage { kStandard, kLasso, kElasticNet };

struct TwoStageOptions {
  FirstStage first = FirstStage::kClassification;
  SecondStage second = SecondStage::kStandard;
  std::vector<CutoffSpec> cutoffs;
  CutoffCombine combine = CutoffCombine::kUnion;
  double enet_a = 0.5;
  int cv_folds = 10;
  double level = 0.90;  // CI level for the standard second stage's selection
};

struct TwoStageFit {
  std::vector<int> z;            // first-stage labels
  double intercept = 0.0;
  Eigen::VectorXd estimates;     // p slope estimates
  std::vector<bool> selected;    // p selection flags under the stage's rule
  LogisticFit mle;               // standard second stage only
  PenalizedPath path;            // penalized second stages only
  double lambda_star = 0.0;
};

// Dichotomize-then-regress comparator. z_true is required for the truth
// first stage and ignored otherwise.
TwoStageFit two_stage(const AsprData& data, const TwoStageOptions& opts,
                      const std::vector<int>* z_true, RngStream& rng);

}  // namespace aspr
