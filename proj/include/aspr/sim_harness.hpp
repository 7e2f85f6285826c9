#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "aspr/aspr_model.hpp"
#include "aspr/baselines.hpp"
#include "aspr/mixture_em.hpp"
#include "aspr/rng.hpp"

namespace aspr {

// Replicated-data study design. Defaults reproduce the benchmark shape:
// two outcomes on the birth-outcome scale (gestation days, weight grams),
// a 10% adverse subpopulation, and binary predictors fixed across
// replicates.
struct SimDesign {
  SimDesign();  // fills the component parameters below

  int n = 813;
  int p = 100;
  int nonnull_count = 10;
  double nonnull_value = 0.8;
  double adverse_fraction = 0.10;
  ComponentParams adverse;
  ComponentParams healthy;

  std::string predictor_file;  // empty = synthetic correlated binary columns
  double maf = 0.3;
  double block_corr = 0.5;
  int block_size = 10;

  int replicates = 100;
  std::uint64_t base_seed = 21u;

  int n_iter = 11000;
  int burn_in = 1000;
  int thin = 10;
  double eps = 0.1;
  std::vector<CutoffSpec> cutoffs;  // first-stage clinical thresholds
};

SimDesign design_from_config(const std::map<std::string, std::string>& cfg);

// nonnull_count leading entries at nonnull_value, zero elsewhere.
Eigen::VectorXd true_coefficients(const SimDesign& design);

// Binary 0/1 predictor columns from thresholded block-equicorrelated
// Gaussians; column j is one with probability maf[j].
Eigen::MatrixXd gen_correlated_snps(int n, int p, const Eigen::VectorXd& maf,
                                    double block_corr, int block_size, RngStream& rng);

// The design's predictor matrix: read from predictor_file when set,
// otherwise generated once from the base seed (fixed across replicates).
Eigen::MatrixXd design_predictors(const SimDesign& design);

struct SimulatedData {
  AsprData data;
  std::vector<int> z_true;
  double gamma_true = 0.0;  // intercept solved for the target adverse fraction
};

SimulatedData simulate_dataset(const SimDesign& design, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& beta_true, RngStream& rng);

// (nonnull MSE, null MSE) of the estimates against the truth.
std::pair<double, double> mse_split(const Eigen::VectorXd& estimates,
                                    const Eigen::VectorXd& truth,
                                    const std::vector<bool>& nonnull);

// (TPR, FPR) of a selection against the true nonnull set.
std::pair<double, double> selection_metrics(const std::vector<bool>& selected,
                                            const std::vector<bool>& truth_nonnull);

struct RocCurve {
  Eigen::VectorXd eps;  // ascending thresholds
  Eigen::VectorXd fpr;
  Eigen::VectorXd tpr;
  double auc = 0.0;
};

Eigen::VectorXd default_eps_grid(const Eigen::VectorXd& effects, int count = 200);

// Rates on the given grid under the rule "selected iff |effect| > eps".
// The AUC is computed on the complete staircase — every distinct effect
// magnitude as a threshold, with (0,0) and (1,1) endpoints — so it equals
// the tie-averaged rank statistic no matter how coarse the plotting grid is.
RocCurve roc_from_effects(const Eigen::VectorXd& effects,
                          const std::vector<bool>& truth_nonnull,
                          const Eigen::VectorXd& eps_grid);

struct MethodSpec {
  enum class Kind { kAsprFull, kAsprPlugin, kTwoStage };
  std::string name;
  Kind kind = Kind::kAsprFull;
  TwoStageOptions two_stage;
};

// Tokens: "aspr", "aspr-plugin", or first-second with first in
// {truth, class, cutoff} and second in {standard, lasso, enet}.
MethodSpec make_method(const std::string& token, const SimDesign& design);

struct MetricsRow {
  std::string method;
  double mse_nonnull = 0.0;
  double mse_null = 0.0;
  double len_nonnull = 0.0;  // mean 90% interval length; NaN when undefined
  double len_null = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  int failures = 0;  // replicates excluded from the averages
};

struct StudyResult {
  std::vector<MetricsRow> rows;     // one per method
  std::vector<RocCurve> curves;     // replicate-averaged, parallel to rows
};

// Runs every method on every replicate; per-replicate streams are derived
// from the base seed so results are identical at any thread count.
// Replicate failures are reported on stderr and excluded with a count.
StudyResult run_study(const SimDesign& design, const std::vector<MethodSpec>& methods,
                      int threads = 1);

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
void write_roc_csv(const StudyResult& result, const std::string& path);

}  // namespace aspr
