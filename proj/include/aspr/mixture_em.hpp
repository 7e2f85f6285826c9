#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "aspr/rng.hpp"
#include "aspr/spd_matrix.hpp"

namespace aspr {

// Mean and covariance of one mixture component, in the units of the outcomes.
struct ComponentParams {
  Eigen::VectorXd theta;
  SpdMatrix sigma;
};

// Two-component multivariate normal mixture fit. After label_minority,
// component 0 is the minority (adverse) component with weight <= 0.5.
struct MixtureFit {
  std::array<ComponentParams, 2> components;
  double weight = 0.0;                 // mixing proportion of component 0
  Eigen::MatrixXd responsibilities;    // n x 2, rows sum to 1
  std::vector<double> loglik_trace;    // nondecreasing along the kept run
  bool converged = false;
  int n_iter = 0;
};

struct EmOptions {
  int n_restarts = 10;
  double tol = 1e-8;   // relative log-likelihood change
  int max_iter = 500;
};

// Maximum-likelihood fit by EM, best of n_restarts by final log likelihood.
// Restarts are seeded from split substreams of rng, so the winner does not
// depend on evaluation order. Throws if every restart collapses a component.
MixtureFit em_fit(const Eigen::MatrixXd& Y, const EmOptions& opts, RngStream& rng);

// Relabels so component 0 is the minority (weight <= 0.5); an exact tie is
// broken by putting the smaller first-coordinate mean first. Idempotent.
MixtureFit label_minority(MixtureFit fit);

// MAP allocation: 1 where the adverse-component responsibility exceeds 0.5.
// An exact 0.5 tie goes to the healthy group.
std::vector<int> map_allocate(const MixtureFit& fit);

// E-step responsibilities and total log likelihood for given parameters;
// exposed so stored responsibilities can be recomputed and checked.
double mixture_loglik(const Eigen::MatrixXd& Y,
                      const std::array<ComponentParams, 2>& components,
                      double weight, Eigen::MatrixXd* responsibilities);

}  // namespace aspr
