#include "aspr/mixture_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aspr/mathutil.hpp"
#include "aspr/samplers.hpp"

namespace aspr {

namespace {

// Two-means split used to initialize responsibilities: a handful of Lloyd
// iterations from two jittered data points. Cheap and good enough to put the
// two components on opposite sides of the data.
std::vector<int> two_means(const Eigen::MatrixXd& Y, RngStream& rng) {
  const int n = static_cast<int>(Y.rows());
  int i0 = static_cast<int>(rng.uniform() * n);
  int i1 = static_cast<int>(rng.uniform() * n);
  if (i1 == i0) i1 = (i0 + 1 + static_cast<int>(rng.uniform() * (n - 1))) % n;
  Eigen::VectorXd c0 = Y.row(i0);
  Eigen::VectorXd c1 = Y.row(i1);
  std::vector<int> assign(n, 0);
  for (int sweep = 0; sweep < 10; ++sweep) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const double d0 = (Y.row(i).transpose() - c0).squaredNorm();
      const double d1 = (Y.row(i).transpose() - c1).squaredNorm();
      const int a = d1 < d0 ? 1 : 0;
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(Y.cols());
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(Y.cols());
    int n0 = 0;
    for (int i = 0; i < n; ++i) {
      if (assign[i] == 0) {
        s0 += Y.row(i).transpose();
        ++n0;
      } else {
        s1 += Y.row(i).transpose();
      }
    }
    if (n0 == 0 || n0 == n) {
      // Degenerate split; restart from fresh random centers.
      i0 = static_cast<int>(rng.uniform() * n);
      i1 = (i0 + 1 + static_cast<int>(rng.uniform() * (n - 1))) % n;
      c0 = Y.row(i0);
      c1 = Y.row(i1);
      continue;
    }
    c0 = s0 / n0;
    c1 = s1 / (n - n0);
    if (!changed) break;
  }
  return assign;
}

struct EmRun {
  std::array<ComponentParams, 2> components;
  double weight = 0.0;
  Eigen::MatrixXd resp;
  std::vector<double> trace;
  bool converged = false;
  bool collapsed = false;
  int n_iter = 0;
};

// One EM run from a k-means-style start. Sets collapsed instead of throwing
// when a component loses the mass it needs for a full-rank covariance.
EmRun run_once(const Eigen::MatrixXd& Y, const EmOptions& opts, RngStream& rng) {
  const int n = static_cast<int>(Y.rows());
  const int s = static_cast<int>(Y.cols());
  EmRun run;

  const std::vector<int> assign = two_means(Y, rng);
  run.resp.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    // Soft start with a little jitter so ties between restarts decorrelate.
    const double u = 0.8 + 0.15 * rng.uniform();
    const double r0 = assign[i] == 0 ? u : 1.0 - u;
    run.resp(i, 0) = r0;
    run.resp(i, 1) = 1.0 - r0;
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // M step from current responsibilities.
    const double n0 = run.resp.col(0).sum();
    const double n1 = run.resp.col(1).sum();
    if (n0 < s + 2 || n1 < s + 2) {
      run.collapsed = true;
      return run;
    }
    run.weight = n0 / n;
    for (int h = 0; h < 2; ++h) {
      const Eigen::VectorXd w = run.resp.col(h);
      const double nh = h == 0 ? n0 : n1;
      const Eigen::VectorXd mu = (Y.transpose() * w) / nh;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(s, s);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd d = Y.row(i).transpose() - mu;
        cov.noalias() += w(i) * d * d.transpose();
      }
      cov /= nh;
      // Ridge keeps the Cholesky alive when a component tightens onto a
      // near-degenerate cloud; negligible at the scale of real covariances.
      cov.diagonal().array() += 1e-8 * std::max(1.0, cov.trace() / s);
      run.components[h].theta = mu;
      run.components[h].sigma = SpdMatrix(cov);
    }

    // E step, which also scores the parameters just produced.
    const double ll = mixture_loglik(Y, run.components, run.weight, &run.resp);
    run.trace.push_back(ll);
    run.n_iter = iter;
    if (std::isfinite(prev_ll) &&
        std::abs(ll - prev_ll) <= opts.tol * (std::abs(prev_ll) + 1.0)) {
      run.converged = true;
      break;
    }
    prev_ll = ll;
  }
  return run;
}

}  // namespace

double mixture_loglik(const Eigen::MatrixXd& Y,
                      const std::array<ComponentParams, 2>& components,
                      double weight, Eigen::MatrixXd* responsibilities) {
  const int n = static_cast<int>(Y.rows());
  if (responsibilities != nullptr) responsibilities->resize(n, 2);
  const double lw0 = std::log(weight);
  const double lw1 = std::log1p(-weight);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd y = Y.row(i).transpose();
    const double l0 = lw0 + mvn_logpdf(y, components[0].theta, components[0].sigma);
    const double l1 = lw1 + mvn_logpdf(y, components[1].theta, components[1].sigma);
    const double lse = log_sum_exp(l0, l1);
    total += lse;
    if (responsibilities != nullptr) {
      (*responsibilities)(i, 0) = std::exp(l0 - lse);
      (*responsibilities)(i, 1) = std::exp(l1 - lse);
    }
  }
  return total;
}

MixtureFit em_fit(const Eigen::MatrixXd& Y, const EmOptions& opts, RngStream& rng) {
  if (Y.rows() < 2 * (Y.cols() + 2)) {
    throw std::invalid_argument(
        "em_fit: need at least 2*(s+2) rows to fit two full covariance components");
  }
  if (opts.n_restarts < 1) {
    throw std::invalid_argument("em_fit: n_restarts must be positive");
  }

  bool have_best = false;
  EmRun best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.n_restarts; ++r) {
    RngStream sub = rng.split(static_cast<uint64_t>(r));
    EmRun run = run_once(Y, opts, sub);
    if (run.collapsed || run.trace.empty()) continue;
    if (run.trace.back() > best_ll) {
      best_ll = run.trace.back();
      best = std::move(run);
      have_best = true;
    }
  }
  if (!have_best) {
    throw std::runtime_error(
        "em_fit: every restart collapsed a component; data may not support "
        "two full-covariance components");
  }

  MixtureFit fit;
  fit.components = best.components;
  fit.weight = best.weight;
  fit.responsibilities = best.resp;
  fit.loglik_trace = best.trace;
  fit.converged = best.converged;
  fit.n_iter = best.n_iter;
  return label_minority(std::move(fit));
}

MixtureFit label_minority(MixtureFit fit) {
  bool swap = fit.weight > 0.5;
  if (fit.weight == 0.5) {
    swap = fit.components[0].theta(0) > fit.components[1].theta(0);
  }
  if (swap) {
    std::swap(fit.components[0], fit.components[1]);
    fit.weight = 1.0 - fit.weight;
    fit.responsibilities.col(0).swap(fit.responsibilities.col(1));
  }
  return fit;
}

std::vector<int> map_allocate(const MixtureFit& fit) {
  std::vector<int> z(fit.responsibilities.rows());
  for (int i = 0; i < fit.responsibilities.rows(); ++i) {
    z[i] = fit.responsibilities(i, 0) > 0.5 ? 1 : 0;
  }
  return z;
}

}  // namespace aspr
