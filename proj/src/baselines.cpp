#include "aspr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aspr/mathutil.hpp"
#include "aspr/mixture_em.hpp"

namespace aspr {

namespace {

constexpr double kProbClamp = 1e-5;       // IRLS weight floor, glmnet-style
constexpr double kSeparationBound = 15.0;  // |coef| beyond this = separated

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double binomial_deviance(const std::vector<int>& z, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    // -2*loglik written via log1pexp for stability at extreme eta
    dev += 2.0 * (log1pexp(eta(i)) - z[i] * eta(i));
  }
  return dev;
}

struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;  // population convention (1/n)
};

Standardized standardize(const Eigen::MatrixXd& X) {
  Standardized s;
  s.means = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - s.means.transpose();
  s.sds = (centered.array().square().colwise().mean()).sqrt();
  for (int j = 0; j < X.cols(); ++j) {
    if (s.sds(j) <= 0.0) {
      throw std::invalid_argument("penalized logistic: predictor column " +
                                  std::to_string(j + 1) + " is constant");
    }
  }
  s.X = centered.array().rowwise() / s.sds.transpose().array();
  return s;
}

void check_labels(const std::vector<int>& z, long n) {
  if (static_cast<long>(z.size()) != n) {
    throw std::invalid_argument("logistic regression: label/row count mismatch");
  }
  for (int v : z) {
    if (v != 0 && v != 1) {
      throw std::invalid_argument("logistic regression: labels must be 0/1");
    }
  }
}

}  // namespace

std::vector<int> dichotomize_cutoff(const Eigen::MatrixXd& Y,
                                    const std::vector<CutoffSpec>& cutoffs,
                                    CutoffCombine combine) {
  if (cutoffs.empty()) throw std::invalid_argument("dichotomize_cutoff: no cutoffs given");
  for (const auto& c : cutoffs) {
    if (c.outcome < 0 || c.outcome >= Y.cols()) {
      throw std::invalid_argument("dichotomize_cutoff: outcome index out of range");
    }
  }
  std::vector<int> z(Y.rows());
  for (long i = 0; i < Y.rows(); ++i) {
    bool any = false, all = true;
    for (const auto& c : cutoffs) {
      const double y = Y(i, c.outcome);
      const bool adverse = c.below ? y < c.threshold : y > c.threshold;
      any = any || adverse;
      all = all && adverse;
    }
    z[i] = (combine == CutoffCombine::kUnion ? any : all) ? 1 : 0;
  }
  return z;
}

std::vector<CutoffSpec> parse_cutoffs(const std::string& text,
                                      const std::vector<std::string>& outcome_names) {
  std::vector<CutoffSpec> specs;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    start = end + 1;
    if (item.empty()) continue;
    const auto op = item.find_first_of("<>");
    if (op == std::string::npos || op == 0 || op + 1 >= item.size()) {
      throw std::invalid_argument("cutoff '" + item + "' is not name<value or name>value");
    }
    CutoffSpec spec;
    const std::string name = item.substr(0, op);
    const auto hit = std::find(outcome_names.begin(), outcome_names.end(), name);
    if (hit == outcome_names.end()) {
      throw std::invalid_argument("cutoff names unknown outcome '" + name + "'");
    }
    spec.outcome = static_cast<int>(hit - outcome_names.begin());
    spec.below = item[op] == '<';
    try {
      size_t used = 0;
      spec.threshold = std::stod(item.substr(op + 1), &used);
      if (used != item.size() - op - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("cutoff '" + item + "' has a non-numeric threshold");
    }
    specs.push_back(spec);
  }
  if (specs.empty()) throw std::invalid_argument("no cutoffs given");
  return specs;
}

LogisticFit logit_mle(const std::vector<int>& z, const Eigen::MatrixXd& X, double level) {
  const long n = X.rows() > 0 ? X.rows() : static_cast<long>(z.size());
  const int p = static_cast<int>(X.cols());
  check_labels(z, n);
  if (level <= 0.0 || level >= 1.0) {
    throw std::invalid_argument("logit_mle: level must be in (0,1)");
  }

  Eigen::MatrixXd D(n, p + 1);
  D.col(0).setOnes();
  if (p > 0) D.rightCols(p) = X;
  Eigen::VectorXd zv(n);
  for (long i = 0; i < n; ++i) zv(i) = z[i];

  LogisticFit fit;
  fit.level = level;
  fit.estimates = Eigen::VectorXd::Zero(p + 1);
  Eigen::MatrixXd info;
  for (int iter = 1; iter <= 100; ++iter) {
    fit.n_iter = iter;
    const Eigen::ArrayXd eta = (D * fit.estimates).array();
    const Eigen::ArrayXd prob = eta.unaryExpr([](double v) { return logistic(v); });
    const Eigen::VectorXd grad = D.transpose() * (zv.array() - prob).matrix();
    if (grad.lpNorm<Eigen::Infinity>() < 1e-8) {
      fit.converged = true;
      break;
    }
    const Eigen::ArrayXd w = prob * (1.0 - prob);
    info = D.transpose() * w.matrix().asDiagonal() * D;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    // Halve overshooting Newton steps; keeps diverging fits from exploding.
    fit.estimates += step.lpNorm<Eigen::Infinity>() > 10.0 ? 0.5 * step : step;
    if (fit.estimates.lpNorm<Eigen::Infinity>() > 4 * kSeparationBound) break;
  }
  fit.separation = fit.estimates.lpNorm<Eigen::Infinity>() > kSeparationBound;

  const Eigen::ArrayXd eta = (D * fit.estimates).array();
  const Eigen::ArrayXd prob = eta.unaryExpr([](double v) { return logistic(v); });
  const Eigen::ArrayXd w = prob * (1.0 - prob);
  info = D.transpose() * w.matrix().asDiagonal() * D;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  fit.se = cov.diagonal().array().max(0.0).sqrt();
  const double q = norm_quantile(0.5 * (1.0 + level));
  fit.ci_lower = fit.estimates - q * fit.se;
  fit.ci_upper = fit.estimates + q * fit.se;
  return fit;
}

Eigen::VectorXd default_lambda_grid(const std::vector<int>& z, const Eigen::MatrixXd& X,
                                    double a, int count, double ratio) {
  if (a <= 0.0 || a > 1.0) throw std::invalid_argument("lambda grid: a must be in (0,1]");
  check_labels(z, X.rows());
  const Standardized std_x = standardize(X);
  const long n = X.rows();
  double zbar = 0.0;
  for (int v : z) zbar += v;
  zbar /= n;
  Eigen::VectorXd resid(n);
  for (long i = 0; i < n; ++i) resid(i) = z[i] - zbar;
  const double lambda_max =
      (std_x.X.transpose() * resid).lpNorm<Eigen::Infinity>() / (n * a);
  Eigen::VectorXd grid(count);
  const double step = std::log(ratio) / (count - 1);
  for (int k = 0; k < count; ++k) grid(k) = lambda_max * std::exp(step * k);
  return grid;
}

PenalizedPath logit_penalized(const std::vector<int>& z, const Eigen::MatrixXd& X,
                              double a, const Eigen::VectorXd& lambda_grid) {
  const long n = X.rows();
  const int p = static_cast<int>(X.cols());
  check_labels(z, n);
  if (a <= 0.0 || a > 1.0) throw std::invalid_argument("logit_penalized: a must be in (0,1]");
  if (lambda_grid.size() == 0 ||
      (lambda_grid.size() > 1 &&
       (lambda_grid.head(lambda_grid.size() - 1) - lambda_grid.tail(lambda_grid.size() - 1))
               .minCoeff() <= 0.0)) {
    throw std::invalid_argument("logit_penalized: lambda grid must be strictly descending");
  }

  const Standardized std_x = standardize(X);
  const Eigen::MatrixXd& Xs = std_x.X;
  Eigen::VectorXd zv(n);
  double zbar = 0.0;
  for (long i = 0; i < n; ++i) {
    zv(i) = z[i];
    zbar += z[i];
  }
  zbar /= n;
  if (zbar <= 0.0 || zbar >= 1.0) {
    throw std::invalid_argument("logit_penalized: labels are all one class");
  }

  PenalizedPath path;
  path.lambda = lambda_grid;
  path.a = a;
  path.intercepts.resize(lambda_grid.size());
  path.coefs.resize(lambda_grid.size(), p);
  path.deviance.resize(lambda_grid.size());
  path.converged.assign(lambda_grid.size(), false);

  double b0 = logit(zbar);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

  for (int k = 0; k < lambda_grid.size(); ++k) {
    const double lam = lambda_grid(k);
    const double l1 = a * lam, l2 = (1.0 - a) * lam;
    bool ok = false;
    for (int outer = 0; outer < 200; ++outer) {
      // Quadratic approximation at the current iterate.
      const Eigen::ArrayXd eta = (Xs * beta).array() + b0;
      const Eigen::ArrayXd prob = eta.unaryExpr([](double v) {
        return std::min(1.0 - kProbClamp, std::max(kProbClamp, logistic(v)));
      });
      const Eigen::ArrayXd w = prob * (1.0 - prob);
      const Eigen::ArrayXd zeta = eta + (zv.array() - prob) / w;
      const Eigen::VectorXd xw_sq = (Xs.array().square().colwise() * w).colwise().mean();
      const double w_mean = w.mean();

      // Weighted coordinate descent with active-set cycling: full sweeps
      // only when the active set stops changing.
      Eigen::VectorXd res = (zeta - eta).matrix();  // zeta - b0 - Xs*beta
      const double b0_in = b0;
      const Eigen::VectorXd beta_in = beta;
      bool full_pass = true;
      for (int sweep = 0; sweep < 1000; ++sweep) {
        double max_delta = 0.0;
        bool activated = false;
        {
          const double num = (w * res.array()).mean();
          const double nb0 = b0 + num / w_mean;
          res.array() -= nb0 - b0;
          max_delta = std::max(max_delta, std::abs(nb0 - b0));
          b0 = nb0;
        }
        for (int j = 0; j < p; ++j) {
          if (!full_pass && beta(j) == 0.0) continue;
          const double old = beta(j);
          const double num =
              (w * Xs.col(j).array() * res.array()).mean() + xw_sq(j) * old;
          const double nb = soft_threshold(num, l1) / (xw_sq(j) + l2);
          if (nb != old) {
            res -= Xs.col(j) * (nb - old);
            beta(j) = nb;
            max_delta = std::max(max_delta, std::abs(nb - old));
            if (old == 0.0) activated = true;
          }
        }
        if (max_delta < 1e-10) {
          if (full_pass && !activated) break;
          // Converged on the active set: verify with one full sweep.
          full_pass = true;
        } else {
          full_pass = false;
        }
      }
      const double change = std::max((beta - beta_in).lpNorm<Eigen::Infinity>(),
                                     std::abs(b0 - b0_in));
      if (change < 1e-7) {
        ok = true;
        break;
      }
    }
    path.converged[k] = ok;
    path.intercepts(k) = b0 - (beta.array() / std_x.sds.array() * std_x.means.array()).sum();
    path.coefs.row(k) = (beta.array() / std_x.sds.array()).transpose();
    const Eigen::VectorXd eta_fit = ((Xs * beta).array() + b0).matrix();
    path.deviance(k) = binomial_deviance(z, eta_fit);
  }
  return path;
}

double kkt_violation(const PenalizedPath& path, int k, const std::vector<int>& z,
                     const Eigen::MatrixXd& X) {
  const Standardized std_x = standardize(X);
  const long n = X.rows();
  // Back to the standardized scale the solver optimized on.
  const Eigen::ArrayXd beta_std = path.coefs.row(k).transpose().array() * std_x.sds.array();
  const double b0_std =
      path.intercepts(k) + (path.coefs.row(k).transpose().array() * std_x.means.array()).sum();
  const Eigen::ArrayXd eta = (std_x.X * beta_std.matrix()).array() + b0_std;
  Eigen::VectorXd resid(n);
  for (long i = 0; i < n; ++i) resid(i) = z[i] - logistic(eta(i));
  const Eigen::ArrayXd grad = (std_x.X.transpose() * resid).array() / n;

  const double l1 = path.a * path.lambda(k);
  const double l2 = (1.0 - path.a) * path.lambda(k);
  double worst = std::abs(resid.mean());  // intercept is unpenalized
  for (int j = 0; j < beta_std.size(); ++j) {
    if (beta_std(j) == 0.0) {
      worst = std::max(worst, std::abs(grad(j)) - l1);
    } else {
      const double s = beta_std(j) > 0 ? 1.0 : -1.0;
      worst = std::max(worst, std::abs(grad(j) - l1 * s - l2 * beta_std(j)));
    }
  }
  return worst;
}

CvResult cv_select_lambda(const std::vector<int>& z, const Eigen::MatrixXd& X, double a,
                          int folds, RngStream& rng) {
  const long n = X.rows();
  check_labels(z, n);
  if (folds < 2 || folds > n) throw std::invalid_argument("cv_select_lambda: bad fold count");

  const Eigen::VectorXd grid = default_lambda_grid(z, X, a);

  std::vector<int> fold_of(n);
  for (int attempt = 0; attempt < 5; ++attempt) {
    RngStream shuffle_rng = rng.split(static_cast<uint64_t>(attempt));
    // Stratified assignment: shuffle cases and controls separately, deal
    // round-robin so every fold keeps the case fraction.
    std::vector<long> by_class[2];
    for (long i = 0; i < n; ++i) by_class[z[i]].push_back(i);
    for (auto& idx : by_class) {
      for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(shuffle_rng.uniform() * i);
        std::swap(idx[i - 1], idx[j]);
      }
    }
    int next = 0;
    for (const auto& idx : by_class) {
      for (long row : idx) {
        fold_of[row] = next;
        next = (next + 1) % folds;
      }
    }
    bool ok = true;
    for (int f = 0; f < folds && ok; ++f) {
      int held[2] = {0, 0}, train[2] = {0, 0};
      for (long i = 0; i < n; ++i) {
        ++(fold_of[i] == f ? held : train)[z[i]];
      }
      ok = held[0] > 0 && held[1] > 0 && train[0] > 0 && train[1] > 0;
    }
    if (ok) break;
    if (attempt == 4) {
      throw std::runtime_error(
          "cv_select_lambda: could not build two-class folds in 5 attempts");
    }
  }

  Eigen::VectorXd total_dev = Eigen::VectorXd::Zero(grid.size());
  for (int f = 0; f < folds; ++f) {
    std::vector<long> train_rows, test_rows;
    for (long i = 0; i < n; ++i) (fold_of[i] == f ? test_rows : train_rows).push_back(i);
    Eigen::MatrixXd Xtr(train_rows.size(), X.cols());
    std::vector<int> ztr(train_rows.size());
    for (size_t r = 0; r < train_rows.size(); ++r) {
      Xtr.row(r) = X.row(train_rows[r]);
      ztr[r] = z[train_rows[r]];
    }
    const PenalizedPath path = logit_penalized(ztr, Xtr, a, grid);
    for (int k = 0; k < grid.size(); ++k) {
      for (long row : test_rows) {
        const double eta = path.intercepts(k) + X.row(row).dot(path.coefs.row(k));
        total_dev(k) += 2.0 * (log1pexp(eta) - z[row] * eta);
      }
    }
  }

  CvResult cv;
  cv.lambda = grid;
  cv.mean_deviance = total_dev / n;
  Eigen::Index best = 0;
  cv.mean_deviance.minCoeff(&best);
  cv.star_index = static_cast<int>(best);
  cv.lambda_star = grid(cv.star_index);
  return cv;
}

TwoStageFit two_stage(const AsprData& data, const TwoStageOptions& opts,
                      const std::vector<int>* z_true, RngStream& rng) {
  const int p = static_cast<int>(data.X.cols());
  TwoStageFit fit;

  switch (opts.first) {
    case FirstStage::kTruth:
      if (z_true == nullptr) {
        throw std::invalid_argument("two_stage: truth first stage needs true labels");
      }
      fit.z = *z_true;
      break;
    case FirstStage::kClassification: {
      RngStream em_rng = rng.split(0xE11);
      fit.z = map_allocate(em_fit(data.Y, EmOptions{}, em_rng));
      break;
    }
    case FirstStage::kCutoff:
      fit.z = dichotomize_cutoff(data.Y, opts.cutoffs, opts.combine);
      break;
  }

  fit.selected.assign(p, false);
  if (opts.second == SecondStage::kStandard) {
    fit.mle = logit_mle(fit.z, data.X, opts.level);
    fit.intercept = fit.mle.estimates(0);
    fit.estimates = fit.mle.estimates.tail(p);
    for (int j = 0; j < p; ++j) {
      fit.selected[j] =
          !fit.mle.separation && (fit.mle.ci_lower(j + 1) > 0.0 || fit.mle.ci_upper(j + 1) < 0.0);
    }
  } else {
    const double a = opts.second == SecondStage::kLasso ? 1.0 : opts.enet_a;
    RngStream cv_rng = rng.split(0xCF);
    const CvResult cv = cv_select_lambda(fit.z, data.X, a, opts.cv_folds, cv_rng);
    fit.path = logit_penalized(fit.z, data.X, a, cv.lambda);
    fit.lambda_star = cv.lambda_star;
    fit.intercept = fit.path.intercepts(cv.star_index);
    fit.estimates = fit.path.coefs.row(cv.star_index).transpose();
    for (int j = 0; j < p; ++j) fit.selected[j] = fit.estimates(j) != 0.0;
  }
  return fit;
}

}  // namespace aspr
