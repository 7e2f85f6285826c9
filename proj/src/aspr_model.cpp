#include "aspr/aspr_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aspr/io.hpp"
#include "aspr/mathutil.hpp"
#include "aspr/samplers.hpp"

namespace aspr {

namespace {

std::vector<std::string> default_names(const std::string& stem, int count) {
  std::vector<std::string> names(count);
  for (int j = 0; j < count; ++j) names[j] = stem + std::to_string(j + 1);
  return names;
}

void require_finite(const Eigen::MatrixXd& m, const char* label) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(label) +
                                " contains a non-finite value; missing data is not supported");
  }
}

}  // namespace

AsprData make_aspr_data(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                        std::vector<std::string> outcome_names,
                        std::vector<std::string> predictor_names) {
  if (Y.rows() == 0 || Y.cols() == 0) throw std::invalid_argument("make_aspr_data: empty Y");
  if (X.rows() != Y.rows()) {
    throw std::invalid_argument("make_aspr_data: Y and X row counts differ");
  }
  require_finite(Y, "outcomes");
  require_finite(X, "predictors");
  if (outcome_names.empty()) outcome_names = default_names("y", static_cast<int>(Y.cols()));
  if (predictor_names.empty()) predictor_names = default_names("x", static_cast<int>(X.cols()));
  if (static_cast<long>(outcome_names.size()) != Y.cols() ||
      static_cast<long>(predictor_names.size()) != X.cols()) {
    throw std::invalid_argument("make_aspr_data: name count does not match columns");
  }
  AsprData data;
  data.Y = Y;
  data.x_offsets = X.colwise().mean();
  data.X = X.rowwise() - data.x_offsets.transpose();
  data.outcome_names = std::move(outcome_names);
  data.predictor_names = std::move(predictor_names);
  return data;
}

AsprPriors default_priors(const AsprData& data) {
  const int n = static_cast<int>(data.Y.rows());
  const int s = static_cast<int>(data.Y.cols());
  if (n <= s + 2) throw std::invalid_argument("default_priors: need n > s + 2");
  AsprPriors priors;
  priors.theta0 = data.Y.colwise().mean();
  Eigen::MatrixXd centered = data.Y.rowwise() - priors.theta0.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
  for (int k = 0; k < s; ++k) {
    if (cov(k, k) <= 0.0) {
      throw std::invalid_argument("default_priors: outcome column " +
                                  data.outcome_names[k] + " has zero variance");
    }
  }
  priors.sigma0 = SpdMatrix(cov);
  priors.psi0 = 1.0;
  priors.rho0 = s + 2;
  return priors;  // gamma0, lambda0, msp carry their member defaults
}

double omega1(const Eigen::VectorXd& x, const CoefState& coef) {
  const double eta = coef.gamma + x.dot(coef.beta);
  return std::exp(-log1pexp(-eta));
}

Eigen::VectorXd linear_predictor(const CoefState& coef, const Eigen::MatrixXd& X) {
  return (X * coef.beta).array() + coef.gamma;
}

NiwParams niw_posterior(const Eigen::MatrixXd& Y_members, const AsprPriors& priors) {
  const int n = static_cast<int>(Y_members.rows());
  NiwParams post;
  post.psi = n + priors.psi0;
  post.rho = n + priors.rho0;
  if (n == 0) {
    post.theta = priors.theta0;
    post.sigma = priors.sigma0.matrix();
    return post;
  }
  const Eigen::VectorXd ybar = Y_members.colwise().mean();
  const Eigen::MatrixXd centered = Y_members.rowwise() - ybar.transpose();
  const Eigen::MatrixXd scatter = centered.transpose() * centered;
  const Eigen::VectorXd dev = ybar - priors.theta0;
  post.theta = (n * ybar + priors.psi0 * priors.theta0) / (n + priors.psi0);
  post.sigma = priors.sigma0.matrix() + scatter +
               (n / (1.0 + n / priors.psi0)) * dev * dev.transpose();
  return post;
}

void gibbs_step_components(ChainState& state, const AsprData& data,
                           const AsprPriors& priors, RngStream& rng) {
  if (priors.plugin) return;
  const int n = static_cast<int>(data.Y.rows());
  const int s = static_cast<int>(data.Y.cols());
  for (int h = 0; h < 2; ++h) {
    const int want = h == 0 ? 1 : 0;
    int count = 0;
    for (int i = 0; i < n; ++i) count += state.z[i] == want;
    Eigen::MatrixXd members(count, s);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (state.z[i] == want) members.row(r++) = data.Y.row(i);
    }
    const NiwParams post = niw_posterior(members, priors);
    const auto [theta, sigma] =
        niw_sample(post.theta, post.psi, post.rho, SpdMatrix(post.sigma), rng);
    state.components[h].theta = theta;
    state.components[h].sigma = sigma;
  }
}

void gibbs_step_impute_z(ChainState& state, const AsprData& data, WeightLink link,
                         RngStream& rng) {
  const int n = static_cast<int>(data.Y.rows());
  const Eigen::VectorXd eta = linear_predictor(state.coef, data.X);
  const double sigma = std::sqrt(kSigma2);
  for (int i = 0; i < n; ++i) {
    double lw1, lw0;
    if (link == WeightLink::kLogistic) {
      lw1 = -log1pexp(-eta(i));
      lw0 = -log1pexp(eta(i));
    } else {
      // Exact membership probability of the augmented joint given phi_i:
      // Pr(g_i > 0 | phi_i) with g_i ~ N(eta_i, sigma^2/phi_i).
      const double a = eta(i) * std::sqrt(state.phi(i)) / sigma;
      lw1 = std::log(norm_cdf(a));
      lw0 = std::log(norm_sf(a));
    }
    const Eigen::VectorXd y = data.Y.row(i).transpose();
    const double l1 =
        lw1 + mvn_logpdf(y, state.components[0].theta, state.components[0].sigma);
    const double l0 =
        lw0 + mvn_logpdf(y, state.components[1].theta, state.components[1].sigma);
    const double p1 = std::exp(l1 - log_sum_exp(l1, l0));
    state.z[i] = rng.uniform() < p1 ? 1 : 0;
  }
}

void gibbs_step_augment_g(ChainState& state, const AsprData& data, RngStream& rng) {
  const int n = static_cast<int>(data.Y.rows());
  const Eigen::VectorXd eta = linear_predictor(state.coef, data.X);
  const double sigma = std::sqrt(kSigma2);
  for (int i = 0; i < n; ++i) {
    const double sd = sigma / std::sqrt(state.phi(i));
    const Truncate side = state.z[i] == 1 ? Truncate::kBelow : Truncate::kAbove;
    state.g(i) = trunc_normal_sample(eta(i), sd, 0.0, side, rng);
  }
}

void gibbs_step_update_phi(ChainState& state, const AsprData& data, RngStream& rng) {
  const int n = static_cast<int>(data.Y.rows());
  const Eigen::VectorXd eta = linear_predictor(state.coef, data.X);
  for (int i = 0; i < n; ++i) {
    const double res = state.g(i) - eta(i);
    state.phi(i) =
        gamma_sample(0.5 * (kNu + 1.0), 2.0 / (kNu + res * res / kSigma2), rng);
  }
}

void gibbs_step_coefficients(ChainState& state, const AsprData& data,
                             const AsprPriors& priors, RngStream& rng) {
  update_assignments(state.msp, state.coef.beta, rng);
  update_sticks(state.msp, priors.msp, rng);
  update_atoms(state.msp, priors.msp, state.coef.beta, rng);
  update_local_scales(state.msp, state.coef.beta, rng);
  state.coef = update_coefficients(state.msp, state.g, state.phi, data.X, kSigma2,
                                   priors.gamma0, priors.lambda0, rng);
}

void gibbs_cycle(ChainState& state, const AsprData& data, const AsprPriors& priors,
                 WeightLink link, RngStream& rng) {
  gibbs_step_components(state, data, priors, rng);
  gibbs_step_impute_z(state, data, link, rng);
  gibbs_step_augment_g(state, data, rng);
  gibbs_step_update_phi(state, data, rng);
  gibbs_step_coefficients(state, data, priors, rng);
}

PosteriorSamples run_chain(const AsprData& data, const AsprPriors& priors,
                           const ChainConfig& config) {
  const int n = static_cast<int>(data.Y.rows());
  const int p = static_cast<int>(data.X.cols());
  if (p < 1) throw std::invalid_argument("run_chain: need at least one predictor");
  if (config.burn_in < 0 || config.burn_in >= config.n_iter || config.thin < 1) {
    throw std::invalid_argument("run_chain: require 0 <= burn_in < n_iter and thin >= 1");
  }

  RngStream rng(config.seed, 0);
  RngStream em_rng = rng.split(0x5eed);

  ChainState state;
  if (priors.plugin) {
    state.components = priors.plugin_components;
  } else {
    state.components[0].theta = priors.theta0;
    state.components[0].sigma = priors.sigma0;
    state.components[1] = state.components[0];
  }
  // z starts at the MAP allocation of a mixture EM fit; this anchors the
  // labels (component 0 = minority) before the regression has any signal.
  const MixtureFit em = em_fit(data.Y, EmOptions{}, em_rng);
  state.z = map_allocate(em);
  state.coef.gamma = priors.gamma0;
  state.coef.beta = Eigen::VectorXd::Zero(p);
  state.msp = msp_init(priors.msp, p, rng);
  state.g = Eigen::VectorXd::Zero(n);
  state.phi = Eigen::VectorXd::Ones(n);
  gibbs_step_augment_g(state, data, rng);
  gibbs_step_update_phi(state, data, rng);

  const int n_store = (config.n_iter - config.burn_in) / config.thin;
  PosteriorSamples out;
  out.n_subjects = n;
  out.predictor_names = data.predictor_names;
  out.burn_in = config.burn_in;
  out.adverse.reserve(n_store);
  out.healthy.reserve(n_store);
  out.gamma.resize(n_store);
  out.beta.resize(n_store, p);
  out.z.resize(n_store, n);
  out.omega_bar.resize(n_store);
  out.minority_frac.reserve(config.n_iter);

  int stored = 0;
  for (int it = 1; it <= config.n_iter; ++it) {
    gibbs_cycle(state, data, priors, config.link, rng);

    double frac = 0.0;
    for (int i = 0; i < n; ++i) frac += state.z[i];
    out.minority_frac.push_back(frac / n);

    const double tail = tail_weight(state.msp);
    out.max_tail_weight = std::max(out.max_tail_weight, tail);
    if (tail >= 1e-6) {
      throw std::logic_error(
          "run_chain: stick-breaking tail weight reached 1e-6; truncation too coarse");
    }

    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      out.adverse.push_back(state.components[0]);
      out.healthy.push_back(state.components[1]);
      out.gamma(stored) = state.coef.gamma;
      out.beta.row(stored) = state.coef.beta.transpose();
      for (int i = 0; i < n; ++i) out.z(stored, i) = state.z[i];
      const Eigen::VectorXd eta = linear_predictor(state.coef, data.X);
      double wsum = 0.0;
      for (int i = 0; i < n; ++i) wsum += std::exp(-log1pexp(-eta(i)));
      out.omega_bar(stored) = wsum / n;
      ++stored;
    }
  }
  return out;
}

namespace {

SummaryRow summarize(const std::string& name, std::vector<double> draws) {
  SummaryRow row;
  row.name = name;
  row.mean = mean(draws);
  row.sd = std::sqrt(variance(draws));
  row.q025 = quantile(draws, 0.025);
  row.q05 = quantile(draws, 0.05);
  row.q50 = quantile(draws, 0.50);
  row.q95 = quantile(draws, 0.95);
  row.q975 = quantile(draws, 0.975);
  return row;
}

std::string sigma_name(int h, int k, int l) {
  return "Sigma[" + std::to_string(h) + "][" + std::to_string(k) + "][" +
         std::to_string(l) + "]";
}

std::string theta_name(int h, int k) {
  return "theta[" + std::to_string(h) + "][" + std::to_string(k) + "]";
}

}  // namespace

std::vector<SummaryRow> posterior_summary(const PosteriorSamples& samples) {
  const int G = static_cast<int>(samples.gamma.size());
  if (G < 100) throw std::invalid_argument("posterior_summary: need at least 100 draws");
  const int s = static_cast<int>(samples.adverse[0].theta.size());
  const int p = static_cast<int>(samples.beta.cols());

  std::vector<SummaryRow> rows;
  std::vector<double> draws(G);
  for (int h = 0; h < 2; ++h) {
    const auto& comps = h == 0 ? samples.adverse : samples.healthy;
    for (int k = 0; k < s; ++k) {
      for (int g = 0; g < G; ++g) draws[g] = comps[g].theta(k);
      rows.push_back(summarize(theta_name(h + 1, k + 1), draws));
    }
    for (int k = 0; k < s; ++k) {
      for (int l = k; l < s; ++l) {
        for (int g = 0; g < G; ++g) draws[g] = comps[g].sigma(k, l);
        rows.push_back(summarize(sigma_name(h + 1, k + 1, l + 1), draws));
      }
    }
  }
  for (int g = 0; g < G; ++g) draws[g] = samples.gamma(g);
  rows.push_back(summarize("gamma", draws));
  for (int j = 0; j < p; ++j) {
    for (int g = 0; g < G; ++g) draws[g] = samples.beta(g, j);
    rows.push_back(summarize("beta[" + samples.predictor_names[j] + "]", draws));
  }
  return rows;
}

Eigen::VectorXd effect_probability(const PosteriorSamples& samples, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("effect_probability: eps must be > 0");
  const int G = static_cast<int>(samples.beta.rows());
  const int p = static_cast<int>(samples.beta.cols());
  Eigen::VectorXd prob(p);
  for (int j = 0; j < p; ++j) {
    int hits = 0;
    for (int g = 0; g < G; ++g) hits += std::abs(samples.beta(g, j)) > eps;
    prob(j) = static_cast<double>(hits) / G;
  }
  return prob;
}

Eigen::VectorXd allocation_probability(const PosteriorSamples& samples) {
  if (samples.z.rows() == 0) {
    throw std::invalid_argument("allocation_probability: no z draws stored");
  }
  return 1.0 - samples.z.colwise().mean().array();
}

Eigen::VectorXd posterior_predictive_density(const PosteriorSamples& samples,
                                             const Eigen::MatrixXd& grid) {
  const int G = static_cast<int>(samples.adverse.size());
  if (G == 0) throw std::invalid_argument("posterior_predictive_density: no draws");
  if (samples.omega_bar.size() != G) {
    throw std::invalid_argument(
        "posterior_predictive_density: omega_bar missing; call recompute_omega_bar");
  }
  Eigen::VectorXd density = Eigen::VectorXd::Zero(grid.rows());
  for (int g = 0; g < G; ++g) {
    const double w = samples.omega_bar(g);
    for (int m = 0; m < grid.rows(); ++m) {
      const Eigen::VectorXd y = grid.row(m).transpose();
      density(m) +=
          w * std::exp(mvn_logpdf(y, samples.adverse[g].theta, samples.adverse[g].sigma)) +
          (1.0 - w) *
              std::exp(mvn_logpdf(y, samples.healthy[g].theta, samples.healthy[g].sigma));
    }
  }
  return density / G;
}

void recompute_omega_bar(PosteriorSamples& samples, const Eigen::MatrixXd& X) {
  const int G = static_cast<int>(samples.gamma.size());
  if (X.cols() != samples.beta.cols()) {
    throw std::invalid_argument("recompute_omega_bar: predictor count mismatch");
  }
  samples.omega_bar.resize(G);
  for (int g = 0; g < G; ++g) {
    const Eigen::ArrayXd eta =
        (X * samples.beta.row(g).transpose()).array() + samples.gamma(g);
    samples.omega_bar(g) =
        eta.unaryExpr([](double v) { return std::exp(-log1pexp(-v)); }).mean();
  }
}

void write_samples_csv(const PosteriorSamples& samples, const std::string& path,
                       bool store_z) {
  const int G = static_cast<int>(samples.gamma.size());
  if (G == 0) throw std::invalid_argument("write_samples_csv: no draws");
  const int s = static_cast<int>(samples.adverse[0].theta.size());
  const int p = static_cast<int>(samples.beta.cols());
  const int n = static_cast<int>(samples.z.cols());

  std::vector<std::string> header;
  for (int h = 1; h <= 2; ++h) {
    for (int k = 1; k <= s; ++k) header.push_back(theta_name(h, k));
  }
  for (int h = 1; h <= 2; ++h) {
    for (int k = 1; k <= s; ++k) {
      for (int l = k; l <= s; ++l) header.push_back(sigma_name(h, k, l));
    }
  }
  header.push_back("gamma");
  for (int j = 0; j < p; ++j) header.push_back("beta[" + samples.predictor_names[j] + "]");
  if (store_z) {
    for (int i = 1; i <= n; ++i) header.push_back("z[" + std::to_string(i) + "]");
  }

  Eigen::MatrixXd values(G, header.size());
  for (int g = 0; g < G; ++g) {
    int col = 0;
    for (int h = 0; h < 2; ++h) {
      const auto& comp = h == 0 ? samples.adverse[g] : samples.healthy[g];
      for (int k = 0; k < s; ++k) values(g, col++) = comp.theta(k);
    }
    for (int h = 0; h < 2; ++h) {
      const auto& comp = h == 0 ? samples.adverse[g] : samples.healthy[g];
      for (int k = 0; k < s; ++k) {
        for (int l = k; l < s; ++l) values(g, col++) = comp.sigma(k, l);
      }
    }
    values(g, col++) = samples.gamma(g);
    for (int j = 0; j < p; ++j) values(g, col++) = samples.beta(g, j);
    if (store_z) {
      for (int i = 0; i < n; ++i) values(g, col++) = samples.z(g, i);
    }
  }
  write_csv_table(path, header, values);
}

namespace {

// Parses "stem[i][j]..." index lists; returns empty on mismatch.
std::vector<int> bracket_indices(const std::string& name, const std::string& stem) {
  if (name.compare(0, stem.size(), stem) != 0) return {};
  std::vector<int> idx;
  size_t pos = stem.size();
  while (pos < name.size()) {
    if (name[pos] != '[') return {};
    const size_t close = name.find(']', pos);
    if (close == std::string::npos) return {};
    idx.push_back(std::stoi(name.substr(pos + 1, close - pos - 1)));
    pos = close + 1;
  }
  return pos == name.size() && !idx.empty() ? idx : std::vector<int>{};
}

}  // namespace

PosteriorSamples read_samples_csv(const std::string& path) {
  const CsvTable table = read_csv_table(path);
  const int G = static_cast<int>(table.values.rows());
  if (G == 0) throw std::runtime_error(path + ": no sample rows");

  int s = 0, n = 0;
  std::vector<std::string> beta_names;
  for (const auto& name : table.header) {
    if (auto idx = bracket_indices(name, "theta"); idx.size() == 2) {
      if (idx[0] == 1) s = std::max(s, idx[1]);
    } else if (auto zi = bracket_indices(name, "z"); zi.size() == 1) {
      n = std::max(n, zi[0]);
    } else if (name.size() > 6 && name.compare(0, 5, "beta[") == 0 && name.back() == ']') {
      beta_names.push_back(name.substr(5, name.size() - 6));
    } else if (name != "gamma" && bracket_indices(name, "Sigma").size() != 3) {
      throw std::runtime_error(path + ": unrecognized sample column '" + name + "'");
    }
  }
  if (s == 0) throw std::runtime_error(path + ": no theta columns found");
  const int p = static_cast<int>(beta_names.size());

  auto col_of = [&](const std::string& name) {
    for (size_t j = 0; j < table.header.size(); ++j) {
      if (table.header[j] == name) return static_cast<int>(j);
    }
    throw std::runtime_error(path + ": missing expected column '" + name + "'");
  };

  PosteriorSamples samples;
  samples.n_subjects = n;
  samples.predictor_names = beta_names;
  samples.gamma.resize(G);
  samples.beta.resize(G, p);
  samples.z.resize(G, n);
  samples.adverse.reserve(G);
  samples.healthy.reserve(G);

  // Resolve every column index once; the draw loop then only copies values.
  const int gamma_col = col_of("gamma");
  std::vector<std::vector<int>> theta_cols(2), sigma_cols(2);
  for (int h = 1; h <= 2; ++h) {
    for (int k = 1; k <= s; ++k) theta_cols[h - 1].push_back(col_of(theta_name(h, k)));
    for (int k = 1; k <= s; ++k) {
      for (int l = k; l <= s; ++l) sigma_cols[h - 1].push_back(col_of(sigma_name(h, k, l)));
    }
  }
  std::vector<int> beta_cols, z_cols;
  for (int j = 0; j < p; ++j) beta_cols.push_back(col_of("beta[" + beta_names[j] + "]"));
  for (int i = 1; i <= n; ++i) z_cols.push_back(col_of("z[" + std::to_string(i) + "]"));

  for (int g = 0; g < G; ++g) {
    for (int h = 0; h < 2; ++h) {
      ComponentParams comp;
      comp.theta.resize(s);
      for (int k = 0; k < s; ++k) comp.theta(k) = table.values(g, theta_cols[h][k]);
      Eigen::MatrixXd sig(s, s);
      int t = 0;
      for (int k = 0; k < s; ++k) {
        for (int l = k; l < s; ++l) {
          const double v = table.values(g, sigma_cols[h][t++]);
          sig(k, l) = v;
          sig(l, k) = v;
        }
      }
      comp.sigma = SpdMatrix(sig);
      (h == 0 ? samples.adverse : samples.healthy).push_back(std::move(comp));
    }
    samples.gamma(g) = table.values(g, gamma_col);
    for (int j = 0; j < p; ++j) samples.beta(g, j) = table.values(g, beta_cols[j]);
    for (int i = 0; i < n; ++i) samples.z(g, i) = table.values(g, z_cols[i]);
  }
  return samples;
}

}  // namespace aspr
