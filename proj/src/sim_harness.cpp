#include "aspr/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "aspr/io.hpp"
#include "aspr/mathutil.hpp"
#include "aspr/samplers.hpp"

namespace aspr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd parse_reals(const std::string& text, const std::string& key) {
  std::vector<double> vals;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    start = end + 1;
    if (item.empty()) continue;
    char* stop = nullptr;
    const double v = std::strtod(item.c_str(), &stop);
    if (stop != item.c_str() + item.size()) {
      throw std::runtime_error("config: key '" + key + "' has non-numeric entry '" + item + "'");
    }
    vals.push_back(v);
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

ComponentParams component_from_config(const std::map<std::string, std::string>& cfg,
                                      const std::string& stem,
                                      const ComponentParams& fallback) {
  const auto ti = cfg.find(stem + "_theta");
  const auto si = cfg.find(stem + "_sigma");
  if (ti == cfg.end() && si == cfg.end()) return fallback;
  if (ti == cfg.end() || si == cfg.end()) {
    throw std::runtime_error("config: " + stem + "_theta and " + stem +
                             "_sigma must be given together");
  }
  ComponentParams comp;
  comp.theta = parse_reals(ti->second, stem + "_theta");
  const Eigen::VectorXd flat = parse_reals(si->second, stem + "_sigma");
  const int s = static_cast<int>(comp.theta.size());
  if (flat.size() != s * s) {
    throw std::runtime_error("config: " + stem + "_sigma needs " + std::to_string(s * s) +
                             " row-major entries");
  }
  Eigen::MatrixXd m(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) m(i, j) = flat(i * s + j);
  }
  comp.sigma = SpdMatrix(m);
  return comp;
}

std::uint64_t config_u64_or(const std::map<std::string, std::string>& cfg,
                            const std::string& key, std::uint64_t fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    size_t used = 0;
    // stoull wraps negative inputs instead of rejecting them.
    if (it->second.empty() || !std::isdigit(static_cast<unsigned char>(it->second[0]))) {
      throw std::invalid_argument("");
    }
    const std::uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not an unsigned integer");
  }
}

}  // namespace

SimDesign::SimDesign() {
  adverse.theta = Eigen::Vector2d(237.52, 2001.55);
  Eigen::Matrix2d sa;
  sa << 829.19, 19322.84, 19322.84, 508531.02;
  adverse.sigma = SpdMatrix(sa);
  healthy.theta = Eigen::Vector2d(273.25, 3182.41);
  Eigen::Matrix2d sh;
  sh << 96.78, 2174.75, 2174.75, 235640.32;
  healthy.sigma = SpdMatrix(sh);
  cutoffs = {{0, 259.0, true}, {1, 2500.0, true}};
}

SimDesign design_from_config(const std::map<std::string, std::string>& cfg) {
  SimDesign d;
  d.n = config_int_or(cfg, "n", d.n);
  d.p = config_int_or(cfg, "p", d.p);
  d.nonnull_count = config_int_or(cfg, "nonnull_count", d.nonnull_count);
  d.nonnull_value = config_real_or(cfg, "nonnull_value", d.nonnull_value);
  d.adverse_fraction = config_real_or(cfg, "adverse_fraction", d.adverse_fraction);
  d.adverse = component_from_config(cfg, "adverse", d.adverse);
  d.healthy = component_from_config(cfg, "healthy", d.healthy);
  d.predictor_file = config_str_or(cfg, "predictor_file", d.predictor_file);
  d.maf = config_real_or(cfg, "maf", d.maf);
  d.block_corr = config_real_or(cfg, "block_corr", d.block_corr);
  d.block_size = config_int_or(cfg, "block_size", d.block_size);
  d.replicates = config_int_or(cfg, "replicates", d.replicates);
  d.base_seed = config_u64_or(cfg, "base_seed", d.base_seed);
  d.n_iter = config_int_or(cfg, "n_iter", d.n_iter);
  d.burn_in = config_int_or(cfg, "burn_in", d.burn_in);
  d.thin = config_int_or(cfg, "thin", d.thin);
  d.eps = config_real_or(cfg, "eps", d.eps);
  if (cfg.count("cutoffs")) {
    std::vector<std::string> names(d.adverse.theta.size());
    for (size_t k = 0; k < names.size(); ++k) names[k] = "y" + std::to_string(k + 1);
    d.cutoffs = parse_cutoffs(cfg.at("cutoffs"), names);
  }
  if (d.nonnull_count > d.p) {
    throw std::runtime_error("config: nonnull_count exceeds p");
  }
  if (d.adverse.theta.size() != d.healthy.theta.size()) {
    throw std::runtime_error("config: component dimensions differ");
  }
  return d;
}

Eigen::VectorXd true_coefficients(const SimDesign& design) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.p);
  beta.head(design.nonnull_count).setConstant(design.nonnull_value);
  return beta;
}

Eigen::MatrixXd gen_correlated_snps(int n, int p, const Eigen::VectorXd& maf,
                                    double block_corr, int block_size, RngStream& rng) {
  if (maf.size() != p) throw std::invalid_argument("gen_correlated_snps: maf length != p");
  for (int j = 0; j < p; ++j) {
    if (maf(j) <= 0.0 || maf(j) > 0.5) {
      throw std::invalid_argument("gen_correlated_snps: maf must lie in (0, 0.5]");
    }
  }
  if (block_corr < 0.0 || block_corr >= 1.0) {
    throw std::invalid_argument(
        "gen_correlated_snps: block correlation must lie in [0, 1)");
  }
  if (block_size < 1) throw std::invalid_argument("gen_correlated_snps: block_size < 1");

  Eigen::VectorXd cut(p);
  for (int j = 0; j < p; ++j) cut(j) = norm_quantile(maf(j));
  const double w_common = std::sqrt(block_corr);
  const double w_own = std::sqrt(1.0 - block_corr);

  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j0 = 0; j0 < p; j0 += block_size) {
      const double common = rng.normal();
      const int j1 = std::min(p, j0 + block_size);
      for (int j = j0; j < j1; ++j) {
        const double u = w_common * common + w_own * rng.normal();
        X(i, j) = u < cut(j) ? 1.0 : 0.0;
      }
    }
  }
  return X;
}

Eigen::MatrixXd design_predictors(const SimDesign& design) {
  if (!design.predictor_file.empty()) {
    const CsvTable table = read_csv_table(design.predictor_file);
    if (table.values.rows() != design.n || table.values.cols() != design.p) {
      throw std::runtime_error(design.predictor_file + ": expected " +
                               std::to_string(design.n) + "x" + std::to_string(design.p) +
                               " predictors, got " + std::to_string(table.values.rows()) +
                               "x" + std::to_string(table.values.cols()));
    }
    return table.values;
  }
  RngStream rng(design.base_seed, 0xA11);
  return gen_correlated_snps(design.n, design.p,
                             Eigen::VectorXd::Constant(design.p, design.maf),
                             design.block_corr, design.block_size, rng);
}

SimulatedData simulate_dataset(const SimDesign& design, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& beta_true, RngStream& rng) {
  const int n = static_cast<int>(X.rows());
  if (X.cols() != beta_true.size()) {
    throw std::invalid_argument("simulate_dataset: beta length != predictor count");
  }
  const Eigen::VectorXd offsets = X.colwise().mean();
  const Eigen::VectorXd c = (X.rowwise() - offsets.transpose()) * beta_true;

  // The intercept is whatever makes the average membership probability hit
  // the target adverse fraction; the mean is monotone in gamma, so bisect.
  const auto mean_omega = [&](double gamma) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += logistic(gamma + c(i));
    return sum / n;
  };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_omega(mid) < design.adverse_fraction ? lo : hi) = mid;
  }
  const double gamma = 0.5 * (lo + hi);

  const int s = static_cast<int>(design.adverse.theta.size());
  Eigen::MatrixXd Y(n, s);
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) {
    z[i] = rng.uniform() < logistic(gamma + c(i)) ? 1 : 0;
    const ComponentParams& comp = z[i] == 1 ? design.adverse : design.healthy;
    Y.row(i) = mvn_sample(comp.theta, comp.sigma, rng).transpose();
  }

  SimulatedData sim;
  sim.data = make_aspr_data(Y, X);
  sim.z_true = std::move(z);
  sim.gamma_true = gamma;
  return sim;
}

std::pair<double, double> mse_split(const Eigen::VectorXd& estimates,
                                    const Eigen::VectorXd& truth,
                                    const std::vector<bool>& nonnull) {
  const int p = static_cast<int>(truth.size());
  if (estimates.size() != p || static_cast<int>(nonnull.size()) != p) {
    throw std::invalid_argument("mse_split: length mismatch");
  }
  double sum[2] = {0.0, 0.0};
  int count[2] = {0, 0};
  for (int j = 0; j < p; ++j) {
    const double d = estimates(j) - truth(j);
    sum[nonnull[j] ? 0 : 1] += d * d;
    ++count[nonnull[j] ? 0 : 1];
  }
  return {count[0] ? sum[0] / count[0] : kNaN, count[1] ? sum[1] / count[1] : kNaN};
}

std::pair<double, double> selection_metrics(const std::vector<bool>& selected,
                                            const std::vector<bool>& truth_nonnull) {
  if (selected.size() != truth_nonnull.size()) {
    throw std::invalid_argument("selection_metrics: length mismatch");
  }
  int tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t j = 0; j < selected.size(); ++j) {
    if (truth_nonnull[j]) {
      ++(selected[j] ? tp : fn);
    } else {
      ++(selected[j] ? fp : tn);
    }
  }
  const double tpr = tp + fn ? static_cast<double>(tp) / (tp + fn) : kNaN;
  const double fpr = fp + tn ? static_cast<double>(fp) / (fp + tn) : kNaN;
  return {tpr, fpr};
}

Eigen::VectorXd default_eps_grid(const Eigen::VectorXd& effects, int count) {
  if (count < 2) throw std::invalid_argument("default_eps_grid: need >= 2 points");
  const double top = std::max(1e-12, effects.array().abs().maxCoeff());
  Eigen::VectorXd grid(count);
  for (int k = 0; k < count; ++k) grid(k) = top * k / (count - 1);
  return grid;
}

namespace {

std::pair<double, double> rates_at(const Eigen::ArrayXd& mag,
                                   const std::vector<bool>& truth_nonnull, double eps) {
  std::vector<bool> sel(mag.size());
  for (int j = 0; j < mag.size(); ++j) sel[j] = mag(j) > eps;
  const auto [tpr, fpr] = selection_metrics(sel, truth_nonnull);
  return {fpr, tpr};
}

}  // namespace

RocCurve roc_from_effects(const Eigen::VectorXd& effects,
                          const std::vector<bool>& truth_nonnull,
                          const Eigen::VectorXd& eps_grid) {
  const int p = static_cast<int>(effects.size());
  if (static_cast<int>(truth_nonnull.size()) != p) {
    throw std::invalid_argument("roc_from_effects: length mismatch");
  }
  if (eps_grid.size() == 0) throw std::invalid_argument("roc_from_effects: empty grid");
  for (int k = 1; k < eps_grid.size(); ++k) {
    if (eps_grid(k) < eps_grid(k - 1)) {
      throw std::invalid_argument("roc_from_effects: grid must be ascending");
    }
  }
  const Eigen::ArrayXd mag = effects.array().abs();

  RocCurve curve;
  curve.eps = eps_grid;
  curve.fpr.resize(eps_grid.size());
  curve.tpr.resize(eps_grid.size());
  for (int k = 0; k < eps_grid.size(); ++k) {
    const auto [fpr, tpr] = rates_at(mag, truth_nonnull, eps_grid(k));
    curve.fpr(k) = fpr;
    curve.tpr(k) = tpr;
  }

  // Exact area: walk every distinct magnitude from the top, ending with a
  // sentinel below the minimum so the path runs (0,0) -> (1,1).
  std::vector<double> cuts(mag.data(), mag.data() + p);
  std::sort(cuts.begin(), cuts.end(), std::greater<double>());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(-1.0);
  double auc = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
  bool defined = true;
  for (double cut : cuts) {
    const auto [fpr, tpr] = rates_at(mag, truth_nonnull, cut);
    if (std::isnan(fpr) || std::isnan(tpr)) {
      defined = false;
      break;
    }
    auc += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  curve.auc = defined ? auc : kNaN;
  return curve;
}

MethodSpec make_method(const std::string& token, const SimDesign& design) {
  MethodSpec spec;
  spec.name = token;
  if (token == "aspr") {
    spec.kind = MethodSpec::Kind::kAsprFull;
    return spec;
  }
  if (token == "aspr-plugin") {
    spec.kind = MethodSpec::Kind::kAsprPlugin;
    return spec;
  }
  const auto dash = token.find('-');
  if (dash != std::string::npos) {
    const std::string first = token.substr(0, dash);
    const std::string second = token.substr(dash + 1);
    spec.kind = MethodSpec::Kind::kTwoStage;
    if (first == "truth") {
      spec.two_stage.first = FirstStage::kTruth;
    } else if (first == "class") {
      spec.two_stage.first = FirstStage::kClassification;
    } else if (first == "cutoff") {
      spec.two_stage.first = FirstStage::kCutoff;
      spec.two_stage.cutoffs = design.cutoffs;
    } else {
      throw std::invalid_argument("unknown first stage '" + first + "'");
    }
    if (second == "standard") {
      spec.two_stage.second = SecondStage::kStandard;
    } else if (second == "lasso") {
      spec.two_stage.second = SecondStage::kLasso;
    } else if (second == "enet") {
      spec.two_stage.second = SecondStage::kElasticNet;
    } else {
      throw std::invalid_argument("unknown second stage '" + second + "'");
    }
    return spec;
  }
  throw std::invalid_argument("unknown method '" + token + "'");
}

namespace {

struct MethodOutcome {
  bool ok = false;
  std::string error;
  double mse_nonnull = kNaN, mse_null = kNaN;
  double len_nonnull = kNaN, len_null = kNaN;
  double tpr = kNaN, fpr = kNaN;
  Eigen::VectorXd effects;
};

// Mean interval length over the nonnull / null coefficient sets.
std::pair<double, double> length_split(const Eigen::VectorXd& lengths,
                                       const std::vector<bool>& nonnull) {
  double sum[2] = {0.0, 0.0};
  int count[2] = {0, 0};
  for (int j = 0; j < lengths.size(); ++j) {
    sum[nonnull[j] ? 0 : 1] += lengths(j);
    ++count[nonnull[j] ? 0 : 1];
  }
  return {count[0] ? sum[0] / count[0] : kNaN, count[1] ? sum[1] / count[1] : kNaN};
}

MethodOutcome run_aspr_method(const MethodSpec& spec, const SimulatedData& sim,
                              const SimDesign& design, const Eigen::VectorXd& beta_true,
                              const std::vector<bool>& nonnull, std::uint64_t chain_seed,
                              std::uint64_t em_stream) {
  AsprPriors priors = default_priors(sim.data);
  if (spec.kind == MethodSpec::Kind::kAsprPlugin) {
    RngStream em_rng(design.base_seed, em_stream);
    const MixtureFit em = em_fit(sim.data.Y, EmOptions{}, em_rng);
    priors.plugin = true;
    priors.plugin_components = em.components;
  }
  ChainConfig config;
  config.n_iter = design.n_iter;
  config.burn_in = design.burn_in;
  config.thin = design.thin;
  config.seed = chain_seed;
  const PosteriorSamples samples = run_chain(sim.data, priors, config);

  const int p = static_cast<int>(beta_true.size());
  Eigen::VectorXd est(p), lengths(p);
  std::vector<bool> selected(p);
  std::vector<double> draws(samples.beta.rows());
  for (int j = 0; j < p; ++j) {
    for (int g = 0; g < samples.beta.rows(); ++g) draws[g] = samples.beta(g, j);
    est(j) = mean(draws);
    const double lo = quantile(draws, 0.05);
    const double hi = quantile(draws, 0.95);
    lengths(j) = hi - lo;
    selected[j] = lo > 0.0 || hi < 0.0;
  }

  MethodOutcome out;
  std::tie(out.mse_nonnull, out.mse_null) = mse_split(est, beta_true, nonnull);
  std::tie(out.len_nonnull, out.len_null) = length_split(lengths, nonnull);
  std::tie(out.tpr, out.fpr) = selection_metrics(selected, nonnull);
  out.effects = est.cwiseAbs();
  out.ok = true;
  return out;
}

MethodOutcome run_two_stage_method(const MethodSpec& spec, const SimulatedData& sim,
                                   const SimDesign& design,
                                   const Eigen::VectorXd& beta_true,
                                   const std::vector<bool>& nonnull,
                                   std::uint64_t stream) {
  RngStream rng(design.base_seed, stream);
  const TwoStageFit fit = two_stage(sim.data, spec.two_stage, &sim.z_true, rng);

  MethodOutcome out;
  std::tie(out.mse_nonnull, out.mse_null) = mse_split(fit.estimates, beta_true, nonnull);
  if (spec.two_stage.second == SecondStage::kStandard) {
    const int p = static_cast<int>(beta_true.size());
    const Eigen::VectorXd lengths =
        (fit.mle.ci_upper - fit.mle.ci_lower).tail(p);
    std::tie(out.len_nonnull, out.len_null) = length_split(lengths, nonnull);
  }
  std::tie(out.tpr, out.fpr) = selection_metrics(fit.selected, nonnull);
  out.effects = fit.estimates.cwiseAbs();
  out.ok = true;
  return out;
}

}  // namespace

StudyResult run_study(const SimDesign& design, const std::vector<MethodSpec>& methods,
                      int threads) {
  if (design.replicates < 1) throw std::invalid_argument("run_study: no replicates");
  if (methods.empty()) throw std::invalid_argument("run_study: no methods");
  if (methods.size() > 64) throw std::invalid_argument("run_study: too many methods");
  if (threads < 1) threads = 1;

  const Eigen::MatrixXd X = design_predictors(design);
  const Eigen::VectorXd beta_true = true_coefficients(design);
  std::vector<bool> nonnull(design.p);
  for (int j = 0; j < design.p; ++j) nonnull[j] = j < design.nonnull_count;
  const int n_methods = static_cast<int>(methods.size());

  std::vector<std::vector<MethodOutcome>> outcomes(
      design.replicates, std::vector<MethodOutcome>(n_methods));

  const auto worker_body = [&](int r) {
    RngStream data_rng(design.base_seed, 0xD0000000ULL + static_cast<std::uint64_t>(r));
    const SimulatedData sim = simulate_dataset(design, X, beta_true, data_rng);
    for (int m = 0; m < n_methods; ++m) {
      const std::uint64_t slot = 64ULL * static_cast<std::uint64_t>(r) + m;
      MethodOutcome& out = outcomes[r][m];
      try {
        if (methods[m].kind == MethodSpec::Kind::kTwoStage) {
          out = run_two_stage_method(methods[m], sim, design, beta_true, nonnull,
                                     0xB0000000ULL + slot);
        } else {
          out = run_aspr_method(methods[m], sim, design, beta_true, nonnull,
                                design.base_seed ^ (0x5EED000000000000ULL + slot),
                                0xEE000000ULL + slot);
        }
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };

  if (threads == 1) {
    for (int r = 0; r < design.replicates; ++r) worker_body(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, design.replicates);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < design.replicates; r = next.fetch_add(1)) {
          worker_body(r);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  StudyResult result;
  for (int m = 0; m < n_methods; ++m) {
    MetricsRow row;
    row.method = methods[m].name;
    double sums[7] = {};  // mse_nn, mse_null, len_nn, len_null, tpr, fpr, auc
    int ok_count = 0;
    double global_max = 0.0;
    for (int r = 0; r < design.replicates; ++r) {
      const MethodOutcome& out = outcomes[r][m];
      if (!out.ok) {
        ++row.failures;
        std::cerr << "run_study: replicate " << r + 1 << ", method " << methods[m].name
                  << " failed: " << out.error << "\n";
        continue;
      }
      ++ok_count;
      sums[0] += out.mse_nonnull;
      sums[1] += out.mse_null;
      sums[2] += out.len_nonnull;
      sums[3] += out.len_null;
      sums[4] += out.tpr;
      sums[5] += out.fpr;
      sums[6] += roc_from_effects(out.effects, nonnull, default_eps_grid(out.effects)).auc;
      global_max = std::max(global_max, out.effects.maxCoeff());
    }
    RocCurve mean_curve;
    mean_curve.eps = default_eps_grid(Eigen::VectorXd::Constant(1, global_max));
    mean_curve.fpr = Eigen::VectorXd::Zero(mean_curve.eps.size());
    mean_curve.tpr = Eigen::VectorXd::Zero(mean_curve.eps.size());
    for (int r = 0; r < design.replicates; ++r) {
      const MethodOutcome& out = outcomes[r][m];
      if (!out.ok) continue;
      const RocCurve c = roc_from_effects(out.effects, nonnull, mean_curve.eps);
      mean_curve.fpr += c.fpr;
      mean_curve.tpr += c.tpr;
    }
    if (ok_count > 0) {
      row.mse_nonnull = sums[0] / ok_count;
      row.mse_null = sums[1] / ok_count;
      row.len_nonnull = sums[2] / ok_count;
      row.len_null = sums[3] / ok_count;
      row.tpr = sums[4] / ok_count;
      row.fpr = sums[5] / ok_count;
      row.auc = sums[6] / ok_count;
      mean_curve.fpr /= ok_count;
      mean_curve.tpr /= ok_count;
      mean_curve.auc = row.auc;
    } else {
      row.mse_nonnull = row.mse_null = row.len_nonnull = row.len_null = kNaN;
      row.tpr = row.fpr = row.auc = kNaN;
      mean_curve.fpr.setConstant(kNaN);
      mean_curve.tpr.setConstant(kNaN);
      mean_curve.auc = kNaN;
    }
    result.rows.push_back(std::move(row));
    result.curves.push_back(std::move(mean_curve));
  }
  return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,mse_nonnull,mse_null,len_nonnull,len_null,tpr,fpr,auc,failures\n";
  for (const auto& row : rows) {
    out << row.method << ',' << format_double(row.mse_nonnull) << ','
        << format_double(row.mse_null) << ',' << format_double(row.len_nonnull) << ','
        << format_double(row.len_null) << ',' << format_double(row.tpr) << ','
        << format_double(row.fpr) << ',' << format_double(row.auc) << ',' << row.failures
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_roc_csv(const StudyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,eps,fpr,tpr\n";
  for (size_t m = 0; m < result.rows.size(); ++m) {
    const RocCurve& c = result.curves[m];
    for (int k = 0; k < c.eps.size(); ++k) {
      out << result.rows[m].method << ',' << format_double(c.eps(k)) << ','
          << format_double(c.fpr(k)) << ',' << format_double(c.tpr(k)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace aspr
