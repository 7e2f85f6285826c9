// Command-line front end: fit the latent-class regression, run the EM and
// two-stage comparators, generate synthetic datasets, and orchestrate
// replicated method-comparison studies.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aspr/aspr_model.hpp"
#include "aspr/baselines.hpp"
#include "aspr/io.hpp"
#include "aspr/mixture_em.hpp"
#include "aspr/sim_harness.hpp"

namespace fs = std::filesystem;
using namespace aspr;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

// Interaction list: one "nameA,nameB" pair per line, '#' comments allowed.
// Product columns of the raw predictors are appended as "nameA:nameB".
void append_interactions(const std::string& path, Eigen::MatrixXd& X,
                         std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto index_of = [&](const std::string& name) {
    for (size_t j = 0; j < names.size(); ++j) {
      if (names[j] == name) return static_cast<int>(j);
    }
    throw std::runtime_error(path + ": unknown predictor '" + name + "'");
  };
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::vector<std::string> fields = split_list(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               " must name exactly two predictors");
    }
    pairs.emplace_back(index_of(fields[0]), index_of(fields[1]));
  }
  if (pairs.empty()) return;
  const long base = X.cols();
  X.conservativeResize(Eigen::NoChange, base + static_cast<long>(pairs.size()));
  for (size_t k = 0; k < pairs.size(); ++k) {
    X.col(base + static_cast<long>(k)) =
        X.col(pairs[k].first).cwiseProduct(X.col(pairs[k].second));
    names.push_back(names[pairs[k].first] + ":" + names[pairs[k].second]);
  }
}

AsprData load_data(const std::string& outcomes_path, const std::string& predictors_path,
                   const std::string& interactions_path) {
  const CsvTable yt = read_csv_table(outcomes_path);
  const CsvTable xt = read_csv_table(predictors_path);
  Eigen::MatrixXd X = xt.values;
  std::vector<std::string> xnames = xt.header;
  if (!interactions_path.empty()) append_interactions(interactions_path, X, xnames);
  return make_aspr_data(yt.values, X, yt.header, xnames);
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "parameter,mean,sd,q2.5,q5,q50,q95,q97.5\n";
  for (const auto& r : rows) {
    out << r.name << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << format_double(r.q025) << ',' << format_double(r.q05) << ','
        << format_double(r.q50) << ',' << format_double(r.q95) << ','
        << format_double(r.q975) << '\n';
  }
}

void write_named_column_csv(const std::string& path, const std::string& name_header,
                            const std::vector<std::string>& names,
                            const std::string& value_header, const Eigen::VectorXd& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << name_header << ',' << value_header << '\n';
  for (int i = 0; i < values.size(); ++i) {
    out << names[i] << ',' << format_double(values(i)) << '\n';
  }
}

struct FitArgs {
  std::string outcomes, predictors, interactions, out;
  bool plugin = false;
  bool store_z = false;
  int iters = 11000, burnin = 1000, thin = 10;
  std::uint64_t seed = 1;
  double eps = 0.1;
};

void run_fit(const FitArgs& args) {
  const AsprData data = load_data(args.outcomes, args.predictors, args.interactions);
  AsprPriors priors = default_priors(data);
  if (args.plugin) {
    RngStream em_rng(args.seed, 0xE0);
    const MixtureFit em = em_fit(data.Y, EmOptions{}, em_rng);
    priors.plugin = true;
    priors.plugin_components = em.components;
  }
  ChainConfig config;
  config.n_iter = args.iters;
  config.burn_in = args.burnin;
  config.thin = args.thin;
  config.seed = args.seed;

  const PosteriorSamples samples = run_chain(data, priors, config);

  fs::create_directories(args.out);
  write_samples_csv(samples, (fs::path(args.out) / "samples.csv").string(), args.store_z);
  write_summary_csv(posterior_summary(samples),
                    (fs::path(args.out) / "summary.csv").string());

  const Eigen::VectorXd alloc = allocation_probability(samples);
  {
    std::ofstream out((fs::path(args.out) / "allocation.csv").string());
    if (!out) throw std::runtime_error("cannot write allocation.csv");
    out << "subject,healthy_prob\n";
    for (int i = 0; i < alloc.size(); ++i) {
      out << i + 1 << ',' << format_double(alloc(i)) << '\n';
    }
  }
  write_named_column_csv((fs::path(args.out) / "effectprob.csv").string(), "predictor",
                         data.predictor_names, "effect_prob",
                         effect_probability(samples, args.eps));
  // Offsets removed from each predictor column, for scoring new subjects.
  write_csv_table((fs::path(args.out) / "centering.csv").string(), data.predictor_names,
                  data.x_offsets.transpose());

  int swapped = 0;
  for (size_t it = args.burnin; it < samples.minority_frac.size(); ++it) {
    swapped += samples.minority_frac[it] > 0.5;
  }
  std::cout << "stored draws: " << samples.gamma.size() << "\n"
            << "label-swap fraction (post burn-in iterations with minority > 50%): "
            << static_cast<double>(swapped) /
                   (samples.minority_frac.size() - args.burnin)
            << "\n";
}

struct EmArgs {
  std::string outcomes, out;
  std::uint64_t seed = 1;
  int restarts = 10;
};

void run_em(const EmArgs& args) {
  const CsvTable yt = read_csv_table(args.outcomes);
  RngStream rng(args.seed, 0);
  EmOptions opts;
  opts.n_restarts = args.restarts;
  const MixtureFit fit = em_fit(yt.values, opts, rng);

  std::ofstream out(args.out);
  if (!out) throw std::runtime_error("cannot write " + args.out);
  const int s = static_cast<int>(yt.values.cols());
  out << "parameter,value\n";
  out << "weight_adverse," << format_double(fit.weight) << '\n';
  for (int h = 0; h < 2; ++h) {
    const auto& comp = fit.components[h];
    for (int k = 0; k < s; ++k) {
      out << "theta[" << h + 1 << "][" << k + 1 << "]," << format_double(comp.theta(k))
          << '\n';
    }
    for (int k = 0; k < s; ++k) {
      for (int l = k; l < s; ++l) {
        out << "Sigma[" << h + 1 << "][" << k + 1 << "][" << l + 1 << "],"
            << format_double(comp.sigma(k, l)) << '\n';
      }
    }
  }
  out << "loglik," << format_double(fit.loglik_trace.back()) << '\n';
  out << "converged," << (fit.converged ? 1 : 0) << '\n';
  out << "iterations," << fit.n_iter << '\n';
  std::cout << "adverse weight: " << fit.weight << ", log likelihood "
            << fit.loglik_trace.back() << "\n";
}

struct TwoStageArgs {
  std::string outcomes, predictors, interactions, out;
  std::string mode = "classification";
  std::string second = "standard";
  std::string cutoffs, truth;
  double level = 0.90, enet_a = 0.5;
  int folds = 10;
  std::uint64_t seed = 1;
};

void run_two_stage(const TwoStageArgs& args) {
  const AsprData data = load_data(args.outcomes, args.predictors, args.interactions);

  TwoStageOptions opts;
  if (args.mode == "cutoff") {
    opts.first = FirstStage::kCutoff;
    if (args.cutoffs.empty()) throw std::runtime_error("cutoff mode needs --cutoffs");
    opts.cutoffs = parse_cutoffs(args.cutoffs, data.outcome_names);
  } else if (args.mode == "classification") {
    opts.first = FirstStage::kClassification;
  } else if (args.mode == "truth") {
    opts.first = FirstStage::kTruth;
  } else {
    throw std::runtime_error("unknown --mode '" + args.mode + "'");
  }
  if (args.second == "standard") {
    opts.second = SecondStage::kStandard;
  } else if (args.second == "lasso") {
    opts.second = SecondStage::kLasso;
  } else if (args.second == "enet") {
    opts.second = SecondStage::kElasticNet;
  } else {
    throw std::runtime_error("unknown --second '" + args.second + "'");
  }
  opts.level = args.level;
  opts.enet_a = args.enet_a;
  opts.cv_folds = args.folds;

  std::vector<int> z_true;
  if (opts.first == FirstStage::kTruth) {
    if (args.truth.empty()) throw std::runtime_error("truth mode needs --truth z.csv");
    const CsvTable zt = read_csv_table(args.truth);
    if (zt.values.cols() != 1 || zt.values.rows() != data.Y.rows()) {
      throw std::runtime_error(args.truth + ": expected one 0/1 column per subject");
    }
    z_true.resize(zt.values.rows());
    for (long i = 0; i < zt.values.rows(); ++i) z_true[i] = zt.values(i, 0) != 0.0;
  }

  RngStream rng(args.seed, 0);
  const TwoStageFit fit = two_stage(data, opts, z_true.empty() ? nullptr : &z_true, rng);

  std::ofstream out(args.out);
  if (!out) throw std::runtime_error("cannot write " + args.out);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << "coefficient,estimate,ci_lower,ci_upper,active\n";
  if (opts.second == SecondStage::kStandard) {
    out << "(intercept)," << format_double(fit.intercept) << ','
        << format_double(fit.mle.ci_lower(0)) << ',' << format_double(fit.mle.ci_upper(0))
        << ",0\n";
    for (int j = 0; j < fit.estimates.size(); ++j) {
      out << data.predictor_names[j] << ',' << format_double(fit.estimates(j)) << ','
          << format_double(fit.mle.ci_lower(j + 1)) << ','
          << format_double(fit.mle.ci_upper(j + 1)) << ',' << (fit.selected[j] ? 1 : 0)
          << '\n';
    }
    if (fit.mle.separation) {
      std::cout << "warning: separation detected; intervals unreliable\n";
    }
  } else {
    out << "lambda_star," << format_double(fit.lambda_star) << ','
        << format_double(nan) << ',' << format_double(nan) << ",0\n";
    out << "(intercept)," << format_double(fit.intercept) << ',' << format_double(nan)
        << ',' << format_double(nan) << ",0\n";
    for (int j = 0; j < fit.estimates.size(); ++j) {
      out << data.predictor_names[j] << ',' << format_double(fit.estimates(j)) << ','
          << format_double(nan) << ',' << format_double(nan) << ','
          << (fit.selected[j] ? 1 : 0) << '\n';
    }
  }
  int n_selected = 0;
  for (bool s : fit.selected) n_selected += s;
  std::cout << "first-stage adverse count: "
            << std::count(fit.z.begin(), fit.z.end(), 1) << " of " << fit.z.size()
            << "; selected predictors: " << n_selected << "\n";
}

struct SimulateArgs {
  std::string design, out;
};

void run_simulate(const SimulateArgs& args) {
  const SimDesign design = design_from_config(read_config(args.design));
  const Eigen::MatrixXd X = design_predictors(design);
  const Eigen::VectorXd beta_true = true_coefficients(design);
  RngStream rng(design.base_seed, 0xD0000000ULL);
  const SimulatedData sim = simulate_dataset(design, X, beta_true, rng);

  fs::create_directories(args.out);
  write_csv_table((fs::path(args.out) / "Y.csv").string(), sim.data.outcome_names,
                  sim.data.Y);
  write_csv_table((fs::path(args.out) / "X.csv").string(), sim.data.predictor_names, X);
  Eigen::MatrixXd zt(sim.z_true.size(), 1);
  for (size_t i = 0; i < sim.z_true.size(); ++i) zt(i, 0) = sim.z_true[i];
  write_csv_table((fs::path(args.out) / "ztrue.csv").string(), {"z"}, zt);
  std::cout << "n=" << sim.data.Y.rows() << " s=" << sim.data.Y.cols()
            << " p=" << X.cols() << "; intercept " << sim.gamma_true
            << " for adverse fraction " << design.adverse_fraction << "\n";
}

struct StudyArgs {
  std::string design, methods, out;
  int replicates = 0;  // 0 = take from design
  int threads = 1;
};

void run_study_cmd(const StudyArgs& args) {
  SimDesign design = design_from_config(read_config(args.design));
  if (args.replicates > 0) design.replicates = args.replicates;

  std::vector<MethodSpec> methods;
  for (const std::string& token : split_list(args.methods)) {
    methods.push_back(make_method(token, design));
  }
  const std::vector<std::string> outs = split_list(args.out);
  if (outs.empty() || outs.size() > 2) {
    throw std::runtime_error("--out expects table.csv or table.csv,roc.csv");
  }

  const StudyResult result = run_study(design, methods, args.threads);
  write_metrics_csv(result.rows, outs[0]);
  if (outs.size() == 2) write_roc_csv(result, outs[1]);
  for (const auto& row : result.rows) {
    std::cout << row.method << ": mse " << row.mse_nonnull << "/" << row.mse_null
              << ", tpr " << row.tpr << ", fpr " << row.fpr << ", auc " << row.auc;
    if (row.failures > 0) std::cout << " (" << row.failures << " replicates failed)";
    std::cout << "\n";
  }
}

struct PpdArgs {
  std::string samples, predictors, centering, grid, out;
};

void run_ppd(const PpdArgs& args) {
  PosteriorSamples samples = read_samples_csv(args.samples);
  const CsvTable xt = read_csv_table(args.predictors);

  Eigen::MatrixXd X = xt.values;
  if (!args.centering.empty()) {
    const CsvTable ct = read_csv_table(args.centering);
    if (ct.values.rows() != 1 || ct.values.cols() != X.cols()) {
      throw std::runtime_error(args.centering + ": expected one offset per predictor");
    }
    X = X.rowwise() - ct.values.row(0);
  } else {
    // Column means; identical to the training offsets when the predictor
    // file is the training matrix itself.
    X = X.rowwise() - X.colwise().mean();
  }
  recompute_omega_bar(samples, X);

  const int s = static_cast<int>(samples.adverse[0].theta.size());
  const std::vector<std::string> dims = split_list(args.grid);
  if (static_cast<int>(dims.size()) != s) {
    throw std::runtime_error("--grid needs " + std::to_string(s) +
                             " min:max:count specs");
  }
  std::vector<Eigen::VectorXd> axes;
  for (const std::string& dim : dims) {
    double lo, hi;
    int count;
    if (std::sscanf(dim.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 2 ||
        hi <= lo) {
      throw std::runtime_error("bad grid spec '" + dim + "' (want min:max:count)");
    }
    Eigen::VectorXd axis(count);
    for (int k = 0; k < count; ++k) axis(k) = lo + (hi - lo) * k / (count - 1);
    axes.push_back(axis);
  }
  long total = 1;
  for (const auto& axis : axes) total *= axis.size();
  Eigen::MatrixXd grid(total, s);
  for (long row = 0; row < total; ++row) {
    long rem = row;
    for (int d = s - 1; d >= 0; --d) {
      grid(row, d) = axes[d](rem % axes[d].size());
      rem /= axes[d].size();
    }
  }

  const Eigen::VectorXd density = posterior_predictive_density(samples, grid);
  std::vector<std::string> header;
  for (int d = 1; d <= s; ++d) header.push_back("y" + std::to_string(d));
  header.push_back("density");
  Eigen::MatrixXd out(total, s + 1);
  out.leftCols(s) = grid;
  out.col(s) = density;
  write_csv_table(args.out, header, out);
  std::cout << "wrote " << total << " grid densities\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-class regression for adverse-subpopulation discovery"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Sample the full posterior on real data");
  fit->add_option("--outcomes", fit_args.outcomes, "outcome CSV (n x s)")->required();
  fit->add_option("--predictors", fit_args.predictors, "predictor CSV (n x p)")->required();
  fit->add_option("--interactions", fit_args.interactions,
                  "text file of nameA,nameB pairs; products appended as predictors");
  fit->add_flag("--plugin", fit_args.plugin,
                "freeze component parameters at mixture-EM estimates");
  fit->add_option("--iters", fit_args.iters, "total Gibbs iterations");
  fit->add_option("--burnin", fit_args.burnin, "burn-in iterations to discard");
  fit->add_option("--thin", fit_args.thin, "keep every thin-th draw");
  fit->add_option("--seed", fit_args.seed, "RNG seed");
  fit->add_option("--eps", fit_args.eps, "effect-size threshold for effectprob.csv");
  fit->add_flag("--store-z", fit_args.store_z, "include allocation draws in samples.csv");
  fit->add_option("--out", fit_args.out, "output directory")->required();
  fit->callback([&] { run_fit(fit_args); });

  EmArgs em_args;
  CLI::App* em = app.add_subcommand("em", "Two-component mixture fit by EM");
  em->add_option("--outcomes", em_args.outcomes, "outcome CSV (n x s)")->required();
  em->add_option("--seed", em_args.seed, "RNG seed");
  em->add_option("--restarts", em_args.restarts, "random restarts");
  em->add_option("--out", em_args.out, "output CSV")->required();
  em->callback([&] { run_em(em_args); });

  TwoStageArgs ts_args;
  CLI::App* ts = app.add_subcommand("two-stage", "Dichotomize, then logistic regression");
  ts->add_option("--outcomes", ts_args.outcomes, "outcome CSV")->required();
  ts->add_option("--predictors", ts_args.predictors, "predictor CSV")->required();
  ts->add_option("--interactions", ts_args.interactions, "interaction pair file");
  ts->add_option("--mode", ts_args.mode, "first stage: cutoff|classification|truth");
  ts->add_option("--second", ts_args.second, "second stage: standard|lasso|enet");
  ts->add_option("--cutoffs", ts_args.cutoffs, "e.g. \"gest<259,bw<2500\"");
  ts->add_option("--truth", ts_args.truth, "true 0/1 labels CSV (truth mode)");
  ts->add_option("--level", ts_args.level, "CI level for selection (standard)");
  ts->add_option("--enet-a", ts_args.enet_a, "elastic-net mixing weight");
  ts->add_option("--folds", ts_args.folds, "CV folds (penalized)");
  ts->add_option("--seed", ts_args.seed, "RNG seed");
  ts->add_option("--out", ts_args.out, "output CSV")->required();
  ts->callback([&] { run_two_stage(ts_args); });

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Generate one synthetic dataset");
  sim->add_option("--design", sim_args.design, "design config (key=value)")->required();
  sim->add_option("--out", sim_args.out, "output directory")->required();
  sim->callback([&] { run_simulate(sim_args); });

  StudyArgs study_args;
  CLI::App* study = app.add_subcommand("study", "Replicated method comparison");
  study->add_option("--design", study_args.design, "design config")->required();
  study->add_option("--methods", study_args.methods,
                    "comma list: aspr, aspr-plugin, truth-standard, class-lasso, ...")
      ->required();
  study->add_option("--replicates", study_args.replicates, "override design replicate count");
  study->add_option("--threads", study_args.threads, "worker threads over replicates");
  study->add_option("--out", study_args.out, "table.csv or table.csv,roc.csv")->required();
  study->callback([&] { run_study_cmd(study_args); });

  PpdArgs ppd_args;
  CLI::App* ppd = app.add_subcommand("ppd", "Posterior predictive density on a grid");
  ppd->add_option("--samples", ppd_args.samples, "samples.csv from fit")->required();
  ppd->add_option("--predictors", ppd_args.predictors,
                  "predictor CSV for the weight average (training matrix)")
      ->required();
  ppd->add_option("--centering", ppd_args.centering, "centering.csv from fit");
  ppd->add_option("--grid", ppd_args.grid, "per-outcome min:max:count, comma separated")
      ->required();
  ppd->add_option("--out", ppd_args.out, "output CSV")->required();
  ppd->callback([&] { run_ppd(ppd_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
