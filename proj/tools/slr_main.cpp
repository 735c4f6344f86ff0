// Command-line front end: fit, cv, benchmark, simulate.  Reports are JSON
// with a stable field order; plot-ready data goes to CSV.  Exit codes:
// 0 success, 2 usage or data error, 3 numerical failure.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slr/baselines.hpp"
#include "slr/data_model.hpp"
#include "slr/em_solvers.hpp"
#include "slr/eval_select.hpp"
#include "slr/objectives.hpp"
#include "slr/rng.hpp"
#include "slr/simulate.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace slr;

json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

json vec(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json dvec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::invalid_argument("cannot open output file: " + path);
  f << text << "\n";
  if (!f.good()) throw std::invalid_argument("write failed: " + path);
}

double parse_nonneg(const std::string& s, const std::string& what, bool allow_inf) {
  std::string lower;
  for (char ch : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower == "inf" || lower == "+inf" || lower == "infinity") {
    if (!allow_inf) throw std::invalid_argument(what + " must be finite");
    return std::numeric_limits<double>::infinity();
  }
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse " + what + " value '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("cannot parse " + what + " value '" + s + "'");
  if (std::isnan(v) || v < 0.0) throw std::invalid_argument(what + " must be >= 0");
  return v;
}

// "labeled" keeps the training labeled proportion; otherwise a value in (0,1).
double resolve_rho0(const std::string& s, const SampleCounts& c) {
  if (s == "labeled") return clamp_unit(c.rho_labeled());
  const double v = parse_nonneg(s, "--rho0", false);
  if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("--rho0 must lie in (0,1) or be 'labeled'");
  return clamp_unit(v);
}

VectorXd to_eigen(const std::vector<double>& v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

double elapsed_sec(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Options {
  // shared
  std::string data;
  std::string label_col = "label";
  std::string method;
  std::string output;
  std::string csv;
  std::uint64_t seed = 0;
  bool standardize = false;
  // fit
  double lambda = 0.0;
  std::string gamma_str = "0";
  double lambda_e = 0.0;
  std::string rho0_str = "labeled";
  // cv / benchmark
  std::vector<double> lambda_grid, gamma_grid, lambda_e_grid;
  int folds = 5;
  // benchmark
  std::string scheme = "homo";
  std::string adjust = "auto";
  int reps = 20;
  std::int64_t labeled_size = 0;
  // simulate
  std::string sim;
  std::vector<double> mu0, sigma_diag, beta1_star;
  double rho_star = 0.5;
  std::int64_t n1 = 0, n2 = 0, n3 = 0;
  std::vector<double> scales{1.0, 4.0, 16.0};
  int sim_reps = 0;
  bool raw = false;
};

SemiDataset load_data(const Options& opt) {
  if (opt.data.empty()) throw std::invalid_argument("--data is required");
  SemiDataset data = load_csv(opt.data, opt.label_col);
  data.validate();
  return data;
}

// Grid resolution: protocol defaults, any provided list replaces its slot.
CvGrid resolve_grid(const Options& opt, MethodId method) {
  CvGrid grid = method == MethodId::cem ? CvGrid{} : default_grids(method, DatasetKind::uci);
  if (!opt.lambda_grid.empty()) grid.lambdas = opt.lambda_grid;
  if (!opt.gamma_grid.empty()) grid.gammas = opt.gamma_grid;
  if (!opt.lambda_e_grid.empty()) grid.lambda_es = opt.lambda_e_grid;
  grid.folds = opt.folds;
  grid.validate(method);
  return grid;
}

json grid_json(const CvGrid& grid, MethodId method) {
  json g;
  g["folds"] = grid.folds;
  g["lambdas"] = dvec(grid.lambdas);
  if (method == MethodId::pslr || method == MethodId::dslr) g["gammas"] = dvec(grid.gammas);
  if (method == MethodId::er) g["lambda_es"] = dvec(grid.lambda_es);
  return g;
}

json fit_json(const MethodFit& mf, const SampleCounts& c) {
  json f;
  f["rho"] = num(mf.params.rho);
  f["beta0"] = num(mf.params.beta0);
  f["beta1"] = vec(mf.params.beta1);
  f["beta0_classifier"] = num(to_classifier(mf.params, c).beta0c);
  f["objective"] = num(mf.objective);
  f["iterations"] = mf.iterations;
  f["converged"] = mf.converged;
  f["final_gradient_norm"] = num(mf.final_gradient_norm);
  return f;
}

json counts_json(const SampleCounts& c) {
  return json{{"n1", c.n1}, {"n2", c.n2}, {"n3", c.n3}};
}

int cmd_fit(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const MethodId method = parse_method(opt.method);
  SemiDataset data = load_data(opt);
  Standardizer std_fit;
  if (opt.standardize) {
    std_fit = fit_standardizer(data);
    data = std_fit.transform(data);
  }
  const SampleCounts c = data.counts();
  const double gamma = parse_nonneg(opt.gamma_str, "--gamma", true);
  const double rho0 = resolve_rho0(opt.rho0_str, c);
  if (opt.lambda < 0.0) throw std::invalid_argument("--lambda must be >= 0");
  if (opt.lambda_e < 0.0 || opt.lambda_e > 1.0)
    throw std::invalid_argument("--lambda-e must lie in [0,1]");

  const MethodFit mf = fit_method(data, method, opt.lambda, gamma, opt.lambda_e, rho0, opt.seed);
  if (!mf.converged)
    throw NumericalError(method_name(method) + " fit did not converge within the iteration budget");

  json j;
  j["schema_version"] = 1;
  j["kind"] = "fit_report";
  json cfg;
  cfg["command"] = "fit";
  cfg["data"] = opt.data;
  cfg["label_column"] = opt.label_col;
  cfg["method"] = method_name(method);
  cfg["lambda"] = num(opt.lambda);
  cfg["gamma"] = num(gamma);
  cfg["lambda_e"] = num(opt.lambda_e);
  cfg["rho0"] = opt.rho0_str;
  cfg["rho0_resolved"] = num(rho0);
  cfg["standardize"] = opt.standardize;
  cfg["seed"] = opt.seed;
  j["config"] = cfg;
  j["counts"] = counts_json(c);
  if (opt.standardize) {
    j["standardizer"]["mean"] = vec(std_fit.mean);
    j["standardizer"]["scale"] = vec(std_fit.scale);
  }
  j["fit"] = fit_json(mf, c);
  j["wall_time_sec"] = elapsed_sec(t0);
  write_text(opt.output, j.dump(2));
  return 0;
}

int cmd_cv(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const MethodId method = parse_method(opt.method);
  SemiDataset data = load_data(opt);
  if (opt.standardize) data = fit_standardizer(data).transform(data);
  const SampleCounts c = data.counts();
  const CvGrid grid = resolve_grid(opt, method);

  const CvReport report = cross_validate(data, method, grid, opt.seed);
  const CvCellResult& sel = report.cells[static_cast<std::size_t>(report.selected)];
  const double rho0 = resolve_rho0(opt.rho0_str, c);
  const double gamma = std::isnan(sel.gamma) ? 0.0 : sel.gamma;
  const double lambda_e = std::isnan(sel.lambda_e) ? 0.0 : sel.lambda_e;
  const MethodFit refit = fit_method(data, method, sel.lambda, gamma, lambda_e, rho0,
                                     derive_seed(opt.seed, 0x5e1ec7));
  if (!refit.converged)
    throw NumericalError(method_name(method) + " refit at the selected cell did not converge");

  json j;
  j["schema_version"] = 1;
  j["kind"] = "cv_run";
  json cfg;
  cfg["command"] = "cv";
  cfg["data"] = opt.data;
  cfg["label_column"] = opt.label_col;
  cfg["method"] = method_name(method);
  cfg["rho0"] = opt.rho0_str;
  cfg["standardize"] = opt.standardize;
  cfg["seed"] = opt.seed;
  cfg["grid"] = grid_json(grid, method);
  j["config"] = cfg;
  j["counts"] = counts_json(c);
  j["cv"] = json::parse(cv_report_json(report));
  json rf;
  rf["lambda"] = num(sel.lambda);
  if (!std::isnan(sel.gamma)) rf["gamma"] = num(sel.gamma);
  if (!std::isnan(sel.lambda_e)) rf["lambda_e"] = num(sel.lambda_e);
  rf["rho0_resolved"] = num(rho0);
  rf["fit"] = fit_json(refit, c);
  j["refit"] = rf;
  j["wall_time_sec"] = elapsed_sec(t0);
  write_text(opt.output, j.dump(2));
  return 0;
}

int cmd_benchmark(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  SemiDataset source_semi = load_data(opt);
  const LabeledSample source = to_labeled(source_semi);  // rejects unlabeled rows
  if (opt.labeled_size <= 0) throw std::invalid_argument("--labeled-size must be positive");
  if (opt.reps <= 0) throw std::invalid_argument("--reps must be positive");
  const SplitScheme scheme = opt.scheme == "flip" ? SplitScheme::flip : SplitScheme::homo;

  const std::vector<MethodId> methods{MethodId::rlr, MethodId::er, MethodId::pslr,
                                      MethodId::dslr};
  std::vector<CvGrid> grids;
  for (MethodId m : methods) grids.push_back(resolve_grid(opt, m));

  struct Cell {
    double acc = std::numeric_limits<double>::quiet_NaN();
    double auc_v = std::numeric_limits<double>::quiet_NaN();
    double lambda = 0.0, gamma = 0.0, lambda_e = 0.0;
    bool converged = false;
    bool failed = false;
    std::string error;
  };
  std::vector<std::vector<Cell>> table(methods.size());

  json runs = json::array();
  for (int r = 0; r < opt.reps; ++r) {
    const std::uint64_t rep_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(r) + 1, 1);
    const SplitResult split = split_train_test(source, scheme, opt.labeled_size, rep_seed);
    const Standardizer stdz = fit_standardizer(split.train);
    const SemiDataset train = stdz.transform(split.train);
    const LabeledSample test = stdz.transform(split.test);
    const SampleCounts c = train.counts();
    const double labeled_shift = std::log(static_cast<double>(c.n2) / static_cast<double>(c.n1));
    double prior = 0.0;
    if (opt.adjust == "on")
      prior = labeled_shift;
    else if (opt.adjust == "auto")
      prior = scheme == SplitScheme::homo ? labeled_shift : 0.0;

    json run;
    run["rep"] = r;
    run["counts"] = counts_json(c);
    run["test_rows"] = test.n();
    run["prior_log_odds"] = num(prior);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      Cell cell;
      try {
        const CvReport cv = cross_validate(train, methods[mi], grids[mi],
                                           derive_seed(opt.seed, static_cast<std::uint64_t>(r) + 1,
                                                       2 + mi));
        const CvCellResult& sel = cv.cells[static_cast<std::size_t>(cv.selected)];
        cell.lambda = sel.lambda;
        cell.gamma = std::isnan(sel.gamma) ? 0.0 : sel.gamma;
        cell.lambda_e = std::isnan(sel.lambda_e) ? 0.0 : sel.lambda_e;
        const MethodFit mf =
            fit_method(train, methods[mi], cell.lambda, cell.gamma, cell.lambda_e,
                       clamp_unit(c.rho_labeled()),
                       derive_seed(opt.seed, static_cast<std::uint64_t>(r) + 1, 100 + mi));
        cell.converged = mf.converged;
        const VectorXd scores = predict_scores(mf.params, prior, test.x);
        cell.acc = accuracy(scores, test.y);
        cell.auc_v = auc(scores, test.y);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      json jm;
      jm["selected"] = json{{"lambda", num(cell.lambda)},
                            {"gamma", num(cell.gamma)},
                            {"lambda_e", num(cell.lambda_e)}};
      jm["accuracy"] = num(cell.acc);
      jm["auc"] = num(cell.auc_v);
      jm["converged"] = cell.converged;
      if (cell.failed) jm["error"] = cell.error;
      run[method_name(methods[mi])] = jm;
      table[mi].push_back(cell);
    }
    runs.push_back(run);
  }

  // within-1-point tally: for each repetition, every method whose accuracy is
  // within 0.01 of that repetition's best gets a count
  std::vector<int> acc_tally(methods.size(), 0), auc_tally(methods.size(), 0);
  for (int r = 0; r < opt.reps; ++r) {
    double best_acc = -1.0, best_auc = -1.0;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Cell& cc = table[mi][static_cast<std::size_t>(r)];
      if (cc.failed) continue;
      best_acc = std::max(best_acc, cc.acc);
      best_auc = std::max(best_auc, cc.auc_v);
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Cell& cc = table[mi][static_cast<std::size_t>(r)];
      if (cc.failed) continue;
      if (cc.acc >= best_acc - 0.01) ++acc_tally[mi];
      if (cc.auc_v >= best_auc - 0.01) ++auc_tally[mi];
    }
  }

  json summary;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> accs, aucs;
    int failures = 0;
    for (const Cell& cc : table[mi]) {
      if (cc.failed) {
        ++failures;
        continue;
      }
      accs.push_back(cc.acc);
      aucs.push_back(cc.auc_v);
    }
    auto mean_sd = [](const std::vector<double>& v) {
      if (v.empty())
        return std::pair<double, double>{std::numeric_limits<double>::quiet_NaN(),
                                         std::numeric_limits<double>::quiet_NaN()};
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      if (v.size() < 2) return std::pair<double, double>{m, std::numeric_limits<double>::quiet_NaN()};
      double s2 = 0.0;
      for (double x : v) s2 += (x - m) * (x - m);
      return std::pair<double, double>{m, std::sqrt(s2 / static_cast<double>(v.size() - 1))};
    };
    const auto [am, as] = mean_sd(accs);
    const auto [um, us] = mean_sd(aucs);
    json jm;
    jm["accuracy_mean"] = num(am);
    jm["accuracy_sd"] = num(as);
    jm["auc_mean"] = num(um);
    jm["auc_sd"] = num(us);
    jm["accuracy_within_1pt_of_best"] = acc_tally[mi];
    jm["auc_within_1pt_of_best"] = auc_tally[mi];
    jm["failures"] = failures;
    jm["accuracy_per_rep"] = dvec(accs);
    jm["auc_per_rep"] = dvec(aucs);
    summary[method_name(methods[mi])] = jm;
  }

  json j;
  j["schema_version"] = 1;
  j["kind"] = "benchmark_report";
  json cfg;
  cfg["command"] = "benchmark";
  cfg["data"] = opt.data;
  cfg["label_column"] = opt.label_col;
  cfg["scheme"] = opt.scheme;
  cfg["adjust_intercept"] = opt.adjust;
  cfg["labeled_size"] = opt.labeled_size;
  cfg["reps"] = opt.reps;
  cfg["seed"] = opt.seed;
  json gj;
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    gj[method_name(methods[mi])] = grid_json(grids[mi], methods[mi]);
  cfg["grids"] = gj;
  j["config"] = cfg;
  j["source_rows"] = source.n();
  j["summary"] = summary;
  j["runs"] = runs;
  j["wall_time_sec"] = elapsed_sec(t0);
  write_text(opt.output, j.dump(2));
  return 0;
}

EtmSpec build_spec(const Options& opt) {
  if (opt.beta1_star.empty())
    throw std::invalid_argument("--beta1-star is required for this simulation");
  EtmSpec spec;
  spec.beta1_star = to_eigen(opt.beta1_star);
  const Eigen::Index p = spec.beta1_star.size();
  spec.mu0 = opt.mu0.empty() ? VectorXd::Zero(p) : to_eigen(opt.mu0);
  VectorXd diag = opt.sigma_diag.empty() ? VectorXd::Ones(p) : to_eigen(opt.sigma_diag);
  if (spec.mu0.size() != p || diag.size() != p)
    throw std::invalid_argument("--mu0/--sigma-diag dimensions must match --beta1-star");
  spec.sigma = MatrixXd(diag.asDiagonal());
  spec.rho_star = opt.rho_star;
  spec.sizes = SampleCounts{opt.n1, opt.n2, opt.n3};
  spec.validate();
  return spec;
}

json spec_json(const EtmSpec& spec) {
  json s;
  s["mu0"] = vec(spec.mu0);
  s["sigma_diag"] = vec(spec.sigma.diagonal());
  s["beta1_star"] = vec(spec.beta1_star);
  s["beta0_star"] = num(spec.beta0_star());
  s["rho_star"] = num(spec.rho_star);
  s["n1"] = spec.sizes.n1;
  s["n2"] = spec.sizes.n2;
  s["n3"] = spec.sizes.n3;
  return s;
}

void write_dataset_csv(const std::string& path, const SemiDataset& data) {
  std::ostringstream out;
  out.precision(17);
  const Eigen::Index p = data.dim();
  for (Eigen::Index jc = 0; jc < p; ++jc) out << "x" << (jc + 1) << ",";
  out << "label\n";
  auto rows = [&](const MatrixXd& m, const char* lab) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index jc = 0; jc < p; ++jc) out << m(i, jc) << ",";
      out << lab << "\n";
    }
  };
  rows(data.x1, "0");
  rows(data.x2, "1");
  rows(data.x3, "NA");
  write_text(path, out.str());
}

int cmd_simulate(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  json j;
  j["schema_version"] = 1;
  j["kind"] = "simulate_report";
  json cfg;
  cfg["command"] = "simulate";
  cfg["sim"] = opt.sim;
  cfg["seed"] = opt.seed;

  if (opt.sim == "etm") {
    if (opt.csv.empty()) throw std::invalid_argument("--csv is required for --sim etm");
    const EtmSpec spec = build_spec(opt);
    const SemiDataset data = sample_etm(spec, opt.seed);
    write_dataset_csv(opt.csv, data);
    cfg["spec"] = spec_json(spec);
    cfg["csv"] = opt.csv;
    j["config"] = cfg;
    j["counts"] = counts_json(data.counts());
  } else if (opt.sim == "illustration") {
    const bool scaled = !opt.raw;
    cfg["scaled"] = scaled;
    j["config"] = cfg;
    const IllustrationData ill = sample_gaussian_illustration(opt.seed, scaled);
    const SampleCounts c = ill.train.counts();
    const double shift = std::log(static_cast<double>(c.n2) / static_cast<double>(c.n1));
    const LabeledSample labeled =
        to_labeled(SemiDataset{ill.train.x1, ill.train.x2, MatrixXd(0, 2)});

    json lines = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "method,tuning,value,intercept_adjusted,intercept_unadjusted,beta1,beta2\n";
    auto emit = [&](const std::string& method, const std::string& tuning, double value,
                    const ModelParams* params, const std::string& err) {
      json e;
      e["method"] = method;
      e["tuning"] = tuning;
      e["value"] = num(value);
      if (params) {
        e["intercept_adjusted"] = num(params->beta0);
        e["intercept_unadjusted"] = num(params->beta0 + shift);
        e["slope"] = vec(params->beta1);
        csv << method << "," << tuning << "," << value << "," << params->beta0 << ","
            << params->beta0 + shift << "," << params->beta1(0) << "," << params->beta1(1)
            << "\n";
      } else {
        e["error"] = err;
      }
      lines.push_back(e);
    };

    for (int i = 0; i < 8; ++i) {
      const double t = static_cast<double>(i) / 7.0;
      // ridge logistic: log10(lambda) uniform on [-5,-1]
      const double lam = std::pow(10.0, -5.0 + 4.0 * t);
      try {
        const ModelParams mp = to_model_params(fit_ridge_logistic(labeled, lam), c);
        emit("rlr", "lambda", lam, &mp, "");
      } catch (const std::exception& e) {
        emit("rlr", "lambda", lam, nullptr, e.what());
      }
      // entropy regularization: lambda_e uniform on [0.01, 1], no ridge term
      const double le = 0.01 + 0.99 * t;
      try {
        const ModelParams mp =
            to_model_params(fit_entropy_reg(ill.train, 0.0, le,
                                            derive_seed(opt.seed, 201, static_cast<std::uint64_t>(i))),
                            c);
        emit("er", "lambda_e", le, &mp, "");
      } catch (const std::exception& e) {
        emit("er", "lambda_e", le, nullptr, e.what());
      }
      // direct SLR: log10(gamma) uniform on [-4,0], no ridge term
      const double gam = std::pow(10.0, -4.0 + 4.0 * t);
      try {
        const FitResult fr =
            fit_dslr(ill.train, PenaltyConfig{0.0, gam, clamp_unit(c.rho_labeled())});
        emit("dslr", "gamma", gam, &fr.params, "");
      } catch (const std::exception& e) {
        emit("dslr", "gamma", gam, nullptr, e.what());
      }
    }
    // oracle: plain logistic fit on the independent balanced sample
    {
      const ClassifierCoefficients oc = fit_ridge_logistic(ill.oracle, 0.0);
      ModelParams mp;
      mp.rho = 0.5;
      mp.beta0 = oc.beta0c - shift;  // emit() adds the shift back for the unadjusted row
      mp.beta1 = oc.beta1;
      emit("oracle", "none", std::numeric_limits<double>::quiet_NaN(), &mp, "");
    }
    j["counts"] = counts_json(c);
    j["feature_rms"] = vec(ill.scales);
    j["lines"] = lines;
    if (!opt.csv.empty()) {
      write_text(opt.csv, csv.str());
      j["csv"] = opt.csv;
    }
  } else if (opt.sim == "consistency" || opt.sim == "efficiency") {
    const EtmSpec spec = build_spec(opt);
    cfg["spec"] = spec_json(spec);
    cfg["reps"] = opt.sim_reps;
    if (opt.sim == "consistency") cfg["scales"] = dvec(opt.scales);
    j["config"] = cfg;
    const McReport report = opt.sim == "consistency"
                                ? mc_consistency(spec, opt.scales, opt.sim_reps, opt.seed)
                                : mc_efficiency(spec, opt.sim_reps, opt.seed);
    j["result"] = json::parse(report.to_json());
    if (!opt.csv.empty()) {
      write_text(opt.csv, report.estimates_csv());
      j["csv"] = opt.csv;
    }
  } else {
    throw std::invalid_argument("unknown --sim kind '" + opt.sim + "'");
  }

  j["wall_time_sec"] = elapsed_sec(t0);
  write_text(opt.output, j.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised logistic learning via exponential tilt mixtures"};
  app.require_subcommand(1);
  Options opt;

  auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--data", opt.data, "CSV file with a header row")->required();
    cmd->add_option("--label-col", opt.label_col, "label column name (default: label)");
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", opt.seed, "master RNG seed")->required();
  };
  auto add_grids = [&](CLI::App* cmd) {
    cmd->add_option("--lambda-grid", opt.lambda_grid, "comma-separated ridge penalties")
        ->delimiter(',');
    cmd->add_option("--gamma-grid", opt.gamma_grid, "comma-separated prior strengths")
        ->delimiter(',');
    cmd->add_option("--lambda-e-grid", opt.lambda_e_grid, "comma-separated entropy weights")
        ->delimiter(',');
    cmd->add_option("--folds", opt.folds, "CV fold count (default 5)");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit one method at fixed hyperparameters");
  add_data(fit);
  add_seed(fit);
  fit->add_option("--method", opt.method, "pslr | dslr | rlr | er | cem")->required();
  fit->add_option("--lambda", opt.lambda, "ridge penalty on the slope");
  fit->add_option("--gamma", opt.gamma_str, "prior strength on rho; 'inf' pins rho at rho0");
  fit->add_option("--lambda-e", opt.lambda_e, "entropy weight (er only)");
  fit->add_option("--rho0", opt.rho0_str, "'labeled' or a value in (0,1)");
  fit->add_flag("--standardize", opt.standardize, "standardize features before fitting");
  fit->add_option("--output", opt.output, "report path (default: stdout)");

  CLI::App* cv = app.add_subcommand("cv", "cross-validated tuning plus a final refit");
  add_data(cv);
  add_seed(cv);
  cv->add_option("--method", opt.method, "pslr | dslr | rlr | er")->required();
  add_grids(cv);
  cv->add_option("--rho0", opt.rho0_str, "'labeled' or a value in (0,1) for the refit");
  cv->add_flag("--standardize", opt.standardize, "standardize features before fitting");
  cv->add_option("--output", opt.output, "report path (default: stdout)");

  CLI::App* bench = app.add_subcommand(
      "benchmark", "repeated split / CV / fit / evaluate over all four methods");
  add_data(bench);
  add_seed(bench);
  bench->add_option("--labeled-size", opt.labeled_size, "labeled subset size per repetition")
      ->required();
  bench->add_option("--reps", opt.reps, "number of repetitions (default 20)");
  bench->add_option("--scheme", opt.scheme, "labeled sampling scheme")
      ->check(CLI::IsMember({"homo", "flip"}));
  bench->add_option("--adjust-intercept", opt.adjust,
                    "auto: follow the scheme; on/off: force the log(n2/n1) shift")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  add_grids(bench);
  bench->add_option("--output", opt.output, "report path (default: stdout)");

  CLI::App* sim = app.add_subcommand("simulate", "exact-model sampling and Monte Carlo checks");
  add_seed(sim);
  sim->add_option("--sim", opt.sim, "etm | illustration | consistency | efficiency")->required();
  sim->add_option("--mu0", opt.mu0, "component-0 mean")->delimiter(',');
  sim->add_option("--sigma-diag", opt.sigma_diag, "diagonal of the shared covariance")
      ->delimiter(',');
  sim->add_option("--beta1-star", opt.beta1_star, "true tilt slope")->delimiter(',');
  sim->add_option("--rho-star", opt.rho_star, "true unlabeled mixing weight");
  sim->add_option("--n1", opt.n1, "labeled class-0 rows");
  sim->add_option("--n2", opt.n2, "labeled class-1 rows");
  sim->add_option("--n3", opt.n3, "unlabeled rows");
  sim->add_option("--scales", opt.scales, "sample-size factors (consistency)")->delimiter(',');
  sim->add_option("--reps", opt.sim_reps, "Monte Carlo replications");
  sim->add_flag("--raw", opt.raw, "skip the RMS feature rescale (illustration)");
  sim->add_option("--csv", opt.csv, "CSV output path (dataset, lines, or estimates)");
  sim->add_option("--output", opt.output, "report path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(opt);
    if (cv->parsed()) return cmd_cv(opt);
    if (bench->parsed()) return cmd_benchmark(opt);
    return cmd_simulate(opt);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
