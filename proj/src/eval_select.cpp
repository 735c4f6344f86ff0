#include "slr/eval_select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "slr/baselines.hpp"
#include "slr/objectives.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log10_uniform(double lo, double hi, int k, int count) {
  return std::pow(10.0, lo + (hi - lo) * static_cast<double>(k) / (count - 1));
}

}  // namespace

MethodId parse_method(const std::string& name) {
  if (name == "pslr") return MethodId::pslr;
  if (name == "dslr") return MethodId::dslr;
  if (name == "rlr") return MethodId::rlr;
  if (name == "er") return MethodId::er;
  if (name == "cem") return MethodId::cem;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string method_name(MethodId m) {
  switch (m) {
    case MethodId::pslr: return "pslr";
    case MethodId::dslr: return "dslr";
    case MethodId::rlr: return "rlr";
    case MethodId::er: return "er";
    case MethodId::cem: return "cem";
  }
  return "?";
}

void CvGrid::validate(MethodId method) const {
  if (folds < 2) throw std::invalid_argument("CvGrid: folds must be >= 2");
  auto check = [](const std::vector<double>& v, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string("CvGrid: empty ") + what);
    if (!std::is_sorted(v.begin(), v.end()))
      throw std::invalid_argument(std::string("CvGrid: ") + what + " not ascending");
  };
  check(lambdas, "lambda grid");
  if (method == MethodId::pslr || method == MethodId::dslr) check(gammas, "gamma grid");
  if (method == MethodId::er) check(lambda_es, "lambda_e grid");
  if (method == MethodId::cem)
    throw std::invalid_argument("CvGrid: cem has no tuning parameters");
}

double predict_score(const ModelParams& params, double prior_log_odds,
                     const Eigen::Ref<const VectorXd>& x) {
  return prior_log_odds + linear_predictor(params, x);
}

VectorXd predict_scores(const ModelParams& params, double prior_log_odds, const MatrixXd& x) {
  return ((x * params.beta1).array() + params.beta0 + prior_log_odds).matrix();
}

double accuracy(const VectorXd& scores, const VectorXd& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("accuracy: length mismatch");
  if (scores.size() == 0) throw std::invalid_argument("accuracy: empty input");
  std::int64_t hit = 0;
  for (std::int64_t i = 0; i < scores.size(); ++i) {
    const double cls = scores[i] >= 0.0 ? 1.0 : 0.0;
    if (cls == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(scores.size());
}

double auc(const VectorXd& scores, const VectorXd& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  const auto n = scores.size();
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::int64_t a, std::int64_t b) { return scores[a] < scores[b]; });

  // average ranks over tied score groups
  std::vector<double> rank(n);
  std::int64_t i = 0;
  while (i < n) {
    std::int64_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::int64_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  std::int64_t npos = 0;
  for (std::int64_t k = 0; k < n; ++k)
    if (labels[k] == 1.0) {
      rank_sum_pos += rank[k];
      ++npos;
    }
  const std::int64_t nneg = n - npos;
  if (npos == 0 || nneg == 0) throw std::invalid_argument("auc: needs both classes");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(npos) * (npos + 1);
  return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

double binomial_deviance(const VectorXd& scores, const VectorXd& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("binomial_deviance: length mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < scores.size(); ++i) {
    double pr = stable_sigmoid(scores[i]);
    pr = std::min(std::max(pr, 1e-12), 1.0 - 1e-12);
    s += labels[i] == 1.0 ? std::log(pr) : std::log1p(-pr);
  }
  return -2.0 * s / static_cast<double>(scores.size());
}

std::pair<std::vector<int>, std::vector<int>> stratified_folds(std::int64_t n1, std::int64_t n2,
                                                               int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: folds must be >= 2");
  if (n1 < folds || n2 < folds)
    throw std::invalid_argument("stratified_folds: a class has fewer members than folds");
  auto assign = [&](std::int64_t n, std::uint64_t s) {
    std::vector<int> fold(static_cast<std::size_t>(n));
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(s);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::int64_t i = 0; i < n; ++i)
      fold[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] =
          static_cast<int>(i % folds);
    return fold;
  };
  return {assign(n1, derive_seed(seed, 1)), assign(n2, derive_seed(seed, 2))};
}

int select_cell(const std::vector<CvCellResult>& cells, MethodId method,
                std::vector<int>* tie_set, std::string* rule) {
  if (cells.empty()) throw std::invalid_argument("select_cell: no cells");
  double best = cells[0].mean_loss;
  for (const auto& c : cells) best = std::min(best, c.mean_loss);

  std::vector<int> tied;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].mean_loss == best) tied.push_back(static_cast<int>(i));
  if (tie_set) *tie_set = tied;

  const bool secondary = method != MethodId::rlr;
  int pick = tied[0];
  for (int idx : tied) {
    const auto& c = cells[static_cast<std::size_t>(idx)];
    const auto& b = cells[static_cast<std::size_t>(pick)];
    const double cs = method == MethodId::er ? c.lambda_e : c.gamma;
    const double bs = method == MethodId::er ? b.lambda_e : b.gamma;
    if (c.lambda < b.lambda || (secondary && c.lambda == b.lambda && cs > bs))
      pick = idx;
  }
  if (rule) {
    *rule = tied.size() <= 1 ? "unique minimum"
            : secondary
                ? "tie: smaller lambda, then larger " +
                      std::string(method == MethodId::er ? "lambda_e" : "gamma")
                : "tie: smaller lambda";
  }
  return pick;
}

MethodFit fit_method(const SemiDataset& data, MethodId method, double lambda, double gamma,
                     double lambda_e, double rho0, std::uint64_t seed, const EmConfig& cfg) {
  const auto c = data.counts();
  MethodFit out;
  switch (method) {
    case MethodId::pslr:
    case MethodId::dslr: {
      PenaltyConfig pen{lambda, gamma, rho0};
      const FitResult fr = method == MethodId::pslr ? fit_pslr(data, pen, cfg)
                                                    : fit_dslr(data, pen, cfg);
      out.params = fr.params;
      out.objective = fr.objective_trace.back();
      out.iterations = fr.iterations;
      out.converged = fr.converged;
      out.final_gradient_norm = fr.final_gradient_norm;
      break;
    }
    case MethodId::rlr: {
      const auto labeled = to_labeled(SemiDataset{data.x1, data.x2, MatrixXd(0, data.dim())});
      out.params = to_model_params(fit_ridge_logistic(labeled, lambda), c);
      break;
    }
    case MethodId::er: {
      out.params = to_model_params(fit_entropy_reg(data, lambda, lambda_e, seed), c);
      break;
    }
    case MethodId::cem: {
      std::vector<double> trace;
      out.params = to_model_params(fit_soft_cem(data, cfg.max_iter, 1e-8, false, &trace), c);
      out.objective = trace.empty() ? kNaN : trace.back();
      out.iterations = static_cast<int>(trace.size());
      break;
    }
  }
  return out;
}

CvReport cross_validate(const SemiDataset& data, MethodId method, const CvGrid& grid,
                        std::uint64_t seed) {
  data.validate();
  grid.validate(method);
  const auto c = data.counts();

  CvReport report;
  report.method = method;
  report.grid = grid;
  report.seed = seed;

  // cell enumeration: lambda major, secondary parameter minor
  const bool slr = method == MethodId::pslr || method == MethodId::dslr;
  const std::vector<double> unit{kNaN};
  const std::vector<double>& secondary =
      slr ? grid.gammas : (method == MethodId::er ? grid.lambda_es : unit);
  for (double lam : grid.lambdas)
    for (double sec : secondary) {
      CvCellResult cell;
      cell.lambda = lam;
      cell.gamma = slr ? sec : kNaN;
      cell.lambda_e = method == MethodId::er ? sec : kNaN;
      report.cells.push_back(cell);
    }

  const auto [fold0, fold1] = stratified_folds(c.n1, c.n2, grid.folds, derive_seed(seed, 0));

  for (int k = 0; k < grid.folds; ++k) {
    // CV-train: out-of-fold labeled rows plus the entire unlabeled block
    std::vector<std::int64_t> tr0, tr1, te0, te1;
    for (std::int64_t i = 0; i < c.n1; ++i)
      (fold0[static_cast<std::size_t>(i)] == k ? te0 : tr0).push_back(i);
    for (std::int64_t i = 0; i < c.n2; ++i)
      (fold1[static_cast<std::size_t>(i)] == k ? te1 : tr1).push_back(i);

    auto rows = [&](const MatrixXd& m, const std::vector<std::int64_t>& idx) {
      MatrixXd out(static_cast<std::int64_t>(idx.size()), m.cols());
      for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<std::int64_t>(i)) = m.row(idx[i]);
      return out;
    };
    SemiDataset cv_train{rows(data.x1, tr0), rows(data.x2, tr1), data.x3};
    const auto cc = cv_train.counts();
    const double shift =
        std::log(static_cast<double>(cc.n2) / static_cast<double>(cc.n1));
    const double rho0 = clamp_unit(cc.rho_labeled());

    MatrixXd test_x(static_cast<std::int64_t>(te0.size() + te1.size()), data.dim());
    test_x << rows(data.x1, te0), rows(data.x2, te1);
    VectorXd test_y(test_x.rows());
    test_y.head(static_cast<std::int64_t>(te0.size())).setZero();
    test_y.tail(static_cast<std::int64_t>(te1.size())).setOnes();

    for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
      auto& cell = report.cells[ci];
      const std::uint64_t cell_seed = derive_seed(seed, ci + 1, static_cast<std::uint64_t>(k));
      double loss;
      try {
        const MethodFit mf = fit_method(cv_train, method, cell.lambda, cell.gamma,
                                        cell.lambda_e, rho0, cell_seed);
        if (!mf.converged) throw NumericalError("cv fit not converged");
        // deviance is scored with the coefficient vector
        // (beta0 + log(n2_cv/n1_cv), beta1)
        loss = binomial_deviance(predict_scores(mf.params, shift, test_x), test_y);
      } catch (const NumericalError&) {
        loss = std::numeric_limits<double>::infinity();
        ++cell.failures;
      }
      cell.fold_losses.push_back(loss);
    }
  }

  for (auto& cell : report.cells) {
    double s = 0.0;
    for (double l : cell.fold_losses) s += l;
    cell.mean_loss = s / static_cast<double>(cell.fold_losses.size());
  }
  report.selected = select_cell(report.cells, method, &report.tie_set, &report.tie_rule);
  return report;
}

CvGrid default_grids(MethodId method, DatasetKind kind) {
  if (method == MethodId::cem)
    throw std::invalid_argument("default_grids: cem has no tuning parameters");
  CvGrid g;
  const double lo = kind == DatasetKind::uci ? -5.0 : -4.0;
  const double hi = kind == DatasetKind::uci ? -1.0 : 0.0;
  for (int k = 0; k < 8; ++k) g.lambdas.push_back(log10_uniform(lo, hi, k, 8));
  if (method == MethodId::pslr || method == MethodId::dslr)
    for (int k = 0; k < 8; ++k) g.gammas.push_back(log10_uniform(-2.0, 2.0, k, 8));
  if (method == MethodId::er)
    for (int k = 0; k < 8; ++k) g.lambda_es.push_back(static_cast<double>(k) / 7.0);
  return g;
}

std::string cv_report_json(const CvReport& report) {
  using json = nlohmann::ordered_json;
  json j;
  j["schema_version"] = 1;
  j["kind"] = "cv_report";
  j["method"] = method_name(report.method);
  j["seed"] = report.seed;
  j["folds"] = report.grid.folds;
  j["grid"]["lambdas"] = report.grid.lambdas;
  if (!report.grid.gammas.empty()) j["grid"]["gammas"] = report.grid.gammas;
  if (!report.grid.lambda_es.empty()) j["grid"]["lambda_es"] = report.grid.lambda_es;
  j["cells"] = json::array();
  for (const auto& c : report.cells) {
    json jc;
    jc["lambda"] = c.lambda;
    if (!std::isnan(c.gamma)) jc["gamma"] = c.gamma;
    if (!std::isnan(c.lambda_e)) jc["lambda_e"] = c.lambda_e;
    json fl = json::array();
    for (double l : c.fold_losses)
      fl.push_back(std::isinf(l) ? json("inf") : json(l));
    jc["fold_losses"] = fl;
    jc["mean_loss"] = std::isinf(c.mean_loss) ? json("inf") : json(c.mean_loss);
    jc["failures"] = c.failures;
    j["cells"].push_back(jc);
  }
  j["selected"] = report.selected;
  j["tie_set"] = report.tie_set;
  j["tie_rule"] = report.tie_rule;
  return j.dump(2);
}

}  // namespace slr
