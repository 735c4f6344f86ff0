#pragma once

#include <string>
#include <utility>

#include "slr/data_model.hpp"
#include "slr/em_solvers.hpp"

namespace slr {

enum class MethodId { pslr, dslr, rlr, er, cem };

MethodId parse_method(const std::string& name);
std::string method_name(MethodId m);

enum class DatasetKind { uci, ssl };

struct CvGrid {
  std::vector<double> lambdas;
  std::vector<double> gammas;     // SLR methods only
  std::vector<double> lambda_es;  // ER only
  int folds = 5;

  void validate(MethodId method) const;  // nonempty relevant grids, ascending, folds >= 2
};

// One hyperparameter cell; fields that do not apply to the method are NaN.
struct CvCellResult {
  double lambda = 0.0;
  double gamma = 0.0;
  double lambda_e = 0.0;
  std::vector<double> fold_losses;
  double mean_loss = 0.0;
  int failures = 0;  // folds whose fit did not converge (loss set to +inf)
};

struct CvReport {
  MethodId method = MethodId::rlr;
  CvGrid grid;
  std::uint64_t seed = 0;
  std::vector<CvCellResult> cells;
  int selected = -1;
  std::vector<int> tie_set;  // cells at the minimal mean loss, before tie rules
  std::string tie_rule;      // description of the rule that picked `selected`
};

// score = prior_log_odds + beta0 + beta1'x; class 1 iff score >= 0.
double predict_score(const ModelParams& params, double prior_log_odds,
                     const Eigen::Ref<const VectorXd>& x);
VectorXd predict_scores(const ModelParams& params, double prior_log_odds, const MatrixXd& x);

double accuracy(const VectorXd& scores, const VectorXd& labels);

// Mann-Whitney statistic via average ranks; tied scores count 1/2.
double auc(const VectorXd& scores, const VectorXd& labels);

// -2 mean[y log p + (1-y) log(1-p)], p = sigmoid(score) clamped to
// [1e-12, 1-1e-12].
double binomial_deviance(const VectorXd& scores, const VectorXd& labels);

// Shuffled round-robin fold assignment within each class; returns fold ids for
// the class-0 rows and the class-1 rows.
std::pair<std::vector<int>, std::vector<int>> stratified_folds(std::int64_t n1, std::int64_t n2,
                                                               int folds, std::uint64_t seed);

// Tie handling on equal mean losses: RLR keeps the smaller lambda; ER, pSLR
// and dSLR keep the smaller lambda and the larger lambda_e or gamma.
int select_cell(const std::vector<CvCellResult>& cells, MethodId method,
                std::vector<int>* tie_set = nullptr, std::string* rule = nullptr);

// K-fold CV on the labeled rows (stratified); every CV-train keeps the entire
// unlabeled block.  Held-out labeled folds are scored by binomial deviance
// with the intercept shifted by log(n2_cv/n1_cv); rho0 is fixed at the
// CV-train labeled proportion.  Cells whose fit fails get +inf fold loss and a
// failure count instead of aborting the scan.
CvReport cross_validate(const SemiDataset& data, MethodId method, const CvGrid& grid,
                        std::uint64_t seed);

// 8 log10-uniform lambdas on [-5,-1] (uci) or [-4,0] (ssl); 8 log10-uniform
// gammas on [-2,2] for SLR methods; 8 uniform lambda_es on [0,1] for ER.
CvGrid default_grids(MethodId method, DatasetKind kind);

// Versioned JSON rendering with stable field order.
std::string cv_report_json(const CvReport& report);

// Uniform fitting surface over all methods at fixed hyperparameters;
// coefficients are reported in the tilt parametrization (beta0 = beta0c -
// log(n2/n1) for the labeled-only methods).  rho0 must arrive resolved.
struct MethodFit {
  ModelParams params;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = true;
  double final_gradient_norm = std::numeric_limits<double>::quiet_NaN();
};

MethodFit fit_method(const SemiDataset& data, MethodId method, double lambda, double gamma,
                     double lambda_e, double rho0, std::uint64_t seed, const EmConfig& cfg = {});

}  // namespace slr
