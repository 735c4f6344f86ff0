#pragma once

#include "slr/data_model.hpp"

namespace slr {

// Classification parametrization: P(y=1|x) = sigmoid(beta0c + beta1'x).  The
// tilt intercept relates by beta0 = beta0c - log(n2/n1) at the labeled
// proportions.
struct ClassifierCoefficients {
  double beta0c = 0.0;
  VectorXd beta1;
};

// Maximizes n^{-1} * labeled log-likelihood - lambda ||beta1||^2 by damped
// Newton; the intercept is unpenalized.  Separation with lambda = 0 surfaces
// as NumericalError.
ClassifierCoefficients fit_ridge_logistic(const LabeledSample& labeled, double lambda,
                                          double grad_tol = 1e-10, int max_iter = 200);

// The maximized surface of fit_ridge_logistic; grad (length p+1, intercept
// first) is filled when non-null.
double ridge_objective(const LabeledSample& labeled, double lambda,
                       const ClassifierCoefficients& coef, VectorXd* grad = nullptr);

// -p log p - (1-p) log(1-p)
double binary_entropy(double p);

// Minimizes N^{-1}{ neg-loglik(labeled) + lambda_e * sum of prediction
// entropies over unlabeled } + lambda ||beta1||^2.  Non-concave: modified
// Newton from a ridge warm start plus 4 perturbed restarts, best stationary
// point kept; deterministic in seed.
ClassifierCoefficients fit_entropy_reg(const SemiDataset& data, double lambda, double lambda_e,
                                       std::uint64_t seed = 0);

// The surface fit_entropy_reg maximizes (the negated penalized objective);
// grad as in ridge_objective.
double er_objective(const SemiDataset& data, double lambda, double lambda_e,
                    const ClassifierCoefficients& coef, VectorXd* grad = nullptr);

// Classification EM with the C-step replaced by a soft E-step
// (E u = sigmoid(beta0c + beta1'x) on unlabeled points, labeled u fixed at
// their labels); each M-step is an unpenalized weighted logistic fit over all
// N points.  Fixed point: the labeled-only MLE.  hard_assignment thresholds
// E u at 1/2 instead (no ascent guarantee).  objective_trace, when given,
// records the (1/N)-scaled M-step objective after each iteration.
ClassifierCoefficients fit_soft_cem(const SemiDataset& data, int max_iter = 500,
                                    double tol = 1e-8, bool hard_assignment = false,
                                    std::vector<double>* objective_trace = nullptr,
                                    const ClassifierCoefficients* init = nullptr);

// Conversions between the tilt and classification intercepts at the labeled
// counts of c.
ModelParams to_model_params(const ClassifierCoefficients& coef, const SampleCounts& c);
ClassifierCoefficients to_classifier(const ModelParams& params, const SampleCounts& c);

}  // namespace slr
