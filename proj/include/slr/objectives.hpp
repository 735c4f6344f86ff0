#pragma once

#include "slr/data_model.hpp"

namespace slr {

// Linear predictors are clamped to this range before exponentiation so that
// expm1/exp stay finite in double precision.
constexpr double kLinPredClamp = 700.0;

inline double clamp_h(double h) {
  if (h > kLinPredClamp) return kLinPredClamp;
  if (h < -kLinPredClamp) return -kLinPredClamp;
  return h;
}

// 1/(1+e^{-x}) without overflow on either tail.
double stable_sigmoid(double x);

// log(1+e^x) without overflow.
double log1pexp(double x);

// log(1 - a + a e^h) for a in [0,1]: log1p(a expm1(h)) on h<=0 and
// h + log(a + (1-a)e^{-h}) on h>0.
double log_mix(double a, double h);

// (e^h - 1) / (1 - a + a e^h); the derivative of log_mix in the mixing weight.
double tilt_ratio(double a, double h);

// a e^h / (1 - a + a e^h), i.e. sigmoid(h + logit a), exact at a = 0 and 1.
double mix_prob(double a, double h);

// alpha-tilde(rho) = (n2 + n3 rho) / N
double tilde_alpha(const SampleCounts& c, double rho);

double linear_predictor(const ModelParams& params, const Eigen::Ref<const VectorXd>& x);

struct LinearPredictors {
  VectorXd h1;
  VectorXd h2;
  VectorXd h3;
};

LinearPredictors linear_predictors(const SemiDataset& data, const ModelParams& params);

struct ObjectiveValue {
  double value = 0.0;
  double grad_rho = 0.0;
  VectorXd grad_beta;  // length p+1, intercept first
  double grad_alpha = 0.0;
};

// kappa(rho, beta, alpha) =
//   (1/N) sum_j sum_i log[(1-rho_j+rho_j e^h)/(1-alpha+alpha e^h)] - log N
// with rho_1 = 0, rho_2 = 1, rho_3 = params.rho.  Concave in rho, convex in
// alpha, and concave in beta once alpha is held fixed inside the log.
ObjectiveValue kappa(const SemiDataset& data, const ModelParams& params, double alpha);

struct AlphaSolveInfo {
  double alpha = 0.5;
  double residual = 0.0;   // |mean of 1/(1-a+a e^h) - 1| at the returned point
  bool at_boundary = false;
  int iterations = 0;
};

// Minimizer of kappa over alpha: the root of
//   (1/N) sum_j sum_i 1/(1-a+a e^{h_ji}) = 1
// (free of rho).  Bisection bracketed on the clamped unit interval, then a
// Newton polish.  When the stationary condition has no interior root (the
// derivative of kappa in alpha keeps one sign) the nearer clamp boundary is
// returned and flagged.  All h identically zero makes kappa flat in alpha; the
// tie is broken at alpha-tilde evaluated at the labeled proportion, n2/n.
double solve_alpha_hat(const SemiDataset& data, const ModelParams& params,
                       AlphaSolveInfo* info = nullptr);
double solve_alpha_hat(const LinearPredictors& lp, const SampleCounts& c,
                       AlphaSolveInfo* info = nullptr);

// Beta-prior term tau1 log(1-rho) + tau2 log rho (zero when gamma pins rho),
// minus lambda ||beta1||^2.
double penalty_value(const ModelParams& params, const PenaltyConfig& penalty,
                     const SampleCounts& c);

// Penalized profile objective: kappa at the alpha-hat minimizer plus penalty.
double profile_objective(const SemiDataset& data, const ModelParams& params,
                         const PenaltyConfig& penalty);
ObjectiveValue profile_objective_grad(const SemiDataset& data, const ModelParams& params,
                                      const PenaltyConfig& penalty);

// Penalized direct objective: kappa at alpha-tilde(rho) plus penalty.  The rho
// gradient carries the (n3/N) chain term through alpha-tilde.
double direct_objective(const SemiDataset& data, const ModelParams& params,
                        const PenaltyConfig& penalty);
ObjectiveValue direct_objective_grad(const SemiDataset& data, const ModelParams& params,
                                     const PenaltyConfig& penalty);

// Conditional sample-membership probabilities given x under the SLR model:
//   P(z=1|x) : P(z=2|x) : P(z=3|x) =
//   n1 : n2 e^h : n3 (1-rho+rho e^h), normalized by N(1-at+at e^h),
// with at = tilde_alpha(rho).
Eigen::Vector3d slr_probs(const SampleCounts& c, const ModelParams& params,
                          const Eigen::Ref<const VectorXd>& x);

}  // namespace slr
