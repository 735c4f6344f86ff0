#pragma once

#include "slr/data_model.hpp"
#include "slr/objectives.hpp"

namespace slr {

struct EmConfig {
  int max_iter = 500;
  double tol = 1e-8;               // relative objective change at convergence
  double inner_newton_tol = 1e-10; // gradient norm for the beta M-step
  int inner_max_iter = 100;
};

// Parameter-change threshold that must hold together with the relative
// objective criterion before an EM run reports convergence.
constexpr double kEmParamTol = 1e-6;

// E-step: E u = rho_j e^h / (1 - rho_j + rho_j e^h), which is 0 on S1, 1 on
// S2, and sigmoid(h + logit rho) on S3.
Responsibilities e_step(const SemiDataset& data, const ModelParams& params);

struct ScalarUpdates {
  double rho = 0.5;
  double alpha = 0.5;
  int clamps = 0;
};

// Closed-form M-step scalars for profile SLR:
//   rho  <- (mean u3 + gamma rho0) / (1 + gamma),   gamma = inf => rho0,
//   alpha <- (1/N) sum of all E u.
ScalarUpdates pslr_scalar_updates(const Responsibilities& resp, const PenaltyConfig& penalty,
                                  const SampleCounts& c);

struct RhoSolveInfo {
  double rho = 0.5;
  double residual = 0.0;  // |rho - RHS(rho)| of the fixed-point equation
  double psi = 1.0;       // Jensen-gap factor at the returned rho
  int clamps = 0;
};

// Direct-SLR rho update: solves
//   rho = [ mean(u3) psi(rho) + rho0 gamma ] / [ psi(rho) + gamma ],
//   psi(rho) = 1 - n3 rho (1-rho) / [ N at(rho) (1 - at(rho)) ],
// with at = tilde_alpha.  psi lies in (0,1) for interior rho (strict Jensen
// gap), gamma = 0 reduces to mean(u3) and gamma = inf to rho0.
RhoSolveInfo dslr_rho_solve(const Responsibilities& resp, const PenaltyConfig& penalty,
                            const SampleCounts& c);

// Maximizes the beta M-step objective
//   (1/N) sum_ji [ E u h - log(1 - alpha + alpha e^h) ] - lambda ||beta1||^2
// by damped Newton from beta_init (length p+1, intercept first).  Concave in
// beta at fixed alpha.  Throws NumericalError when the gradient norm fails to
// reach cfg.inner_newton_tol within cfg.inner_max_iter.
VectorXd beta_m_step(const SemiDataset& data, const Responsibilities& resp, double alpha,
                     double lambda, const VectorXd& beta_init, const EmConfig& cfg);

// The surface beta_m_step maximizes, evaluated at beta (length p+1, intercept
// first); grad filled when non-null.
double mstep_objective(const SemiDataset& data, const Responsibilities& resp, double alpha,
                       double lambda, const VectorXd& beta, VectorXd* grad = nullptr);

// Labeled-only ridge fit (lambda rescaled to the 1/n normalization, floored at
// 1e-4 so the init exists even under separation), intercept shifted by
// -log(n2/n1) into the tilt scale; rho starts at the labeled proportion, or at
// rho0 when gamma pins it.
ModelParams default_init(const SemiDataset& data, const PenaltyConfig& penalty);

// EM for the penalized profile objective.  The recorded trace evaluates the
// profile objective at every iterate (including the init) and is nondecreasing
// up to -1e-10 per step.
FitResult fit_pslr(const SemiDataset& data, const PenaltyConfig& penalty,
                   const ModelParams& init, const EmConfig& cfg = {});
FitResult fit_pslr(const SemiDataset& data, const PenaltyConfig& penalty,
                   const EmConfig& cfg = {});

// EM for the penalized direct objective; with gamma = 0 its iterates coincide
// with fit_pslr's, and with gamma = inf, rho0 = labeled proportion it matches
// labeled-only ridge logistic up to the intercept shift.
FitResult fit_dslr(const SemiDataset& data, const PenaltyConfig& penalty,
                   const ModelParams& init, const EmConfig& cfg = {});
FitResult fit_dslr(const SemiDataset& data, const PenaltyConfig& penalty,
                   const EmConfig& cfg = {});

}  // namespace slr
