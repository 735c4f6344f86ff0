#pragma once

#include <string>

#include "slr/data_model.hpp"

namespace slr {

// Exact exponential-tilt ground truth with Gaussian G0.  The tilt of
// N(mu0, sigma) by e^{beta0 + beta1'x} is N(mu0 + sigma beta1, sigma), so G1
// is a mean shift and beta0* is forced by normalization:
//   beta0* = -(beta1*' mu0 + beta1*' sigma beta1* / 2).
struct EtmSpec {
  VectorXd mu0;
  MatrixXd sigma;
  VectorXd beta1_star;
  double rho_star = 0.5;
  SampleCounts sizes;

  double beta0_star() const;
  void validate() const;  // dimensions agree, sigma SPD, rho_star in (0,1)
};

// S1 ~ G0, S2 ~ G1, S3 a rho_star mixture (per-point Bernoulli).  When
// s3_origins is given it receives the latent component (0/1) of each S3 row.
SemiDataset sample_etm(const EtmSpec& spec, std::uint64_t seed,
                       std::vector<int>* s3_origins = nullptr);

// Bivariate-Gaussian setup: labeled 20 from G0 = N((-6,-6), diag(25,225)) and
// 80 from G1 = N((6,6), diag(25,100)); unlabeled 500 from each.  The oracle
// sample is an independent 1:1 labeled sample of 4000 points.  With scaled
// set, every feature is divided by its root mean square over the 1100
// training rows (oracle included, same divisors).
struct IllustrationData {
  SemiDataset train;
  LabeledSample oracle;
  VectorXd scales;  // per-feature RMS divisors (ones when unscaled)
};

IllustrationData sample_gaussian_illustration(std::uint64_t seed, bool scaled);

// One estimator at one scale: per-replication estimate rows of
// (rho, beta0, beta1...) with NaN in the rho column for the labeled-only MLE.
struct McBlock {
  double scale = 1.0;
  std::string estimator;
  MatrixXd estimates;  // kept replications x (2+p)
  int exclusions = 0;
  VectorXd mean;       // columnwise mean of estimates
  VectorXd mae;        // columnwise mean absolute error versus the truth
  MatrixXd beta_cov;   // empirical covariance of (beta0, beta1)
};

struct McReport {
  int reps = 0;
  double rho_star = 0.0;
  VectorXd beta_star;  // (beta0*, beta1*)
  std::vector<McBlock> blocks;
  // efficiency extras (has_efficiency set by mc_efficiency)
  bool has_efficiency = false;
  MatrixXd cov_diff;       // Cov(beta_labeled) - Cov(beta_slr)
  VectorXd cov_diff_eigs;  // ascending eigenvalues of cov_diff

  std::string to_json() const;
  std::string estimates_csv() const;  // per-replication dump for plotting
};

// Fits pSLR and dSLR with gamma = lambda = 0 on datasets of size
// s*(n1,n2,n3) for each scale factor; reports per-component mean absolute
// errors.  Non-convergent replications are excluded and counted; more than 5%
// exclusions in any block raises NumericalError.
McReport mc_consistency(const EtmSpec& spec, const std::vector<double>& scale_factors,
                        int reps, std::uint64_t seed);

// Per replication fits pSLR (gamma = lambda = 0) and the labeled-only MLE and
// reports both empirical covariance matrices of (beta0, beta1) plus the
// eigenvalues of their difference.  Replications are kept only when both fits
// converge.
McReport mc_efficiency(const EtmSpec& spec, int reps, std::uint64_t seed);

}  // namespace slr
