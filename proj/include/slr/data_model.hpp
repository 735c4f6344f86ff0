#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace slr {

// Thrown when an iterative solver fails to reach its tolerance; data and
// usage problems throw std::invalid_argument instead.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Clamp range for probabilities that must stay inside the open unit interval.
constexpr double kUnitEps = 1e-10;

inline double clamp_unit(double v) {
  if (v < kUnitEps) return kUnitEps;
  if (v > 1.0 - kUnitEps) return 1.0 - kUnitEps;
  return v;
}

struct SampleCounts {
  std::int64_t n1 = 0;  // labeled, y = 0
  std::int64_t n2 = 0;  // labeled, y = 1
  std::int64_t n3 = 0;  // unlabeled

  std::int64_t n() const { return n1 + n2; }
  std::int64_t N() const { return n1 + n2 + n3; }
  // labeled positive proportion n2/n
  double rho_labeled() const { return static_cast<double>(n2) / static_cast<double>(n()); }
};

// Fully labeled data: rows of x paired with labels in {0,1}.
struct LabeledSample {
  MatrixXd x;
  VectorXd y;

  std::int64_t n() const { return x.rows(); }
  std::int64_t dim() const { return x.cols(); }
  void validate() const;
};

// Three-sample layout: x1 (labeled y=0), x2 (labeled y=1), x3 (unlabeled).
// All blocks share the feature dimension; n1 and n2 must be >= 1.
struct SemiDataset {
  MatrixXd x1;
  MatrixXd x2;
  MatrixXd x3;

  SampleCounts counts() const {
    return SampleCounts{x1.rows(), x2.rows(), x3.rows()};
  }
  std::int64_t dim() const { return x1.cols(); }
  void validate() const;
};

// ETM parametrization: tilt dG1/dG0 = exp(beta0 + beta1'x), mixture weight rho
// for the unlabeled sample.  rho is kept inside [kUnitEps, 1-kUnitEps].
struct ModelParams {
  double rho = 0.5;
  double beta0 = 0.0;
  VectorXd beta1;

  void validate() const;
};

// lambda: ridge penalty on beta1.  gamma: Beta-prior strength on rho with mode
// rho0; gamma = +inf pins rho at rho0.  tau1/tau2 are always recomputed from
// (gamma, rho0, n3, N), never stored.
struct PenaltyConfig {
  double lambda = 0.0;
  double gamma = 0.0;
  double rho0 = 0.5;

  bool fixes_rho() const { return std::numeric_limits<double>::infinity() == gamma; }
  double tau1(const SampleCounts& c) const;  // gamma*(1-rho0)*n3/N
  double tau2(const SampleCounts& c) const;  // gamma*rho0*n3/N
  void validate() const;
};

// Posterior membership weights E[u | x].  u1 is identically 0 and u2
// identically 1; u3 lies in [0,1] elementwise.
struct Responsibilities {
  VectorXd u1;
  VectorXd u2;
  VectorXd u3;

  void validate() const;
};

struct FitDiagnostics {
  int clamp_events = 0;              // rho/alpha updates that hit the unit clamp
  int monotonicity_violations = 0;   // objective decreases below -1e-10
  double rho_residual_max = 0.0;     // worst |rho - fixed-point RHS| over dSLR updates
  double psi_min = 1.0;              // range of the Jensen-gap factor psi
  double psi_max = 0.0;
  bool alpha_at_boundary = false;    // alpha-hat solve returned a clamp boundary
};

struct FitResult {
  ModelParams params;
  std::vector<double> objective_trace;   // penalized objective, one entry per iterate
  std::vector<ModelParams> param_trace;  // iterates including the initial point
  int iterations = 0;
  bool converged = false;
  double final_gradient_norm = 0.0;
  FitDiagnostics diagnostics;
};

// Feature standardization fit on the pooled training rows (labeled plus
// unlabeled): mean 0, variance 1 per column, population-style 1/N variance.
// Constant columns get scale 1.
struct Standardizer {
  VectorXd mean;
  VectorXd scale;

  MatrixXd transform(const MatrixXd& x) const;
  MatrixXd inverse_transform(const MatrixXd& x) const;
  SemiDataset transform(const SemiDataset& data) const;
  LabeledSample transform(const LabeledSample& data) const;
};

Standardizer fit_standardizer(const SemiDataset& data);

// CSV with a header row; the label column is picked by name.  Labels must be
// 0, 1, or missing (empty cell or "NA"); every other cell must parse as a
// double.  Rows are routed to x1/x2/x3 by label.
SemiDataset load_csv(const std::string& path, const std::string& label_column);

// Requires n3 == 0; concatenates x1 and x2 back into one labeled sample.
LabeledSample to_labeled(const SemiDataset& data);

// Class-odds handling when carving the labeled subset out of the train pool.
// homo keeps the source odds; flip moves them by a factor 4 toward the other
// side (odds <= 1 multiplied, odds > 1 divided).
enum class SplitScheme { homo, flip };

struct SplitResult {
  SemiDataset train;   // labeled subset plus the rest of the pool unlabeled
  LabeledSample test;  // held-out third, labels kept
};

// Splits a fully labeled source: 2/3 train pool (per-class, largest-remainder
// rounding), 1/3 test.  labeled_size rows are drawn from the pool at the
// scheme's class odds (rounded, at least 1 per class); the remaining pool rows
// lose their labels and become x3.  Deterministic in seed.
SplitResult split_train_test(const LabeledSample& source, SplitScheme scheme,
                             std::int64_t labeled_size, std::uint64_t seed);

}  // namespace slr
