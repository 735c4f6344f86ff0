#include "slr/simulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "slr/baselines.hpp"
#include "slr/em_solvers.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

// Rows are independent draws from N(mu, L L').
MatrixXd sample_mvn(Eigen::Index n, const VectorXd& mu, const MatrixXd& chol_lower,
                    std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index p = mu.size();
  MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = gauss(rng);
  MatrixXd x = z * chol_lower.transpose();
  x.rowwise() += mu.transpose();
  return x;
}

nlohmann::ordered_json num_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // JSON has no NaN/inf
}

nlohmann::ordered_json vec_json(const VectorXd& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num_json(v(i)));
  return a;
}

nlohmann::ordered_json mat_json(const MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

// Columnwise summaries over the kept replications.  The truth vector uses the
// same (rho, beta0, beta1...) layout as the estimate rows; NaN estimate cells
// (labeled-only fits carry no rho) propagate NaN into the summaries.
void finalize_block(McBlock& block, const VectorXd& truth) {
  const Eigen::Index k = block.estimates.rows();
  const Eigen::Index c = block.estimates.cols();
  block.mean = VectorXd::Constant(c, std::numeric_limits<double>::quiet_NaN());
  block.mae = block.mean;
  if (k == 0) return;
  block.mean = block.estimates.colwise().mean();
  block.mae = (block.estimates.rowwise() - truth.transpose()).cwiseAbs().colwise().mean();
  // covariance of (beta0, beta1), n-1 denominator
  MatrixXd b = block.estimates.rightCols(c - 1);
  Eigen::RowVectorXd bm = b.colwise().mean();
  MatrixXd centered = b.rowwise() - bm;
  block.beta_cov = k > 1 ? MatrixXd((centered.transpose() * centered) / double(k - 1))
                         : MatrixXd::Zero(c - 1, c - 1);
}

}  // namespace

double EtmSpec::beta0_star() const {
  // normalization of the tilt: E_{G0} e^{beta0 + beta1'x} = 1
  return -(beta1_star.dot(mu0) + 0.5 * beta1_star.dot(sigma * beta1_star));
}

void EtmSpec::validate() const {
  const Eigen::Index p = mu0.size();
  if (p == 0) throw std::invalid_argument("EtmSpec: mu0 is empty");
  if (sigma.rows() != p || sigma.cols() != p)
    throw std::invalid_argument("EtmSpec: sigma must be p x p");
  if (beta1_star.size() != p)
    throw std::invalid_argument("EtmSpec: beta1_star has wrong dimension");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw std::invalid_argument("EtmSpec: sigma must be symmetric");
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("EtmSpec: sigma must be positive definite");
  if (!(rho_star > 0.0 && rho_star < 1.0))
    throw std::invalid_argument("EtmSpec: rho_star must lie in (0,1)");
  if (sizes.n1 <= 0 || sizes.n2 <= 0 || sizes.n3 < 0)
    throw std::invalid_argument("EtmSpec: need n1 > 0, n2 > 0, n3 >= 0");
}

SemiDataset sample_etm(const EtmSpec& spec, std::uint64_t seed,
                       std::vector<int>* s3_origins) {
  spec.validate();
  std::mt19937_64 rng(seed);
  MatrixXd chol_lower = Eigen::LLT<MatrixXd>(spec.sigma).matrixL();
  VectorXd mu1 = spec.mu0 + spec.sigma * spec.beta1_star;

  SemiDataset data;
  data.x1 = sample_mvn(spec.sizes.n1, spec.mu0, chol_lower, rng);
  data.x2 = sample_mvn(spec.sizes.n2, mu1, chol_lower, rng);
  data.x3.resize(spec.sizes.n3, spec.mu0.size());
  if (s3_origins) s3_origins->assign(static_cast<std::size_t>(spec.sizes.n3), 0);
  std::bernoulli_distribution from_g1(spec.rho_star);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < spec.sizes.n3; ++i) {
    const bool g1 = from_g1(rng);
    VectorXd z(spec.mu0.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = gauss(rng);
    data.x3.row(i) = ((g1 ? mu1 : spec.mu0) + chol_lower * z).transpose();
    if (s3_origins) (*s3_origins)[static_cast<std::size_t>(i)] = g1 ? 1 : 0;
  }
  data.validate();
  return data;
}

IllustrationData sample_gaussian_illustration(std::uint64_t seed, bool scaled) {
  std::mt19937_64 rng(seed);
  VectorXd mu0(2), mu1(2);
  mu0 << -6.0, -6.0;
  mu1 << 6.0, 6.0;
  MatrixXd sig0 = Eigen::Vector2d(25.0, 225.0).asDiagonal();
  MatrixXd sig1 = Eigen::Vector2d(25.0, 100.0).asDiagonal();
  MatrixXd l0 = Eigen::LLT<MatrixXd>(sig0).matrixL();
  MatrixXd l1 = Eigen::LLT<MatrixXd>(sig1).matrixL();

  IllustrationData out;
  out.train.x1 = sample_mvn(20, mu0, l0, rng);
  out.train.x2 = sample_mvn(80, mu1, l1, rng);
  out.train.x3.resize(1000, 2);
  out.train.x3.topRows(500) = sample_mvn(500, mu0, l0, rng);
  out.train.x3.bottomRows(500) = sample_mvn(500, mu1, l1, rng);

  out.oracle.x.resize(4000, 2);
  out.oracle.x.topRows(2000) = sample_mvn(2000, mu0, l0, rng);
  out.oracle.x.bottomRows(2000) = sample_mvn(2000, mu1, l1, rng);
  out.oracle.y = VectorXd::Zero(4000);
  out.oracle.y.tail(2000).setOnes();

  out.scales = VectorXd::Ones(2);
  if (scaled) {
    // root mean square over the 1100 training rows, no centering
    const SampleCounts c = out.train.counts();
    VectorXd ss = out.train.x1.array().square().colwise().sum().transpose() +
                  out.train.x2.array().square().colwise().sum().transpose() +
                  out.train.x3.array().square().colwise().sum().transpose();
    out.scales = (ss / double(c.N())).array().sqrt();
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double s = out.scales(j) > 0.0 ? out.scales(j) : 1.0;
      out.train.x1.col(j) /= s;
      out.train.x2.col(j) /= s;
      out.train.x3.col(j) /= s;
      out.oracle.x.col(j) /= s;
    }
  }
  out.train.validate();
  return out;
}

McReport mc_consistency(const EtmSpec& spec, const std::vector<double>& scale_factors,
                        int reps, std::uint64_t seed) {
  spec.validate();
  if (reps <= 0) throw std::invalid_argument("mc_consistency: reps must be positive");
  if (scale_factors.empty())
    throw std::invalid_argument("mc_consistency: no scale factors");
  const Eigen::Index p = spec.mu0.size();

  McReport report;
  report.reps = reps;
  report.rho_star = spec.rho_star;
  report.beta_star.resize(p + 1);
  report.beta_star(0) = spec.beta0_star();
  report.beta_star.tail(p) = spec.beta1_star;
  VectorXd truth(p + 2);
  truth(0) = spec.rho_star;
  truth.tail(p + 1) = report.beta_star;

  const EmConfig cfg;
  for (std::size_t si = 0; si < scale_factors.size(); ++si) {
    const double s = scale_factors[si];
    if (!(s > 0.0)) throw std::invalid_argument("mc_consistency: scale factors must be positive");
    EtmSpec scaled = spec;
    scaled.sizes.n1 = std::llround(s * double(spec.sizes.n1));
    scaled.sizes.n2 = std::llround(s * double(spec.sizes.n2));
    scaled.sizes.n3 = std::llround(s * double(spec.sizes.n3));

    McBlock pslr_block, dslr_block;
    pslr_block.scale = dslr_block.scale = s;
    pslr_block.estimator = "pslr";
    dslr_block.estimator = "dslr";
    std::vector<VectorXd> pslr_rows, dslr_rows;
    pslr_rows.reserve(static_cast<std::size_t>(reps));
    dslr_rows.reserve(static_cast<std::size_t>(reps));

    for (int r = 0; r < reps; ++r) {
      SemiDataset data =
          sample_etm(scaled, derive_seed(seed, static_cast<std::uint64_t>(si) + 1,
                                         static_cast<std::uint64_t>(r) + 1));
      const PenaltyConfig pen{0.0, 0.0, data.counts().rho_labeled()};
      auto record = [&](std::vector<VectorXd>& rows, McBlock& block, bool profile) {
        try {
          FitResult fit = profile ? fit_pslr(data, pen, cfg) : fit_dslr(data, pen, cfg);
          if (!fit.converged) {
            ++block.exclusions;
            return;
          }
          VectorXd row(p + 2);
          row(0) = fit.params.rho;
          row(1) = fit.params.beta0;
          row.tail(p) = fit.params.beta1;
          rows.push_back(std::move(row));
        } catch (const NumericalError&) {
          ++block.exclusions;
        }
      };
      record(pslr_rows, pslr_block, true);
      record(dslr_rows, dslr_block, false);
    }

    auto pack = [&](McBlock& block, const std::vector<VectorXd>& rows) {
      if (block.exclusions > 0.05 * reps)
        throw NumericalError("mc_consistency: over 5% of replications excluded for " +
                             block.estimator + " at scale " + std::to_string(s));
      block.estimates.resize(static_cast<Eigen::Index>(rows.size()), p + 2);
      for (std::size_t i = 0; i < rows.size(); ++i)
        block.estimates.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      finalize_block(block, truth);
      report.blocks.push_back(std::move(block));
    };
    pack(pslr_block, pslr_rows);
    pack(dslr_block, dslr_rows);
  }
  return report;
}

McReport mc_efficiency(const EtmSpec& spec, int reps, std::uint64_t seed) {
  spec.validate();
  if (reps <= 1) throw std::invalid_argument("mc_efficiency: need at least 2 replications");
  const Eigen::Index p = spec.mu0.size();

  McReport report;
  report.reps = reps;
  report.rho_star = spec.rho_star;
  report.beta_star.resize(p + 1);
  report.beta_star(0) = spec.beta0_star();
  report.beta_star.tail(p) = spec.beta1_star;
  VectorXd truth(p + 2);
  truth(0) = spec.rho_star;
  truth.tail(p + 1) = report.beta_star;

  McBlock slr_block, lab_block;
  slr_block.scale = lab_block.scale = 1.0;
  slr_block.estimator = "pslr";
  lab_block.estimator = "labeled";
  std::vector<VectorXd> slr_rows, lab_rows;
  int excluded = 0;

  const EmConfig cfg;
  for (int r = 0; r < reps; ++r) {
    SemiDataset data = sample_etm(spec, derive_seed(seed, 1, static_cast<std::uint64_t>(r) + 1));
    const SampleCounts c = data.counts();
    const double shift = std::log(double(c.n2) / double(c.n1));
    try {
      FitResult fit = fit_pslr(data, PenaltyConfig{0.0, 0.0, c.rho_labeled()}, cfg);
      SemiDataset labeled_only{data.x1, data.x2, MatrixXd(0, p)};
      ClassifierCoefficients mle = fit_ridge_logistic(to_labeled(labeled_only), 0.0);
      if (!fit.converged) throw NumericalError("pslr did not converge");
      VectorXd srow(p + 2), lrow(p + 2);
      srow(0) = fit.params.rho;
      srow(1) = fit.params.beta0;
      srow.tail(p) = fit.params.beta1;
      lrow(0) = std::numeric_limits<double>::quiet_NaN();  // no rho in labeled fit
      lrow(1) = mle.beta0c - shift;  // tilt parametrization
      lrow.tail(p) = mle.beta1;
      slr_rows.push_back(std::move(srow));  // paired: keep both or neither
      lab_rows.push_back(std::move(lrow));
    } catch (const NumericalError&) {
      ++excluded;
    }
  }
  slr_block.exclusions = lab_block.exclusions = excluded;
  if (excluded > 0.05 * reps)
    throw NumericalError("mc_efficiency: over 5% of replications excluded");

  auto pack = [&](McBlock& block, const std::vector<VectorXd>& rows) {
    block.estimates.resize(static_cast<Eigen::Index>(rows.size()), p + 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
      block.estimates.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    finalize_block(block, truth);
  };
  pack(slr_block, slr_rows);
  pack(lab_block, lab_rows);

  report.has_efficiency = true;
  report.cov_diff = lab_block.beta_cov - slr_block.beta_cov;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(report.cov_diff);
  report.cov_diff_eigs = eig.eigenvalues();  // ascending
  report.blocks.push_back(std::move(slr_block));
  report.blocks.push_back(std::move(lab_block));
  return report;
}

std::string McReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["reps"] = reps;
  j["rho_star"] = rho_star;
  j["beta_star"] = vec_json(beta_star);
  nlohmann::ordered_json blocks_json = nlohmann::ordered_json::array();
  for (const McBlock& b : blocks) {
    nlohmann::ordered_json bj;
    bj["scale"] = b.scale;
    bj["estimator"] = b.estimator;
    bj["kept"] = b.estimates.rows();
    bj["exclusions"] = b.exclusions;
    bj["mean"] = vec_json(b.mean);
    bj["mae"] = vec_json(b.mae);
    bj["beta_cov"] = mat_json(b.beta_cov);
    bj["estimates"] = mat_json(b.estimates);
    blocks_json.push_back(std::move(bj));
  }
  j["blocks"] = std::move(blocks_json);
  if (has_efficiency) {
    j["cov_diff"] = mat_json(cov_diff);
    j["cov_diff_eigenvalues"] = vec_json(cov_diff_eigs);
  }
  return j.dump(2);
}

std::string McReport::estimates_csv() const {
  std::ostringstream out;
  out.precision(17);
  const Eigen::Index p = beta_star.size() - 1;
  out << "scale,estimator,rep,rho,beta0";
  for (Eigen::Index k = 1; k <= p; ++k) out << ",beta1_" << k;
  out << "\n";
  for (const McBlock& b : blocks)
    for (Eigen::Index i = 0; i < b.estimates.rows(); ++i) {
      out << b.scale << "," << b.estimator << "," << i;
      for (Eigen::Index j = 0; j < b.estimates.cols(); ++j) out << "," << b.estimates(i, j);
      out << "\n";
    }
  return out.str();
}

}  // namespace slr
