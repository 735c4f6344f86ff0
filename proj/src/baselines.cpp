#include "slr/baselines.hpp"

#include <cmath>
#include <random>

#include "slr/objectives.hpp"
#include "newton.hpp"

namespace slr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd augment(const MatrixXd& x) {
  MatrixXd out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

// Pieces of the weighted logistic objective sum_i [u_i h_i - log(1+e^{h_i})].
double wlogistic_value(const MatrixXd& xt, const VectorXd& u, const VectorXd& beta) {
  const VectorXd h = xt * beta;
  double v = 0.0;
  for (std::int64_t i = 0; i < h.size(); ++i) v += u[i] * h[i] - log1pexp(h[i]);
  return v;
}

void wlogistic_grad_curv(const MatrixXd& xt, const VectorXd& u, const VectorXd& beta,
                         VectorXd& g, MatrixXd& S) {
  const VectorXd h = xt * beta;
  VectorXd p(h.size()), w(h.size());
  for (std::int64_t i = 0; i < h.size(); ++i) {
    p[i] = stable_sigmoid(h[i]);
    w[i] = p[i] * (1.0 - p[i]);
  }
  g = xt.transpose() * (u - p);
  S = xt.transpose() * w.asDiagonal() * xt;
}

// Ridge surface shared by the fitter and the public verification hook.
struct RidgeSurface {
  const MatrixXd& xt;
  const VectorXd& y;
  double lambda;
  double n;

  double value(const VectorXd& b) const {
    const auto p = xt.cols() - 1;
    return wlogistic_value(xt, y, b) / n - lambda * b.tail(p).squaredNorm();
  }
  void grad_curv(const VectorXd& b, VectorXd& g, MatrixXd& S) const {
    const auto p = xt.cols() - 1;
    wlogistic_grad_curv(xt, y, b, g, S);
    g /= n;
    S /= n;
    g.tail(p) -= 2.0 * lambda * b.tail(p);
    S.diagonal().tail(p).array() += 2.0 * lambda;
  }
};

VectorXd pack(const ClassifierCoefficients& coef) {
  VectorXd b(coef.beta1.size() + 1);
  b[0] = coef.beta0c;
  b.tail(coef.beta1.size()) = coef.beta1;
  return b;
}

}  // namespace

ClassifierCoefficients fit_ridge_logistic(const LabeledSample& labeled, double lambda,
                                          double grad_tol, int max_iter) {
  labeled.validate();
  const double n = static_cast<double>(labeled.n());
  const auto p = labeled.dim();
  if ((labeled.y.array() == 0.0).all() || (labeled.y.array() == 1.0).all())
    throw std::invalid_argument("fit_ridge_logistic: both classes must be present");
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw std::invalid_argument("fit_ridge_logistic: lambda must be finite and >= 0");

  const MatrixXd xt = augment(labeled.x);
  const RidgeSurface surf{xt, labeled.y, lambda, n};
  auto value = [&](const VectorXd& b) { return surf.value(b); };
  auto grad_curv = [&](const VectorXd& b, VectorXd& g, MatrixXd& S) { surf.grad_curv(b, g, S); };

  const auto res = detail::newton_ascent(value, grad_curv, VectorXd::Zero(p + 1),
                                         grad_tol, max_iter);
  if (!res.converged)
    throw NumericalError("fit_ridge_logistic: no convergence (gradient norm " +
                         std::to_string(res.grad_norm) + "); with lambda=0 this "
                         "typically means the classes are separable");
  if (lambda == 0.0) {
    // Without a penalty the MLE does not exist on separable classes; the
    // gradient still decays below tolerance along the diverging ascent path,
    // so catch it by the exact criterion: a fitted hyperplane with every
    // margin strictly positive certifies separation.
    const VectorXd margins =
        (2.0 * labeled.y.array() - 1.0) * (xt * res.x).array();
    if (margins.minCoeff() > 0.0)
      throw NumericalError("fit_ridge_logistic: classes are separable, the "
                           "unpenalized maximum likelihood fit does not exist");
  }
  ClassifierCoefficients out;
  out.beta0c = res.x[0];
  out.beta1 = res.x.tail(p);
  return out;
}

double ridge_objective(const LabeledSample& labeled, double lambda,
                       const ClassifierCoefficients& coef, VectorXd* grad) {
  labeled.validate();
  if (coef.beta1.size() != labeled.dim())
    throw std::invalid_argument("ridge_objective: coefficient dimension mismatch");
  const MatrixXd xt = augment(labeled.x);
  const RidgeSurface surf{xt, labeled.y, lambda, static_cast<double>(labeled.n())};
  const VectorXd b = pack(coef);
  if (grad) {
    MatrixXd scratch;
    surf.grad_curv(b, *grad, scratch);
  }
  return surf.value(b);
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

namespace {

// Entropy-regularization surface: the maximized form is
//   -F = -(1/N)[ sum_lab (log(1+e^h) - y h) + lambda_e sum_unl ent(sigmoid h) ]
//        - lambda ||beta1||^2,
// using ent(sigmoid h) = log(1+e^h) - h sigmoid(h).
struct ErSurface {
  const MatrixXd& xl;
  const VectorXd& y;
  const MatrixXd& xu;
  double lambda;
  double lambda_e;
  double N;

  double value(const VectorXd& b) const {
    const auto p = xl.cols() - 1;
    double v = -wlogistic_value(xl, y, b);
    const VectorXd hu = xu * b;
    for (std::int64_t i = 0; i < hu.size(); ++i)
      v += lambda_e * (log1pexp(hu[i]) - hu[i] * stable_sigmoid(hu[i]));
    return -v / N - lambda * b.tail(p).squaredNorm();
  }
  void grad_curv(const VectorXd& b, VectorXd& g, MatrixXd& S) const {
    const auto p = xl.cols() - 1;
    wlogistic_grad_curv(xl, y, b, g, S);  // g, S of the labeled log-lik
    const VectorXd hu = xu * b;
    VectorXd gu(hu.size()), su(hu.size());
    for (std::int64_t i = 0; i < hu.size(); ++i) {
      const double pi = stable_sigmoid(hu[i]);
      const double wi = pi * (1.0 - pi);
      // d/dh ent = -h w;  d2/dh2 ent = -w - h w (1-2p)
      gu[i] = -hu[i] * wi;
      su[i] = -wi - hu[i] * wi * (1.0 - 2.0 * pi);
    }
    if (hu.size() > 0) {
      // the maximized value carries -lambda_e * ent, so the entropy
      // derivatives enter with flipped sign
      g -= lambda_e * (xu.transpose() * gu);
      S += lambda_e * (xu.transpose() * su.asDiagonal() * xu);  // S approximates -Hessian
    }
    g /= N;
    S /= N;
    g.tail(p) -= 2.0 * lambda * b.tail(p);
    S.diagonal().tail(p).array() += 2.0 * lambda;
  }
};

}  // namespace

ClassifierCoefficients fit_entropy_reg(const SemiDataset& data, double lambda, double lambda_e,
                                       std::uint64_t seed) {
  data.validate();
  if (lambda_e < 0.0 || lambda_e > 1.0)
    throw std::invalid_argument("fit_entropy_reg: lambda_e must lie in [0,1]");
  const auto c = data.counts();
  const double N = static_cast<double>(c.N());
  const auto p = data.dim();

  const LabeledSample labeled = to_labeled(SemiDataset{data.x1, data.x2, MatrixXd(0, p)});
  const MatrixXd xl = augment(labeled.x);
  const MatrixXd xu = c.n3 > 0 ? augment(data.x3) : MatrixXd(0, p + 1);
  const ErSurface surf{xl, labeled.y, xu, lambda, lambda_e, N};
  auto value = [&](const VectorXd& b) { return surf.value(b); };
  auto grad_curv = [&](const VectorXd& b, VectorXd& g, MatrixXd& S) { surf.grad_curv(b, g, S); };

  // Warm start at the lambda_e = 0 solution: ridge on the labeled part with
  // the lambda rescaled from the 1/N to the 1/n normalization, floored so the
  // start exists even when lambda = 0 and the labeled classes are separable.
  const double n = static_cast<double>(c.n());
  const auto warm = fit_ridge_logistic(labeled, std::max(lambda * N / n, 1e-4), 1e-8, 300);
  VectorXd w0(p + 1);
  w0[0] = warm.beta0c;
  w0.tail(p) = warm.beta1;

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double spread[5] = {0.0, 0.25, 0.5, 1.0, 2.0};

  bool have_best = false;
  double best_val = 0.0;
  VectorXd best_x;
  for (int r = 0; r < 5; ++r) {
    VectorXd x0 = w0;
    for (std::int64_t j = 0; j < x0.size(); ++j) x0[j] += spread[r] * gauss(rng);
    detail::NewtonResult res;
    try {
      res = detail::newton_ascent(value, grad_curv, x0, 1e-8, 300);
    } catch (const NumericalError&) {
      continue;
    }
    if (!res.converged) continue;
    const double v = value(res.x);
    if (!have_best || v > best_val) {
      have_best = true;
      best_val = v;
      best_x = res.x;
    }
  }
  if (!have_best)
    throw NumericalError("fit_entropy_reg: no restart reached stationarity");

  ClassifierCoefficients out;
  out.beta0c = best_x[0];
  out.beta1 = best_x.tail(p);
  return out;
}

double er_objective(const SemiDataset& data, double lambda, double lambda_e,
                    const ClassifierCoefficients& coef, VectorXd* grad) {
  data.validate();
  if (coef.beta1.size() != data.dim())
    throw std::invalid_argument("er_objective: coefficient dimension mismatch");
  const auto c = data.counts();
  const auto p = data.dim();
  const LabeledSample labeled = to_labeled(SemiDataset{data.x1, data.x2, MatrixXd(0, p)});
  const MatrixXd xl = augment(labeled.x);
  const MatrixXd xu = c.n3 > 0 ? augment(data.x3) : MatrixXd(0, p + 1);
  const ErSurface surf{xl, labeled.y, xu, lambda, lambda_e, static_cast<double>(c.N())};
  const VectorXd b = pack(coef);
  if (grad) {
    MatrixXd scratch;
    surf.grad_curv(b, *grad, scratch);
  }
  return surf.value(b);
}

ClassifierCoefficients fit_soft_cem(const SemiDataset& data, int max_iter, double tol,
                                    bool hard_assignment,
                                    std::vector<double>* objective_trace,
                                    const ClassifierCoefficients* init) {
  data.validate();
  const auto c = data.counts();
  const double N = static_cast<double>(c.N());
  const auto p = data.dim();

  MatrixXd xt(c.N(), p + 1);
  xt.col(0).setOnes();
  xt.block(0, 1, c.n1, p) = data.x1;
  xt.block(c.n1, 1, c.n2, p) = data.x2;
  if (c.n3 > 0) xt.block(c.n(), 1, c.n3, p) = data.x3;

  VectorXd u(c.N());
  u.head(c.n1).setZero();
  u.segment(c.n1, c.n2).setOnes();

  VectorXd beta = VectorXd::Zero(p + 1);
  if (init) {
    if (init->beta1.size() != p)
      throw std::invalid_argument("fit_soft_cem: init dimension mismatch");
    beta[0] = init->beta0c;
    beta.tail(p) = init->beta1;
  }
  if (objective_trace) objective_trace->clear();

  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    // E-step on the unlabeled block (labeled entries stay at their labels)
    if (c.n3 > 0) {
      const VectorXd h3 = (data.x3 * beta.tail(p)).array() + beta[0];
      for (std::int64_t i = 0; i < c.n3; ++i) {
        const double e = stable_sigmoid(h3[i]);
        u[c.n() + i] = hard_assignment ? (e >= 0.5 ? 1.0 : 0.0) : e;
      }
    }
    auto value = [&](const VectorXd& b) { return wlogistic_value(xt, u, b) / N; };
    auto grad_curv = [&](const VectorXd& b, VectorXd& g, MatrixXd& S) {
      wlogistic_grad_curv(xt, u, b, g, S);
      g /= N;
      S /= N;
    };
    const auto res = detail::newton_ascent(value, grad_curv, beta, 1e-10, 100);
    if (!res.converged)
      throw NumericalError("fit_soft_cem: M-step failed at iteration " + std::to_string(it));
    const double step = (res.x - beta).cwiseAbs().maxCoeff();
    beta = res.x;
    if (objective_trace) objective_trace->push_back(value(beta));
    if (step < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("fit_soft_cem: no convergence within max_iter");

  ClassifierCoefficients out;
  out.beta0c = beta[0];
  out.beta1 = beta.tail(p);
  return out;
}

ModelParams to_model_params(const ClassifierCoefficients& coef, const SampleCounts& c) {
  ModelParams out;
  out.rho = clamp_unit(c.rho_labeled());
  out.beta0 = coef.beta0c - std::log(static_cast<double>(c.n2) / static_cast<double>(c.n1));
  out.beta1 = coef.beta1;
  return out;
}

ClassifierCoefficients to_classifier(const ModelParams& params, const SampleCounts& c) {
  ClassifierCoefficients out;
  out.beta0c = params.beta0 + std::log(static_cast<double>(c.n2) / static_cast<double>(c.n1));
  out.beta1 = params.beta1;
  return out;
}

}  // namespace slr
