#include "slr/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace slr {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_mix(double a, double h) {
  if (a <= 0.0) return 0.0;
  if (a >= 1.0) return h;
  h = clamp_h(h);
  if (h <= 0.0) return std::log1p(a * std::expm1(h));
  return h + std::log(a + (1.0 - a) * std::exp(-h));
}

double tilt_ratio(double a, double h) {
  h = clamp_h(h);
  if (h <= 0.0) {
    const double d = std::expm1(h);
    return d / (1.0 + a * d);
  }
  const double t = std::exp(-h);  // in (0,1]
  return (1.0 - t) / (t * (1.0 - a) + a);
}

double mix_prob(double a, double h) {
  if (a <= 0.0) return 0.0;
  if (a >= 1.0) return 1.0;
  h = clamp_h(h);
  if (h <= 0.0) {
    const double e = std::exp(h);
    return a * e / (1.0 - a + a * e);
  }
  const double t = std::exp(-h);
  return a / (t * (1.0 - a) + a);
}

double tilde_alpha(const SampleCounts& c, double rho) {
  return (static_cast<double>(c.n2) + static_cast<double>(c.n3) * rho) /
         static_cast<double>(c.N());
}

double linear_predictor(const ModelParams& params, const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != params.beta1.size())
    throw std::invalid_argument("linear_predictor: dimension mismatch");
  return params.beta0 + params.beta1.dot(x);
}

LinearPredictors linear_predictors(const SemiDataset& data, const ModelParams& params) {
  if (data.dim() != params.beta1.size())
    throw std::invalid_argument("linear_predictors: dimension mismatch");
  LinearPredictors lp;
  lp.h1 = (data.x1 * params.beta1).array() + params.beta0;
  lp.h2 = (data.x2 * params.beta1).array() + params.beta0;
  lp.h3 = data.x3.rows() > 0
              ? VectorXd((data.x3 * params.beta1).array() + params.beta0)
              : VectorXd(0);
  return lp;
}

ObjectiveValue kappa(const SemiDataset& data, const ModelParams& params, double alpha) {
  data.validate();
  params.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("kappa: alpha outside [0,1]");

  const auto c = data.counts();
  const double N = static_cast<double>(c.N());
  const auto lp = linear_predictors(data, params);
  const auto p = data.dim();

  ObjectiveValue out;
  out.grad_beta = VectorXd::Zero(p + 1);

  double value = 0.0;
  double grad_rho = 0.0;
  double grad_alpha = 0.0;
  // coefficient of (1, x) in the beta gradient for one point:
  //   mix_prob(rho_j, h) - mix_prob(alpha, h)
  auto add_block = [&](const MatrixXd& x, const VectorXd& h, double rho_j, bool is_s3) {
    for (std::int64_t i = 0; i < h.size(); ++i) {
      const double hi = h[i];
      value += log_mix(rho_j, hi) - log_mix(alpha, hi);
      grad_alpha -= tilt_ratio(alpha, hi);
      if (is_s3) grad_rho += tilt_ratio(rho_j, hi);
      const double w = mix_prob(rho_j, hi) - mix_prob(alpha, hi);
      out.grad_beta[0] += w;
      out.grad_beta.tail(p) += w * x.row(i).transpose();
    }
  };
  add_block(data.x1, lp.h1, 0.0, false);
  add_block(data.x2, lp.h2, 1.0, false);
  if (c.n3 > 0) add_block(data.x3, lp.h3, params.rho, true);

  out.value = value / N - std::log(N);
  out.grad_rho = grad_rho / N;
  out.grad_alpha = grad_alpha / N;
  out.grad_beta /= N;
  return out;
}

namespace {

// Stationarity residual R(a) = (1/N) sum 1/(1 + a d_ji) - 1 with d = e^h - 1.
// R = a * dkappa/dalpha, so sign(R) = sign of the alpha-derivative on (0,1).
struct AlphaResidual {
  const VectorXd& d;
  double operator()(double a) const {
    double s = 0.0;
    for (std::int64_t i = 0; i < d.size(); ++i) s += 1.0 / (1.0 + a * d[i]);
    return s / static_cast<double>(d.size()) - 1.0;
  }
  double deriv(double a) const {
    double s = 0.0;
    for (std::int64_t i = 0; i < d.size(); ++i) {
      const double t = 1.0 + a * d[i];
      s -= d[i] / (t * t);
    }
    return s / static_cast<double>(d.size());
  }
};

}  // namespace

double solve_alpha_hat(const LinearPredictors& lp, const SampleCounts& c,
                       AlphaSolveInfo* info) {
  const auto N = c.N();
  VectorXd d(N);
  std::int64_t k = 0;
  bool all_zero = true;
  auto fill = [&](const VectorXd& h) {
    for (std::int64_t i = 0; i < h.size(); ++i) {
      if (h[i] != 0.0) all_zero = false;
      d[k++] = std::expm1(clamp_h(h[i]));
    }
  };
  fill(lp.h1);
  fill(lp.h2);
  fill(lp.h3);

  AlphaSolveInfo local;
  AlphaSolveInfo& out = info ? *info : local;

  if (all_zero) {
    // kappa is flat in alpha; break the tie at alpha-tilde of the labeled
    // proportion, which keeps the reduction to labeled-only logistic exact.
    out.alpha = tilde_alpha(c, c.rho_labeled());
    out.residual = 0.0;
    out.at_boundary = false;
    out.iterations = 0;
    return out.alpha;
  }

  const AlphaResidual R{d};
  double lo = kUnitEps, hi = 1.0 - kUnitEps;
  const double Rlo = R(lo), Rhi = R(hi);
  if (Rlo >= 0.0) {  // kappa nondecreasing in alpha over the whole interval
    out.alpha = lo;
    out.residual = std::abs(Rlo);
    out.at_boundary = true;
    out.iterations = 0;
    return lo;
  }
  if (Rhi <= 0.0) {  // kappa nonincreasing: minimum at the right clamp
    out.alpha = hi;
    out.residual = std::abs(Rhi);
    out.at_boundary = true;
    out.iterations = 0;
    return hi;
  }

  double mid = 0.5 * (lo + hi);
  int it = 0;
  for (; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double Rm = R(mid);
    if (std::abs(Rm) < 1e-13 || hi - lo < 1e-16) break;
    if (Rm < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  // Newton polish: quadratic cleanup of the bisection point.
  double a = mid;
  for (int j = 0; j < 8; ++j) {
    const double r = R(a);
    if (std::abs(r) < 1e-15) break;
    const double dr = R.deriv(a);
    const double next = a - r / dr;
    if (!std::isfinite(next) || next <= kUnitEps || next >= 1.0 - kUnitEps) break;
    a = next;
  }
  if (std::abs(R(a)) > std::abs(R(mid))) a = mid;

  out.alpha = a;
  out.residual = std::abs(R(a));
  out.at_boundary = false;
  out.iterations = it;
  return a;
}

double solve_alpha_hat(const SemiDataset& data, const ModelParams& params,
                       AlphaSolveInfo* info) {
  data.validate();
  return solve_alpha_hat(linear_predictors(data, params), data.counts(), info);
}

double penalty_value(const ModelParams& params, const PenaltyConfig& penalty,
                     const SampleCounts& c) {
  penalty.validate();
  double v = -penalty.lambda * params.beta1.squaredNorm();
  if (!penalty.fixes_rho() && penalty.gamma > 0.0)
    v += penalty.tau1(c) * std::log1p(-params.rho) +
         penalty.tau2(c) * std::log(params.rho);
  return v;
}

double profile_objective(const SemiDataset& data, const ModelParams& params,
                         const PenaltyConfig& penalty) {
  const double ah = solve_alpha_hat(data, params);
  return kappa(data, params, ah).value + penalty_value(params, penalty, data.counts());
}

ObjectiveValue profile_objective_grad(const SemiDataset& data, const ModelParams& params,
                                      const PenaltyConfig& penalty) {
  const auto c = data.counts();
  const double ah = solve_alpha_hat(data, params);
  // Envelope: alpha-hat is stationary, so its dependence on beta drops out of
  // the gradient; it never depended on rho.
  ObjectiveValue out = kappa(data, params, ah);
  out.value += penalty_value(params, penalty, c);
  if (!penalty.fixes_rho() && penalty.gamma > 0.0)
    out.grad_rho += -penalty.tau1(c) / (1.0 - params.rho) + penalty.tau2(c) / params.rho;
  out.grad_beta.tail(params.beta1.size()) -= 2.0 * penalty.lambda * params.beta1;
  return out;
}

double direct_objective(const SemiDataset& data, const ModelParams& params,
                        const PenaltyConfig& penalty) {
  const auto c = data.counts();
  return kappa(data, params, tilde_alpha(c, params.rho)).value +
         penalty_value(params, penalty, c);
}

ObjectiveValue direct_objective_grad(const SemiDataset& data, const ModelParams& params,
                                     const PenaltyConfig& penalty) {
  const auto c = data.counts();
  ObjectiveValue out = kappa(data, params, tilde_alpha(c, params.rho));
  out.value += penalty_value(params, penalty, c);
  // d alpha-tilde / d rho = n3/N
  out.grad_rho += out.grad_alpha * static_cast<double>(c.n3) / static_cast<double>(c.N());
  if (!penalty.fixes_rho() && penalty.gamma > 0.0)
    out.grad_rho += -penalty.tau1(c) / (1.0 - params.rho) + penalty.tau2(c) / params.rho;
  out.grad_beta.tail(params.beta1.size()) -= 2.0 * penalty.lambda * params.beta1;
  return out;
}

Eigen::Vector3d slr_probs(const SampleCounts& c, const ModelParams& params,
                          const Eigen::Ref<const VectorXd>& x) {
  const double N = static_cast<double>(c.N());
  const double at = tilde_alpha(c, params.rho);
  const double h = clamp_h(linear_predictor(params, x));
  Eigen::Vector3d p;
  if (h <= 0.0) {
    const double e = std::exp(h);
    const double D = 1.0 - at + at * e;
    p[0] = static_cast<double>(c.n1) / (N * D);
    p[1] = static_cast<double>(c.n2) * e / (N * D);
    p[2] = static_cast<double>(c.n3) * (1.0 - params.rho + params.rho * e) / (N * D);
  } else {
    const double t = std::exp(-h);
    const double D = t * (1.0 - at) + at;
    p[0] = static_cast<double>(c.n1) * t / (N * D);
    p[1] = static_cast<double>(c.n2) / (N * D);
    p[2] = static_cast<double>(c.n3) * (t * (1.0 - params.rho) + params.rho) / (N * D);
  }
  return p;
}

}  // namespace slr
