#include "slr/em_solvers.hpp"

#include <cmath>

#include "slr/baselines.hpp"
#include "newton.hpp"

namespace slr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double clamp_track(double v, int& clamps) {
  const double c = clamp_unit(v);
  if (c != v) ++clamps;
  return c;
}

double mean_u3(const Responsibilities& resp, const SampleCounts& c) {
  if (c.n3 == 0) return 0.0;
  return resp.u3.sum() / static_cast<double>(c.n3);
}

}  // namespace

Responsibilities e_step(const SemiDataset& data, const ModelParams& params) {
  params.validate();
  Responsibilities resp;
  resp.u1 = VectorXd::Zero(data.x1.rows());
  resp.u2 = VectorXd::Ones(data.x2.rows());
  resp.u3.resize(data.x3.rows());
  if (data.x3.rows() > 0) {
    const VectorXd h3 = (data.x3 * params.beta1).array() + params.beta0;
    for (std::int64_t i = 0; i < h3.size(); ++i)
      resp.u3[i] = mix_prob(params.rho, h3[i]);
  }
  return resp;
}

ScalarUpdates pslr_scalar_updates(const Responsibilities& resp, const PenaltyConfig& penalty,
                                  const SampleCounts& c) {
  penalty.validate();
  ScalarUpdates out;
  if (penalty.fixes_rho()) {
    out.rho = clamp_track(penalty.rho0, out.clamps);
  } else {
    const double m = mean_u3(resp, c);
    out.rho = clamp_track((m + penalty.gamma * penalty.rho0) / (1.0 + penalty.gamma),
                          out.clamps);
  }
  const double usum = static_cast<double>(c.n2) + resp.u3.sum();
  out.alpha = clamp_track(usum / static_cast<double>(c.N()), out.clamps);
  return out;
}

RhoSolveInfo dslr_rho_solve(const Responsibilities& resp, const PenaltyConfig& penalty,
                            const SampleCounts& c) {
  penalty.validate();
  if (c.n3 < 1) throw std::invalid_argument("dslr_rho_solve: needs unlabeled data");

  const double n3 = static_cast<double>(c.n3);
  const double N = static_cast<double>(c.N());
  auto psi = [&](double rho) {
    const double at = tilde_alpha(c, rho);
    return 1.0 - n3 * rho * (1.0 - rho) / (N * at * (1.0 - at));
  };

  RhoSolveInfo out;
  if (penalty.fixes_rho()) {
    out.rho = clamp_track(penalty.rho0, out.clamps);
    out.psi = psi(out.rho);
    out.residual = 0.0;  // rho is pinned, not a fixed-point solve
    return out;
  }

  const double m = mean_u3(resp, c);
  auto rhs = [&](double rho) {
    const double ps = psi(rho);
    return (m * ps + penalty.rho0 * penalty.gamma) / (ps + penalty.gamma);
  };

  if (penalty.gamma == 0.0) {
    out.rho = clamp_track(m, out.clamps);
    out.psi = psi(out.rho);
    out.residual = 0.0;  // rho = mean(u3) solves the equation exactly
  } else {
    auto g = [&](double rho) { return rho - rhs(rho); };
    double lo = kUnitEps, hi = 1.0 - kUnitEps;
    double glo = g(lo), ghi = g(hi);
    double root;
    if (glo >= 0.0) {
      root = lo;
      ++out.clamps;
    } else if (ghi <= 0.0) {
      root = hi;
      ++out.clamps;
    } else {
      double mid = 0.5 * (lo + hi);
      for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) < 1e-13 || hi - lo < 1e-16) break;
        if (gm < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      root = mid;
      // secant polish inside the bracket
      double a = lo, b = hi, ga = g(a), gb = g(b);
      for (int it = 0; it < 8 && gb != ga; ++it) {
        const double s = b - gb * (b - a) / (gb - ga);
        if (!std::isfinite(s) || s <= kUnitEps || s >= 1.0 - kUnitEps) break;
        a = b;
        ga = gb;
        b = s;
        gb = g(s);
        if (std::abs(gb) < 1e-15) break;
      }
      if (std::abs(g(b)) < std::abs(g(root))) root = b;
    }
    out.rho = root;
    out.psi = psi(root);
    out.residual = std::abs(g(root));
  }

  if (!(out.psi > 0.0 && out.psi < 1.0))
    throw NumericalError("dslr_rho_solve: psi outside (0,1), Jensen gap violated");
  return out;
}

namespace {

// Stacked design (intercept column first) and responsibility vector over the
// N = n1+n2+n3 rows, plus the M-step surface
//   (1/N) sum_i [ u_i h_i - log(1 - alpha + alpha e^{h_i}) ] - lambda ||beta1||^2.
struct MstepSurface {
  MatrixXd xt;
  VectorXd u;
  double alpha;
  double lambda;
  double N;

  MstepSurface(const SemiDataset& data, const Responsibilities& resp, double alpha_,
               double lambda_) {
    const auto c = data.counts();
    const auto p = data.dim();
    N = static_cast<double>(c.N());
    alpha = alpha_;
    lambda = lambda_;
    xt.resize(c.N(), p + 1);
    xt.col(0).setOnes();
    xt.block(0, 1, c.n1, p) = data.x1;
    xt.block(c.n1, 1, c.n2, p) = data.x2;
    if (c.n3 > 0) xt.block(c.n(), 1, c.n3, p) = data.x3;
    u.resize(c.N());
    u.head(c.n1) = resp.u1;
    u.segment(c.n1, c.n2) = resp.u2;
    if (c.n3 > 0) u.tail(c.n3) = resp.u3;
  }

  double value(const VectorXd& b) const {
    const auto p = xt.cols() - 1;
    const VectorXd h = xt * b;
    double v = 0.0;
    for (std::int64_t i = 0; i < h.size(); ++i) v += u[i] * h[i] - log_mix(alpha, h[i]);
    return v / N - lambda * b.tail(p).squaredNorm();
  }
  void grad_curv(const VectorXd& b, VectorXd& g, MatrixXd& S) const {
    const auto p = xt.cols() - 1;
    const VectorXd h = xt * b;
    VectorXd r(h.size()), w(h.size());
    for (std::int64_t i = 0; i < h.size(); ++i) {
      const double mp = mix_prob(alpha, h[i]);
      r[i] = u[i] - mp;
      w[i] = mp * (1.0 - mp);
    }
    g = xt.transpose() * r / N;
    S = xt.transpose() * w.asDiagonal() * xt / N;
    g.tail(p) -= 2.0 * lambda * b.tail(p);
    S.diagonal().tail(p).array() += 2.0 * lambda;
  }
};

}  // namespace

VectorXd beta_m_step(const SemiDataset& data, const Responsibilities& resp, double alpha,
                     double lambda, const VectorXd& beta_init, const EmConfig& cfg) {
  if (beta_init.size() != data.dim() + 1)
    throw std::invalid_argument("beta_m_step: beta_init must have length p+1");
  const MstepSurface surf(data, resp, alpha, lambda);
  auto value = [&](const VectorXd& b) { return surf.value(b); };
  auto grad_curv = [&](const VectorXd& b, VectorXd& g, MatrixXd& S) { surf.grad_curv(b, g, S); };

  const auto res = detail::newton_ascent(value, grad_curv, beta_init,
                                         cfg.inner_newton_tol, cfg.inner_max_iter);
  if (!res.converged)
    throw NumericalError("beta_m_step: gradient norm " + std::to_string(res.grad_norm) +
                         " after " + std::to_string(res.iterations) + " Newton iterations");
  return res.x;
}

double mstep_objective(const SemiDataset& data, const Responsibilities& resp, double alpha,
                       double lambda, const VectorXd& beta, VectorXd* grad) {
  if (beta.size() != data.dim() + 1)
    throw std::invalid_argument("mstep_objective: beta must have length p+1");
  const MstepSurface surf(data, resp, alpha, lambda);
  if (grad) {
    MatrixXd scratch;
    surf.grad_curv(beta, *grad, scratch);
  }
  return surf.value(beta);
}

ModelParams default_init(const SemiDataset& data, const PenaltyConfig& penalty) {
  data.validate();
  const auto c = data.counts();
  const double matched =
      penalty.lambda * static_cast<double>(c.N()) / static_cast<double>(c.n());
  const double lam = std::max(matched, 1e-4);  // keeps the init fit finite under separation
  const auto coef = fit_ridge_logistic(to_labeled(SemiDataset{data.x1, data.x2,
                                                              MatrixXd(0, data.dim())}),
                                       lam, 1e-8, 300);
  ModelParams init = to_model_params(coef, c);
  if (penalty.fixes_rho()) init.rho = clamp_unit(penalty.rho0);
  return init;
}

namespace {

enum class EmKind { profile, direct };

FitResult run_em(const SemiDataset& data, const PenaltyConfig& penalty,
                 const ModelParams& init, const EmConfig& cfg, EmKind kind) {
  data.validate();
  penalty.validate();
  const auto c = data.counts();
  if (!penalty.fixes_rho() && penalty.gamma > 0.0 && c.n3 < 1)
    throw std::invalid_argument("run_em: Beta prior with no unlabeled data");

  FitResult out;
  out.params = init;
  out.params.rho = clamp_unit(init.rho);
  if (penalty.fixes_rho()) out.params.rho = clamp_unit(penalty.rho0);
  out.params.validate();

  const auto p = data.dim();
  AlphaSolveInfo ainfo;
  auto objective = [&](const ModelParams& params) {
    if (kind == EmKind::profile) {
      const double ah = solve_alpha_hat(data, params, &ainfo);
      if (ainfo.at_boundary) out.diagnostics.alpha_at_boundary = true;
      return kappa(data, params, ah).value + penalty_value(params, penalty, c);
    }
    return direct_objective(data, params, penalty);
  };

  double obj = objective(out.params);
  out.objective_trace.push_back(obj);
  out.param_trace.push_back(out.params);

  VectorXd beta(p + 1);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Responsibilities resp = e_step(data, out.params);

    ModelParams next = out.params;
    double alpha;
    if (kind == EmKind::profile) {
      const auto su = pslr_scalar_updates(resp, penalty, c);
      next.rho = su.rho;
      alpha = su.alpha;
      out.diagnostics.clamp_events += su.clamps;
    } else {
      const auto ri = dslr_rho_solve(resp, penalty, c);
      next.rho = ri.rho;
      alpha = tilde_alpha(c, ri.rho);
      out.diagnostics.clamp_events += ri.clamps;
      out.diagnostics.rho_residual_max = std::max(out.diagnostics.rho_residual_max, ri.residual);
      out.diagnostics.psi_min = std::min(out.diagnostics.psi_min, ri.psi);
      out.diagnostics.psi_max = std::max(out.diagnostics.psi_max, ri.psi);
    }

    beta[0] = out.params.beta0;
    beta.tail(p) = out.params.beta1;
    try {
      beta = beta_m_step(data, resp, alpha, penalty.lambda, beta, cfg);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (EM iteration " + std::to_string(it) + ")");
    }
    next.beta0 = beta[0];
    next.beta1 = beta.tail(p);

    const double nobj = objective(next);
    out.objective_trace.push_back(nobj);
    out.param_trace.push_back(next);
    if (nobj < obj - 1e-10) ++out.diagnostics.monotonicity_violations;

    const double dpar = std::max({std::abs(next.rho - out.params.rho),
                                  std::abs(next.beta0 - out.params.beta0),
                                  (next.beta1 - out.params.beta1).cwiseAbs().maxCoeff()});
    const double rel = std::abs(nobj - obj) / std::max(1.0, std::abs(obj));
    out.params = next;
    obj = nobj;
    out.iterations = it;
    if (rel < cfg.tol && dpar < kEmParamTol) {
      out.converged = true;
      break;
    }
  }

  const ObjectiveValue gv = kind == EmKind::profile
                                ? profile_objective_grad(data, out.params, penalty)
                                : direct_objective_grad(data, out.params, penalty);
  // with rho pinned the rho component of the gradient is not meaningful
  const double g2 = gv.grad_beta.squaredNorm() +
                    (penalty.fixes_rho() ? 0.0 : gv.grad_rho * gv.grad_rho);
  out.final_gradient_norm = std::sqrt(g2);
  return out;
}

}  // namespace

FitResult fit_pslr(const SemiDataset& data, const PenaltyConfig& penalty,
                   const ModelParams& init, const EmConfig& cfg) {
  return run_em(data, penalty, init, cfg, EmKind::profile);
}

FitResult fit_pslr(const SemiDataset& data, const PenaltyConfig& penalty, const EmConfig& cfg) {
  return run_em(data, penalty, default_init(data, penalty), cfg, EmKind::profile);
}

FitResult fit_dslr(const SemiDataset& data, const PenaltyConfig& penalty,
                   const ModelParams& init, const EmConfig& cfg) {
  return run_em(data, penalty, init, cfg, EmKind::direct);
}

FitResult fit_dslr(const SemiDataset& data, const PenaltyConfig& penalty, const EmConfig& cfg) {
  return run_em(data, penalty, default_init(data, penalty), cfg, EmKind::direct);
}

}  // namespace slr
