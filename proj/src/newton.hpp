#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "slr/data_model.hpp"

namespace slr {
namespace detail {

// Damped Newton ascent on a smooth objective.  grad_curv must fill the
// gradient g and a curvature matrix S intended to approximate -Hessian; when S
// is not usably positive definite (LDLT failure, condition estimate above
// 1e12, or a non-ascent direction) a diagonal shift starting at 1e-10 is
// escalated until the step ascends.  Backtracking uses the Armijo constant
// 1e-4.  Iterates with an infinity norm above 1e8 are treated as divergence.
struct NewtonResult {
  Eigen::VectorXd x;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline NewtonResult newton_ascent(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& grad_curv,
    Eigen::VectorXd x, double grad_tol, int max_iter) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  NewtonResult out;
  double f = value(x);
  VectorXd g(x.size());
  MatrixXd S(x.size(), x.size());

  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    grad_curv(x, g, S);
    out.grad_norm = g.norm();
    if (!std::isfinite(out.grad_norm)) throw NumericalError("newton_ascent: non-finite gradient");
    if (out.grad_norm < grad_tol) {
      out.converged = true;
      break;
    }

    VectorXd d;
    double shift = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd M = S;
      if (shift > 0.0) M.diagonal().array() += shift;
      Eigen::LDLT<MatrixXd> ldlt(M);
      bool ok = ldlt.info() == Eigen::Success;
      if (ok) {
        const auto& D = ldlt.vectorD();
        const double dmax = D.maxCoeff();
        const double dmin = D.minCoeff();
        ok = dmin > 0.0 && dmax / dmin < 1e12;
      }
      if (ok) {
        d = ldlt.solve(g);
        ok = d.allFinite() && g.dot(d) > 0.0;
      }
      if (ok) break;
      shift = shift == 0.0 ? 1e-10 : shift * 100.0;
      shift *= std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
      d.resize(0);
    }
    if (d.size() == 0) d = g;  // last resort: gradient step

    const double slope = g.dot(d);
    // Near the optimum the predicted gain g'd drops below the rounding noise
    // of the objective value, so a value-based line search cannot certify any
    // step; take the full (positive-definite-model) Newton step outright and
    // let the gradient check decide.
    if (slope <= 1e-12 * (1.0 + std::abs(f))) {
      x += d;
      f = value(x);
      if (!std::isfinite(f)) throw NumericalError("newton_ascent: non-finite objective");
      if (x.cwiseAbs().maxCoeff() > 1e8)
        throw NumericalError("newton_ascent: diverging iterates (possible separation)");
      out.iterations = it + 1;
      continue;
    }
    double t = 1.0;
    double fn = f;
    VectorXd xn = x;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * d;
      fn = value(xn);
      if (std::isfinite(fn) && fn >= f + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;  // stalled; grad_norm reported as-is
    x = xn;
    f = fn;
    if (x.cwiseAbs().maxCoeff() > 1e8)
      throw NumericalError("newton_ascent: diverging iterates (possible separation)");
    out.iterations = it + 1;
  }
  if (!out.converged) {
    grad_curv(x, g, S);
    out.grad_norm = g.norm();
    out.converged = out.grad_norm < grad_tol;
  }
  out.x = std::move(x);
  return out;
}

}  // namespace detail
}  // namespace slr
