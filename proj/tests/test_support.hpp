#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "slr/data_model.hpp"

namespace testutil {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Central-difference gradient with the acceptance-suite step.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double step = 1e-5) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd hi = x, lo = x;
    hi(i) += step;
    lo(i) -= step;
    g(i) = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

inline double rel_gap(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// Two overlapping Gaussian classes (mean gap `sep` along the diagonal
// direction) plus an unlabeled block mixed at `mix`.
inline slr::SemiDataset random_dataset(std::uint64_t seed, std::int64_t n1, std::int64_t n2,
                                       std::int64_t n3, int p, double sep = 1.0,
                                       double mix = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution pick(mix);
  const double shift = 0.5 * sep / std::sqrt(static_cast<double>(p));
  auto draw = [&](MatrixXd& m, std::int64_t rows, int cls_fixed) {
    m.resize(rows, p);
    for (std::int64_t i = 0; i < rows; ++i) {
      const int cls = cls_fixed >= 0 ? cls_fixed : (pick(rng) ? 1 : 0);
      for (int j = 0; j < p; ++j) m(i, j) = gauss(rng) + (cls == 1 ? shift : -shift);
    }
  };
  slr::SemiDataset data;
  draw(data.x1, n1, 0);
  draw(data.x2, n2, 1);
  draw(data.x3, n3, -1);
  return data;
}

inline slr::ModelParams random_params(std::uint64_t seed, int p, double scale = 0.7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  std::uniform_real_distribution<double> unif(0.15, 0.85);
  slr::ModelParams params;
  params.rho = unif(rng);
  params.beta0 = gauss(rng);
  params.beta1.resize(p);
  for (int j = 0; j < p; ++j) params.beta1(j) = gauss(rng);
  return params;
}

// Nelder-Mead minimizer for oracle use in low dimensions; restarts rebuild the
// simplex around the incumbent to polish past stalls.
inline VectorXd nelder_mead(const std::function<double(const VectorXd&)>& f, VectorXd x0,
                            double init_step = 0.5, int max_iter = 20000, int restarts = 3) {
  const Eigen::Index n = x0.size();
  for (int round = 0; round < restarts; ++round) {
    std::vector<VectorXd> xs(static_cast<std::size_t>(n) + 1, x0);
    for (Eigen::Index i = 0; i < n; ++i) xs[static_cast<std::size_t>(i) + 1](i) += init_step;
    std::vector<double> fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

    for (int it = 0; it < max_iter; ++it) {
      std::vector<std::size_t> ord(xs.size());
      for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
      std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
      const std::size_t best = ord.front(), worst = ord.back(), second = ord[ord.size() - 2];
      if (fs[worst] - fs[best] < 1e-13 * (1.0 + std::abs(fs[best]))) break;

      VectorXd centroid = VectorXd::Zero(n);
      for (std::size_t i : ord)
        if (i != worst) centroid += xs[i];
      centroid /= static_cast<double>(n);

      const VectorXd xr = centroid + (centroid - xs[worst]);
      const double fr = f(xr);
      if (fr < fs[best]) {
        const VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
        const double fe = f(xe);
        xs[worst] = fe < fr ? xe : xr;
        fs[worst] = std::min(fe, fr);
      } else if (fr < fs[second]) {
        xs[worst] = xr;
        fs[worst] = fr;
      } else {
        const VectorXd xc = centroid + 0.5 * (xs[worst] - centroid);
        const double fc = f(xc);
        if (fc < fs[worst]) {
          xs[worst] = xc;
          fs[worst] = fc;
        } else {
          for (std::size_t i : ord)
            if (i != best) {
              xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
              fs[i] = f(xs[i]);
            }
        }
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (fs[i] < fs[best]) best = i;
    x0 = xs[best];
    init_step *= 0.1;  // restart tighter around the incumbent
  }
  return x0;
}

}  // namespace testutil
