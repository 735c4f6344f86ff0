#include <cmath>

#include "doctest.h"
#include "slr/baselines.hpp"
#include "slr/objectives.hpp"
#include "test_support.hpp"

using namespace slr;
using testutil::fd_gradient;
using testutil::random_dataset;
using testutil::random_params;

TEST_CASE("scalar kernels: sigmoid, log1pexp, log_mix family") {
  CHECK(stable_sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(stable_sigmoid(800.0) == doctest::Approx(1.0));
  CHECK(stable_sigmoid(-800.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(stable_sigmoid(-1e308)));

  CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(log1pexp(800.0) == doctest::Approx(800.0));
  CHECK(log1pexp(-800.0) == doctest::Approx(0.0));

  // log_mix(a, h) = log(1 - a + a e^h)
  CHECK(log_mix(0.3, 0.0) == doctest::Approx(0.0));
  CHECK(log_mix(0.0, 7.0) == doctest::Approx(0.0));
  CHECK(log_mix(1.0, 7.0) == doctest::Approx(7.0));
  CHECK(log_mix(0.5, std::log(3.0)) == doctest::Approx(std::log(2.0)));
  // far tails against an extended-precision oracle
  const double far = static_cast<double>(500.0L + std::log(0.3L));
  CHECK(log_mix(0.3, 500.0) == doctest::Approx(far).epsilon(1e-14));
  CHECK(log_mix(0.3, -500.0) == doctest::Approx(std::log(0.7)).epsilon(1e-14));

  // tilt_ratio is d log_mix / da
  for (double a : {0.1, 0.5, 0.9})
    for (double h : {-3.0, -0.2, 0.0, 1.0, 4.0}) {
      const double fd = (log_mix(a + 1e-6, h) - log_mix(a - 1e-6, h)) / 2e-6;
      CHECK(tilt_ratio(a, h) == doctest::Approx(fd).epsilon(1e-6));
    }
  CHECK(tilt_ratio(0.4, 0.0) == doctest::Approx(0.0));

  // mix_prob = sigmoid(h + logit a), exact at the endpoints
  CHECK(mix_prob(0.25, std::log(3.0)) == doctest::Approx(0.5));
  CHECK(mix_prob(0.0, 5.0) == doctest::Approx(0.0));
  CHECK(mix_prob(1.0, -5.0) == doctest::Approx(1.0));
  for (double a : {0.2, 0.7})
    for (double h : {-2.0, 0.3, 10.0})
      CHECK(mix_prob(a, h) ==
            doctest::Approx(stable_sigmoid(h + std::log(a / (1.0 - a)))).epsilon(1e-12));
}

TEST_CASE("linear predictors and tilde_alpha") {
  ModelParams params;
  params.beta0 = 1.0;
  params.beta1.resize(2);
  params.beta1 << 2.0, -1.0;
  VectorXd x(2);
  x << 3.0, 4.0;
  CHECK(linear_predictor(params, x) == doctest::Approx(3.0));

  const SemiDataset d = random_dataset(3, 4, 5, 6, 2);
  const LinearPredictors lp = linear_predictors(d, params);
  CHECK(lp.h1.size() == 4);
  CHECK(lp.h2.size() == 5);
  CHECK(lp.h3.size() == 6);
  CHECK(lp.h2(1) == doctest::Approx(linear_predictor(params, VectorXd(d.x2.row(1)))));

  const SampleCounts c{20, 80, 1000};
  CHECK(tilde_alpha(c, 0.8) == doctest::Approx(0.8));  // (80 + 800) / 1100
  CHECK(tilde_alpha(c, 0.0) == doctest::Approx(80.0 / 1100.0));
  CHECK(tilde_alpha(c, 1.0) == doctest::Approx(1080.0 / 1100.0));
}

TEST_CASE("kappa: flat at beta = 0, analytic gradients match finite differences") {
  const SemiDataset d = random_dataset(11, 15, 20, 25, 2, 1.2);

  SUBCASE("beta = 0 collapses kappa to -log N") {
    ModelParams params;
    params.beta1 = VectorXd::Zero(2);
    for (double rho : {0.2, 0.5, 0.9}) {
      params.rho = rho;
      for (double a : {0.1, 0.6})
        CHECK(kappa(d, params, a).value == doctest::Approx(-std::log(60.0)).epsilon(1e-14));
    }
  }
  SUBCASE("gradient in rho, beta, alpha") {
    for (int rep = 0; rep < 20; ++rep) {
      const ModelParams params = random_params(100 + rep, 2);
      const double alpha = 0.2 + 0.06 * (rep % 10);
      const ObjectiveValue ov = kappa(d, params, alpha);

      const double fd_rho = (kappa(d, [&] { auto q = params; q.rho += 1e-5; return q; }(), alpha).value -
                             kappa(d, [&] { auto q = params; q.rho -= 1e-5; return q; }(), alpha).value) /
                            2e-5;
      CHECK(ov.grad_rho == doctest::Approx(fd_rho).epsilon(1e-6));

      const double fd_alpha =
          (kappa(d, params, alpha + 1e-5).value - kappa(d, params, alpha - 1e-5).value) / 2e-5;
      CHECK(ov.grad_alpha == doctest::Approx(fd_alpha).epsilon(1e-6));

      const VectorXd fd_beta = fd_gradient(
          [&](const VectorXd& b) {
            ModelParams q = params;
            q.beta0 = b(0);
            q.beta1 = b.tail(2);
            return kappa(d, q, alpha).value;
          },
          [&] {
            VectorXd b(3);
            b << params.beta0, params.beta1(0), params.beta1(1);
            return b;
          }());
      CHECK(testutil::rel_gap(ov.grad_beta, fd_beta) < 1e-6);
    }
  }
  SUBCASE("convex in alpha, concave in rho") {
    const ModelParams params = random_params(7, 2);
    auto at_alpha = [&](double a) { return kappa(d, params, a).value; };
    auto at_rho = [&](double r) {
      ModelParams q = params;
      q.rho = r;
      return kappa(d, q, 0.45).value;
    };
    const double step = 0.0098;
    for (int i = 1; i < 99; ++i) {
      const double t = 0.01 + step * i;
      CHECK(at_alpha(t + step) - 2.0 * at_alpha(t) + at_alpha(t - step) >= -1e-10);
      CHECK(at_rho(t + step) - 2.0 * at_rho(t) + at_rho(t - step) <= 1e-10);
    }
  }
}

TEST_CASE("alpha-hat: stationary condition, closed cases, grid minimum") {
  SUBCASE("two points with h = +-log 3 give alpha-hat = 1/2") {
    SemiDataset d;
    d.x1.resize(1, 1);
    d.x1 << std::log(3.0);
    d.x2.resize(1, 1);
    d.x2 << -std::log(3.0);
    d.x3.resize(0, 1);
    ModelParams params;
    params.beta0 = 0.0;
    params.beta1 = VectorXd::Ones(1);
    AlphaSolveInfo info;
    const double ah = solve_alpha_hat(d, params, &info);
    CHECK(ah == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(info.residual < 1e-12);
    CHECK_FALSE(info.at_boundary);
  }
  SUBCASE("all linear predictors zero: tie broken at n2/n") {
    SemiDataset d;
    d.x1 = MatrixXd::Zero(3, 1);
    d.x2 = MatrixXd::Zero(7, 1);
    d.x3 = MatrixXd::Zero(4, 1);
    ModelParams params;
    params.beta1 = VectorXd::Zero(1);
    CHECK(solve_alpha_hat(d, params) == doctest::Approx(0.7));
  }
  SUBCASE("one-sided predictors land on a flagged boundary") {
    SemiDataset d;
    d.x1 = MatrixXd::Ones(2, 1);
    d.x2 = MatrixXd::Ones(2, 1) * 2.0;
    d.x3.resize(0, 1);
    ModelParams params;
    params.beta0 = 5.0;
    params.beta1 = VectorXd::Ones(1);  // every h >= 6
    AlphaSolveInfo info;
    const double ah = solve_alpha_hat(d, params, &info);
    CHECK(info.at_boundary);
    CHECK(ah == doctest::Approx(1.0).epsilon(1e-9));
    params.beta0 = -9.0;  // every h <= -7
    solve_alpha_hat(d, params, &info);
    CHECK(info.at_boundary);
    CHECK(info.alpha == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("matches a dense grid minimization of kappa over alpha") {
    for (int rep = 0; rep < 3; ++rep) {
      const SemiDataset d = random_dataset(50 + rep, 20, 25, 30, 2, 1.5);
      const ModelParams params = random_params(60 + rep, 2);
      AlphaSolveInfo info;
      const double ah = solve_alpha_hat(d, params, &info);
      CHECK(info.residual < 1e-12);
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= 100000; ++k) {
        const double a = 1e-6 + (1.0 - 2e-6) * k / 100000.0;
        best = std::min(best, kappa(d, params, a).value);
      }
      CHECK(kappa(d, params, ah).value <= best + 1e-12);
      CHECK(kappa(d, params, ah).value == doctest::Approx(best).epsilon(1e-8));
    }
  }
}

TEST_CASE("penalty terms and the profile/direct objectives") {
  const SemiDataset d = random_dataset(21, 15, 25, 40, 2, 1.0);
  const SampleCounts c = d.counts();

  SUBCASE("Beta prior peaks at rho0 and vanishes when gamma pins rho") {
    PenaltyConfig pen{0.0, 3.0, 0.35};
    ModelParams params = random_params(5, 2);
    double best_v = -std::numeric_limits<double>::infinity();
    double best_r = -1.0;
    for (int k = 1; k < 2000; ++k) {
      params.rho = k / 2000.0;
      const double v = penalty_value(params, pen, c);
      if (v > best_v) {
        best_v = v;
        best_r = params.rho;
      }
    }
    CHECK(best_r == doctest::Approx(0.35).epsilon(1e-3));

    pen.gamma = std::numeric_limits<double>::infinity();
    params.rho = 0.9;  // pinned case contributes no Beta term
    CHECK(penalty_value(params, pen, c) == doctest::Approx(0.0));

    pen.gamma = 0.0;
    pen.lambda = 0.25;
    CHECK(penalty_value(params, pen, c) ==
          doctest::Approx(-0.25 * params.beta1.squaredNorm()));
  }
  SUBCASE("profile minorizes direct at any parameter point") {
    const PenaltyConfig pen{0.01, 0.7, 0.4};
    for (int rep = 0; rep < 25; ++rep) {
      const ModelParams params = random_params(300 + rep, 2);
      CHECK(profile_objective(d, params, pen) <= direct_objective(d, params, pen) + 1e-12);
    }
  }
  SUBCASE("profile and direct gradients match finite differences") {
    const PenaltyConfig pen{0.02, 1.3, 0.45};
    for (int rep = 0; rep < 10; ++rep) {
      const ModelParams params = random_params(400 + rep, 2, 0.5);
      for (bool profile : {true, false}) {
        const ObjectiveValue ov = profile ? profile_objective_grad(d, params, pen)
                                          : direct_objective_grad(d, params, pen);
        auto eval = [&](const ModelParams& q) {
          return profile ? profile_objective(d, q, pen) : direct_objective(d, q, pen);
        };
        const double fd_rho = (eval([&] { auto q = params; q.rho += 1e-5; return q; }()) -
                               eval([&] { auto q = params; q.rho -= 1e-5; return q; }())) /
                              2e-5;
        CHECK(ov.grad_rho == doctest::Approx(fd_rho).epsilon(1e-6));
        const VectorXd fd_beta = fd_gradient(
            [&](const VectorXd& b) {
              ModelParams q = params;
              q.beta0 = b(0);
              q.beta1 = b.tail(2);
              return eval(q);
            },
            [&] {
              VectorXd b(3);
              b << params.beta0, params.beta1(0), params.beta1(1);
              return b;
            }());
        CHECK(testutil::rel_gap(ov.grad_beta, fd_beta) < 1e-6);
      }
    }
  }
  SUBCASE("at rho = labeled proportion the direct objective is the labeled likelihood") {
    const PenaltyConfig none{0.0, 0.0, 0.5};
    const LabeledSample lab = to_labeled(SemiDataset{d.x1, d.x2, MatrixXd(0, 2)});
    const ClassifierCoefficients mle = fit_ridge_logistic(lab, 0.0);
    ModelParams params = to_model_params(mle, c);
    params.rho = c.rho_labeled();

    // value identity: kappa + penalty = (1/N) loglik + entropy-of-counts constant
    double loglik = 0.0;
    for (std::int64_t i = 0; i < lab.n(); ++i) {
      const double hc = mle.beta0c + mle.beta1.dot(lab.x.row(i));
      loglik += lab.y(i) * hc - log1pexp(hc);
    }
    const double n1 = static_cast<double>(c.n1), n2 = static_cast<double>(c.n2);
    const double n = n1 + n2, N = static_cast<double>(c.N());
    const double constant =
        (n1 * std::log(n / n1) + n2 * std::log(n / n2)) / N - std::log(N);
    CHECK(direct_objective(d, params, none) ==
          doctest::Approx(loglik / N + constant).epsilon(1e-12));

    // stationarity: the shifted labeled MLE zeroes the beta gradient
    const ObjectiveValue ov = direct_objective_grad(d, params, none);
    CHECK(ov.grad_beta.cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("conditional sample-membership probabilities") {
  const SampleCounts c{10, 30, 60};
  ModelParams params = random_params(17, 2);

  SUBCASE("beta = 0 gives the sample proportions") {
    params.beta0 = 0.0;
    params.beta1.setZero();
    VectorXd x = VectorXd::Ones(2);
    const Eigen::Vector3d pr = slr_probs(c, params, x);
    CHECK(pr(0) == doctest::Approx(0.1));
    CHECK(pr(1) == doctest::Approx(0.3));
    CHECK(pr(2) == doctest::Approx(0.6));
  }
  SUBCASE("nonnegative and normalized over random points") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int rep = 0; rep < 1000; ++rep) {
      const ModelParams q = random_params(1000 + rep, 2, 1.0);
      VectorXd x(2);
      x << gauss(rng), gauss(rng);
      const Eigen::Vector3d pr = slr_probs(c, q, x);
      CHECK(pr.minCoeff() >= 0.0);
      CHECK(pr.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
