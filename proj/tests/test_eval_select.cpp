#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "slr/eval_select.hpp"
#include "test_support.hpp"

using namespace slr;
using testutil::random_dataset;

TEST_CASE("method names") {
  for (MethodId m : {MethodId::pslr, MethodId::dslr, MethodId::rlr, MethodId::er, MethodId::cem})
    CHECK(parse_method(method_name(m)) == m);
  CHECK(parse_method("rlr") == MethodId::rlr);
  CHECK_THROWS_AS(parse_method("svm"), std::invalid_argument);
}

TEST_CASE("scores and classification metrics") {
  ModelParams params;
  params.beta0 = 0.5;
  params.beta1.resize(2);
  params.beta1 << 1.0, -2.0;
  VectorXd x(2);
  x << 2.0, 1.0;
  CHECK(predict_score(params, 0.3, x) == doctest::Approx(0.8));

  MatrixXd xs(2, 2);
  xs << 2.0, 1.0, 0.0, 0.0;
  const VectorXd scores = predict_scores(params, 0.3, xs);
  CHECK(scores(0) == doctest::Approx(0.8));
  CHECK(scores(1) == doctest::Approx(0.8 - 2.0 + 2.0 - 0.0).epsilon(1e-12));  // 0.3 + 0.5

  SUBCASE("accuracy thresholds at zero, class 1 on ties") {
    VectorXd s(3), y(3);
    s << 1.0, -1.0, 0.5;
    y << 0.0, 1.0, 1.0;
    CHECK(accuracy(s, y) == doctest::Approx(1.0 / 3.0));
    s << 0.0, 0.0, 0.0;
    y << 1.0, 1.0, 0.0;
    CHECK(accuracy(s, y) == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("auc: perfect, reversed, tied, and a 3/4 case") {
    VectorXd s(4), y(4);
    y << 0.0, 1.0, 0.0, 1.0;
    s << 1.0, 2.0, 3.0, 4.0;
    CHECK(auc(s, y) == doctest::Approx(0.75));
    s << -1.0, 5.0, -2.0, 7.0;
    CHECK(auc(s, y) == doctest::Approx(1.0));
    s << 5.0, -1.0, 7.0, -2.0;
    CHECK(auc(s, y) == doctest::Approx(0.0));
    s.setConstant(2.5);
    CHECK(auc(s, y) == doctest::Approx(0.5));
    y.setZero();
    CHECK_THROWS_AS(auc(s, y), std::invalid_argument);
  }
  SUBCASE("auc is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    VectorXd s(40), y(40);
    for (int i = 0; i < 40; ++i) {
      s(i) = gauss(rng);
      y(i) = i % 2;
    }
    const double base = auc(s, y);
    CHECK(auc(VectorXd(2.0 * s.array() + 3.0), y) == doctest::Approx(base).epsilon(1e-15));
    CHECK(auc(VectorXd(s.array().atan()), y) == doctest::Approx(base).epsilon(1e-15));
  }
  SUBCASE("binomial deviance") {
    VectorXd s = VectorXd::Zero(5);
    VectorXd y(5);
    y << 0, 1, 1, 0, 1;
    CHECK(binomial_deviance(s, y) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
    s.setConstant(40.0);
    y.setOnes();
    CHECK(binomial_deviance(s, y) == doctest::Approx(0.0));
    s.setConstant(-1e9);  // clamped at p = 1e-12
    CHECK(binomial_deviance(s, y) == doctest::Approx(-2.0 * std::log(1e-12)).epsilon(1e-10));
  }
}

TEST_CASE("stratified folds") {
  const auto [f0, f1] = stratified_folds(13, 17, 5, 77);
  REQUIRE(f0.size() == 13);
  REQUIRE(f1.size() == 17);
  for (const auto& ids : {f0, f1}) {
    std::vector<int> count(5, 0);
    for (int f : ids) {
      REQUIRE(f >= 0);
      REQUIRE(f < 5);
      ++count[f];
    }
    const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
    CHECK(*hi - *lo <= 1);
    CHECK(*lo >= 2);
  }
  const auto again = stratified_folds(13, 17, 5, 77);
  CHECK(again.first == f0);
  CHECK(again.second == f1);
  const auto other = stratified_folds(13, 17, 5, 78);
  CHECK(other.first != f0);

  CHECK_THROWS_AS(stratified_folds(3, 10, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(stratified_folds(10, 10, 1, 1), std::invalid_argument);
}

TEST_CASE("tie rules in cell selection") {
  auto cell = [](double lambda, double gamma, double lambda_e, double loss) {
    CvCellResult c;
    c.lambda = lambda;
    c.gamma = gamma;
    c.lambda_e = lambda_e;
    c.mean_loss = loss;
    return c;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();

  SUBCASE("plain ridge keeps the smaller lambda") {
    std::vector<CvCellResult> cells = {cell(0.1, nan, nan, 1.0), cell(0.2, nan, nan, 1.0),
                                       cell(0.3, nan, nan, 2.0)};
    std::vector<int> ties;
    std::string rule;
    CHECK(select_cell(cells, MethodId::rlr, &ties, &rule) == 0);
    CHECK(ties == std::vector<int>{0, 1});
    CHECK_FALSE(rule.empty());
  }
  SUBCASE("entropy regularization prefers smaller lambda, then larger lambda_e") {
    std::vector<CvCellResult> cells = {cell(0.1, nan, 0.2, 1.0), cell(0.1, nan, 0.8, 1.0),
                                       cell(0.3, nan, 0.9, 1.0)};
    CHECK(select_cell(cells, MethodId::er) == 1);
  }
  SUBCASE("tilt-mixture methods prefer smaller lambda, then larger gamma") {
    std::vector<CvCellResult> cells = {cell(0.1, 0.5, nan, 1.0), cell(0.1, 2.0, nan, 1.0),
                                       cell(0.2, 5.0, nan, 1.0)};
    CHECK(select_cell(cells, MethodId::dslr) == 1);
    cells[1].mean_loss = 1.5;
    CHECK(select_cell(cells, MethodId::dslr) == 0);
  }
  SUBCASE("failed cells with infinite loss are never picked") {
    std::vector<CvCellResult> cells = {
        cell(0.01, nan, nan, std::numeric_limits<double>::infinity()),
        cell(0.1, nan, nan, 3.0)};
    cells[0].failures = 5;
    CHECK(select_cell(cells, MethodId::rlr) == 1);
  }
}

TEST_CASE("default grids") {
  const CvGrid uci = default_grids(MethodId::rlr, DatasetKind::uci);
  REQUIRE(uci.lambdas.size() == 8);
  CHECK(uci.folds == 5);
  CHECK(uci.gammas.empty());
  CHECK(uci.lambda_es.empty());
  for (int k = 0; k < 8; ++k)
    CHECK(uci.lambdas[k] == doctest::Approx(std::pow(10.0, -5.0 + 4.0 * k / 7.0)).epsilon(1e-12));

  const CvGrid ssl = default_grids(MethodId::dslr, DatasetKind::ssl);
  REQUIRE(ssl.lambdas.size() == 8);
  REQUIRE(ssl.gammas.size() == 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(ssl.lambdas[k] == doctest::Approx(std::pow(10.0, -4.0 + 4.0 * k / 7.0)).epsilon(1e-12));
    CHECK(ssl.gammas[k] == doctest::Approx(std::pow(10.0, -2.0 + 4.0 * k / 7.0)).epsilon(1e-12));
  }

  const CvGrid er = default_grids(MethodId::er, DatasetKind::uci);
  REQUIRE(er.lambda_es.size() == 8);
  CHECK(er.gammas.empty());
  for (int k = 0; k < 8; ++k) CHECK(er.lambda_es[k] == doctest::Approx(k / 7.0).epsilon(1e-12));

  CvGrid bad = uci;
  bad.folds = 1;
  CHECK_THROWS_AS(bad.validate(MethodId::rlr), std::invalid_argument);
  bad = uci;
  std::reverse(bad.lambdas.begin(), bad.lambdas.end());
  CHECK_THROWS_AS(bad.validate(MethodId::rlr), std::invalid_argument);
  bad = uci;
  CHECK_THROWS_AS(bad.validate(MethodId::er), std::invalid_argument);  // no lambda_e grid
  bad.lambdas.clear();
  CHECK_THROWS_AS(bad.validate(MethodId::rlr), std::invalid_argument);
}

TEST_CASE("cross-validation") {
  SUBCASE("all-zero features tie every cell; the smallest lambda wins") {
    SemiDataset d;
    d.x1 = MatrixXd::Zero(12, 2);
    d.x2 = MatrixXd::Zero(18, 2);
    d.x3 = MatrixXd::Zero(10, 2);
    const CvGrid grid = default_grids(MethodId::rlr, DatasetKind::uci);
    const CvReport rep = cross_validate(d, MethodId::rlr, grid, 11);
    REQUIRE(rep.cells.size() == 8);
    CHECK(rep.tie_set.size() == 8);
    CHECK(rep.selected == 0);
    CHECK(rep.cells[0].lambda == doctest::Approx(1e-5));
    for (const auto& c : rep.cells) {
      REQUIRE(c.fold_losses.size() == 5);
      double mean = 0.0;
      for (double l : c.fold_losses) mean += l;
      CHECK(c.mean_loss == doctest::Approx(mean / 5.0).epsilon(1e-14));
      CHECK(c.failures == 0);
    }
  }
  SUBCASE("tilt-mixture grid scan runs and reports finite losses") {
    const SemiDataset d = random_dataset(201, 15, 20, 30, 2, 1.2);
    CvGrid grid;
    grid.lambdas = {0.01, 0.1};
    grid.gammas = {0.1, 1.0};
    const CvReport rep = cross_validate(d, MethodId::pslr, grid, 21);
    REQUIRE(rep.cells.size() == 4);
    CHECK(rep.selected >= 0);
    CHECK(rep.selected < 4);
    // lambda-major cell order
    CHECK(rep.cells[0].lambda == doctest::Approx(0.01));
    CHECK(rep.cells[0].gamma == doctest::Approx(0.1));
    CHECK(rep.cells[1].lambda == doctest::Approx(0.01));
    CHECK(rep.cells[1].gamma == doctest::Approx(1.0));
    CHECK(rep.cells[2].lambda == doctest::Approx(0.1));
    for (const auto& c : rep.cells)
      for (double l : c.fold_losses) CHECK(std::isfinite(l));
  }
  SUBCASE("deterministic given the seed") {
    const SemiDataset d = random_dataset(203, 14, 16, 20, 2, 1.0);
    CvGrid grid;
    grid.lambdas = {0.05, 0.5};
    const CvReport a = cross_validate(d, MethodId::rlr, grid, 31);
    const CvReport b = cross_validate(d, MethodId::rlr, grid, 31);
    CHECK(cv_report_json(a) == cv_report_json(b));
    const CvReport c = cross_validate(d, MethodId::rlr, grid, 32);
    bool same = true;
    for (std::size_t i = 0; i < a.cells.size(); ++i)
      same = same && a.cells[i].mean_loss == c.cells[i].mean_loss;
    CHECK_FALSE(same);
  }
}

TEST_CASE("uniform fitting surface") {
  const SemiDataset d = random_dataset(301, 20, 30, 40, 2, 1.1);
  const double rho_l = d.counts().rho_labeled();

  const MethodFit rlr = fit_method(d, MethodId::rlr, 0.05, 0.0, 0.0, rho_l, 1);
  const MethodFit pslr = fit_method(d, MethodId::pslr, 0.05, 0.5, 0.0, rho_l, 1);
  const MethodFit dslr = fit_method(d, MethodId::dslr, 0.05, 0.5, 0.0, rho_l, 1);
  const MethodFit er = fit_method(d, MethodId::er, 0.05, 0.0, 0.3, rho_l, 1);
  const MethodFit cem = fit_method(d, MethodId::cem, 0.0, 0.0, 0.0, rho_l, 1);

  for (const MethodFit* f : {&rlr, &pslr, &dslr, &er, &cem}) {
    CHECK(f->converged);
    CHECK(std::isfinite(f->params.beta0));
    CHECK(f->params.beta1.allFinite());
  }
  // labeled-only methods report the tilt intercept: rlr differs from its own
  // classifier intercept by the labeled log odds, and matches cem's scale
  const MethodFit rlr2 = fit_method(d, MethodId::rlr, 0.05, 0.0, 0.0, rho_l, 99);
  CHECK(rlr.params.beta0 == doctest::Approx(rlr2.params.beta0));  // seed-free
  CHECK(pslr.params.rho > 0.0);
  CHECK(pslr.params.rho < 1.0);
}
