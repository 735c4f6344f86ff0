#include "slr/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace slr {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

void LabeledSample::validate() const {
  require(x.rows() == y.size(), "LabeledSample: row/label count mismatch");
  require(x.rows() >= 1, "LabeledSample: needs at least one row");
  require(all_finite(x), "LabeledSample: non-finite feature");
  for (std::int64_t i = 0; i < y.size(); ++i)
    require(y[i] == 0.0 || y[i] == 1.0, "LabeledSample: label must be 0 or 1");
}

void SemiDataset::validate() const {
  require(x1.rows() >= 1 && x2.rows() >= 1,
          "SemiDataset: both labeled classes must be represented");
  const auto p = x1.cols();
  require(x2.cols() == p && (x3.rows() == 0 || x3.cols() == p),
          "SemiDataset: inconsistent feature dimension");
  require(all_finite(x1) && all_finite(x2) && all_finite(x3),
          "SemiDataset: non-finite feature");
}

void ModelParams::validate() const {
  require(std::isfinite(rho) && rho >= kUnitEps && rho <= 1.0 - kUnitEps,
          "ModelParams: rho outside the clamped unit interval");
  require(std::isfinite(beta0) && beta1.allFinite(),
          "ModelParams: non-finite coefficient");
}

double PenaltyConfig::tau1(const SampleCounts& c) const {
  return gamma * (1.0 - rho0) * static_cast<double>(c.n3) / static_cast<double>(c.N());
}

double PenaltyConfig::tau2(const SampleCounts& c) const {
  return gamma * rho0 * static_cast<double>(c.n3) / static_cast<double>(c.N());
}

void PenaltyConfig::validate() const {
  require(lambda >= 0.0 && std::isfinite(lambda), "PenaltyConfig: lambda must be finite and >= 0");
  require(gamma >= 0.0, "PenaltyConfig: gamma must be >= 0");  // +inf allowed
  require(std::isfinite(rho0) && rho0 > 0.0 && rho0 < 1.0,
          "PenaltyConfig: rho0 must lie in (0,1)");
}

void Responsibilities::validate() const {
  for (std::int64_t i = 0; i < u1.size(); ++i)
    require(u1[i] == 0.0, "Responsibilities: u1 must be identically 0");
  for (std::int64_t i = 0; i < u2.size(); ++i)
    require(u2[i] == 1.0, "Responsibilities: u2 must be identically 1");
  for (std::int64_t i = 0; i < u3.size(); ++i)
    require(u3[i] >= 0.0 && u3[i] <= 1.0, "Responsibilities: u3 outside [0,1]");
}

MatrixXd Standardizer::transform(const MatrixXd& x) const {
  require(x.cols() == mean.size(), "Standardizer: dimension mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

MatrixXd Standardizer::inverse_transform(const MatrixXd& x) const {
  require(x.cols() == mean.size(), "Standardizer: dimension mismatch");
  return (x.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
         mean.transpose();
}

SemiDataset Standardizer::transform(const SemiDataset& data) const {
  SemiDataset out;
  out.x1 = transform(data.x1);
  out.x2 = transform(data.x2);
  out.x3 = data.x3.rows() > 0 ? transform(data.x3) : data.x3;
  return out;
}

LabeledSample Standardizer::transform(const LabeledSample& data) const {
  return LabeledSample{transform(data.x), data.y};
}

Standardizer fit_standardizer(const SemiDataset& data) {
  data.validate();
  const auto c = data.counts();
  const double N = static_cast<double>(c.N());
  const auto p = data.dim();

  VectorXd mean = VectorXd::Zero(p);
  mean += data.x1.colwise().sum();
  mean += data.x2.colwise().sum();
  if (c.n3 > 0) mean += data.x3.colwise().sum();
  mean /= N;

  VectorXd ss = VectorXd::Zero(p);
  auto acc = [&](const MatrixXd& x) {
    if (x.rows() == 0) return;
    ss += (x.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  };
  acc(data.x1);
  acc(data.x2);
  acc(data.x3);

  VectorXd scale(p);
  for (std::int64_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(ss[j] / N);  // population 1/N variance
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return Standardizer{mean, scale};
}

SemiDataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  require(in.good(), "load_csv: cannot open " + path);

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "load_csv: empty file " + path);
  const auto header = split_line(line);
  std::int64_t label_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_idx = static_cast<std::int64_t>(j);
  require(label_idx >= 0, "load_csv: label column '" + label_column + "' not found");
  const auto ncol = static_cast<std::int64_t>(header.size());
  require(ncol >= 2, "load_csv: need at least one feature column");

  std::vector<std::vector<double>> rows[3];  // by label 0 / 1 / missing
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    require(static_cast<std::int64_t>(cells.size()) == ncol,
            "load_csv: row " + std::to_string(lineno) + " has " +
                std::to_string(cells.size()) + " cells, expected " + std::to_string(ncol));
    int bucket;
    const auto& lab = cells[static_cast<std::size_t>(label_idx)];
    if (lab.empty() || lab == "NA") {
      bucket = 2;
    } else {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(lab, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      require(pos == lab.size() && (v == 0.0 || v == 1.0),
              "load_csv: invalid label '" + lab + "' at row " + std::to_string(lineno));
      bucket = v == 1.0 ? 1 : 0;
    }
    std::vector<double> feats;
    feats.reserve(static_cast<std::size_t>(ncol - 1));
    for (std::int64_t j = 0; j < ncol; ++j) {
      if (j == label_idx) continue;
      const auto& cell = cells[static_cast<std::size_t>(j)];
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      require(pos == cell.size() && std::isfinite(v),
              "load_csv: non-numeric cell '" + cell + "' at row " + std::to_string(lineno));
      feats.push_back(v);
    }
    rows[bucket].push_back(std::move(feats));
  }

  auto to_matrix = [&](const std::vector<std::vector<double>>& r) {
    MatrixXd m(static_cast<std::int64_t>(r.size()), ncol - 1);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::int64_t j = 0; j < ncol - 1; ++j)
        m(static_cast<std::int64_t>(i), j) = r[i][static_cast<std::size_t>(j)];
    return m;
  };

  SemiDataset out{to_matrix(rows[0]), to_matrix(rows[1]), to_matrix(rows[2])};
  out.validate();
  return out;
}

LabeledSample to_labeled(const SemiDataset& data) {
  require(data.x3.rows() == 0, "to_labeled: dataset has unlabeled rows");
  LabeledSample out;
  out.x.resize(data.x1.rows() + data.x2.rows(), data.dim());
  out.x << data.x1, data.x2;
  out.y.resize(out.x.rows());
  out.y.head(data.x1.rows()).setZero();
  out.y.tail(data.x2.rows()).setOnes();
  return out;
}

SplitResult split_train_test(const LabeledSample& source, SplitScheme scheme,
                             std::int64_t labeled_size, std::uint64_t seed) {
  source.validate();
  require(labeled_size >= 2, "split_train_test: labeled_size must be >= 2");

  std::vector<std::int64_t> idx0, idx1;
  for (std::int64_t i = 0; i < source.n(); ++i)
    (source.y[i] == 1.0 ? idx1 : idx0).push_back(i);
  require(!idx0.empty() && !idx1.empty(),
          "split_train_test: source must contain both classes");

  std::mt19937_64 rng(seed);
  std::shuffle(idx0.begin(), idx0.end(), rng);
  std::shuffle(idx1.begin(), idx1.end(), rng);

  // Per-class 2/3 pool sizes; largest remainder keeps the total at
  // round(2/3 * rows).
  const double want0 = 2.0 * static_cast<double>(idx0.size()) / 3.0;
  const double want1 = 2.0 * static_cast<double>(idx1.size()) / 3.0;
  const auto total = static_cast<std::int64_t>(std::llround(
      2.0 * static_cast<double>(source.n()) / 3.0));
  std::int64_t pool0 = static_cast<std::int64_t>(std::floor(want0));
  std::int64_t pool1 = static_cast<std::int64_t>(std::floor(want1));
  while (pool0 + pool1 < total) {
    if (want0 - static_cast<double>(pool0) >= want1 - static_cast<double>(pool1) &&
        pool0 < static_cast<std::int64_t>(idx0.size()))
      ++pool0;
    else
      ++pool1;
  }
  require(pool0 >= 1 && pool1 >= 1 &&
              pool0 < static_cast<std::int64_t>(idx0.size()) &&
              pool1 < static_cast<std::int64_t>(idx1.size()),
          "split_train_test: a class is too small to populate pool and test");

  const double src_odds = static_cast<double>(idx1.size()) / static_cast<double>(idx0.size());
  double lab_odds = src_odds;
  if (scheme == SplitScheme::flip)
    lab_odds = src_odds <= 1.0 ? src_odds * 4.0 : src_odds / 4.0;

  auto lab1 = static_cast<std::int64_t>(
      std::llround(static_cast<double>(labeled_size) * lab_odds / (1.0 + lab_odds)));
  lab1 = std::clamp<std::int64_t>(lab1, 1, labeled_size - 1);
  const auto lab0 = labeled_size - lab1;
  require(lab0 <= pool0 && lab1 <= pool1,
          "split_train_test: requested labeled size exceeds available rows of a class");

  auto take = [&](const std::vector<std::int64_t>& idx, std::int64_t from,
                  std::int64_t count) {
    MatrixXd m(count, source.dim());
    for (std::int64_t i = 0; i < count; ++i)
      m.row(i) = source.x.row(idx[static_cast<std::size_t>(from + i)]);
    return m;
  };

  SplitResult out;
  out.train.x1 = take(idx0, 0, lab0);
  out.train.x2 = take(idx1, 0, lab1);
  out.train.x3.resize((pool0 - lab0) + (pool1 - lab1), source.dim());
  out.train.x3 << take(idx0, lab0, pool0 - lab0), take(idx1, lab1, pool1 - lab1);

  const auto test0 = static_cast<std::int64_t>(idx0.size()) - pool0;
  const auto test1 = static_cast<std::int64_t>(idx1.size()) - pool1;
  out.test.x.resize(test0 + test1, source.dim());
  out.test.x << take(idx0, pool0, test0), take(idx1, pool1, test1);
  out.test.y.resize(test0 + test1);
  out.test.y.head(test0).setZero();
  out.test.y.tail(test1).setOnes();

  out.train.validate();
  out.test.validate();
  return out;
}

}  // namespace slr
