#pragma once

// Least-squares fitting of PolynomialModel on min-max normalized inputs.

#include <Eigen/Dense>

#include <numeric>

#include "illum/models.hpp"

namespace illum {

struct Dataset {
  std::vector<std::string> input_names, output_names;
  std::vector<std::vector<double>> x, y;

  std::size_t rows() const { return x.size(); }
};

struct FitOptions {
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  bool tight_even_powers = true;
};

struct FitResult {
  PolynomialModel model;
  double train_r2 = 0.0;
  double test_r2 = 0.0;
  std::size_t train_rows = 0, test_rows = 0;
};

/// Mean over outputs of the coefficient of determination. An output with zero
/// variance scores 1 when it is reproduced exactly and 0 otherwise.
inline double r_squared(const LearnedSystem& m, const std::vector<std::vector<double>>& x,
                        const std::vector<std::vector<double>>& y) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t k = y.front().size();
  std::vector<double> mean(k, 0.0), ss_res(k, 0.0), ss_tot(k, 0.0);
  for (const auto& r : y)
    for (std::size_t j = 0; j < k; ++j) mean[j] += r[j];
  for (auto& v : mean) v /= static_cast<double>(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto p = m.evaluate(x[i]);
    for (std::size_t j = 0; j < k; ++j) {
      ss_res[j] += (y[i][j] - p[j]) * (y[i][j] - p[j]);
      ss_tot[j] += (y[i][j] - mean[j]) * (y[i][j] - mean[j]);
    }
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (ss_tot[j] > 0.0) acc += 1.0 - ss_res[j] / ss_tot[j];
    else acc += ss_res[j] <= 1e-20 ? 1.0 : 0.0;
  }
  return acc / static_cast<double>(k);
}

/// Seeded shuffle into train and test rows; test gets floor(n * fraction) rows.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(std::size_t n, double fraction,
                                                                                      std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

inline FitResult fit_polynomial(const Dataset& data, int degree, const FitOptions& opt = {}) {
  if (data.rows() == 0) throw Error("fit_polynomial: empty dataset");
  if (data.x.size() != data.y.size()) throw Error("fit_polynomial: input/output row count mismatch");
  std::size_t d = data.x.front().size(), k = data.y.front().size();
  for (std::size_t i = 0; i < data.rows(); ++i)
    if (data.x[i].size() != d || data.y[i].size() != k) throw Error("fit_polynomial: ragged row " + std::to_string(i));

  auto [train, test] = train_test_split(data.rows(), opt.test_fraction, opt.seed);
  std::size_t nb = monomial_basis(d, degree).size();
  if (train.size() < nb)
    throw Error("fit_polynomial: " + std::to_string(train.size()) + " training rows for " + std::to_string(nb) +
                " basis functions");

  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
  for (auto i : train)
    for (std::size_t v = 0; v < d; ++v) {
      lo[v] = std::min(lo[v], data.x[i][v]);
      hi[v] = std::max(hi[v], data.x[i][v]);
    }
  for (std::size_t v = 0; v < d; ++v)
    if (!(lo[v] < hi[v])) throw Error("fit_polynomial: rank deficiency (input " + std::to_string(v) + " is constant)");

  // Placeholder coefficients give access to the basis/feature map.
  PolynomialModel shape(degree, lo, hi, std::vector<std::vector<double>>(k, std::vector<double>(nb, 0.0)));
  Eigen::MatrixXd X(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(nb));
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < train.size(); ++r) {
    std::vector<double> z(d);
    for (std::size_t v = 0; v < d; ++v) z[v] = shape.normalize(v, data.x[train[r]][v]);
    auto f = shape.features(z);
    for (std::size_t m = 0; m < nb; ++m) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = f[m];
    for (std::size_t j = 0; j < k; ++j) Y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = data.y[train[r]][j];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < nb) throw Error("fit_polynomial: rank deficiency in design matrix");

  Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::MatrixXd rhs = X.transpose() * Y;
  Eigen::MatrixXd beta = gram.ldlt().solve(rhs);
  // One refinement step against the normal-equation residual.
  beta += gram.ldlt().solve(rhs - gram * beta);

  std::vector<std::vector<double>> coef(k, std::vector<double>(nb));
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t m = 0; m < nb; ++m) coef[j][m] = beta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));

  FitResult res{PolynomialModel(degree, lo, hi, std::move(coef), opt.tight_even_powers), 0.0, 0.0, train.size(),
                test.size()};
  auto pick = [&](const std::vector<std::size_t>& rows, const std::vector<std::vector<double>>& src) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (auto i : rows) out.push_back(src[i]);
    return out;
  };
  res.train_r2 = r_squared(res.model, pick(train, data.x), pick(train, data.y));
  res.test_r2 = test.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : r_squared(res.model, pick(test, data.x), pick(test, data.y));
  return res;
}

}  // namespace illum
