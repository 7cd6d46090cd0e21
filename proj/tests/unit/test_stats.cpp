#include "doctest.h"

#include "smclust/stats.hpp"

#include <cmath>
#include <random>

using namespace smclust;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

// Central finite difference of a scalar function of one matrix argument.
template <typename Fn>
Matrix finite_diff(const Matrix& at, Fn fn, double h = 1e-6) {
  Matrix g = Matrix::Zero(at.rows(), at.cols());
  Matrix x = at;
  for (Eigen::Index i = 0; i < at.rows(); ++i) {
    for (Eigen::Index j = 0; j < at.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + h;
      const double up = fn(x);
      x(i, j) = orig - h;
      const double down = fn(x);
      x(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

double max_rel_err(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), 1e-8});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  return worst;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("standardize_row zeroes a constant vector") {
  Vector v(3);
  v << 1.0, 1.0, 1.0;
  const Vector out = standardize_row(v);
  CHECK(out.isZero(0.0));
}

TEST_CASE("standardize_row on a two-point spread") {
  Vector v(2);
  v << 0.0, 2.0;
  const Vector out = standardize_row(v);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(out(0) == doctest::Approx(-r).epsilon(1e-12));
  CHECK(out(1) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("standardize_row output has zero mean and unit sample deviation") {
  const Matrix m = random_matrix(1, 9, 11);
  const Vector out = standardize_row(m.row(0).transpose());
  CHECK(std::abs(out.mean()) <= 1e-12);
  const double var = (out.array() - out.mean()).square().sum() / (out.size() - 1);
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("standardize_row rejects vectors shorter than two") {
  Vector v(1);
  v << 3.0;
  CHECK_THROWS_AS((void)standardize_row(v), data_error);
}

TEST_CASE("pearson self-correlation is one") {
  const Matrix m = random_matrix(1, 8, 21);
  const Vector v = m.row(0).transpose();
  CHECK(pearson(v, v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pearson detects perfect anti-correlation") {
  Vector x(3), y(3);
  x << 1.0, 2.0, 3.0;
  y << 3.0, 2.0, 1.0;
  CHECK(pearson(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson hand value for basis-like vectors") {
  Vector x(3), y(3);
  x << 1.0, 0.0, 0.0;
  y << 0.0, 1.0, 0.0;
  CHECK(pearson(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("pearson of a degenerate vector is zero") {
  Vector x(3), y(3);
  x << 5.0, 5.0, 5.0;
  y << 0.0, 1.0, 2.0;
  CHECK(pearson(x, y) == 0.0);
}

TEST_CASE("pearson rejects mismatched lengths") {
  Vector x(3), y(4);
  x.setZero();
  y.setZero();
  CHECK_THROWS_AS((void)pearson(x, y), data_error);
}

TEST_CASE("pearson is invariant to positive scale and shift") {
  const Matrix m = random_matrix(2, 10, 31);
  const Vector u = m.row(0).transpose();
  const Vector v = m.row(1).transpose();
  const Vector w = 2.5 * u.array() + 3.0;
  CHECK(pearson(w, v) == doctest::Approx(pearson(u, v)).epsilon(1e-9));
}

TEST_CASE("cross_cov diagonal is one against itself and minus one against negation") {
  const Matrix z = random_matrix(5, 7, 41);
  const CovMatrix same = cross_cov(z, z);
  const CovMatrix flipped = cross_cov(z, (-z).eval());
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(same.values(i, i) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(flipped.values(i, i) == doctest::Approx(-1.0).epsilon(1e-9));
  }
}

TEST_CASE("cross_cov matches pairwise pearson entries") {
  const Matrix za = random_matrix(3, 6, 51);
  const Matrix zb = random_matrix(3, 6, 52);
  const CovMatrix c = cross_cov(za, zb);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double expected = pearson(za.row(i).transpose(), zb.row(j).transpose());
      CHECK(std::abs(c.values(i, j) - expected) <= 1e-12);
    }
}

TEST_CASE("cross_cov entries stay within the correlation bound") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix za = random_matrix(10, 6, 100 + s);
    const Matrix zb = random_matrix(10, 6, 200 + s);
    const CovMatrix c = cross_cov(za, zb);
    CHECK(c.values.maxCoeff() <= 1.0 + 1e-9);
    CHECK(c.values.minCoeff() >= -1.0 - 1e-9);
  }
}

TEST_CASE("cross_cov rejects mismatched feature widths") {
  const Matrix za = random_matrix(3, 6, 61);
  const Matrix zb = random_matrix(3, 5, 62);
  CHECK_THROWS_AS((void)cross_cov(za, zb), data_error);
}

TEST_CASE("intra_cov of a single row is the 1x1 identity") {
  const Matrix z = random_matrix(1, 5, 71);
  const CovMatrix c = intra_cov(z);
  REQUIRE(c.values.rows() == 1);
  CHECK(c.values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("intra_cov is symmetric and equals cross_cov with itself") {
  const Matrix z = random_matrix(6, 8, 81);
  const CovMatrix c = intra_cov(z);
  CHECK((c.values - c.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  const CovMatrix c2 = cross_cov(z, z);
  CHECK((c.values - c2.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.kind == CovMatrix::Kind::intra_view);
}

TEST_CASE("adaptive_threshold with zero spread returns the mean") {
  Vector diag(3);
  diag << 1.0, 1.0, 1.0;
  CHECK(adaptive_threshold_from_diag(diag) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adaptive_threshold hand value mean minus sample deviation") {
  Vector diag(3);
  diag << 0.6, 0.8, 1.0;
  CHECK(adaptive_threshold_from_diag(diag) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("adaptive_threshold clamps negative results to zero") {
  Vector diag(2);
  diag << -0.5, -0.5;
  CHECK(adaptive_threshold_from_diag(diag) == 0.0);
}

TEST_CASE("adaptive_threshold treats a single entry as zero spread") {
  Vector diag(1);
  diag << 0.4;
  CHECK(adaptive_threshold_from_diag(diag) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("adaptive_threshold ignores diagonal ordering") {
  Vector a(4), b(4);
  a << 0.2, 0.9, 0.5, 0.7;
  b << 0.7, 0.5, 0.9, 0.2;
  CHECK(adaptive_threshold_from_diag(a) == doctest::Approx(adaptive_threshold_from_diag(b)).epsilon(1e-15));
}

TEST_CASE("adaptive_threshold rejects an empty matrix") {
  CovMatrix c;
  c.values = Matrix(0, 0);
  CHECK_THROWS_AS((void)adaptive_threshold(c), data_error);
}

TEST_CASE("standardize_rows backward matches finite differences") {
  const Matrix z = random_matrix(4, 6, 91);
  const Matrix r = random_matrix(4, 6, 92);
  const auto value = [&](const Matrix& x) {
    return (standardize_rows(x).u.array() * r.array()).sum();
  };
  const auto cache = standardize_rows(z);
  const Matrix analytic = standardize_rows_backward(cache, r);
  const Matrix numeric = finite_diff(z, value);
  CHECK(max_rel_err(analytic, numeric) <= 1e-6);
}

TEST_CASE("cross_cov backward matches finite differences") {
  const Matrix za = random_matrix(4, 5, 93);
  const Matrix zb = random_matrix(4, 5, 94);
  const Matrix r = random_matrix(4, 4, 95);
  const auto value_a = [&](const Matrix& x) {
    return (cross_cov(x, zb).values.array() * r.array()).sum();
  };
  const auto value_b = [&](const Matrix& x) {
    return (cross_cov(za, x).values.array() * r.array()).sum();
  };
  const auto ca = standardize_rows(za);
  const auto cb = standardize_rows(zb);
  const auto [ga, gb] = cross_cov_backward(ca, cb, r);
  CHECK(max_rel_err(ga, finite_diff(za, value_a)) <= 1e-4);
  CHECK(max_rel_err(gb, finite_diff(zb, value_b)) <= 1e-4);
}

TEST_CASE("intra_cov backward matches finite differences") {
  const Matrix z = random_matrix(4, 5, 96);
  const Matrix r = random_matrix(4, 4, 97);
  const auto value = [&](const Matrix& x) {
    return (intra_cov(x).values.array() * r.array()).sum();
  };
  const auto cache = standardize_rows(z);
  const Matrix analytic = intra_cov_backward(cache, r);
  CHECK(max_rel_err(analytic, finite_diff(z, value)) <= 1e-4);
}

}  // TEST_SUITE
