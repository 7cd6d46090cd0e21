#include "smclust/stats.hpp"

#include <cmath>

namespace smclust {

namespace {
constexpr double kStdFloor = 1e-12;
}

Vector standardize_row(const Vector& v) {
  const auto d = v.size();
  if (d < 2) throw data_error("standardize_row: need at least 2 features, got " + std::to_string(d));
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(d - 1);
  const double sd = std::sqrt(var);
  if (sd < kStdFloor) return Vector::Zero(d);
  return (v.array() - mean).matrix() / sd;
}

StandardizedRows standardize_rows(const Matrix& z) {
  const auto n = z.rows();
  const auto d = z.cols();
  if (d < 2) throw data_error("standardize_rows: need at least 2 features, got " + std::to_string(d));
  StandardizedRows out;
  out.u.resize(n, d);
  out.inv_std = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = z.row(i).mean();
    const auto centered = (z.row(i).array() - mean).eval();
    const double sd = std::sqrt(centered.square().sum() / static_cast<double>(d - 1));
    if (sd < kStdFloor) {
      out.u.row(i).setZero();
    } else {
      out.inv_std(i) = 1.0 / sd;
      out.u.row(i) = centered.matrix() * out.inv_std(i);
    }
  }
  return out;
}

Matrix standardize_rows_backward(const StandardizedRows& cache, const Matrix& grad_u) {
  if (grad_u.rows() != cache.u.rows() || grad_u.cols() != cache.u.cols())
    throw data_error("standardize_rows_backward: gradient shape mismatch");
  const auto n = cache.u.rows();
  const double dm1 = static_cast<double>(cache.u.cols() - 1);
  Matrix grad_z = Matrix::Zero(n, cache.u.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = cache.inv_std(i);
    if (s == 0.0) continue;
    const auto g = grad_u.row(i);
    const auto u = cache.u.row(i);
    const double gmean = g.mean();
    const double gu = g.dot(u) / dm1;
    grad_z.row(i) = s * (g.array() - gmean - gu * u.array()).matrix();
  }
  return grad_z;
}

double pearson(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw data_error("pearson: length mismatch");
  const Vector su = standardize_row(u);
  const Vector sv = standardize_row(v);
  return su.dot(sv) / static_cast<double>(u.size() - 1);
}

CovMatrix cross_cov(const Matrix& za, const Matrix& zb) {
  if (za.cols() != zb.cols())
    throw data_error("cross_cov: feature dimension mismatch (" + std::to_string(za.cols()) +
                     " vs " + std::to_string(zb.cols()) + ")");
  const StandardizedRows ua = standardize_rows(za);
  const StandardizedRows ub = standardize_rows(zb);
  CovMatrix c;
  c.kind = CovMatrix::Kind::cross_view;
  c.values = ua.u * ub.u.transpose() / static_cast<double>(za.cols() - 1);
  return c;
}

CovMatrix intra_cov(const Matrix& z) {
  CovMatrix c = cross_cov(z, z);
  c.kind = CovMatrix::Kind::intra_view;
  return c;
}

std::pair<Matrix, Matrix> cross_cov_backward(const StandardizedRows& cache_a,
                                             const StandardizedRows& cache_b,
                                             const Matrix& dC) {
  if (dC.rows() != cache_a.u.rows() || dC.cols() != cache_b.u.rows())
    throw data_error("cross_cov_backward: gradient shape mismatch");
  const double dm1 = static_cast<double>(cache_a.u.cols() - 1);
  const Matrix du_a = dC * cache_b.u / dm1;
  const Matrix du_b = dC.transpose() * cache_a.u / dm1;
  return {standardize_rows_backward(cache_a, du_a), standardize_rows_backward(cache_b, du_b)};
}

Matrix intra_cov_backward(const StandardizedRows& cache, const Matrix& dC) {
  auto [ga, gb] = cross_cov_backward(cache, cache, dC);
  return ga + gb;
}

double adaptive_threshold_from_diag(const Vector& diag) {
  const auto n = diag.size();
  if (n == 0) throw data_error("adaptive_threshold: empty diagonal");
  const double mean = diag.mean();
  double sd = 0.0;
  if (n > 1) sd = std::sqrt((diag.array() - mean).square().sum() / static_cast<double>(n - 1));
  return std::max(0.0, mean - sd);
}

double adaptive_threshold(const CovMatrix& c) {
  if (c.values.rows() != c.values.cols())
    throw data_error("adaptive_threshold: covariance matrix must be square");
  return adaptive_threshold_from_diag(c.values.diagonal());
}

}  // namespace smclust
