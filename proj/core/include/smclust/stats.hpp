#pragma once

#include "smclust/types.hpp"

namespace smclust {

/// Normalized covariance between embedding rows. Entry (i, j) is the Pearson
/// correlation between row i of the first input and row j of the second, i.e.
/// the standardized rows' dot product divided by (d - 1).
struct CovMatrix {
  enum class Kind { cross_view, intra_view };
  Matrix values;
  Kind kind = Kind::cross_view;
};

/// Row standardization cache kept for backpropagation. `u` holds the
/// standardized rows; `inv_std` is 1/sigma per row, or 0 where the sample
/// standard deviation fell below 1e-12 (those rows standardize to zero).
struct StandardizedRows {
  Matrix u;
  Vector inv_std;
};

/// Standardizes one row vector to zero mean and unit sample variance
/// (divisor d - 1). Rows with std below 1e-12 map to the zero vector.
/// Throws data_error when fewer than 2 features are present.
Vector standardize_row(const Vector& v);

/// Row-wise standardization with cached inverse deviations for the backward pass.
StandardizedRows standardize_rows(const Matrix& z);

/// Backpropagates through standardize_rows: given dL/du returns dL/dz.
/// Degenerate rows (inv_std == 0) receive zero gradient.
Matrix standardize_rows_backward(const StandardizedRows& cache, const Matrix& grad_u);

/// Pearson correlation of two equal-length vectors (sample std, divisor d - 1).
/// Either vector degenerate (std < 1e-12) yields 0.
double pearson(const Vector& u, const Vector& v);

/// Cross-view normalized covariance: C = standardize(Za) * standardize(Zb)^T / (d - 1).
/// Inputs must share the feature dimension d >= 2; row counts may differ.
CovMatrix cross_cov(const Matrix& za, const Matrix& zb);

/// Intra-view normalized covariance of one embedding matrix against itself.
CovMatrix intra_cov(const Matrix& z);

/// Gradients of the covariance values with respect to both raw inputs.
/// `dC` is dL/dC for the matrix produced from these caches; the standardization
/// chain (mean and deviation) is differentiated in full.
std::pair<Matrix, Matrix> cross_cov_backward(const StandardizedRows& cache_a,
                                             const StandardizedRows& cache_b,
                                             const Matrix& dC);

/// Gradient of intra_cov(z).values with respect to z.
Matrix intra_cov_backward(const StandardizedRows& cache, const Matrix& dC);

/// Adaptive edge threshold: max(0, mean(diag) - sample_std(diag)) over the
/// diagonal of a square covariance matrix. A single diagonal entry has std 0.
double adaptive_threshold(const CovMatrix& c);

/// Same rule applied directly to a vector of diagonal correlations.
double adaptive_threshold_from_diag(const Vector& diag);

}  // namespace smclust
