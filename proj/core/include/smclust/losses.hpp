#pragma once

#include "smclust/graph.hpp"
#include "smclust/stats.hpp"
#include "smclust/types.hpp"

namespace smclust {

/// Per-term objective values for one step or epoch. The distribution
/// alignment term decomposes as vda = cfa + cma, and
/// total = rec + lambda1 * vda + lambda2 * smc.
struct LossBreakdown {
  double rec = 0.0;
  double cfa = 0.0;
  double cma = 0.0;
  double vda = 0.0;
  double smc = 0.0;
  double total = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tau = 1.0;
};

/// Summed squared Frobenius reconstruction error over all views, with
/// gradients with respect to the reconstructions. No batch averaging happens
/// here; the caller decides the scaling.
struct RecLoss {
  double value = 0.0;
  std::vector<Matrix> grad_xhat;
};
RecLoss loss_rec(const std::vector<Matrix>& x, const std::vector<Matrix>& xhat);

/// Cross-view feature alignment: mean squared deviation of the cross-view
/// correlation diagonal from 1. Gradient is nonzero on the diagonal only.
struct CfaLoss {
  double value = 0.0;
  Matrix grad_c;
};
CfaLoss loss_cfa(const CovMatrix& cross);

/// Correlation-matrix alignment: mean squared Frobenius gap between the two
/// intra-view correlation matrices.
struct CmaLoss {
  double value = 0.0;
  Matrix grad_ca;
  Matrix grad_cb;
};
CmaLoss loss_cma(const CovMatrix& ca, const CovMatrix& cb);

/// View distribution alignment on aligned embedding rows: cfa on the
/// cross-view correlations plus cma on the intra-view correlations, with
/// gradients propagated through the standardization chain to both inputs.
struct VdaLoss {
  double value = 0.0;
  double cfa = 0.0;
  double cma = 0.0;
  Matrix grad_za;
  Matrix grad_zb;
};
VdaLoss loss_vda(const Matrix& za, const Matrix& zb);

/// Variant with either part switched off (used by objective ablations).
VdaLoss loss_vda(const Matrix& za, const Matrix& zb, bool use_cfa, bool use_cma);

/// Graph-guided contrastive loss between two projected views.
///
/// Row i contributes -log(num_i / den_i) where den_i sums exp(s_ij / tau)
/// over every column j (the diagonal included), s being the explicit cosine
/// similarity of the input rows, and num_i sums the stored neighbor weights
/// times exp(s_ik / tau), the aligned diagonal counting with weight 1.
/// Rows with an empty numerator are excluded from the average and counted in
/// `skipped_rows`. Gradients flow to both inputs; the graph weights are
/// treated as constants.
struct SmcLoss {
  double value = 0.0;
  Matrix grad_ha;
  Matrix grad_hb;
  int skipped_rows = 0;
  int included_rows = 0;
};
SmcLoss loss_smc(const Matrix& ha, const Matrix& hb, const SemanticGraph& omega,
                 const Mask& aligned, double tau);

/// Combines per-term values into a LossBreakdown, enforcing
/// vda = cfa + cma and total = rec + lambda1 * vda + lambda2 * smc.
/// Throws config_error on negative weights, numeric_error on non-finite parts.
LossBreakdown loss_total(double rec, double cfa, double cma, double smc, double lambda1,
                         double lambda2, double tau);

}  // namespace smclust
