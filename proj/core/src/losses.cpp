#include "smclust/losses.hpp"

#include <cmath>

namespace smclust {

RecLoss loss_rec(const std::vector<Matrix>& x, const std::vector<Matrix>& xhat) {
  if (x.size() != xhat.size()) throw data_error("loss_rec: view count mismatch");
  if (x.empty()) throw data_error("loss_rec: no views");
  RecLoss out;
  out.grad_xhat.reserve(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x[v].rows() != xhat[v].rows() || x[v].cols() != xhat[v].cols())
      throw data_error("loss_rec: shape mismatch in view " + std::to_string(v));
    const Matrix diff = xhat[v] - x[v];
    out.value += diff.squaredNorm();
    out.grad_xhat.push_back(2.0 * diff);
  }
  return out;
}

CfaLoss loss_cfa(const CovMatrix& cross) {
  const auto n = cross.values.rows();
  if (n != cross.values.cols()) throw data_error("loss_cfa: correlation matrix must be square");
  CfaLoss out;
  out.grad_c = Matrix::Zero(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = cross.values(i, i) - 1.0;
    out.value += d * d * inv_n;
    out.grad_c(i, i) = 2.0 * d * inv_n;
  }
  return out;
}

CmaLoss loss_cma(const CovMatrix& ca, const CovMatrix& cb) {
  if (ca.values.rows() != cb.values.rows() || ca.values.cols() != cb.values.cols())
    throw data_error("loss_cma: correlation matrix shape mismatch");
  if (ca.values.rows() != ca.values.cols())
    throw data_error("loss_cma: correlation matrices must be square");
  CmaLoss out;
  const double inv_n = 1.0 / static_cast<double>(ca.values.rows());
  const Matrix diff = ca.values - cb.values;
  out.value = diff.squaredNorm() * inv_n;
  out.grad_ca = 2.0 * inv_n * diff;
  out.grad_cb = -out.grad_ca;
  return out;
}

VdaLoss loss_vda(const Matrix& za, const Matrix& zb) { return loss_vda(za, zb, true, true); }

VdaLoss loss_vda(const Matrix& za, const Matrix& zb, bool use_cfa, bool use_cma) {
  if (za.rows() != zb.rows()) throw data_error("loss_vda: aligned row count mismatch");
  if (za.cols() != zb.cols()) throw data_error("loss_vda: embedding dimension mismatch");
  if (za.rows() < 1) throw data_error("loss_vda: need at least one aligned row");
  if (!use_cfa && !use_cma) throw config_error("loss_vda: at least one part must stay enabled");

  const StandardizedRows sa = standardize_rows(za);
  const StandardizedRows sb = standardize_rows(zb);
  const double dm1 = static_cast<double>(za.cols() - 1);

  VdaLoss out;
  out.grad_za = Matrix::Zero(za.rows(), za.cols());
  out.grad_zb = Matrix::Zero(zb.rows(), zb.cols());

  if (use_cfa) {
    CovMatrix cross;
    cross.kind = CovMatrix::Kind::cross_view;
    cross.values = sa.u * sb.u.transpose() / dm1;
    const CfaLoss cfa = loss_cfa(cross);
    out.cfa = cfa.value;
    auto [ga, gb] = cross_cov_backward(sa, sb, cfa.grad_c);
    out.grad_za += ga;
    out.grad_zb += gb;
  }
  if (use_cma) {
    CovMatrix ca;
    ca.kind = CovMatrix::Kind::intra_view;
    ca.values = sa.u * sa.u.transpose() / dm1;
    CovMatrix cb;
    cb.kind = CovMatrix::Kind::intra_view;
    cb.values = sb.u * sb.u.transpose() / dm1;
    const CmaLoss cma = loss_cma(ca, cb);
    out.cma = cma.value;
    out.grad_za += intra_cov_backward(sa, cma.grad_ca);
    out.grad_zb += intra_cov_backward(sb, cma.grad_cb);
  }
  out.value = out.cfa + out.cma;
  return out;
}

SmcLoss loss_smc(const Matrix& ha, const Matrix& hb, const SemanticGraph& omega,
                 const Mask& aligned, double tau) {
  if (tau <= 0.0) throw config_error("loss_smc: tau must be positive");
  if (ha.rows() != hb.rows()) throw data_error("loss_smc: row count mismatch");
  if (ha.cols() != hb.cols()) throw data_error("loss_smc: feature dimension mismatch");
  const auto n = ha.rows();
  if (omega.n != n) throw data_error("loss_smc: graph size mismatch");
  if (aligned.size() != static_cast<std::size_t>(n)) throw data_error("loss_smc: aligned mask size mismatch");

  Vector inva = Vector::Zero(n);
  Vector invb = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double za = ha.row(i).norm();
    const double zb = hb.row(i).norm();
    if (za >= 1e-12) inva(i) = 1.0 / za;
    if (zb >= 1e-12) invb(i) = 1.0 / zb;
  }

  Matrix s = ha * hb.transpose();
  s = inva.asDiagonal() * s * invb.asDiagonal();

  // Row-wise max shift keeps the exponentials bounded; it cancels in num/den.
  Matrix e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shift = s.row(i).maxCoeff() / tau;
    e.row(i) = ((s.row(i).array() / tau) - shift).exp();
  }

  Vector den = e.rowwise().sum();
  Vector num = Vector::Zero(n);
  std::vector<std::uint8_t> diag_stored(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& [k, w] : omega.rows[static_cast<std::size_t>(i)]) {
      const bool aligned_diag = (k == i) && aligned[static_cast<std::size_t>(i)];
      if (k == i) diag_stored[static_cast<std::size_t>(i)] = 1;
      num(i) += (aligned_diag ? 1.0 : w) * e(i, k);
    }
    if (aligned[static_cast<std::size_t>(i)] && !diag_stored[static_cast<std::size_t>(i)])
      num(i) += e(i, i);
  }

  SmcLoss out;
  int included = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (num(i) == 0.0) {
      ++out.skipped_rows;
      continue;
    }
    ++included;
    out.value += std::log(den(i)) - std::log(num(i));
  }
  out.included_rows = included;
  if (included == 0) {
    out.value = 0.0;
    out.grad_ha = Matrix::Zero(n, ha.cols());
    out.grad_hb = Matrix::Zero(n, ha.cols());
    return out;
  }
  out.value /= static_cast<double>(included);

  const double scale = 1.0 / (static_cast<double>(included) * tau);
  Matrix dS = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (num(i) == 0.0) continue;
    dS.row(i) = e.row(i) / den(i);
    for (const auto& [k, w] : omega.rows[static_cast<std::size_t>(i)]) {
      const bool aligned_diag = (k == i) && aligned[static_cast<std::size_t>(i)];
      dS(i, k) -= (aligned_diag ? 1.0 : w) * e(i, k) / num(i);
    }
    if (aligned[static_cast<std::size_t>(i)] && !diag_stored[static_cast<std::size_t>(i)])
      dS(i, i) -= e(i, i) / num(i);
    dS.row(i) *= scale;
  }

  const Matrix dw = inva.asDiagonal() * dS * invb.asDiagonal();
  const Vector ra = (dS.array() * s.array()).rowwise().sum().matrix().cwiseProduct(
      inva.cwiseProduct(inva));
  const Vector rb = (dS.array() * s.array()).colwise().sum().matrix().transpose().cwiseProduct(
      invb.cwiseProduct(invb));
  out.grad_ha = dw * hb - ra.asDiagonal() * ha;
  out.grad_hb = dw.transpose() * ha - rb.asDiagonal() * hb;
  return out;
}

LossBreakdown loss_total(double rec, double cfa, double cma, double smc, double lambda1,
                         double lambda2, double tau) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw config_error("loss_total: loss weights must be non-negative");
  if (tau <= 0.0) throw config_error("loss_total: tau must be positive");
  LossBreakdown b;
  b.rec = rec;
  b.cfa = cfa;
  b.cma = cma;
  b.vda = cfa + cma;
  b.smc = smc;
  b.lambda1 = lambda1;
  b.lambda2 = lambda2;
  b.tau = tau;
  b.total = rec + lambda1 * b.vda + lambda2 * smc;
  require_finite(b.total, "loss_total");
  return b;
}

}  // namespace smclust
