#include "mfcnn/covariance.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mfcnn/errors.hpp"

namespace mfcnn {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

CovarianceMatrix::CovarianceMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("covariance matrix must be square");
  if (!m.allFinite()) throw NumericOverflowError("covariance matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument("covariance matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  const double norm = m_.norm();
  if (min_eigenvalue(m_) < -1e-10 * norm)
    throw InvalidArgument("covariance matrix is not positive semi-definite");
}

CovarianceMatrix CovarianceMatrix::fixed_point(int n, double q, double c) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, q * c);
  m.diagonal().setConstant(q);
  return CovarianceMatrix(m);
}

VarianceVector::VarianceVector(std::vector<double> v) : v_(std::move(v)) {
  if (v_.empty() || v_.size() % 2 == 0)
    throw InvalidArgument("variance vector needs an odd number of taps");
  double sum = 0.0;
  for (double x : v_) {
    if (!(x >= 0) || !std::isfinite(x)) throw InvalidArgument("variance vector entries must be >= 0");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw InvalidArgument("variance vector must sum to 1");
}

VarianceVector VarianceVector::uniform(int half_width) {
  const int taps = 2 * half_width + 1;
  return normalized(std::vector<double>(taps, 1.0));
}

VarianceVector VarianceVector::one_hot(int half_width) {
  std::vector<double> v(2 * half_width + 1, 0.0);
  v[half_width] = 1.0;
  return VarianceVector(std::move(v));
}

VarianceVector VarianceVector::normalized(std::vector<double> w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(sum > 0)) throw InvalidArgument("variance weights must have positive sum");
  for (auto& x : w) x /= sum;
  return VarianceVector(std::move(w));
}

Eigen::MatrixXd cross_correlate(const VarianceVector& v, const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  const int k = v.half_width();
  if (m.cols() != n) throw DimensionError("cross_correlate needs a square matrix");
  if (n < 2 * k + 1) throw DimensionError("kernel wider than spatial size");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int beta = -k; beta <= k; ++beta) {
    const double w = v.at(beta);
    if (w == 0.0) continue;
    const int s = ((beta % n) + n) % n;
    for (int b = 0; b < n; ++b) {
      const int bb = (b + s) % n;
      for (int a = 0; a < n; ++a) out(a, b) += w * m((a + s) % n, bb);
    }
  }
  return out;
}

CovarianceMatrix cross_correlate(const VarianceVector& v, const CovarianceMatrix& m) {
  return CovarianceMatrix(cross_correlate(v, m.matrix()));
}

Eigen::MatrixXd cmap_matrix_raw(const MeanFieldParams& p, const Eigen::MatrixXd& s,
                                const QuadratureRule& rule) {
  const int n = static_cast<int>(s.rows());
  if (s.cols() != n) throw DimensionError("cmap_matrix needs a square matrix");
  for (int a = 0; a < n; ++a)
    if (!(s(a, a) > 0)) throw InvalidArgument("cmap_matrix needs a positive diagonal");
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a) {
    out(a, a) = cmap_pair(p, s(a, a), s(a, a), 1.0, rule);
    for (int b = a + 1; b < n; ++b) {
      const double c = s(a, b) / std::sqrt(s(a, a) * s(b, b));
      out(a, b) = out(b, a) = cmap_pair(p, s(a, a), s(b, b), c, rule);
    }
  }
  return out;
}

CovarianceMatrix cmap_matrix(const MeanFieldParams& p, const CovarianceMatrix& s,
                             const QuadratureRule& rule) {
  return CovarianceMatrix(cmap_matrix_raw(p, s.matrix(), rule));
}

std::vector<CovarianceMatrix> propagate_covariance(const MeanFieldParams& p,
                                                   const VarianceVector& v,
                                                   const CovarianceMatrix& s0, int depth,
                                                   const QuadratureRule& rule) {
  if (depth < 0) throw InvalidArgument("depth must be nonnegative");
  p.validate();
  if (s0.size() < v.taps()) throw DimensionError("kernel wider than spatial size");
  std::vector<CovarianceMatrix> traj{s0};
  traj.reserve(depth + 1);
  for (int l = 0; l < depth; ++l) {
    const Eigen::MatrixXd next = cross_correlate(v, cmap_matrix_raw(p, traj.back().matrix(), rule));
    if (!next.allFinite()) throw NumericOverflowError("covariance overflow at layer " + std::to_string(l + 1));
    traj.emplace_back(next);
  }
  return traj;
}

DepthScaleSpectrum fourier_eigenvalues(const VarianceVector& v, int n) {
  const int k = v.half_width();
  if (n < 2 * k + 1) throw DimensionError("kernel wider than spatial size");
  DepthScaleSpectrum out;
  out.lambdas.resize(n);
  for (int a = 0; a < n; ++a) {
    std::complex<double> acc = 0.0;
    for (int beta = -k; beta <= k; ++beta) {
      const int ab = ((a * beta) % n + n) % n;  // reduce before the trig call
      const double ang = -2.0 * std::numbers::pi * ab / n;
      acc += v.at(beta) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out.lambdas[a] = acc;
  }
  out.lambdas[0] = 1.0;  // Σ v = 1
  return out;
}

DepthScaleSpectrum depth_scales(const DepthScaleSpectrum& spectrum, double chi) {
  if (!(chi > 0)) throw InvalidArgument("chi must be positive");
  DepthScaleSpectrum out = spectrum;
  out.chi = chi;
  out.xis.resize(spectrum.lambdas.size());
  out.growing.resize(spectrum.lambdas.size());
  for (std::size_t a = 0; a < spectrum.lambdas.size(); ++a) {
    const double r = chi * std::abs(spectrum.lambdas[a]);
    // unit-modulus modes are usually exact (λ_0 = 1, one-hot v); allow rounding
    if (std::fabs(r - 1.0) <= 1e-12) {
      out.xis[a] = std::numeric_limits<double>::infinity();
      out.growing[a] = false;
    } else {
      out.xis[a] = -1.0 / std::log(r);
      out.growing[a] = r > 1.0;
    }
  }
  return out;
}

CmapJacobianRep CmapJacobianRep::at(const CriticalPoint& cp, int n) {
  return {cp.chi_q, cp.chi_c, cp.kappa, n};
}

Eigen::MatrixXd apply_cmap_jacobian(const CmapJacobianRep& rep, const Eigen::MatrixXd& u) {
  const int n = static_cast<int>(u.rows());
  if (u.cols() != n) throw DimensionError("Jacobian acts on square matrices");
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      out(a, b) = a == b ? rep.chi_q * u(a, a) : rep.chi_c * u(a, b) + rep.kappa * (u(a, a) + u(b, b));
  return out;
}

Eigen::MatrixXd diagonal_eigenmatrix(const CmapJacobianRep& rep, int alpha) {
  if (alpha < 0 || alpha >= rep.n) throw InvalidArgument("position out of range");
  const double gap = rep.chi_q - rep.chi_c;
  if (gap == 0.0) throw InvalidArgument("chi_q equals chi_c: diagonal eigenmatrix undefined");
  const double gamma = rep.kappa / gap;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rep.n, rep.n);
  m.row(alpha).setConstant(gamma);
  m.col(alpha).setConstant(gamma);
  m(alpha, alpha) = 1.0;
  return m;
}

std::vector<double> linearized_mode_prediction(const DepthScaleSpectrum& spectrum,
                                               const std::vector<std::complex<double>>& eps0,
                                               int depth) {
  if (depth < 0) throw InvalidArgument("depth must be nonnegative");
  if (eps0.size() != spectrum.lambdas.size()) throw DimensionError("mode count mismatch");
  std::vector<double> out(eps0.size());
  for (std::size_t a = 0; a < eps0.size(); ++a)
    out[a] = std::abs(eps0[a]) * std::pow(std::abs(spectrum.lambdas[a]) * spectrum.chi, depth);
  return out;
}

std::vector<double> backprop_variance_profile(const MeanFieldParams& p, const VarianceVector& v,
                                              double chi1, int depth) {
  p.validate();
  if (depth < 1) throw InvalidArgument("depth must be at least 1");
  if (!(chi1 > 0)) throw InvalidArgument("chi1 must be positive");
  // Diagonal of the back-propagated covariance: Σ̃^l = χ₁·A_v ⋆ Σ̃^{l+1}
  // restricted to the diagonal. Starting from a constant diagonal it stays
  // constant, so only the scalar survives.
  const int n = v.taps();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> g(depth);
  g[depth - 1] = 1.0;
  for (int l = depth - 2; l >= 0; --l) {
    Eigen::MatrixXd next = chi1 * cross_correlate(v, s);
    s = next.diagonal().asDiagonal();
    g[l] = s.diagonal().mean();
  }
  return g;
}

Eigen::VectorXd cyclic_diagonal(const Eigen::MatrixXd& m, int r) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd d(n);
  for (int a = 0; a < n; ++a) d[a] = m(a, ((a + r) % n + n) % n);
  return d;
}

std::vector<std::complex<double>> dft(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(n);
  for (int w = 0; w < n; ++w) {
    std::complex<double> acc = 0.0;
    for (int a = 0; a < n; ++a) {
      const double ang = -2.0 * std::numbers::pi * ((w * a) % n) / n;
      acc += x[a] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[w] = acc;
  }
  return out;
}

Eigen::VectorXd idft_real(const std::vector<std::complex<double>>& coeffs) {
  const int n = static_cast<int>(coeffs.size());
  Eigen::VectorXd out(n);
  for (int a = 0; a < n; ++a) {
    std::complex<double> acc = 0.0;
    for (int w = 0; w < n; ++w) {
      const double ang = 2.0 * std::numbers::pi * ((w * a) % n) / n;
      acc += coeffs[w] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[a] = acc.real() / n;
  }
  return out;
}

Eigen::MatrixXd from_cyclic_diagonal(const Eigen::VectorXd& d, int r) {
  const int n = static_cast<int>(d.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    const int b = ((a + r) % n + n) % n;
    m(a, b) = d[a];
    m(b, a) = d[a];
  }
  return m;
}

}  // namespace mfcnn
