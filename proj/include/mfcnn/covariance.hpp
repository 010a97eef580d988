#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mfcnn/mean_field.hpp"

namespace mfcnn {

// Symmetric PSD matrix over spatial positions. The constructor checks
// symmetry (1e-12, relative) and PSD-ness (λ_min ≥ −1e-10·‖Σ‖) and stores the
// exactly symmetrized matrix.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;
  explicit CovarianceMatrix(const Eigen::MatrixXd& m);

  // q·((1−c)·I + c·11ᵀ)
  static CovarianceMatrix fixed_point(int n, double q, double c);

  int size() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

double min_eigenvalue(const Eigen::MatrixXd& m);

// Spatial variance profile v_β, β = −k..k.
class VarianceVector {
 public:
  VarianceVector() = default;
  // length must be odd; entries nonnegative summing to 1 within 1e-12
  explicit VarianceVector(std::vector<double> v);

  static VarianceVector uniform(int half_width);
  static VarianceVector one_hot(int half_width);
  // normalizes nonnegative weights to unit sum
  static VarianceVector normalized(std::vector<double> w);

  int half_width() const { return static_cast<int>(v_.size() / 2); }
  int taps() const { return static_cast<int>(v_.size()); }
  // beta in [−k, k]
  double at(int beta) const { return v_[beta + half_width()]; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::vector<double> v_;
};

// [A_v ⋆ M]_{a,b} = Σ_β v_β M_{a+β, b+β}, indices mod n. Accepts any square
// matrix so that perturbations can be pushed through as well.
Eigen::MatrixXd cross_correlate(const VarianceVector& v, const Eigen::MatrixXd& m);
CovarianceMatrix cross_correlate(const VarianceVector& v, const CovarianceMatrix& m);

CovarianceMatrix cmap_matrix(const MeanFieldParams& p, const CovarianceMatrix& s,
                             const QuadratureRule& rule = QuadratureRule::standard());
// no PSD check; used for finite differences around Σ*
Eigen::MatrixXd cmap_matrix_raw(const MeanFieldParams& p, const Eigen::MatrixXd& s,
                                const QuadratureRule& rule = QuadratureRule::standard());

std::vector<CovarianceMatrix> propagate_covariance(
    const MeanFieldParams& p, const VarianceVector& v, const CovarianceMatrix& s0, int depth,
    const QuadratureRule& rule = QuadratureRule::standard());

struct DepthScaleSpectrum {
  std::vector<std::complex<double>> lambdas;
  std::vector<double> xis;     // +inf for non-decaying modes; empty until depth_scales
  std::vector<bool> growing;   // χ·|λ| > 1
  double chi = 0.0;
};

DepthScaleSpectrum fourier_eigenvalues(const VarianceVector& v, int n);
DepthScaleSpectrum depth_scales(const DepthScaleSpectrum& spectrum, double chi);

struct CmapJacobianRep {
  double chi_q = 0.0;
  double chi_c = 0.0;
  double kappa = 0.0;
  int n = 0;

  static CmapJacobianRep at(const CriticalPoint& cp, int n);
};

// Off-diagonal: χ_c·U_ab + κ·(U_aa + U_bb); diagonal: χ_q·U_aa.
Eigen::MatrixXd apply_cmap_jacobian(const CmapJacobianRep& rep, const Eigen::MatrixXd& u);

// Eigenmatrix of the Jacobian for eigenvalue χ_q: one on (α, α), γ on the
// rest of row and column α, with γ = κ/(χ_q − χ_c). Throws when χ_q = χ_c.
Eigen::MatrixXd diagonal_eigenmatrix(const CmapJacobianRep& rep, int alpha);

// |ε⁰_α|·(|λ_α|·χ)^depth
std::vector<double> linearized_mode_prediction(const DepthScaleSpectrum& spectrum,
                                               const std::vector<std::complex<double>>& eps0,
                                               int depth);

// χ₁^{L−l} for l = 1..L, checked against the diagonal back-prop recursion
// with v (which preserves constant diagonals).
std::vector<double> backprop_variance_profile(const MeanFieldParams& p, const VarianceVector& v,
                                              double chi1, int depth);

// Cyclic diagonal r of m: d_a = m(a, a+r mod n).
Eigen::VectorXd cyclic_diagonal(const Eigen::MatrixXd& m, int r);
// Unnormalized forward DFT, X_w = Σ_a x_a e^{−2πi w a / n}.
std::vector<std::complex<double>> dft(const Eigen::VectorXd& x);
// Inverse of dft (with 1/n); imaginary parts are dropped.
Eigen::VectorXd idft_real(const std::vector<std::complex<double>>& coeffs);
// Symmetric matrix whose cyclic diagonals ±r equal d, zero elsewhere.
Eigen::MatrixXd from_cyclic_diagonal(const Eigen::VectorXd& d, int r);

}  // namespace mfcnn
