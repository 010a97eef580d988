#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mfcnn/covariance.hpp"
#include "mfcnn/mean_field.hpp"
#include "mfcnn/simulator.hpp"

namespace mfcnn {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Random correlation matrix scaled to diagonal q (normalized Wishart with n+1 dof).
CovarianceMatrix random_spatial_covariance(int n, double q, RandomSource& rng);

// Decay of Fourier modes of the first cyclic diagonal of ε^l = Σ* − Σ^l.
struct ModeExperiment {
  MeanFieldParams params;
  VarianceVector v;
  int n = 10;
  std::vector<std::complex<double>> eps0;  // DFT of the diagonal of ε⁰
  int depth = 40;
  int l0 = 10;
  int fit_layers = 30;

  // erf, σ_w = 3/2, σ_b = 1/2, v = [0.025, 0.95, 0.025], n = 10, and the
  // geometric ε⁰ profile used for the multi-depth-scale figure.
  static ModeExperiment standard();
};

struct ModeTrajectory {
  CriticalPoint fixed_point;
  DepthScaleSpectrum spectrum;               // with chi = χ_c at the fixed point
  std::vector<std::vector<double>> modes;    // [layer][mode] magnitudes
  std::vector<double> fitted_slopes;         // d log|mode| / dl over [l0, l0 + fit_layers]
  std::vector<double> predicted_slopes;      // log(χ|λ|) = −1/ξ
};

// Σ* − ε⁰ with ε⁰ symmetric, supported on cyclic diagonals ±1
CovarianceMatrix perturbed_fixed_point(const CovarianceMatrix& fixed,
                                       const std::vector<std::complex<double>>& eps0);

ModeTrajectory mode_decay_theory(const ModeExperiment& e);
ModeTrajectory mode_decay_empirical(const ModeExperiment& e, int channels, int members,
                                    std::uint64_t seed);

struct GradientExperiment {
  MeanFieldParams params;
  int depth = 100;
  int channels = 2000;
  int n = 10;
  int half_width = 1;
  std::uint64_t seed = 0;
  int skip = 10;  // transient layers excluded from each end of the fit
};

struct GradientExperimentResult {
  GradientProfile profile;
  std::vector<double> theory;  // χ₁^{L−l}
  double chi1 = 0.0;
  double fitted_slope = 0.0;   // d log g / d(L−l)
  double predicted_slope = 0.0;
};

GradientExperimentResult run_gradient_experiment(const GradientExperiment& e);

}  // namespace mfcnn
