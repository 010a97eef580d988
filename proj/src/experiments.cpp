#include "mfcnn/experiments.hpp"

#include <cmath>

#include "mfcnn/errors.hpp"

namespace mfcnn {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear_fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw InvalidArgument("linear_fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

CovarianceMatrix random_spatial_covariance(int n, double q, RandomSource& rng) {
  Eigen::MatrixXd g(n, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= n; ++j) g(i, j) = rng.normal();
  Eigen::MatrixXd w = g * g.transpose();
  const Eigen::VectorXd s = w.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r = s.asDiagonal() * w * s.asDiagonal();
  r.diagonal().setOnes();
  return CovarianceMatrix(q * r);
}

ModeExperiment ModeExperiment::standard() {
  ModeExperiment e;
  e.params = {2.25, 0.25, erf_activation()};
  e.v = VarianceVector({0.025, 0.95, 0.025});
  e.n = 10;
  const double r = 2.0 / 3.0;
  const std::vector<double> f = {1, r, std::pow(r, 3), std::pow(r, 5), std::pow(r, 4),
                                 std::pow(r, 2), std::pow(r, 4), std::pow(r, 5), std::pow(r, 3), r};
  for (double x : f) e.eps0.emplace_back(-x / 6.0, 0.0);
  return e;
}

CovarianceMatrix perturbed_fixed_point(const CovarianceMatrix& fixed,
                                       const std::vector<std::complex<double>>& eps0) {
  if (static_cast<int>(eps0.size()) != fixed.size()) throw DimensionError("mode count must equal n");
  const Eigen::MatrixXd eps = from_cyclic_diagonal(idft_real(eps0), 1);
  return CovarianceMatrix(fixed.matrix() - eps);
}

namespace {

ModeTrajectory prepare(const ModeExperiment& e) {
  if (e.l0 < 0 || e.l0 + e.fit_layers > e.depth || e.fit_layers < 2)
    throw InvalidArgument("fit window must lie inside the trajectory");
  ModeTrajectory t;
  t.fixed_point = solve_critical_point(e.params);
  if (t.fixed_point.q_star <= 0) throw InvalidArgument("mode experiment needs q* > 0");
  t.spectrum = depth_scales(fourier_eigenvalues(e.v, e.n), t.fixed_point.chi_c);
  for (const auto& lam : t.spectrum.lambdas)
    t.predicted_slopes.push_back(std::log(t.spectrum.chi * std::abs(lam)));
  return t;
}

void record_modes(ModeTrajectory& t, const std::vector<Eigen::MatrixXd>& eps, const ModeExperiment& e) {
  for (const auto& m : eps) {
    std::vector<double> mags;
    for (const auto& z : dft(cyclic_diagonal(m, 1))) mags.push_back(std::abs(z));
    t.modes.push_back(std::move(mags));
  }
  std::vector<double> x;
  for (int l = e.l0; l <= e.l0 + e.fit_layers; ++l) x.push_back(l);
  for (int w = 0; w < e.n; ++w) {
    std::vector<double> y;
    for (int l = e.l0; l <= e.l0 + e.fit_layers; ++l) y.push_back(std::log(t.modes[l][w]));
    t.fitted_slopes.push_back(linear_fit(x, y).slope);
  }
}

}  // namespace

ModeTrajectory mode_decay_theory(const ModeExperiment& e) {
  ModeTrajectory t = prepare(e);
  const auto fixed = CovarianceMatrix::fixed_point(e.n, t.fixed_point.q_star, t.fixed_point.c_star);
  const auto traj = propagate_covariance(e.params, e.v, perturbed_fixed_point(fixed, e.eps0), e.depth);
  // The exact Σ* is only reached to solver precision; propagate it too so
  // that ε^l measures the deviation between two trajectories.
  const auto ref = propagate_covariance(e.params, e.v, fixed, e.depth);
  std::vector<Eigen::MatrixXd> eps;
  for (int l = 0; l <= e.depth; ++l) eps.push_back(ref[l].matrix() - traj[l].matrix());
  record_modes(t, eps, e);
  return t;
}

ModeTrajectory mode_decay_empirical(const ModeExperiment& e, int channels, int members,
                                    std::uint64_t seed) {
  ModeTrajectory t = prepare(e);
  const auto fixed = CovarianceMatrix::fixed_point(e.n, t.fixed_point.q_star, t.fixed_point.c_star);
  SimNetworkConfig cfg;
  cfg.depth = e.depth;
  cfg.channels = channels;
  cfg.spatial = e.n;
  cfg.v = e.v;
  cfg.params = e.params;
  cfg.seed = seed;
  const auto diff = paired_covariance_difference(cfg, fixed, perturbed_fixed_point(fixed, e.eps0), members);
  record_modes(t, diff.mean, e);
  return t;
}

GradientExperimentResult run_gradient_experiment(const GradientExperiment& e) {
  if (e.depth < 2 * e.skip + 2) throw InvalidArgument("network too shallow for the fit window");
  GradientExperimentResult r;
  const double q = solve_q_star(e.params);
  r.chi1 = chi_c(e.params, q, 1.0);
  r.predicted_slope = std::log(r.chi1);
  SimNetworkConfig cfg;
  cfg.depth = e.depth;
  cfg.channels = e.channels;
  cfg.spatial = e.n;
  cfg.v = VarianceVector::uniform(e.half_width);
  cfg.params = e.params;
  cfg.seed = e.seed;
  RandomSource rng = RandomSource(e.seed).substream(0);
  const auto cov = random_spatial_covariance(e.n, q > 0 ? q : 1.0, rng);
  const Eigen::MatrixXd h0 = sample_input(cov, e.channels, rng);
  r.profile = backward_gradient_norms(cfg, h0);
  r.theory = backprop_variance_profile(e.params, cfg.v, r.chi1, e.depth);
  std::vector<double> x, y;
  for (int l = 1 + e.skip; l <= e.depth - e.skip; ++l) {
    const double g = r.profile.relative[l - 1];
    if (!(g > 0) || !std::isfinite(g)) continue;
    x.push_back(e.depth - l);
    y.push_back(std::log(g));
  }
  r.fitted_slope = linear_fit(x, y).slope;
  return r;
}

}  // namespace mfcnn
