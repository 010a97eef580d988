#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "mfcnn/covariance.hpp"
#include "mfcnn/errors.hpp"
#include "mfcnn/experiments.hpp"
#include "mfcnn/mean_field.hpp"
#include "mfcnn/random.hpp"
#include "oracles.hpp"

using namespace mfcnn;

namespace {

VarianceVector random_v(RandomSource& rng, int k) {
  std::vector<double> w(2 * k + 1);
  for (auto& x : w) x = 0.05 + rng.uniform();
  return VarianceVector::normalized(w);
}

Eigen::MatrixXd random_symmetric(RandomSource& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n * n; ++i) m.data()[i] = rng.normal();
  return m + m.transpose();
}

}  // namespace

TEST(VarianceVector, Validation) {
  EXPECT_THROW(VarianceVector({0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(VarianceVector({0.5, 0.7, -0.2}), InvalidArgument);
  EXPECT_THROW(VarianceVector({0.2, 0.2, 0.2}), InvalidArgument);
  EXPECT_THROW(VarianceVector(std::vector<double>{}), InvalidArgument);
  const auto u = VarianceVector::uniform(2);
  EXPECT_EQ(u.taps(), 5);
  EXPECT_DOUBLE_EQ(u.at(-2), 0.2);
  EXPECT_DOUBLE_EQ(VarianceVector::one_hot(1).at(0), 1.0);
  EXPECT_DOUBLE_EQ(VarianceVector::one_hot(1).at(1), 0.0);
}

TEST(CovarianceMatrix, Validation) {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(CovarianceMatrix{asym}, InvalidArgument);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_THROW(CovarianceMatrix{indef}, InvalidArgument);
  const auto fp = CovarianceMatrix::fixed_point(4, 2.0, 0.25);
  EXPECT_DOUBLE_EQ(fp(1, 1), 2.0);
  EXPECT_DOUBLE_EQ(fp(0, 3), 0.5);
}

TEST(CrossCorrelate, MatchesBruteForce) {
  RandomSource rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial % 7;
    const auto v = random_v(rng, trial % 3);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n * n; ++i) m.data()[i] = rng.normal();
    EXPECT_LT((cross_correlate(v, m) - oracle::cross_correlate(v.values(), m)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(CrossCorrelate, PreservesTraceAndConstantDiagonals) {
  RandomSource rng(2);
  const auto v = random_v(rng, 2);
  const Eigen::MatrixXd m = random_symmetric(rng, 9);
  EXPECT_NEAR(cross_correlate(v, m).trace(), m.trace(), 1e-12);
  const auto fp = CovarianceMatrix::fixed_point(9, 1.3, 0.4);
  EXPECT_LT((cross_correlate(v, fp).matrix() - fp.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(cross_correlate(VarianceVector::one_hot(1), m), m);
}

TEST(FourierEigenvalues, MatchCirculantEigendecomposition) {
  RandomSource rng(3);
  for (int n : {5, 8, 10, 13}) {
    const auto v = random_v(rng, 2);
    // A_v on a cyclic diagonal is the circulant d ↦ Σ_β v_β d_{a+β}
    Eigen::MatrixXd circ = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int beta = -2; beta <= 2; ++beta) circ(a, ((a + beta) % n + n) % n) += v.at(beta);
    Eigen::EigenSolver<Eigen::MatrixXd> es(circ);
    std::vector<std::complex<double>> want(es.eigenvalues().data(), es.eigenvalues().data() + n);
    auto got = fourier_eigenvalues(v, n).lambdas;
    auto order = [](auto a, auto b) {
      return std::abs(a.real() - b.real()) > 1e-9 ? a.real() < b.real() : a.imag() < b.imag();
    };
    std::sort(want.begin(), want.end(), order);
    std::sort(got.begin(), got.end(), order);
    for (int i = 0; i < n; ++i) EXPECT_LT(std::abs(got[i] - want[i]), 1e-12);
  }
}

TEST(DepthScales, Definition) {
  const auto spec = depth_scales(fourier_eigenvalues(VarianceVector({0.025, 0.95, 0.025}), 10), 0.9);
  for (int w = 0; w < 10; ++w) {
    const double growth = 0.9 * std::abs(spec.lambdas[w]);
    EXPECT_NEAR(spec.xis[w], -1.0 / std::log(growth), 1e-12);
    EXPECT_FALSE(spec.growing[w]);
  }
  const auto crit = depth_scales(fourier_eigenvalues(VarianceVector::uniform(1), 6), 1.0);
  EXPECT_TRUE(std::isinf(crit.xis[0]));
  const auto grow = depth_scales(fourier_eigenvalues(VarianceVector::uniform(1), 6), 1.2);
  EXPECT_TRUE(grow.growing[0]);
}

TEST(Dft, MatchesDenseTransformAndInverts) {
  RandomSource rng(4);
  Eigen::VectorXd x(11);
  for (auto& e : x) e = rng.normal();
  const auto got = dft(x);
  const auto want = oracle::dft(std::vector<double>(x.data(), x.data() + x.size()));
  for (int w = 0; w < 11; ++w) EXPECT_LT(std::abs(got[w] - want[w]), 1e-12);
  EXPECT_LT((idft_real(got) - x).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CyclicDiagonal, RoundTrip) {
  Eigen::VectorXd d(6);
  d << 1, 2, 3, 4, 5, 6;
  const Eigen::MatrixXd m = from_cyclic_diagonal(d, 1);
  EXPECT_TRUE(m.isApprox(m.transpose()));
  EXPECT_EQ(cyclic_diagonal(m, 1), d);
  EXPECT_DOUBLE_EQ(m(5, 0), 6.0);
  EXPECT_DOUBLE_EQ(m(0, 5), 6.0);
}

TEST(Propagation, FixedPointIsStationaryAndAttracting) {
  const MeanFieldParams p{1.2, 0.1, find_activation("tanh")};
  const auto cp = solve_critical_point(p);
  const auto v = VarianceVector::uniform(1);
  const auto fixed = CovarianceMatrix::fixed_point(7, cp.q_star, cp.c_star);
  const auto traj = propagate_covariance(p, v, fixed, 3);
  ASSERT_EQ(traj.size(), 4u);
  EXPECT_LT((traj[3].matrix() - fixed.matrix()).cwiseAbs().maxCoeff(), 1e-11);
  RandomSource rng(5);
  const auto far = propagate_covariance(p, v, random_spatial_covariance(7, 2.0, rng), 300);
  EXPECT_LT((far.back().matrix() - fixed.matrix()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Propagation, CmapMatrixEntriesMatchScalarMap) {
  const MeanFieldParams p{2.0, 0.2, find_activation("erf")};
  RandomSource rng(6);
  const auto s = random_spatial_covariance(5, 1.1, rng);
  const Eigen::MatrixXd c = cmap_matrix(p, s).matrix();
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      const double qa = s(a, a), qb = s(b, b);
      EXPECT_NEAR(c(a, b), cmap_pair(p, qa, qb, s(a, b) / std::sqrt(qa * qb)), 1e-15);
    }
}

TEST(Jacobian, RepresentationMatchesFiniteDifferences) {
  // chaotic phase, interior fixed point: central differences are well defined
  const MeanFieldParams p{3.0, 0.1, find_activation("tanh")};
  const auto cp = solve_critical_point(p);
  ASSERT_LT(cp.c_star, 1.0);
  const int n = 4;
  const auto rep = CmapJacobianRep::at(cp, n);
  const Eigen::MatrixXd fixed = CovarianceMatrix::fixed_point(n, cp.q_star, cp.c_star).matrix();
  RandomSource rng(7);
  for (int t = 0; t < 5; ++t) {
    const Eigen::MatrixXd u = random_symmetric(rng, n);
    const double h = 1e-5;
    const Eigen::MatrixXd fd = (cmap_matrix_raw(p, fixed + h * u) - cmap_matrix_raw(p, fixed - h * u)) / (2 * h);
    EXPECT_LT((fd - apply_cmap_jacobian(rep, u)).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Jacobian, CommutesWithCrossCorrelation) {
  RandomSource rng(8);
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + t % 9;
    CmapJacobianRep rep{rng.uniform(), rng.uniform(), rng.normal(), n};
    const auto v = random_v(rng, t % 3);
    const Eigen::MatrixXd u = random_symmetric(rng, n);
    const Eigen::MatrixXd lhs = cross_correlate(v, apply_cmap_jacobian(rep, u));
    const Eigen::MatrixXd rhs = apply_cmap_jacobian(rep, cross_correlate(v, u));
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Jacobian, DiagonalEigenmatrices) {
  MeanFieldParams p{2.5, 0.1, tanh_activation()};
  const auto rep = CmapJacobianRep::at(solve_critical_point(p), 6);
  ASSERT_NE(rep.kappa, 0.0);
  for (int a = 0; a < 6; ++a) {
    const Eigen::MatrixXd m = diagonal_eigenmatrix(rep, a);
    EXPECT_LT((apply_cmap_jacobian(rep, m) - rep.chi_q * m).cwiseAbs().maxCoeff(), 1e-13);
  }
  // off-diagonal basis matrices are eigenmatrices for χ_c
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(6, 6);
  e(1, 4) = e(4, 1) = 1.0;
  EXPECT_LT((apply_cmap_jacobian(rep, e) - rep.chi_c * e).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(diagonal_eigenmatrix({0.5, 0.5, 0.1, 3}, 0), InvalidArgument);
  EXPECT_THROW(diagonal_eigenmatrix(rep, 6), InvalidArgument);
}

TEST(Modes, LinearizedPredictionTracksSmallPerturbations) {
  ModeExperiment e = ModeExperiment::standard();
  for (auto& c : e.eps0) c *= 1e-4;
  const auto t = mode_decay_theory(e);
  const auto pred = linearized_mode_prediction(t.spectrum, e.eps0, 20);
  for (int w = 0; w < e.n; ++w) EXPECT_NEAR(t.modes[20][w] / pred[w], 1.0, 2e-3) << "mode " << w;
}

TEST(Modes, TheorySlopesMatchDepthScales) {
  const auto t = mode_decay_theory(ModeExperiment::standard());
  for (std::size_t w = 0; w < t.fitted_slopes.size(); ++w) {
    EXPECT_NEAR(t.predicted_slopes[w], -1.0 / t.spectrum.xis[w], 1e-12);
    EXPECT_NEAR(t.fitted_slopes[w] / t.predicted_slopes[w], 1.0, 0.05);
  }
}

TEST(Backprop, VarianceProfileIsGeometric) {
  const MeanFieldParams p{1.5, 0.05, find_activation("tanh")};
  const auto cp = solve_critical_point(p);
  const auto g = backprop_variance_profile(p, VarianceVector::uniform(1), cp.chi1, 30);
  ASSERT_EQ(g.size(), 30u);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  for (int l = 1; l <= 30; ++l) EXPECT_NEAR(g[l - 1], std::pow(cp.chi1, 30 - l), 1e-12 * g[l - 1]);
}

TEST(CrossCorrelate, ListedExamples) {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(6, 6);
  EXPECT_LT((cross_correlate(VarianceVector::uniform(1), ones) - ones).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  d(0, 0) = 1;
  const auto v = VarianceVector::uniform(1);
  EXPECT_LT((cross_correlate(v, d) - oracle::cross_correlate(v.values(), d)).cwiseAbs().maxCoeff(), 1e-16);
  // positions 3, 0, 1 each pick up a third of the spike
  EXPECT_NEAR(cross_correlate(v, d)(3, 3), 1.0 / 3, 1e-16);
  EXPECT_NEAR(cross_correlate(v, d)(2, 2), 0.0, 1e-16);
}

TEST(Propagation, ListedExamples) {
  const MeanFieldParams lin{0.6, 0.3, find_activation("linear")};
  RandomSource rng(12);
  const auto s = random_spatial_covariance(5, 1.4, rng);
  EXPECT_LT((cmap_matrix(lin, s).matrix() - (0.6 * s.matrix() + 0.3 * Eigen::MatrixXd::Ones(5, 5)))
                .cwiseAbs()
                .maxCoeff(),
            1e-13);

  const MeanFieldParams t{1.0, 0.05, find_activation("tanh")};
  const auto cp = solve_critical_point(t);
  const auto fixed = CovarianceMatrix::fixed_point(6, cp.q_star, cp.c_star);
  EXPECT_LT((cmap_matrix(t, fixed).matrix() - fixed.matrix()).cwiseAbs().maxCoeff(), 1e-10);

  // random PSD, n = 6: entrywise against the scalar map
  const auto r = random_spatial_covariance(6, 0.8, rng);
  const Eigen::MatrixXd c = cmap_matrix(t, r).matrix();
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const double cc = r(a, b) / std::sqrt(r(a, a) * r(b, b));
      EXPECT_NEAR(c(a, b), cmap_pair(t, r(a, a), r(b, b), cc), 1e-15);
    }

  const auto s0 = random_spatial_covariance(6, 1.0, rng);
  EXPECT_EQ(propagate_covariance(t, VarianceVector::uniform(1), s0, 0).size(), 1u);
  EXPECT_EQ(propagate_covariance(t, VarianceVector::uniform(1), s0, 0)[0].matrix(), s0.matrix());

  // ordered phase: all positions become perfectly correlated
  const auto traj = propagate_covariance(t, VarianceVector::uniform(1), s0, 200);
  const Eigen::MatrixXd last = traj.back().matrix();
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) EXPECT_NEAR(last(a, b) / std::sqrt(last(a, a) * last(b, b)), 1.0, 1e-6);

  // one-hot v is plain iteration of the C-map
  auto direct = s0;
  const auto hot = propagate_covariance(t, VarianceVector::one_hot(1), s0, 10);
  for (int l = 1; l <= 10; ++l) {
    direct = cmap_matrix(t, direct);
    EXPECT_LT((hot[l].matrix() - direct.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(FourierEigenvalues, ListedExamples) {
  for (const auto& lam : fourier_eigenvalues(VarianceVector::one_hot(1), 10).lambdas)
    EXPECT_LT(std::abs(lam - 1.0), 1e-15);
  const auto u = fourier_eigenvalues(VarianceVector::uniform(1), 10).lambdas;
  for (int a = 0; a < 10; ++a) EXPECT_NEAR(u[a].real(), (1 + 2 * std::cos(2 * M_PI * a / 10)) / 3, 1e-15);
  // sharply peaked v against the dense DFT of the circulant's first row
  const VarianceVector v({0.025, 0.95, 0.025});
  std::vector<double> row(10, 0.0);
  row[0] = 0.95;
  row[1] = 0.025;
  row[9] = 0.025;
  const auto want = oracle::dft(row);
  const auto got = fourier_eigenvalues(v, 10).lambdas;
  for (int a = 0; a < 10; ++a) EXPECT_LT(std::abs(got[a] - want[a]), 1e-12);
}

TEST(DepthScales, ListedExamples) {
  const auto s = depth_scales(fourier_eigenvalues(VarianceVector::one_hot(0), 3), std::exp(-1.0));
  EXPECT_NEAR(s.xis[0], 1.0, 1e-14);
  const auto crit = depth_scales(fourier_eigenvalues(VarianceVector::one_hot(1), 5), 1.0);
  for (double xi : crit.xis) EXPECT_TRUE(std::isinf(xi));
}

TEST(Jacobian, ListedExamples) {
  const CmapJacobianRep rep{0.7, 0.4, 0.0, 5};
  RandomSource rng(13);
  Eigen::MatrixXd u = random_symmetric(rng, 5);
  u.diagonal().setZero();
  EXPECT_LT((apply_cmap_jacobian(rep, u) - 0.4 * u).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 5);
  EXPECT_LT((apply_cmap_jacobian(rep, id) - 0.7 * id).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Modes, ListedExamples) {
  const auto spec = depth_scales(fourier_eigenvalues(VarianceVector({0.025, 0.95, 0.025}), 10), 0.9);
  std::vector<std::complex<double>> eps(10, {0.5, -0.1});
  const auto at0 = linearized_mode_prediction(spec, eps, 0);
  for (double m : at0) EXPECT_NEAR(m, std::abs(eps[0]), 1e-15);
  // a mode with χ|λ| = 1 never moves
  const auto flat = depth_scales(fourier_eigenvalues(VarianceVector::uniform(1), 6), 1.0);
  const std::vector<std::complex<double>> eps6(6, {0.5, -0.1});
  EXPECT_NEAR(linearized_mode_prediction(flat, eps6, 50)[0], std::abs(eps6[0]), 1e-14);
}

TEST(Backprop, ListedExamples) {
  const MeanFieldParams p{1.0, 0.0, find_activation("tanh")};
  for (double g : backprop_variance_profile(p, VarianceVector::uniform(1), 1.0, 7)) EXPECT_EQ(g, 1.0);
  const auto two = backprop_variance_profile(p, VarianceVector::uniform(1), 2.0, 3);
  ASSERT_EQ(two.size(), 3u);
  EXPECT_DOUBLE_EQ(two[0], 4.0);
  EXPECT_DOUBLE_EQ(two[1], 2.0);
  EXPECT_DOUBLE_EQ(two[2], 1.0);
}
