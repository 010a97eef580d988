#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mfcnn/kernels.hpp"
#include "mfcnn/simulator.hpp"

namespace mfcnn {

// Dense matrix of a periodic convolution. Row (α, j) is α·c_out + j and
// column (α′, i) is α′·c_in + i, i.e. an n×n circulant tiling of channel
// blocks, acting on the column-major vec of a channels × positions signal.
struct ConvMatrixRep {
  int n = 0;
  int c_in = 0;
  int c_out = 0;
  int rank = 1;
  Eigen::MatrixXd dense;
};

ConvMatrixRep conv_to_matrix(const ConvKernel& k, int n);
// rank-1 Gaussian kernel with 2k+1 taps and entries N(0, 1/(c(2k+1)))
ConvMatrixRep gaussian_block_circulant(int n, int c, int half_width, RandomSource& rng);
// dim×dim iid N(0, 1/dim)
Eigen::MatrixXd dense_gaussian(int dim, RandomSource& rng);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> counts;
};

struct SpectrumReport {
  std::vector<double> singular_values;  // descending
  Histogram histogram;
  double reference_radius = 2.0;        // quarter-circle support [0, 2]
  double ks_quarter_circle = 0.0;
};

std::vector<double> singular_values(const Eigen::MatrixXd& w);
SpectrumReport singular_spectrum(const Eigen::MatrixXd& w, int bins = 40);
SpectrumReport singular_spectrum(const ConvMatrixRep& w, int bins = 40);

// Same multiset as singular_values(conv_to_matrix(k, n).dense) through the
// n per-frequency c_in×c_out symbols. Rank-1 kernels only.
std::vector<double> block_circulant_singular_values(const ConvKernel& k, int n);

double quarter_circle_cdf(double s);
// two-sample sup-distance between empirical CDFs
double ks_distance(std::vector<double> a, std::vector<double> b);
// sup-distance to a continuous CDF
double ks_distance_to_cdf(std::vector<double> a, const std::function<double(double)>& cdf);
// sup-distance to a point mass at `at`, values within tol counted as equal
double ks_distance_to_point_mass(const std::vector<double>& a, double at, double tol);

Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins);

// ∂φ(h^L)/∂φ(h^0) = D^L W^L ⋯ D^1 W^1 at the forward pass from h0.
Eigen::MatrixXd end_to_end_jacobian(const WeightSource& w, const ActivationProfile& a,
                                    const Eigen::MatrixXd& h0, int n);

// max / min over singular values above rel_zero·max
double singular_value_spread(const std::vector<double>& sv, double rel_zero = 1e-12);

}  // namespace mfcnn
