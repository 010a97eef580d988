#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mfcnn/covariance.hpp"
#include "mfcnn/random.hpp"

namespace mfcnn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Spatial rank 1 (k taps) or 2 (k×k taps); each tap is a c_in×c_out matrix.
// Storage is row-major in [β, β′, i, j] order, which is also the file order.
class ConvKernel {
 public:
  ConvKernel() = default;
  ConvKernel(int rank, int k_size, int c_in, int c_out);

  int rank() const { return rank_; }
  int k_size() const { return k_; }
  int c_in() const { return c_in_; }
  int c_out() const { return c_out_; }
  int tap_count() const { return rank_ == 1 ? k_ : k_ * k_; }
  std::size_t tap_size() const { return static_cast<std::size_t>(c_in_) * c_out_; }

  // flat tap index: t = β (rank 1) or β·k + β′ (rank 2)
  Eigen::Map<RowMatrix> tap(int t);
  Eigen::Map<const RowMatrix> tap(int t) const;
  Eigen::Map<RowMatrix> tap(int beta, int beta2) { return tap(beta * k_ + beta2); }
  Eigen::Map<const RowMatrix> tap(int beta, int beta2) const { return tap(beta * k_ + beta2); }

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }

  bool operator==(const ConvKernel& o) const = default;

 private:
  int rank_ = 1, k_ = 1, c_in_ = 1, c_out_ = 1;
  std::vector<double> w_;
};

// Grid of equally sized (possibly rectangular) blocks; a 1D block sequence is
// a 1×p grid.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(int grid_rows, int grid_cols, int block_rows, int block_cols);

  int grid_rows() const { return gr_; }
  int grid_cols() const { return gc_; }
  int block_rows() const { return br_; }
  int block_cols() const { return bc_; }
  Eigen::MatrixXd& block(int i, int j) { return blocks_[i * gc_ + j]; }
  const Eigen::MatrixXd& block(int i, int j) const { return blocks_[i * gc_ + j]; }

 private:
  int gr_ = 0, gc_ = 0, br_ = 0, bc_ = 0;
  std::vector<Eigen::MatrixXd> blocks_;
};

// [B□C]_{i,j} = Σ B_{i′,j′}·C_{i−i′, j−j′}, missing blocks zero.
BlockMatrix block_convolve(const BlockMatrix& b, const BlockMatrix& c);

Eigen::MatrixXd haar_orthogonal(int c, RandomSource& rng);
// P = U·D·Uᵀ with U Haar and D diagonal Bernoulli(1/2) entries.
Eigen::MatrixXd random_projection(int c, RandomSource& rng);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_projection_pair(int c, RandomSource& rng);

ConvKernel orthogonal_kernel(int k_size, int c_in, int c_out, RandomSource& rng,
                             double gain = 1.0, int rank = 2);
ConvKernel delta_orthogonal_kernel(int k_size, int c_in, int c_out, double gain,
                                   RandomSource& rng, int rank = 2);
// Tap variance σ_w²·v/c_in. `v` is k×k for rank 2 and k×1 for rank 1.
ConvKernel gaussian_kernel(int k_size, int c_in, int c_out, double sigma_w_sq,
                           const Eigen::MatrixXd& v, RandomSource& rng);
ConvKernel gaussian_kernel(int c_in, int c_out, double sigma_w_sq, const VarianceVector& v,
                           RandomSource& rng);
// 2D variance grid v ⊗ v
Eigen::MatrixXd outer_variance(const VarianceVector& v);

// Signals are channels × positions; rank-2 positions are a·n + b.
// y_j(α) = Σ_β Σ_i x_i(α+β−center) K[β](i, j), periodic in each axis.
Eigen::MatrixXd periodic_convolve(const ConvKernel& k, const Eigen::MatrixXd& x, int n);
// same taps, out-of-range inputs read as zero
Eigen::MatrixXd zero_padded_convolve(const ConvKernel& k, const Eigen::MatrixXd& x, int n);

// Largest |‖K∗x‖/‖x‖ − gain| over `trials` Gaussian inputs at spatial size n.
double norm_preservation_error(const ConvKernel& k, int n, int trials, double gain,
                               RandomSource& rng, bool zero_padding = false);

}  // namespace mfcnn
