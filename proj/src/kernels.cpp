#include "mfcnn/kernels.hpp"

#include <cmath>

#include "mfcnn/errors.hpp"

namespace mfcnn {

ConvKernel::ConvKernel(int rank, int k_size, int c_in, int c_out)
    : rank_(rank), k_(k_size), c_in_(c_in), c_out_(c_out) {
  if (rank != 1 && rank != 2) throw InvalidArgument("kernel rank must be 1 or 2");
  if (k_size < 1 || c_in < 1 || c_out < 1) throw InvalidArgument("kernel dimensions must be positive");
  w_.assign(static_cast<std::size_t>(tap_count()) * tap_size(), 0.0);
}

Eigen::Map<RowMatrix> ConvKernel::tap(int t) {
  return Eigen::Map<RowMatrix>(w_.data() + static_cast<std::size_t>(t) * tap_size(), c_in_, c_out_);
}

Eigen::Map<const RowMatrix> ConvKernel::tap(int t) const {
  return Eigen::Map<const RowMatrix>(w_.data() + static_cast<std::size_t>(t) * tap_size(), c_in_,
                                     c_out_);
}

BlockMatrix::BlockMatrix(int grid_rows, int grid_cols, int block_rows, int block_cols)
    : gr_(grid_rows), gc_(grid_cols), br_(block_rows), bc_(block_cols),
      blocks_(static_cast<std::size_t>(grid_rows) * grid_cols,
              Eigen::MatrixXd::Zero(block_rows, block_cols)) {}

BlockMatrix block_convolve(const BlockMatrix& b, const BlockMatrix& c) {
  if (b.block_cols() != c.block_rows())
    throw DimensionError("block_convolve: incompatible block shapes");
  BlockMatrix out(b.grid_rows() + c.grid_rows() - 1, b.grid_cols() + c.grid_cols() - 1,
                  b.block_rows(), c.block_cols());
  for (int i1 = 0; i1 < b.grid_rows(); ++i1)
    for (int j1 = 0; j1 < b.grid_cols(); ++j1)
      for (int i2 = 0; i2 < c.grid_rows(); ++i2)
        for (int j2 = 0; j2 < c.grid_cols(); ++j2)
          out.block(i1 + i2, j1 + j2).noalias() += b.block(i1, j1) * c.block(i2, j2);
  return out;
}

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, RandomSource& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

void check_channels(int c_in, int c_out) {
  if (c_in < 1 || c_out < 1) throw InvalidArgument("channel counts must be positive");
  if (c_in > c_out) throw InvalidArgument("orthogonal kernels need c_in <= c_out");
}

}  // namespace

Eigen::MatrixXd haar_orthogonal(int c, RandomSource& rng) {
  if (c < 1) throw InvalidArgument("dimension must be positive");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(c, c, rng));
  Eigen::MatrixXd q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (int j = 0; j < c; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

Eigen::MatrixXd random_projection(int c, RandomSource& rng) {
  const Eigen::MatrixXd u = haar_orthogonal(c, rng);
  Eigen::VectorXd d(c);
  for (int i = 0; i < c; ++i) d[i] = rng.coin() ? 1.0 : 0.0;
  Eigen::MatrixXd p = u * d.asDiagonal() * u.transpose();
  return 0.5 * (p + p.transpose());
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_projection_pair(int c, RandomSource& rng) {
  Eigen::MatrixXd p = random_projection(c, rng);
  Eigen::MatrixXd q = random_projection(c, rng);
  return {std::move(p), std::move(q)};
}

ConvKernel orthogonal_kernel(int k_size, int c_in, int c_out, RandomSource& rng, double gain,
                             int rank) {
  check_channels(c_in, c_out);
  if (k_size < 1) throw InvalidArgument("kernel size must be positive");
  const int c = c_out;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(c, c);
  BlockMatrix k(1, 1, c, c);
  k.block(0, 0) = id;
  for (int step = 1; step < k_size; ++step) {
    if (rank == 2) {
      auto [p, q] = random_projection_pair(c, rng);
      BlockMatrix b(2, 2, c, c);
      b.block(0, 0) = p * q;
      b.block(0, 1) = p * (id - q);
      b.block(1, 0) = (id - p) * q;
      b.block(1, 1) = (id - p) * (id - q);
      k = block_convolve(k, b);
    } else {
      const Eigen::MatrixXd p = random_projection(c, rng);
      BlockMatrix b(1, 2, c, c);
      b.block(0, 0) = p;
      b.block(0, 1) = id - p;
      k = block_convolve(k, b);
    }
  }
  const Eigen::MatrixXd h = gain * haar_orthogonal(c_out, rng).topRows(c_in);
  ConvKernel out(rank, k_size, c_in, c_out);
  for (int i = 0; i < k.grid_rows(); ++i)
    for (int j = 0; j < k.grid_cols(); ++j) out.tap(i * k.grid_cols() + j) = h * k.block(i, j);
  return out;
}

ConvKernel delta_orthogonal_kernel(int k_size, int c_in, int c_out, double gain,
                                   RandomSource& rng, int rank) {
  check_channels(c_in, c_out);
  if (!(gain > 0)) throw InvalidArgument("gain must be positive");
  ConvKernel out(rank, k_size, c_in, c_out);
  const int mid = k_size / 2;
  const int t = rank == 2 ? mid * k_size + mid : mid;
  out.tap(t) = gain * haar_orthogonal(c_out, rng).topRows(c_in);
  return out;
}

ConvKernel gaussian_kernel(int k_size, int c_in, int c_out, double sigma_w_sq,
                           const Eigen::MatrixXd& v, RandomSource& rng) {
  if (!(sigma_w_sq >= 0)) throw InvalidArgument("sigma_w_sq must be nonnegative");
  const int rank = v.cols() == 1 && k_size > 1 ? 1 : 2;
  if (v.rows() != k_size || (rank == 2 && v.cols() != k_size))
    throw DimensionError("variance grid does not match kernel size");
  if ((v.array() < 0).any() || std::fabs(v.sum() - 1.0) > 1e-12)
    throw InvalidArgument("variance grid must be nonnegative and sum to 1");
  ConvKernel out(rank, k_size, c_in, c_out);
  for (int t = 0; t < out.tap_count(); ++t) {
    const double var = sigma_w_sq * v(rank == 2 ? t / k_size : t, rank == 2 ? t % k_size : 0) / c_in;
    if (var == 0.0) continue;
    const double sd = std::sqrt(var);
    auto tap = out.tap(t);
    for (int i = 0; i < c_in; ++i)
      for (int j = 0; j < c_out; ++j) tap(i, j) = sd * rng.normal();
  }
  return out;
}

ConvKernel gaussian_kernel(int c_in, int c_out, double sigma_w_sq, const VarianceVector& v,
                           RandomSource& rng) {
  Eigen::MatrixXd grid = Eigen::Map<const Eigen::VectorXd>(v.values().data(), v.taps());
  if (v.taps() == 1) {
    // a single tap is both ranks; keep it rank 1
    ConvKernel out(1, 1, c_in, c_out);
    const double sd = std::sqrt(sigma_w_sq / c_in);
    auto tap = out.tap(0);
    for (int i = 0; i < c_in; ++i)
      for (int j = 0; j < c_out; ++j) tap(i, j) = sd * rng.normal();
    return out;
  }
  return gaussian_kernel(v.taps(), c_in, c_out, sigma_w_sq, grid, rng);
}

Eigen::MatrixXd outer_variance(const VarianceVector& v) {
  const Eigen::Map<const Eigen::VectorXd> x(v.values().data(), v.taps());
  return x * x.transpose();
}

namespace {

Eigen::MatrixXd convolve(const ConvKernel& k, const Eigen::MatrixXd& x, int n, bool periodic) {
  const int positions = k.rank() == 2 ? n * n : n;
  if (x.rows() != k.c_in() || x.cols() != positions)
    throw DimensionError("signal shape does not match kernel and spatial size");
  const int ks = k.k_size();
  const int mid = ks / 2;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(k.c_out(), positions);
  auto wrap = [n](int a) { return ((a % n) + n) % n; };
  if (k.rank() == 1) {
    for (int t = 0; t < ks; ++t) {
      const auto tapT = k.tap(t).transpose();
      for (int a = 0; a < n; ++a) {
        const int src = a + t - mid;
        if (!periodic && (src < 0 || src >= n)) continue;
        y.col(a).noalias() += tapT * x.col(wrap(src));
      }
    }
    return y;
  }
  for (int t1 = 0; t1 < ks; ++t1)
    for (int t2 = 0; t2 < ks; ++t2) {
      const auto tapT = k.tap(t1, t2).transpose();
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const int sa = a + t1 - mid, sb = b + t2 - mid;
          if (!periodic && (sa < 0 || sa >= n || sb < 0 || sb >= n)) continue;
          y.col(a * n + b).noalias() += tapT * x.col(wrap(sa) * n + wrap(sb));
        }
    }
  return y;
}

}  // namespace

Eigen::MatrixXd periodic_convolve(const ConvKernel& k, const Eigen::MatrixXd& x, int n) {
  return convolve(k, x, n, true);
}

Eigen::MatrixXd zero_padded_convolve(const ConvKernel& k, const Eigen::MatrixXd& x, int n) {
  return convolve(k, x, n, false);
}

double norm_preservation_error(const ConvKernel& k, int n, int trials, double gain,
                               RandomSource& rng, bool zero_padding) {
  const int positions = k.rank() == 2 ? n * n : n;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd x(k.c_in(), positions);
    for (int j = 0; j < positions; ++j)
      for (int i = 0; i < k.c_in(); ++i) x(i, j) = rng.normal();
    const Eigen::MatrixXd y = zero_padding ? zero_padded_convolve(k, x, n) : periodic_convolve(k, x, n);
    worst = std::max(worst, std::fabs(y.norm() / x.norm() - gain));
  }
  return worst;
}

}  // namespace mfcnn
