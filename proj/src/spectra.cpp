#include "mfcnn/spectra.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "mfcnn/errors.hpp"

namespace mfcnn {

ConvMatrixRep conv_to_matrix(const ConvKernel& k, int n) {
  if (n < 1) throw DimensionError("spatial size must be positive");
  ConvMatrixRep out;
  out.n = n;
  out.c_in = k.c_in();
  out.c_out = k.c_out();
  out.rank = k.rank();
  const int ks = k.k_size();
  const int mid = ks / 2;
  auto wrap = [n](int a) { return ((a % n) + n) % n; };
  if (k.rank() == 1) {
    out.dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * k.c_out(),
                                      static_cast<Eigen::Index>(n) * k.c_in());
    for (int a = 0; a < n; ++a)
      for (int t = 0; t < ks; ++t)
        out.dense.block(a * k.c_out(), wrap(a + t - mid) * k.c_in(), k.c_out(), k.c_in()) +=
            k.tap(t).transpose();
    return out;
  }
  const int pos = n * n;
  out.dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pos) * k.c_out(),
                                    static_cast<Eigen::Index>(pos) * k.c_in());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int t1 = 0; t1 < ks; ++t1)
        for (int t2 = 0; t2 < ks; ++t2) {
          const int src = wrap(a + t1 - mid) * n + wrap(b + t2 - mid);
          out.dense.block((a * n + b) * k.c_out(), src * k.c_in(), k.c_out(), k.c_in()) +=
              k.tap(t1, t2).transpose();
        }
  return out;
}

ConvMatrixRep gaussian_block_circulant(int n, int c, int half_width, RandomSource& rng) {
  const VarianceVector v = VarianceVector::uniform(half_width);
  if (n < v.taps()) throw DimensionError("kernel wider than spatial size");
  // σ_w² = 1 with uniform v gives tap variance 1/(c(2k+1))
  return conv_to_matrix(gaussian_kernel(c, c, 1.0, v, rng), n);
}

Eigen::MatrixXd dense_gaussian(int dim, RandomSource& rng) {
  Eigen::MatrixXd m(dim, dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = sd * rng.normal();
  return m;
}

std::vector<double> singular_values(const Eigen::MatrixXd& w) {
  if (!w.allFinite()) throw NumericOverflowError("matrix has non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(w);
  if (svd.info() != Eigen::Success) throw ConvergenceError("SVD did not converge", 0.0, 0);
  const auto& s = svd.singularValues();
  std::vector<double> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  Histogram h{lo, hi, std::vector<int>(std::max(bins, 1), 0)};
  const double width = (hi - lo) / h.counts.size();
  for (double v : values) {
    int b = width > 0 ? static_cast<int>((v - lo) / width) : 0;
    b = std::clamp(b, 0, static_cast<int>(h.counts.size()) - 1);
    ++h.counts[b];
  }
  return h;
}

SpectrumReport singular_spectrum(const Eigen::MatrixXd& w, int bins) {
  SpectrumReport r;
  r.singular_values = singular_values(w);
  const double top = r.singular_values.empty() ? 0.0 : r.singular_values.front();
  r.histogram = histogram(r.singular_values, 0.0, std::max(2.0, top), bins);
  r.ks_quarter_circle = ks_distance_to_cdf(r.singular_values, quarter_circle_cdf);
  return r;
}

SpectrumReport singular_spectrum(const ConvMatrixRep& w, int bins) {
  return singular_spectrum(w.dense, bins);
}

std::vector<double> block_circulant_singular_values(const ConvKernel& k, int n) {
  if (k.rank() != 1) throw DimensionError("Fourier route needs a one-dimensional kernel");
  const int mid = k.k_size() / 2;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) * std::min(k.c_in(), k.c_out()));
  for (int w = 0; w < n; ++w) {
    Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(k.c_out(), k.c_in());
    for (int t = 0; t < k.k_size(); ++t) {
      const int beta = t - mid;
      const int r = ((w * beta) % n + n) % n;
      const double ang = 2.0 * std::numbers::pi * r / n;
      sym += std::complex<double>(std::cos(ang), std::sin(ang)) *
             k.tap(t).transpose().cast<std::complex<double>>();
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(sym);
    const auto& s = svd.singularValues();
    out.insert(out.end(), s.data(), s.data() + s.size());
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

double quarter_circle_cdf(double s) {
  if (s <= 0) return 0.0;
  if (s >= 2) return 1.0;
  return (s * std::sqrt(4.0 - s * s) / 2.0 + 2.0 * std::asin(s / 2.0)) / std::numbers::pi;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS distance needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return d;
}

double ks_distance_to_cdf(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw InvalidArgument("KS distance needs a nonempty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_distance_to_point_mass(const std::vector<double>& a, double at, double tol) {
  if (a.empty()) throw InvalidArgument("KS distance needs a nonempty sample");
  std::size_t below = 0, above = 0;
  for (double x : a) {
    if (x < at - tol) ++below;
    if (x > at + tol) ++above;
  }
  const double n = static_cast<double>(a.size());
  return std::max(below / n, above / n);
}

Eigen::MatrixXd end_to_end_jacobian(const WeightSource& w, const ActivationProfile& a,
                                    const Eigen::MatrixXd& h0, int n) {
  const int c = static_cast<int>(h0.rows());
  const int dim = c * n;
  if (h0.cols() != n) throw DimensionError("base point must be channels x n");
  const auto states = forward(w, a, h0, n);
  // column u of J, as a c×n signal, is block u of the batch
  Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(n) * dim);
  for (int u = 0; u < dim; ++u) batch(u % c, static_cast<Eigen::Index>(u) * n + u / c) = 1.0;
  for (int l = 1; l <= w.depth(); ++l) {
    const LayerWeights lw = w.layer(l);
    batch = conv_batch(lw.kernel, batch, n);
    const Eigen::MatrixXd d = apply_derivative(a, states[l].preactivations);
    for (int u = 0; u < dim; ++u) batch.middleCols(static_cast<Eigen::Index>(u) * n, n).array() *= d.array();
  }
  const int cout = static_cast<int>(batch.rows());
  Eigen::MatrixXd j(static_cast<Eigen::Index>(cout) * n, dim);
  for (int u = 0; u < dim; ++u)
    j.col(u) = Eigen::Map<const Eigen::VectorXd>(
        batch.middleCols(static_cast<Eigen::Index>(u) * n, n).eval().data(),
        static_cast<Eigen::Index>(cout) * n);
  return j;
}

double singular_value_spread(const std::vector<double>& sv, double rel_zero) {
  if (sv.empty()) throw InvalidArgument("no singular values");
  const double top = *std::max_element(sv.begin(), sv.end());
  double low = top;
  for (double s : sv)
    if (s > rel_zero * top) low = std::min(low, s);
  return top / low;
}

}  // namespace mfcnn
