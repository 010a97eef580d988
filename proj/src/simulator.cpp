#include "mfcnn/simulator.hpp"

#include <cmath>
#include <limits>

#include "mfcnn/errors.hpp"
#include "mfcnn/parallel.hpp"

namespace mfcnn {

void SimNetworkConfig::validate() const {
  if (depth < 1) throw InvalidArgument("network depth must be at least 1");
  if (channels < 1) throw InvalidArgument("channel count must be positive");
  if (spatial < v.taps()) throw DimensionError("kernel wider than spatial size");
  params.validate();
}

RandomWeights::RandomWeights(SimNetworkConfig config) : config_(std::move(config)) {
  config_.validate();
}

LayerWeights RandomWeights::layer(int l) const {
  if (l < 1 || l > config_.depth) throw InvalidArgument("layer index out of range");
  RandomSource rng = RandomSource(config_.seed).substream(static_cast<std::uint64_t>(l));
  const int c = config_.channels;
  const double sw = std::sqrt(config_.params.sigma_w_sq);
  LayerWeights out;
  switch (config_.init) {
    case WeightInit::gaussian:
      out.kernel = gaussian_kernel(c, c, config_.params.sigma_w_sq, config_.v, rng);
      break;
    case WeightInit::orthogonal:
      out.kernel = orthogonal_kernel(config_.v.taps(), c, c, rng, sw, 1);
      break;
    case WeightInit::delta_orthogonal:
      out.kernel = delta_orthogonal_kernel(config_.v.taps(), c, c, sw, rng, 1);
      break;
  }
  out.bias.resize(c);
  const double sb = std::sqrt(config_.params.sigma_b_sq);
  for (int j = 0; j < c; ++j) out.bias[j] = sb * rng.normal();
  return out;
}

FixedWeights materialize(const WeightSource& w) {
  std::vector<LayerWeights> layers;
  for (int l = 1; l <= w.depth(); ++l) layers.push_back(w.layer(l));
  return FixedWeights(std::move(layers));
}

namespace {

// out col (b·n + a) = x col (b·n + (a + shift) mod n)
void shift_blocks(const Eigen::MatrixXd& x, int n, int shift, Eigen::MatrixXd& out) {
  const int blocks = static_cast<int>(x.cols()) / n;
  out.resize(x.rows(), x.cols());
  const int s = ((shift % n) + n) % n;
  for (int b = 0; b < blocks; ++b) {
    const int base = b * n;
    if (s == 0) {
      out.middleCols(base, n) = x.middleCols(base, n);
    } else {
      out.middleCols(base, n - s) = x.middleCols(base + s, n - s);
      out.middleCols(base + n - s, s) = x.middleCols(base, s);
    }
  }
}

void check_batch(const ConvKernel& k, const Eigen::MatrixXd& x, int n, int channels) {
  if (k.rank() != 1) throw DimensionError("simulator kernels are one-dimensional");
  if (n < 1 || x.cols() % n != 0) throw DimensionError("batch width is not a multiple of n");
  if (x.rows() != channels) throw DimensionError("channel count mismatch");
}

}  // namespace

Eigen::MatrixXd conv_batch(const ConvKernel& k, const Eigen::MatrixXd& x, int n) {
  check_batch(k, x, n, k.c_in());
  const int mid = k.k_size() / 2;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(k.c_out(), x.cols());
  Eigen::MatrixXd shifted;
  for (int t = 0; t < k.k_size(); ++t) {
    const auto tap = k.tap(t);
    if (tap.isZero(0.0)) continue;
    shift_blocks(x, n, t - mid, shifted);
    y.noalias() += tap.transpose() * shifted;
  }
  return y;
}

Eigen::MatrixXd conv_batch_adjoint(const ConvKernel& k, const Eigen::MatrixXd& y, int n) {
  check_batch(k, y, n, k.c_out());
  const int mid = k.k_size() / 2;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k.c_in(), y.cols());
  Eigen::MatrixXd z, back;
  for (int t = 0; t < k.k_size(); ++t) {
    const auto tap = k.tap(t);
    if (tap.isZero(0.0)) continue;
    z.noalias() = tap * y;
    shift_blocks(z, n, -(t - mid), back);
    x += back;
  }
  return x;
}

Eigen::MatrixXd apply_activation(const ActivationProfile& a, const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out(h.rows(), h.cols());
  const double* src = h.data();
  double* dst = out.data();
  for (Eigen::Index i = 0; i < h.size(); ++i) dst[i] = a.value(src[i]);
  return out;
}

Eigen::MatrixXd apply_derivative(const ActivationProfile& a, const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out(h.rows(), h.cols());
  const double* src = h.data();
  double* dst = out.data();
  for (Eigen::Index i = 0; i < h.size(); ++i) dst[i] = a.deriv1(src[i]);
  return out;
}

std::vector<LayerState> forward(const WeightSource& w, const ActivationProfile& a,
                                const Eigen::MatrixXd& h0, int n) {
  std::vector<LayerState> states;
  states.reserve(w.depth() + 1);
  states.push_back({h0});
  for (int l = 1; l <= w.depth(); ++l) {
    const LayerWeights lw = w.layer(l);
    Eigen::MatrixXd h = conv_batch(lw.kernel, apply_activation(a, states.back().preactivations), n);
    h.colwise() += lw.bias;
    if (!h.allFinite()) throw NumericOverflowError("forward pass overflow at layer " + std::to_string(l));
    states.push_back({std::move(h)});
  }
  return states;
}

std::vector<LayerState> forward(const SimNetworkConfig& config, const Eigen::MatrixXd& h0) {
  if (h0.rows() != config.channels || h0.cols() != config.spatial)
    throw DimensionError("input must be channels x spatial");
  return forward(RandomWeights(config), config.params.activation, h0, config.spatial);
}

Eigen::MatrixXd sample_input(const CovarianceMatrix& s, int channels, RandomSource& rng) {
  const int n = s.size();
  // Cholesky factor; both choices below depend continuously on S, which the
  // paired estimator relies on.
  Eigen::MatrixXd root;
  Eigen::LLT<Eigen::MatrixXd> llt(s.matrix());
  if (llt.info() == Eigen::Success) {
    root = llt.matrixL();
  } else {
    // semidefinite: principal square root
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix());
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }
  Eigen::MatrixXd z(channels, n);
  for (int i = 0; i < channels; ++i)
    for (int a = 0; a < n; ++a) z(i, a) = rng.normal();
  return z * root.transpose();
}

namespace {

struct Accumulator {
  std::vector<Eigen::MatrixXd> sum, sumsq;

  void add(const std::vector<Eigen::MatrixXd>& est) {
    if (sum.empty()) {
      for (const auto& e : est) {
        sum.push_back(Eigen::MatrixXd::Zero(e.rows(), e.cols()));
        sumsq.push_back(Eigen::MatrixXd::Zero(e.rows(), e.cols()));
      }
    }
    for (std::size_t l = 0; l < est.size(); ++l) {
      sum[l] += est[l];
      sumsq[l] += est[l].cwiseProduct(est[l]);
    }
  }

  EnsembleCovariance finish(int m) const {
    EnsembleCovariance out;
    out.samples = m;
    for (std::size_t l = 0; l < sum.size(); ++l) {
      Eigen::MatrixXd mean = sum[l] / m;
      Eigen::MatrixXd var = (sumsq[l] / m - mean.cwiseProduct(mean)) * (double(m) / (m - 1));
      out.std_error.push_back((var.cwiseMax(0.0) / m).cwiseSqrt());
      out.mean.push_back(std::move(mean));
    }
    return out;
  }
};

std::vector<Eigen::MatrixXd> gram_trajectory(const std::vector<LayerState>& states) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& s : states) {
    const auto& h = s.preactivations;
    out.push_back(h.transpose() * h / static_cast<double>(h.rows()));
  }
  return out;
}

EnsembleCovariance run_ensemble(const SimNetworkConfig& config, int members,
                                const std::function<std::vector<Eigen::MatrixXd>(int)>& member) {
  config.validate();
  if (members < 2) throw InvalidArgument("ensemble needs at least 2 members");
  std::vector<std::vector<Eigen::MatrixXd>> results(members);
  parallel_for(members, [&](int m) { results[m] = member(m); });
  Accumulator acc;
  for (const auto& r : results) acc.add(r);
  return acc.finish(members);
}

SimNetworkConfig member_config(const SimNetworkConfig& config, int m) {
  SimNetworkConfig c = config;
  c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(m));
  return c;
}

// input draws use a stream disjoint from the layer streams (ids 1..L)
constexpr std::uint64_t kInputStream = 0xFFFFFFFFULL;

}  // namespace

EnsembleCovariance empirical_covariance(const SimNetworkConfig& config, const Eigen::MatrixXd& h0,
                                        int members) {
  return run_ensemble(config, members, [&](int m) {
    return gram_trajectory(forward(member_config(config, m), h0));
  });
}

EnsembleCovariance empirical_covariance(const SimNetworkConfig& config,
                                        const CovarianceMatrix& input_cov, int members) {
  if (input_cov.size() != config.spatial) throw DimensionError("input covariance must be n x n");
  return run_ensemble(config, members, [&](int m) {
    const SimNetworkConfig mc = member_config(config, m);
    RandomSource rng = RandomSource(mc.seed).substream(kInputStream);
    return gram_trajectory(forward(mc, sample_input(input_cov, config.channels, rng)));
  });
}

EnsembleCovariance paired_covariance_difference(const SimNetworkConfig& config,
                                                const CovarianceMatrix& reference,
                                                const CovarianceMatrix& perturbed, int members) {
  const int n = config.spatial;
  if (reference.size() != n || perturbed.size() != n)
    throw DimensionError("input covariances must be n x n");
  return run_ensemble(config, members, [&](int m) {
    const SimNetworkConfig mc = member_config(config, m);
    RandomSource rng = RandomSource(mc.seed).substream(kInputStream);
    RandomSource rng2 = rng;  // identical draws for both inputs
    Eigen::MatrixXd batch(config.channels, 2 * n);
    batch.leftCols(n) = sample_input(reference, config.channels, rng);
    batch.rightCols(n) = sample_input(perturbed, config.channels, rng2);
    const auto states = forward(RandomWeights(mc), config.params.activation, batch, n);
    std::vector<Eigen::MatrixXd> diff;
    for (const auto& s : states) {
      const auto& h = s.preactivations;
      const double c = static_cast<double>(h.rows());
      diff.push_back((h.leftCols(n).transpose() * h.leftCols(n) -
                      h.rightCols(n).transpose() * h.rightCols(n)) / c);
    }
    return diff;
  });
}

namespace {

// Gram of the shifted signal: (S_β X)ᵀ(S_β X)(a, b) = G(a+β, b+β).
double shifted_gram_dot(const Eigen::MatrixXd& gx, const Eigen::MatrixXd& gd, int shift) {
  const int n = static_cast<int>(gx.rows());
  double acc = 0.0;
  for (int b = 0; b < n; ++b) {
    const int bb = ((b + shift) % n + n) % n;
    for (int a = 0; a < n; ++a) acc += gx(((a + shift) % n + n) % n, bb) * gd(a, b);
  }
  return acc;
}

}  // namespace

GradientProfile backward_gradient_norms(const WeightSource& w, const ActivationProfile& a,
                                        const Eigen::MatrixXd& h0, int n) {
  const int depth = w.depth();
  GradientProfile out;
  out.squared_norms.assign(depth, std::numeric_limits<double>::quiet_NaN());
  out.relative.assign(depth, std::numeric_limits<double>::quiet_NaN());

  std::vector<LayerState> states;
  try {
    states = forward(w, a, h0, n);
  } catch (const NumericOverflowError&) {
    out.overflow = true;
    return out;
  }
  Eigen::MatrixXd delta = Eigen::MatrixXd::Ones(states.back().preactivations.rows(), n);
  for (int l = depth; l >= 1; --l) {
    const LayerWeights lw = w.layer(l);
    const Eigen::MatrixXd& hprev = states[l - 1].preactivations;
    const Eigen::MatrixXd x = apply_activation(a, hprev);
    const Eigen::MatrixXd gx = x.transpose() * x;
    const Eigen::MatrixXd gd = delta.transpose() * delta;
    const int mid = lw.kernel.k_size() / 2;
    double norm = 0.0;
    for (int t = 0; t < lw.kernel.k_size(); ++t) norm += shifted_gram_dot(gx, gd, t - mid);
    if (!std::isfinite(norm)) {
      out.overflow = true;
      break;
    }
    out.squared_norms[l - 1] = norm;
    if (l > 1) {
      delta = apply_derivative(a, hprev).cwiseProduct(conv_batch_adjoint(lw.kernel, delta, n));
      if (!delta.allFinite()) {
        out.overflow = true;
        break;
      }
    }
  }
  const double last = out.squared_norms[depth - 1];
  for (int l = 0; l < depth; ++l) out.relative[l] = out.squared_norms[l] / last;
  return out;
}

GradientProfile backward_gradient_norms(const SimNetworkConfig& config, const Eigen::MatrixXd& h0) {
  if (h0.rows() != config.channels || h0.cols() != config.spatial)
    throw DimensionError("input must be channels x spatial");
  return backward_gradient_norms(RandomWeights(config), config.params.activation, h0,
                                 config.spatial);
}

std::vector<LayerWeights> loss_gradients(const WeightSource& w, const ActivationProfile& a,
                                         const Eigen::MatrixXd& h0, int n) {
  const auto states = forward(w, a, h0, n);
  const int depth = w.depth();
  std::vector<LayerWeights> grads(depth);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Ones(states.back().preactivations.rows(), n);
  Eigen::MatrixXd shifted;
  for (int l = depth; l >= 1; --l) {
    const LayerWeights lw = w.layer(l);
    const Eigen::MatrixXd& hprev = states[l - 1].preactivations;
    const Eigen::MatrixXd x = apply_activation(a, hprev);
    const ConvKernel& k = lw.kernel;
    ConvKernel g(1, k.k_size(), k.c_in(), k.c_out());
    const int mid = k.k_size() / 2;
    for (int t = 0; t < k.k_size(); ++t) {
      shift_blocks(x, n, t - mid, shifted);
      g.tap(t) = shifted * delta.transpose();
    }
    grads[l - 1].kernel = std::move(g);
    grads[l - 1].bias = delta.rowwise().sum();
    if (l > 1) delta = apply_derivative(a, hprev).cwiseProduct(conv_batch_adjoint(k, delta, n));
  }
  return grads;
}

namespace {

// Straight loops in long double; shares nothing with the Eigen forward pass.
long double reference_loss(const std::vector<LayerWeights>& layers, const ActivationProfile& a,
                           const Eigen::MatrixXd& h0, int n) {
  auto phi = [&](long double x) -> long double {
    return a.value_ext ? a.value_ext(x) : static_cast<long double>(a.value(static_cast<double>(x)));
  };
  const int c0 = static_cast<int>(h0.rows());
  std::vector<std::vector<long double>> h(c0, std::vector<long double>(n));
  for (int i = 0; i < c0; ++i)
    for (int p = 0; p < n; ++p) h[i][p] = h0(i, p);
  for (const auto& lw : layers) {
    const ConvKernel& k = lw.kernel;
    const int mid = k.k_size() / 2;
    std::vector<std::vector<long double>> next(k.c_out(), std::vector<long double>(n, 0.0L));
    for (int j = 0; j < k.c_out(); ++j)
      for (int p = 0; p < n; ++p) {
        long double acc = lw.bias[j];
        for (int t = 0; t < k.k_size(); ++t) {
          const int src = ((p + t - mid) % n + n) % n;
          for (int i = 0; i < k.c_in(); ++i) acc += phi(h[i][src]) * k.tap(t)(i, j);
        }
        next[j][p] = acc;
      }
    h = std::move(next);
  }
  long double total = 0.0L;
  for (const auto& row : h)
    for (long double x : row) total += x;
  return total;
}

}  // namespace

double gradient_check(const FixedWeights& w, const ActivationProfile& a, const Eigen::MatrixXd& h0,
                      int n, double step) {
  const auto grads = loss_gradients(w, a, h0, n);
  std::vector<LayerWeights> layers;
  for (int l = 1; l <= w.depth(); ++l) layers.push_back(w.layer(l));

  // Richardson-extrapolated central difference, O(step⁴) truncation.
  auto fd = [&](double* param) {
    const double saved = *param;
    auto at = [&](double d) {
      *param = saved + d;
      return reference_loss(layers, a, h0, n);
    };
    const long double d1 = (at(step) - at(-step)) / (2.0L * step);
    const long double d2 = (at(2 * step) - at(-2 * step)) / (4.0L * step);
    *param = saved;
    return static_cast<double>((4.0L * d1 - d2) / 3.0L);
  };
  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    worst = std::max(worst, std::fabs(analytic - numeric) / (std::fabs(analytic) + 1e-12));
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& wts = layers[l].kernel.weights();
    const auto& gw = grads[l].kernel.weights();
    for (std::size_t i = 0; i < wts.size(); ++i) compare(gw[i], fd(&wts[i]));
    for (int j = 0; j < layers[l].bias.size(); ++j) compare(grads[l].bias[j], fd(&layers[l].bias[j]));
  }
  return worst;
}

double gradient_check(const SimNetworkConfig& config, double step) {
  config.validate();
  if (config.channels > 4 || config.spatial > 6 || config.depth > 3)
    throw InvalidArgument("gradient_check is for tiny networks (c <= 4, n <= 6, L <= 3)");
  const FixedWeights w = materialize(RandomWeights(config));
  RandomSource rng = RandomSource(config.seed).substream(kInputStream);
  Eigen::MatrixXd h0(config.channels, config.spatial);
  for (int i = 0; i < h0.rows(); ++i)
    for (int p = 0; p < h0.cols(); ++p) h0(i, p) = rng.normal();
  return gradient_check(w, config.params.activation, h0, config.spatial, step);
}

}  // namespace mfcnn
