#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mfcnn/covariance.hpp"
#include "mfcnn/kernels.hpp"
#include "mfcnn/mean_field.hpp"

namespace mfcnn {

enum class WeightInit { gaussian, orthogonal, delta_orthogonal };

// 1D periodic CNN: h^{l} = K^l ∗ φ(h^{l−1}) + b^l, l = 1..L, h^0 the input.
struct SimNetworkConfig {
  int depth = 1;
  int channels = 1;
  int spatial = 1;
  VarianceVector v = VarianceVector::one_hot(0);
  MeanFieldParams params;
  std::uint64_t seed = 0;
  WeightInit init = WeightInit::gaussian;

  int half_width() const { return v.half_width(); }
  void validate() const;
};

struct LayerWeights {
  ConvKernel kernel;      // rank 1, 2k+1 taps of c×c
  Eigen::VectorXd bias;   // c
};

class WeightSource {
 public:
  virtual ~WeightSource() = default;
  virtual int depth() const = 0;
  // l in 1..depth
  virtual LayerWeights layer(int l) const = 0;
};

// Regenerates layer l from its own sub-stream on every call, so a deep,
// wide network never has to be held in memory.
class RandomWeights final : public WeightSource {
 public:
  explicit RandomWeights(SimNetworkConfig config);
  int depth() const override { return config_.depth; }
  LayerWeights layer(int l) const override;

 private:
  SimNetworkConfig config_;
};

class FixedWeights final : public WeightSource {
 public:
  explicit FixedWeights(std::vector<LayerWeights> layers) : layers_(std::move(layers)) {}
  int depth() const override { return static_cast<int>(layers_.size()); }
  LayerWeights layer(int l) const override { return layers_.at(l - 1); }
  std::vector<LayerWeights>& layers() { return layers_; }

 private:
  std::vector<LayerWeights> layers_;
};

FixedWeights materialize(const WeightSource& w);

struct LayerState {
  Eigen::MatrixXd preactivations;  // c×n
};

// Periodic convolution of a batch: x is c_in × (B·n), each n-column block a signal.
Eigen::MatrixXd conv_batch(const ConvKernel& k, const Eigen::MatrixXd& x, int n);
// Adjoint of conv_batch (used by the backward pass).
Eigen::MatrixXd conv_batch_adjoint(const ConvKernel& k, const Eigen::MatrixXd& y, int n);

Eigen::MatrixXd apply_activation(const ActivationProfile& a, const Eigen::MatrixXd& h);
Eigen::MatrixXd apply_derivative(const ActivationProfile& a, const Eigen::MatrixXd& h);

std::vector<LayerState> forward(const WeightSource& w, const ActivationProfile& a,
                                const Eigen::MatrixXd& h0, int n);
std::vector<LayerState> forward(const SimNetworkConfig& config, const Eigen::MatrixXd& h0);

// c×n Gaussian input whose channels are iid N(0, S).
Eigen::MatrixXd sample_input(const CovarianceMatrix& s, int channels, RandomSource& rng);

struct EnsembleCovariance {
  std::vector<Eigen::MatrixXd> mean;       // per layer 0..L
  std::vector<Eigen::MatrixXd> std_error;  // per layer
  int samples = 0;
};

// Member m uses weights from derive_seed(config.seed, m). With a fixed input
// every member sees h0; otherwise each member draws iid channels from input_cov.
EnsembleCovariance empirical_covariance(const SimNetworkConfig& config, const Eigen::MatrixXd& h0,
                                        int members);
EnsembleCovariance empirical_covariance(const SimNetworkConfig& config,
                                        const CovarianceMatrix& input_cov, int members);

// Σ̂_ref − Σ̂_pert per layer, both estimated on the same weights and the same
// underlying normal draws (inputs L_ref·z and L_pert·z).
EnsembleCovariance paired_covariance_difference(const SimNetworkConfig& config,
                                                const CovarianceMatrix& reference,
                                                const CovarianceMatrix& perturbed, int members);

struct GradientProfile {
  std::vector<double> squared_norms;  // ‖∇_{ω^l} Σh^L‖², l = 1..L
  std::vector<double> relative;       // normalized by the last layer
  bool overflow = false;              // non-finite values met; entries past it are NaN
};

GradientProfile backward_gradient_norms(const SimNetworkConfig& config, const Eigen::MatrixXd& h0);
GradientProfile backward_gradient_norms(const WeightSource& w, const ActivationProfile& a,
                                        const Eigen::MatrixXd& h0, int n);

// Gradients of Σh^L with respect to every kernel tap and bias.
std::vector<LayerWeights> loss_gradients(const WeightSource& w, const ActivationProfile& a,
                                         const Eigen::MatrixXd& h0, int n);

// Max relative error between loss_gradients and central differences (step 1e-5)
// of an independent extended-precision forward pass.
double gradient_check(const SimNetworkConfig& config, double step = 1e-5);
double gradient_check(const FixedWeights& w, const ActivationProfile& a, const Eigen::MatrixXd& h0,
                      int n, double step = 1e-5);

}  // namespace mfcnn
