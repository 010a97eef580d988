#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace mfcnn {

// One-dimensional rule for ∫ f(x) e^{-x²} dx, weights summing to √π.
// Expectations under a standard normal use nodes √2·x and weights w/√π.
class QuadratureRule {
 public:
  enum class Kind { gauss_hermite, composite_legendre };

  static QuadratureRule gauss_hermite(int order);
  // `panels` Gauss-Legendre panels of `points` nodes each on [-half_range, half_range],
  // with the Gaussian weight folded into the weights.
  static QuadratureRule composite_legendre(int panels, int points, double half_range);
  // Default rule used throughout the library.
  static const QuadratureRule& standard();

  // Same family at twice the node count: GH order doubled, or panels halved.
  QuadratureRule refined() const;

  int order() const { return static_cast<int>(nodes_.size()); }
  Kind kind() const { return kind_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  // standard-normal form: E f(u) ≈ Σ normal_weights[i] f(normal_nodes[i])
  const std::vector<double>& normal_nodes() const { return unodes_; }
  const std::vector<double>& normal_weights() const { return uweights_; }

  template <class F>
  double expectation(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < unodes_.size(); ++i) acc += uweights_[i] * f(unodes_[i]);
    return acc;
  }

 private:
  QuadratureRule(Kind kind, std::vector<double> nodes, std::vector<double> weights,
                 int panels, int points, double half_range);

  Kind kind_;
  std::vector<double> nodes_, weights_;
  std::vector<double> unodes_, uweights_;
  int panels_ = 0, points_ = 0;
  double half_range_ = 0.0;
};

using PairFunction = std::function<double(double, double)>;

// E f(√q·u)
double gaussian_expectation(const std::function<double(double)>& f, double q,
                            const QuadratureRule& rule = QuadratureRule::standard());

// E f(z1, z2), z1 = √q1·u1, z2 = √q2·(c·u1 + √(1−c²)·u2).
// |c| = 1 is integrated as a one-dimensional rule.
double gaussian_pair_expectation(const PairFunction& f, double q1, double q2, double c,
                                 const QuadratureRule& rule = QuadratureRule::standard());

// Same, for a product g(z1)·h(z2); evaluates g only once per outer node.
double gaussian_product_expectation(const std::function<double(double)>& g,
                                    const std::function<double(double)>& h, double q1,
                                    double q2, double c,
                                    const QuadratureRule& rule = QuadratureRule::standard());

}  // namespace mfcnn
