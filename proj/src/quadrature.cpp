#include "mfcnn/quadrature.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "mfcnn/errors.hpp"

namespace mfcnn {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come from
// the first eigenvector component.
void golub_welsch(const Eigen::VectorXd& offdiag, double mu0, std::vector<double>& x,
                  std::vector<double>& w) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    w[i] = mu0 * v0 * v0;
  }
  // exact symmetry
  for (int i = 0; i < n / 2; ++i) {
    const double a = 0.5 * (x[n - 1 - i] - x[i]);
    const double b = 0.5 * (w[i] + w[n - 1 - i]);
    x[i] = -a;
    x[n - 1 - i] = a;
    w[i] = w[n - 1 - i] = b;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

void check_finite(double v, const char* where) {
  if (!std::isfinite(v)) throw NumericOverflowError(std::string(where) + ": non-finite integrand");
}

}  // namespace

QuadratureRule::QuadratureRule(Kind kind, std::vector<double> nodes, std::vector<double> weights,
                               int panels, int points, double half_range)
    : kind_(kind), nodes_(std::move(nodes)), weights_(std::move(weights)),
      panels_(panels), points_(points), half_range_(half_range) {
  unodes_.resize(nodes_.size());
  uweights_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    unodes_[i] = std::numbers::sqrt2 * nodes_[i];
    uweights_[i] = weights_[i] / std::sqrt(std::numbers::pi);
  }
}

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1) throw InvalidArgument("quadrature order must be positive");
  Eigen::VectorXd off(order - 1);
  for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(0.5 * k);
  std::vector<double> x, w;
  golub_welsch(off, std::sqrt(std::numbers::pi), x, w);
  return QuadratureRule(Kind::gauss_hermite, std::move(x), std::move(w), 0, order, 0.0);
}

QuadratureRule QuadratureRule::composite_legendre(int panels, int points, double half_range) {
  if (panels < 1 || points < 1 || !(half_range > 0))
    throw InvalidArgument("composite rule needs positive panels, points and range");
  Eigen::VectorXd off(points - 1);
  for (int k = 1; k < points; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  std::vector<double> t, tw;
  golub_welsch(off, 2.0, t, tw);

  const double h = 2.0 * half_range / panels;
  std::vector<double> x, w;
  x.reserve(panels * points);
  w.reserve(panels * points);
  for (int p = 0; p < panels; ++p) {
    const double mid = -half_range + (p + 0.5) * h;
    for (int i = 0; i < points; ++i) {
      const double xi = mid + 0.5 * h * t[i];
      x.push_back(xi);
      w.push_back(0.5 * h * tw[i] * std::exp(-xi * xi));
    }
  }
  return QuadratureRule(Kind::composite_legendre, std::move(x), std::move(w), panels, points,
                        half_range);
}

const QuadratureRule& QuadratureRule::standard() {
  static const QuadratureRule rule = composite_legendre(26, 12, 6.5);
  return rule;
}

QuadratureRule QuadratureRule::refined() const {
  if (kind_ == Kind::gauss_hermite) return gauss_hermite(2 * order());
  return composite_legendre(2 * panels_, points_, half_range_);
}

double gaussian_expectation(const std::function<double(double)>& f, double q,
                            const QuadratureRule& rule) {
  if (q < 0) throw InvalidArgument("variance must be nonnegative");
  const double s = std::sqrt(q);
  const double r = rule.expectation([&](double u) { return f(s * u); });
  check_finite(r, "gaussian_expectation");
  return r;
}

namespace {

void check_pair_args(double q1, double q2, double& c) {
  if (!(q1 > 0) || !(q2 > 0)) throw InvalidArgument("pair expectation needs q1, q2 > 0");
  if (!(std::fabs(c) <= 1.0 + 1e-12)) throw InvalidArgument("correlation outside [-1, 1]");
  c = std::clamp(c, -1.0, 1.0);
}

}  // namespace

double gaussian_pair_expectation(const PairFunction& f, double q1, double q2, double c,
                                 const QuadratureRule& rule) {
  check_pair_args(q1, q2, c);
  const auto& u = rule.normal_nodes();
  const auto& w = rule.normal_weights();
  const double s1 = std::sqrt(q1), s2 = std::sqrt(q2);
  const std::size_t m = u.size();
  double acc = 0.0;
  if (std::fabs(c) == 1.0) {
    for (std::size_t i = 0; i < m; ++i) acc += w[i] * f(s1 * u[i], c * s2 * u[i]);
  } else {
    const double sc = std::sqrt((1.0 - c) * (1.0 + c));
    for (std::size_t i = 0; i < m; ++i) {
      double inner = 0.0;
      const double z1 = s1 * u[i];
      const double base = c * u[i];
      for (std::size_t j = 0; j < m; ++j) inner += w[j] * f(z1, s2 * (base + sc * u[j]));
      acc += w[i] * inner;
    }
  }
  check_finite(acc, "gaussian_pair_expectation");
  return acc;
}

double gaussian_product_expectation(const std::function<double(double)>& g,
                                    const std::function<double(double)>& h, double q1,
                                    double q2, double c, const QuadratureRule& rule) {
  check_pair_args(q1, q2, c);
  const auto& u = rule.normal_nodes();
  const auto& w = rule.normal_weights();
  const double s1 = std::sqrt(q1), s2 = std::sqrt(q2);
  const std::size_t m = u.size();
  double acc = 0.0;
  if (std::fabs(c) == 1.0) {
    for (std::size_t i = 0; i < m; ++i) acc += w[i] * g(s1 * u[i]) * h(c * s2 * u[i]);
  } else {
    const double sc = std::sqrt((1.0 - c) * (1.0 + c));
    for (std::size_t i = 0; i < m; ++i) {
      const double gi = g(s1 * u[i]);
      if (gi == 0.0) continue;
      double inner = 0.0;
      const double base = c * u[i];
      for (std::size_t j = 0; j < m; ++j) inner += w[j] * h(s2 * (base + sc * u[j]));
      acc += w[i] * gi * inner;
    }
  }
  check_finite(acc, "gaussian_product_expectation");
  return acc;
}

}  // namespace mfcnn
