#include "mfcnn/mean_field.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "mfcnn/errors.hpp"

namespace mfcnn {

void MeanFieldParams::validate() const {
  if (!std::isfinite(sigma_w_sq) || sigma_w_sq < 0)
    throw InvalidArgument("sigma_w_sq must be finite and nonnegative");
  if (!std::isfinite(sigma_b_sq) || sigma_b_sq < 0)
    throw InvalidArgument("sigma_b_sq must be finite and nonnegative");
  if (!activation.value || !activation.deriv1 || !activation.deriv2)
    throw InvalidArgument("activation profile is incomplete");
}

double cmap_pair(const MeanFieldParams& p, double q1, double q2, double c,
                 const QuadratureRule& rule) {
  if (q1 < 0 || q2 < 0) throw InvalidArgument("cmap needs nonnegative variances");
  const auto& phi = p.activation.value;
  if (q1 == 0 || q2 == 0) {
    // one side is the constant φ(0)
    if (q1 == 0 && q2 == 0) return p.sigma_w_sq * phi(0.0) * phi(0.0) + p.sigma_b_sq;
    const double other = gaussian_expectation(phi, q1 == 0 ? q2 : q1, rule);
    return p.sigma_w_sq * phi(0.0) * other + p.sigma_b_sq;
  }
  return p.sigma_w_sq * gaussian_product_expectation(phi, phi, q1, q2, c, rule) + p.sigma_b_sq;
}

double cmap_scalar(const MeanFieldParams& p, double q, double c, const QuadratureRule& rule) {
  return cmap_pair(p, q, q, c, rule);
}

double chi_c(const MeanFieldParams& p, double q, double c, const QuadratureRule& rule) {
  if (q < 0) throw InvalidArgument("chi_c needs q >= 0");
  const auto& d1 = p.activation.deriv1;
  if (q == 0) return p.sigma_w_sq * d1(0.0) * d1(0.0);
  return p.sigma_w_sq * gaussian_product_expectation(d1, d1, q, q, c, rule);
}

double chi_q(const MeanFieldParams& p, double q, const QuadratureRule& rule) {
  if (q < 0) throw InvalidArgument("chi_q needs q >= 0");
  const auto& a = p.activation;
  auto integrand = [&](double x) {
    const double d = a.deriv1(x);
    return a.deriv2(x) * a.value(x) + d * d;
  };
  if (q == 0) return p.sigma_w_sq * integrand(0.0);
  return p.sigma_w_sq * gaussian_expectation(integrand, q, rule);
}

double kappa(const MeanFieldParams& p, double q, double c, const QuadratureRule& rule) {
  if (q < 0) throw InvalidArgument("kappa needs q >= 0");
  const auto& a = p.activation;
  if (q == 0) return 0.5 * p.sigma_w_sq * a.value(0.0) * a.deriv2(0.0);
  return 0.5 * p.sigma_w_sq * gaussian_product_expectation(a.value, a.deriv2, q, q, c, rule);
}

namespace {

constexpr double kHuge = 1e150;

// Root of r on a bracket grown from `start`; r must be positive at small q.
double bracket_root(const std::function<double(double)>& r, double start, int max_iter,
                    bool relative) {
  double lo = start, hi = start;
  double rlo = r(lo);
  while (!(rlo > 0)) {
    lo *= 0.5;
    if (lo < 1e-200) throw ConvergenceError("q* solver: no positive residual near 0", rlo, 0);
    rlo = r(lo);
  }
  double rhi = r(hi);
  while (!(rhi < 0)) {
    hi *= 2.0;
    if (hi > kHuge) throw DivergenceError("q* solver: variance map has no finite fixed point", rhi, 0);
    rhi = r(hi);
  }
  if (lo == hi) lo = hi * 0.5, rlo = r(lo);
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto res = boost::math::tools::toms748_solve(
      r, lo, hi, rlo, rhi, boost::math::tools::eps_tolerance<double>(relative ? 50 : 52), iters);
  return 0.5 * (res.first + res.second);
}

}  // namespace

double solve_q_star(const MeanFieldParams& p, double q_init, double tol, int max_iter,
                    const QuadratureRule& rule) {
  p.validate();
  if (!(tol > 0)) throw InvalidArgument("tol must be positive");
  if (!(q_init > 0)) throw InvalidArgument("q_init must be positive");
  const auto& a = p.activation;
  auto F = [&](double q) { return cmap_scalar(p, q, 1.0, rule); };

  if (p.sigma_b_sq == 0.0 && a.value(0.0) == 0.0) {
    // q = 0 is always fixed; a positive fixed point exists only if it is unstable.
    const double slope = p.sigma_w_sq * a.deriv1(0.0) * a.deriv1(0.0);
    if (slope <= 1.0) return 0.0;
    // Solve F(q)/q = 1 so that tiny q* near criticality keep relative accuracy.
    auto r = [&](double q) { return F(q) / q - 1.0; };
    return bracket_root(r, std::min(q_init, 1.0), max_iter, true);
  }

  double q = q_init;
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const double next = F(q);
    if (!std::isfinite(next) || next > kHuge)
      throw DivergenceError("q* solver: variance map diverges", next - q, it);
    resid = std::fabs(next - q);
    if (resid < tol) return q;
    if (next < tol) return 0.0;
    q = next;
  }
  // Marginal contraction; fall back to a bracketed root of F(q) − q.
  try {
    const double root = bracket_root([&](double x) { return F(x) - x; }, q, max_iter, false);
    if (std::fabs(F(root) - root) < tol) return root;
  } catch (const DivergenceError&) {
    throw;
  } catch (const Error&) {
  }
  throw ConvergenceError("q* solver did not converge, residual " + std::to_string(resid), resid,
                         max_iter);
}

double solve_c_star(const MeanFieldParams& p, double q_star, double tol, int max_iter,
                    const QuadratureRule& rule) {
  p.validate();
  if (!(tol > 0)) throw InvalidArgument("tol must be positive");
  if (q_star < 0) throw InvalidArgument("q_star must be nonnegative");
  if (q_star == 0.0) return 1.0;
  if (chi_c(p, q_star, 1.0, rule) <= 1.0) return 1.0;

  auto g = [&](double c) { return cmap_scalar(p, q_star, c, rule) / q_star - c; };

  // g(−1) ≥ 0 always; find a point just below 1 where g < 0.
  double a = -1.0, b = 1.0;
  for (double delta = 1e-3; delta >= 1e-13; delta *= 0.1) {
    if (g(1.0 - delta) < 0) {
      b = 1.0 - delta;
      break;
    }
  }
  if (b == 1.0) return 1.0;  // marginal: no interior crossing resolvable

  // Newton steps on g (g′ = χ_c − 1), bisection when a step leaves the bracket.
  double c = (0.5 > a && 0.5 < b) ? 0.5 : 0.5 * (a + b);
  double gc = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    gc = g(c);
    if (std::fabs(gc) < tol) return c;
    if (gc > 0)
      a = c;
    else
      b = c;
    const double slope = chi_c(p, q_star, c, rule) - 1.0;
    double next = slope != 0.0 ? c - gc / slope : a - 1.0;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (b - a < 1e-15) return next;
    c = next;
  }
  throw ConvergenceError("c* solver did not converge", gc, max_iter);
}

CriticalPoint solve_critical_point(const MeanFieldParams& p, double tol, int max_iter,
                                   const QuadratureRule& rule) {
  CriticalPoint cp;
  cp.q_star = solve_q_star(p, 1.0, tol, max_iter, rule);
  cp.c_star = solve_c_star(p, cp.q_star, tol, max_iter, rule);
  cp.chi_q = chi_q(p, cp.q_star, rule);
  cp.chi_c = chi_c(p, cp.q_star, cp.c_star, rule);
  cp.chi1 = cp.c_star == 1.0 ? cp.chi_c : chi_c(p, cp.q_star, 1.0, rule);
  cp.kappa = kappa(p, cp.q_star, cp.c_star, rule);
  return cp;
}

double criticality_gap(const MeanFieldParams& p, const QuadratureRule& rule) {
  double q;
  try {
    q = solve_q_star(p, 1.0, kDefaultTol, kDefaultMaxIter, rule);
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
  return chi_c(p, q, 1.0, rule) - 1.0;
}

double critical_sigma_w(const ActivationProfile& activation, double sigma_b_sq, double tol,
                        const QuadratureRule& rule) {
  if (!(tol > 0)) throw InvalidArgument("tol must be positive");
  MeanFieldParams p{0.0, sigma_b_sq, activation};
  p.validate();
  auto gap = [&](double sw) {
    p.sigma_w_sq = sw;
    return criticality_gap(p, rule);
  };
  double lo = 0.0, hi = 4.0;
  if (gap(lo) >= 0) throw BracketError("critical_sigma_w: chaotic already at sigma_w^2 = 0", lo, hi);
  while (gap(hi) < 0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1024.0) throw BracketError("critical_sigma_w: no sign change in bracket", 0.0, hi);
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) < 0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace mfcnn
