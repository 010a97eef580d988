#pragma once

#include "mfcnn/activation.hpp"
#include "mfcnn/quadrature.hpp"

namespace mfcnn {

struct MeanFieldParams {
  double sigma_w_sq = 1.0;
  double sigma_b_sq = 0.0;
  ActivationProfile activation;

  // throws InvalidArgument on negative or non-finite variances
  void validate() const;
};

struct CriticalPoint {
  double q_star = 0.0;
  double c_star = 1.0;
  double chi_q = 0.0;
  double chi_c = 0.0;  // at (q*, c*)
  double kappa = 0.0;
  double chi1 = 0.0;   // chi_c at (q*, 1)
};

inline constexpr double kDefaultTol = 1e-12;
inline constexpr int kDefaultMaxIter = 10000;

// σ_w²·E[φ(z1)φ(z2)] + σ_b² for covariance [[q, qc], [qc, q]]
double cmap_scalar(const MeanFieldParams& p, double q, double c,
                   const QuadratureRule& rule = QuadratureRule::standard());
// unequal variances
double cmap_pair(const MeanFieldParams& p, double q1, double q2, double c,
                 const QuadratureRule& rule = QuadratureRule::standard());

double solve_q_star(const MeanFieldParams& p, double q_init = 1.0, double tol = kDefaultTol,
                    int max_iter = kDefaultMaxIter,
                    const QuadratureRule& rule = QuadratureRule::standard());
double solve_c_star(const MeanFieldParams& p, double q_star, double tol = kDefaultTol,
                    int max_iter = kDefaultMaxIter,
                    const QuadratureRule& rule = QuadratureRule::standard());

// q = 0 is accepted and evaluated through the φ′(0), φ″(0) limits.
double chi_c(const MeanFieldParams& p, double q, double c,
             const QuadratureRule& rule = QuadratureRule::standard());
double chi_q(const MeanFieldParams& p, double q,
             const QuadratureRule& rule = QuadratureRule::standard());
double kappa(const MeanFieldParams& p, double q, double c,
             const QuadratureRule& rule = QuadratureRule::standard());

CriticalPoint solve_critical_point(const MeanFieldParams& p, double tol = kDefaultTol,
                                   int max_iter = kDefaultMaxIter,
                                   const QuadratureRule& rule = QuadratureRule::standard());

// χ₁ − 1 at (σ_w², σ_b²); a diverging variance map counts as chaotic (+∞).
double criticality_gap(const MeanFieldParams& p,
                       const QuadratureRule& rule = QuadratureRule::standard());

// Bisection over σ_w² until the bracket is narrower than tol.
double critical_sigma_w(const ActivationProfile& activation, double sigma_b_sq,
                        double tol = 1e-9,
                        const QuadratureRule& rule = QuadratureRule::standard());

}  // namespace mfcnn
