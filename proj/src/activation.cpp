#include "mfcnn/activation.hpp"

#include <cmath>
#include <numbers>

#include "mfcnn/errors.hpp"

namespace mfcnn {

ActivationProfile tanh_activation() {
  return {"tanh",
          [](double x) { return std::tanh(x); },
          [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
          },
          [](double x) {
            const double t = std::tanh(x);
            return -2.0 * t * (1.0 - t * t);
          },
          [](long double x) { return std::tanh(x); }};
}

ActivationProfile erf_activation() {
  constexpr double k = 2.0 * std::numbers::inv_sqrtpi;
  return {"erf",
          [](double x) { return std::erf(x); },
          [](double x) { return k * std::exp(-x * x); },
          [](double x) { return -2.0 * x * k * std::exp(-x * x); },
          [](long double x) { return std::erf(x); }};
}

ActivationProfile linear_activation() {
  return {"linear",
          [](double x) { return x; },
          [](double) { return 1.0; },
          [](double) { return 0.0; },
          [](long double x) { return x; }};
}

ActivationProfile find_activation(const std::string& name) {
  if (name == "tanh") return tanh_activation();
  if (name == "erf") return erf_activation();
  if (name == "linear") return linear_activation();
  throw InvalidArgument("unknown activation '" + name + "'");
}

std::vector<std::string> builtin_activation_names() { return {"tanh", "erf", "linear"}; }

}  // namespace mfcnn
