#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mfcnn {

struct ActivationProfile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> deriv1;
  std::function<double(double)> deriv2;
  // optional extended-precision value, used by finite-difference oracles
  std::function<long double(long double)> value_ext;
};

ActivationProfile tanh_activation();
ActivationProfile erf_activation();
ActivationProfile linear_activation();

// "tanh", "erf" or "linear"; throws InvalidArgument otherwise.
ActivationProfile find_activation(const std::string& name);
std::vector<std::string> builtin_activation_names();

}  // namespace mfcnn
