#include "mfcnn/errors.hpp"

namespace mfcnn {

ConvergenceError::ConvergenceError(const std::string& what, double residual,
                                   int iterations)
    : Error(what), residual_(residual), iterations_(iterations) {}

BracketError::BracketError(const std::string& what, double lo, double hi)
    : Error(what), lo_(lo), hi_(hi) {}

}  // namespace mfcnn
