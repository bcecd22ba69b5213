#include "sgcp/polya_gamma.hpp"

#include "sgcp/domain.hpp"

#include <cmath>
#include <numbers>

namespace sgcp {

double pg_mean(double b, double c) {
  if (!(b > 0.0)) {
    throw Error("pg_mean: shape b must be positive");
  }
  const double a = std::abs(c);
  if (a < 1e-4) {
    return b / 4.0 - b * c * c / 48.0;
  }
  return b / (2.0 * a) * std::tanh(a / 2.0);
}

double f_aug(double omega, double z) { return z / 2.0 - z * z * omega / 2.0 - std::numbers::ln2; }

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) {
    return -std::log1p(std::exp(-z));
  }
  return z - std::log1p(std::exp(z));
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

} // namespace sgcp
