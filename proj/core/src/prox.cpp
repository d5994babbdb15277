#include "genreg/prox.hpp"

#include <cmath>

#include "genreg/errors.hpp"

namespace genreg {

Tensor prox_l1(const Tensor& v, double tau) {
  if (tau < 0.0) throw InvalidArgument("prox_l1 needs tau >= 0");
  Tensor out = v;
  for (double& x : out.values()) {
    const double m = std::abs(x) - tau;
    x = m > 0.0 ? std::copysign(m, x) : 0.0;
  }
  return out;
}

Tensor prox_scaled_sqnorm(const Tensor& v, double tau, double mu) {
  if (tau < 0.0 || mu < 0.0) throw InvalidArgument("prox_scaled_sqnorm needs tau, mu >= 0");
  Tensor out = v;
  const double s = 1.0 / (1.0 + 2.0 * tau * mu);
  for (double& x : out.values()) x *= s;
  return out;
}

double l1_norm(const Tensor& v) {
  double s = 0.0;
  for (double x : v.values()) s += std::abs(x);
  return s;
}

}  // namespace genreg
