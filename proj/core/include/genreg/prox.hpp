#pragma once

#include "genreg/tensor.hpp"

namespace genreg {

/// Soft thresholding: sign(v) max(|v| - tau, 0), the prox of tau ||.||_1.
Tensor prox_l1(const Tensor& v, double tau);

/// Prox of tau * mu ||.||^2: v / (1 + 2 tau mu).
Tensor prox_scaled_sqnorm(const Tensor& v, double tau, double mu);

double l1_norm(const Tensor& v);

}  // namespace genreg
