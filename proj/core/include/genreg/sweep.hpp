#pragma once

#include <vector>

#include "genreg/solvers.hpp"

namespace genreg {

/// `count` values geometrically spaced from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

struct TuningCase {
  Tensor truth;
  Tensor data;
};

struct TuningEntry {
  double lambda = 0.0;
  double mu = 0.0;
  double mean_psnr = 0.0;
};

struct TuningResult {
  double lambda = 0.0;
  double mu = 0.0;
  double mean_psnr = 0.0;
  std::vector<TuningEntry> table;  // lambda-major grid order
};

/// Solves every case for every (lambda, mu) with `base` otherwise unchanged
/// and returns the pair with the best mean capped PSNR against the truths.
/// Ties keep the earlier grid entry. `mus` may be {0} for methods without mu.
TuningResult tune_parameters(const SolveSpec& base, const std::vector<TuningCase>& cases,
                             const std::vector<double>& lambdas, const std::vector<double>& mus,
                             std::size_t jobs = 1);

}  // namespace genreg
