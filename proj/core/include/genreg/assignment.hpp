#pragma once

#include <vector>

#include <Eigen/Dense>

#include "genreg/tensor.hpp"

namespace genreg {

struct Assignment {
  std::vector<std::size_t> column_of_row;
  double cost = 0.0;  // sum of cost(i, column_of_row[i]) in row order
};

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method
/// with potentials, O(N^3)).
Assignment solve_assignment(const Eigen::MatrixXd& cost);

/// cost(i, j) = ||a_i - b_j||^2 over flattened images.
Eigen::MatrixXd squared_distance_matrix(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

/// Earth mover's distance between two equally sized empirical sets with
/// uniform weights and squared Euclidean ground cost: the minimum over
/// permutations of the summed matched costs.
double emd(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

}  // namespace genreg
