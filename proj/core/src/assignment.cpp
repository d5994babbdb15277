#include "genreg/assignment.hpp"

#include <limits>

#include "genreg/errors.hpp"

namespace genreg {

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw ShapeError("assignment needs a square cost matrix");
  const auto n = static_cast<std::size_t>(cost.rows());
  Assignment result;
  if (n == 0) return result;
  if (!cost.allFinite()) throw NumericalError("assignment cost matrix is not finite");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials u (rows), v (columns); p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  result.column_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) result.column_of_row[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) {
    result.cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(result.column_of_row[i]));
  }
  return result;
}

Eigen::MatrixXd squared_distance_matrix(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  const auto n = static_cast<Eigen::Index>(a.size()), m = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const Tensor& x = a[static_cast<std::size_t>(i)];
      const Tensor& y = b[static_cast<std::size_t>(j)];
      if (x.size() != y.size()) throw ShapeError("EMD sets contain images of different sizes");
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        s += d * d;
      }
      c(i, j) = s;
    }
  }
  return c;
}

double emd(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("EMD needs equally sized sets, got " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
  }
  if (a.empty()) throw InvalidArgument("EMD of empty sets");
  return solve_assignment(squared_distance_matrix(a, b)).cost;
}

}  // namespace genreg
