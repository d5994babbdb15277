#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

using namespace genreg;
using namespace genreg::testing;

namespace {

std::vector<OperatorPtr> all_operators(std::size_t n) {
  return {std::make_shared<ConvolutionOperator>(Shape{n, n}, gaussian_kernel(5, 1.0)),
          gaussian_sensing(40, {n, n}, 3),
          std::make_shared<RadonOperator>(n),
          std::make_shared<RadonOperator>(n, RadonGeometry{7, 15, Interpolation::Nearest}),
          std::make_shared<IdentityOperator>(Shape{n, n})};
}

Tensor naive_convolution(const Tensor& x, const Tensor& k) {
  const long h = static_cast<long>(x.dim(0)), w = static_cast<long>(x.dim(1));
  const long ks = static_cast<long>(k.dim(0)), c = ks / 2;
  Tensor out({x.dim(0), x.dim(1)});
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < w; ++j) {
      double s = 0.0;
      for (long a = 0; a < ks; ++a) {
        for (long b = 0; b < ks; ++b) {
          const long ii = i + c - a, jj = j + c - b;
          if (ii >= 0 && ii < h && jj >= 0 && jj < w) s += k[a * ks + b] * x[ii * w + jj];
        }
      }
      out[i * w + j] = s;
    }
  }
  return out;
}

Tensor disc(std::size_t n, double radius) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double y = (i + 0.5) / n - 0.5, x = (j + 0.5) / n - 0.5;
      if (x * x + y * y <= radius * radius) t[i * n + j] = 1.0;
    }
  }
  return t;
}

}  // namespace

TEST(Operators, AdjointIdentity) {
  for (const auto& op : all_operators(16)) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor x = random_tensor(op->input_shape(), rng);
      const Tensor y = random_tensor(op->output_shape(), rng);
      const double lhs = dot(op->apply(x), y), rhs = dot(x, op->adjoint(y));
      EXPECT_LE(std::abs(lhs - rhs), 1e-8 * std::max(std::abs(lhs), 1e-3)) << op->name();
    }
  }
}

TEST(Operators, Linearity) {
  for (const auto& op : all_operators(12)) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor x = random_tensor(op->input_shape(), rng);
      const Tensor x2 = random_tensor(op->input_shape(), rng);
      const double a = 1.7, b = -0.3;
      Tensor combo = a * x;
      axpy(b, x2, combo);
      Tensor expected = a * op->apply(x);
      axpy(b, op->apply(x2), expected);
      EXPECT_LE(relative_error(op->apply(combo), expected), 1e-10) << op->name();
    }
    EXPECT_EQ(squared_norm(op->apply(Tensor(op->input_shape()))), 0.0);
  }
}

TEST(Operators, ShapeChecks) {
  const auto op = std::make_shared<RadonOperator>(8);
  EXPECT_THROW(op->apply(Tensor({8, 9})), ShapeError);
  EXPECT_THROW(op->adjoint(Tensor({3, 3})), ShapeError);
  EXPECT_THROW(radon_apply(Tensor({8, 9})), ShapeError);
}

TEST(GaussianKernel, Properties) {
  EXPECT_EQ(gaussian_kernel(1, 1.0), Tensor({1, 1}, {1.0}));
  EXPECT_THROW(gaussian_kernel(4, 1.0), InvalidArgument);
  EXPECT_THROW(gaussian_kernel(5, 0.0), InvalidArgument);
  for (std::size_t size : {3u, 5u, 7u}) {
    for (double width : {0.5, 1.0, 2.5}) {
      const Tensor k = gaussian_kernel(size, width);
      EXPECT_NEAR(std::accumulate(k.values().begin(), k.values().end(), 0.0), 1.0, 1e-12);
      const std::size_t c = size / 2;
      for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
          EXPECT_LE(k[i * size + j], k[c * size + c]);
          EXPECT_DOUBLE_EQ(k[i * size + j], k[j * size + (size - 1 - i)]);  // 90 degree rotation
        }
      }
    }
  }
  const Tensor k = gaussian_kernel(5, 1.0);
  EXPECT_NEAR(k[12] / k[13], std::exp(0.5), 1e-12);
}

TEST(Convolution, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({9, 11}, rng);
  const Tensor k = random_tensor({3, 3}, rng);
  EXPECT_LE(relative_error(conv_apply(x, k), naive_convolution(x, k)), 1e-13);
  EXPECT_EQ(conv_apply(x, Tensor({1, 1}, {1.0})), x);
  Tensor delta({3, 3});
  delta[4] = 1.0;
  EXPECT_EQ(conv_apply(x, delta), x);
  EXPECT_THROW(conv_apply(Tensor({3, 3}), Tensor({5, 5})), InvalidArgument);
  EXPECT_THROW(ConvolutionOperator(Shape{8, 8}, Tensor({2, 2})), InvalidArgument);
}

TEST(Convolution, SymmetricKernelIsSelfAdjoint) {
  const Tensor k = gaussian_kernel(5, 1.0);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const Tensor x = random_tensor({12, 12}, rng);
    EXPECT_LE(relative_error(conv_adjoint(x, k), conv_apply(x, k)), 1e-10);
  }
}

TEST(Sensing, DistributionAndDeterminism) {
  const auto a = gaussian_sensing(150, {32, 32}, 11);
  const Eigen::MatrixXd& m = a->matrix();
  ASSERT_EQ(m.rows(), 150);
  ASSERT_EQ(m.cols(), 1024);
  EXPECT_NEAR(m.colwise().norm().mean(), 1.0, 0.1);
  EXPECT_NEAR(m.mean(), 0.0, 3.0 / std::sqrt(150.0 * 1024.0) / std::sqrt(150.0) * 3.0);
  const double var = m.array().square().mean();
  EXPECT_NEAR(var, 1.0 / 150.0, 0.05 / 150.0);
  EXPECT_EQ(gaussian_sensing(150, {32, 32}, 11)->matrix(), m);
  EXPECT_NE(gaussian_sensing(150, {32, 32}, 12)->matrix(), m);
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({4, 4}, rng);
  EXPECT_EQ(gaussian_sensing(16, {4, 4}, 0, true)->apply(x), x.reshaped({16}));
  EXPECT_THROW(gaussian_sensing(15, {4, 4}, 0, true), InvalidArgument);
  EXPECT_THROW(gaussian_sensing(0, {4, 4}, 0), InvalidArgument);
}

TEST(Radon, DefaultsAndZeroImage) {
  const RadonOperator op(32);
  EXPECT_EQ(op.output_shape(), (Shape{32, 47}));
  EXPECT_EQ(squared_norm(op.apply(Tensor({32, 32}))), 0.0);
  EXPECT_GT(op.nonzeros(), 0u);
  EXPECT_EQ(radon_apply(disc(16, 0.3)), RadonOperator(16).apply(disc(16, 0.3)));
  EXPECT_EQ(radon_backproject(Tensor::full({16, 24}, 1.0), 16),
            RadonOperator(16).adjoint(Tensor::full({16, 24}, 1.0)));
}

TEST(Radon, DiscPhantomProfiles) {
  const std::size_t n = 32;
  const RadonOperator op(n, RadonGeometry{24, 0, Interpolation::Linear});
  const Tensor sino = op.apply(disc(n, 0.3));
  const std::size_t nd = sino.dim(1);
  std::vector<double> mass(24, 0.0);
  for (std::size_t a = 0; a < 24; ++a) {
    for (std::size_t d = 0; d < nd; ++d) {
      mass[a] += sino[a * nd + d];
      EXPECT_NEAR(sino[a * nd + d], sino[a * nd + (nd - 1 - d)], 1e-12) << "angle " << a;
    }
  }
  // Continuous mass: disc area over the pixel-width bin spacing.
  double pixels = 0.0;
  for (double v : disc(n, 0.3).values()) pixels += v;
  const double expected = pixels / (n * n) * n;
  for (double m : mass) EXPECT_NEAR(m, expected, 0.01 * expected);
  // Central ray through a disc of radius r: chord length 2r.
  EXPECT_NEAR(sino[nd / 2], 0.6, 0.05);
}

TEST(Radon, NormalOperatorIsPositiveSemidefinite) {
  const RadonOperator op(16);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = random_tensor({16, 16}, rng);
    EXPECT_GE(dot(op.adjoint(op.apply(x)), x), 0.0);
  }
}

TEST(OperatorNorm, KnownSpectra) {
  EXPECT_NEAR(operator_norm(IdentityOperator({5, 5})), 1.0, 1e-12);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 4);
  m(0, 0) = 3.0;
  m(1, 1) = -5.0;
  m(2, 3) = 2.0;
  EXPECT_NEAR(operator_norm(MatrixOperator({4}, m), 200), 5.0, 1e-8);
  // A Gaussian blur of a normalised non-negative kernel has norm at most 1.
  EXPECT_LE(operator_norm(ConvolutionOperator({16, 16}, gaussian_kernel(5, 1.0))), 1.0 + 1e-12);
}

TEST(Noise, ModelAndMorozov) {
  const Tensor data = Tensor::full({100, 100}, 0.5);
  EXPECT_EQ(add_noise(data, {0.0, 1}), data);
  const Tensor noisy = add_noise(data, {0.1, 7});
  EXPECT_EQ(add_noise(data, {0.1, 7}), noisy);
  double m = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) m += noisy[i] - 0.5;
  m /= noisy.size();
  for (std::size_t i = 0; i < noisy.size(); ++i) s2 += std::pow(noisy[i] - 0.5 - m, 2);
  EXPECT_NEAR(std::sqrt(s2 / (noisy.size() - 1)), 0.1, 0.005);
  EXPECT_THROW(add_noise(data, {-0.1, 1}), InvalidArgument);
  EXPECT_EQ(morozov_target({0.0, 0}, 10), 0.0);
  EXPECT_EQ(morozov_target({1.0, 0}, 1), 1.0);
  EXPECT_DOUBLE_EQ(morozov_target({0.1, 0}, 400), 2.0);
}

TEST(Operators, FactoryKinds) {
  OperatorConfig c;
  EXPECT_EQ(make_operator(c, 16)->name(), "convolution");
  c.kind = "sensing";
  c.measurements = 20;
  EXPECT_EQ(make_operator(c, 16)->output_shape(), (Shape{20}));
  c.kind = "tomography";
  EXPECT_EQ(make_operator(c, 16)->name(), "radon");
  c.kind = "identity";
  EXPECT_TRUE(make_operator(c, 16)->is_identity());
  c.kind = "mri";
  EXPECT_THROW(make_operator(c, 16), InvalidArgument);
}
