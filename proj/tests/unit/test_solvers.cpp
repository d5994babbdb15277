#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace genreg;
using namespace genreg::testing;

namespace {

SmoothObjective half_sqnorm() {
  return {[](const Tensor& z) { return 0.5 * squared_norm(z); },
          [](const Tensor& z, Tensor& g) {
            g = z;
            return 0.5 * squared_norm(z);
          }};
}

SolveSpec latent_spec(const GeneratorModel& g, OperatorPtr op, Tensor y, Method m) {
  SolveSpec s;
  s.op = std::move(op);
  s.data = std::move(y);
  s.method = m;
  s.generator = &g;
  s.lambda = 0.1;
  s.mu = 0.5;
  s.stopping.max_iterations = 200;
  return s;
}

}  // namespace

TEST(Backtracking, QuadraticConverges) {
  BacktrackConfig c;
  c.max_iterations = 200;
  const auto r = gd_backtracking(half_sqnorm(), Tensor::full({5}, 10.0), c);
  EXPECT_LE(norm(r.point), 1e-6);
  EXPECT_EQ(r.trace.descent_violations(), 0u);
  EXPECT_EQ(r.trace.objective.size(), r.trace.accepted + 1);
}

TEST(Backtracking, ConstantObjectiveStopsAtOnce) {
  SmoothObjective f{[](const Tensor&) { return 3.0; },
                    [](const Tensor& z, Tensor& g) {
                      g = Tensor(z.shape());
                      return 3.0;
                    }};
  const auto r = gd_backtracking(f, Tensor::vector({1.0, 2.0}));
  EXPECT_EQ(r.trace.reason, StopReason::ZeroGradient);
  EXPECT_EQ(r.trace.iterations, 0u);
  EXPECT_EQ(r.point, Tensor::vector({1.0, 2.0}));
}

TEST(Backtracking, StepRuleAndLipschitzUpdates) {
  // f = 2 z^2, gradient 4 z. From L = 1 the trials at L = 1, 2 overshoot and
  // L = 4 lands on 0 with f(0) = 2 - 16/8 exactly, which is rejected because
  // acceptance is strict. L = 8 gives 0.5 with f = 0.5 < 1.
  SmoothObjective f{[](const Tensor& z) { return 2.0 * squared_norm(z); },
                    [](const Tensor& z, Tensor& g) {
                      g = 4.0 * z;
                      return 2.0 * squared_norm(z);
                    }};
  BacktrackConfig c;
  c.max_iterations = 1;
  const auto r = gd_backtracking(f, Tensor::vector({1.0}), c);
  EXPECT_EQ(r.trace.rejected, 3u);
  EXPECT_EQ(r.trace.accepted, 1u);
  EXPECT_DOUBLE_EQ(r.point[0], 0.5);
  c.initial_lipschitz = 8.0;
  const auto r8 = gd_backtracking(f, Tensor::vector({1.0}), c);
  EXPECT_EQ(r8.trace.rejected, 0u);
  EXPECT_DOUBLE_EQ(r8.point[0], 0.5);
}

TEST(Backtracking, NonFiniteStartAndStall) {
  SmoothObjective nan_start{[](const Tensor&) { return std::nan(""); },
                            [](const Tensor&, Tensor& g) {
                              g = Tensor({1});
                              return std::nan("");
                            }};
  EXPECT_THROW(gd_backtracking(nan_start, Tensor::vector({1.0})), NumericalError);
  // Finite only at the start point: every trial is rejected until L overflows.
  SmoothObjective spike{[](const Tensor& z) { return z[0] == 1.0 ? 1.0 : std::nan(""); },
                        [](const Tensor& z, Tensor& g) {
                          g = Tensor::vector({1.0});
                          return z[0] == 1.0 ? 1.0 : std::nan("");
                        }};
  const auto r = gd_backtracking(spike, Tensor::vector({1.0}));
  EXPECT_EQ(r.trace.reason, StopReason::Stalled);
  EXPECT_EQ(r.trace.accepted, 0u);
  EXPECT_THROW(validate(BacktrackConfig{1.0, 1.5, 2.0}), InvalidArgument);
  EXPECT_THROW(validate(BacktrackConfig{1.0, 0.9, 1.0}), InvalidArgument);
  EXPECT_THROW(validate(BacktrackConfig{0.0}), InvalidArgument);
}

TEST(AlternatingGd, SeparableAndCoupledQuadratics) {
  BlockObjective sep{[](const Tensor& a, const Tensor& b) {
                       return 0.5 * squared_norm(a) + 0.5 * squared_norm(b);
                     },
                     [](const Tensor& a, const Tensor&, Tensor& g) { g = a; },
                     [](const Tensor&, const Tensor& b, Tensor& g) { g = b; }};
  const auto r = alt_gd_backtracking(sep, Tensor::full({3}, 4.0), Tensor::full({2}, -7.0));
  EXPECT_LE(norm(r.a), 1e-6);
  EXPECT_LE(norm(r.b), 1e-6);

  const Tensor c = Tensor::vector({1.0, -2.0, 0.5});
  BlockObjective coupled{[&](const Tensor& z, const Tensor& x) {
                           return 0.5 * squared_norm(z - c) + 0.5 * squared_norm(x - z);
                         },
                         [&](const Tensor& z, const Tensor& x, Tensor& g) {
                           g = (z - c) - (x - z);
                         },
                         [&](const Tensor& z, const Tensor& x, Tensor& g) { g = x - z; }};
  BacktrackConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.max_iterations = 20000;
  const auto q = alt_gd_backtracking(coupled, Tensor({3}), Tensor({3}), cfg);
  EXPECT_LE(norm(q.a - c), 1e-6);
  EXPECT_LE(norm(q.b - c), 1e-6);
  EXPECT_EQ(q.trace.descent_violations(), 0u);
}

TEST(Palm, ZeroTermsReduceToAlternatingDescent) {
  BlockObjective sep{[](const Tensor& a, const Tensor& b) {
                       return 0.5 * squared_norm(a) + 0.5 * squared_norm(b);
                     },
                     [](const Tensor& a, const Tensor&, Tensor& g) { g = a; },
                     [](const Tensor&, const Tensor& b, Tensor& g) { g = b; }};
  const auto r = palm_backtracking(sep, zero_term(), zero_term(), Tensor::full({3}, 4.0),
                                   Tensor::full({2}, -7.0));
  EXPECT_LE(norm(r.a), 1e-6);
  EXPECT_LE(norm(r.b), 1e-6);
}

TEST(Palm, LassoMatchesCoordinateDescent) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::MatrixXd A(15, 25);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
    Eigen::VectorXd y(15);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = normal(rng);
    const double lambda = 0.8;
    const Eigen::VectorXd oracle = lasso_coordinate_descent(A, y, lambda);

    BlockObjective f{[&](const Tensor& v, const Tensor&) {
                       return 0.5 * (A * flat(v) - y).squaredNorm();
                     },
                     [&](const Tensor& v, const Tensor&, Tensor& g) {
                       g = unflat(A.transpose() * (A * flat(v) - y), {25});
                     },
                     [](const Tensor&, const Tensor& b, Tensor& g) { g = Tensor(b.shape()); }};
    ProxTerm l1{[&](const Tensor& v) { return lambda * l1_norm(v); },
                [&](const Tensor& v, double t) { return prox_l1(v, lambda * t); }};
    BacktrackConfig cfg;
    cfg.tolerance = 1e-14;
    cfg.max_iterations = 200000;
    const Tensor frozen = Tensor::vector({0.25});
    const auto r = palm_backtracking(f, l1, zero_term(), Tensor({25}), frozen, cfg);
    EXPECT_LE((flat(r.a) - oracle).norm(), 1e-5) << "trial " << trial;
    EXPECT_EQ(r.b, frozen);
    EXPECT_EQ(r.trace.descent_violations(), 0u);
  }
}

TEST(Prox, ClosedFormsAndGridOracles) {
  EXPECT_EQ(prox_l1(Tensor::vector({2.0, -0.3, 0.0}), 0.5), Tensor::vector({1.5, 0.0, 0.0}));
  EXPECT_EQ(prox_l1(Tensor::vector({2.0, -0.3}), 0.0), Tensor::vector({2.0, -0.3}));
  EXPECT_EQ(prox_scaled_sqnorm(Tensor::vector({3.0}), 1.0, 0.5), Tensor::vector({1.5}));
  EXPECT_EQ(prox_scaled_sqnorm(Tensor::vector({3.0}), 1.0, 0.0), Tensor::vector({3.0}));
  EXPECT_THROW(prox_l1(Tensor::vector({1.0}), -1.0), InvalidArgument);
  const double step = 1e-4;
  for (double v : {-2.3, -0.4, -0.05, 0.0, 0.2, 0.7, 3.1}) {
    for (double tau : {0.0, 0.1, 0.5, 1.3}) {
      const double grid = grid_argmin([&](double x) { return tau * std::abs(x); }, v, -4, 4, step);
      EXPECT_NEAR(prox_l1(Tensor::vector({v}), tau)[0], grid, step) << v << " " << tau;
      for (double mu : {0.0, 0.3, 2.0}) {
        const double g2 = grid_argmin([&](double x) { return tau * mu * x * x; }, v, -4, 4, step);
        EXPECT_NEAR(prox_scaled_sqnorm(Tensor::vector({v}), tau, mu)[0], g2, step);
      }
    }
  }
}

TEST(TotalVariation, GradientDivergenceAdjoint) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = random_tensor({7, 9}, rng);
    const Tensor p = random_tensor({2, 7, 9}, rng);
    EXPECT_NEAR(dot(image_gradient(x), p), -dot(x, divergence(p)), 1e-12);
  }
  Tensor step({4, 4});
  for (std::size_t i = 0; i < 4; ++i) step[i * 4 + 2] = step[i * 4 + 3] = 1.0;
  EXPECT_DOUBLE_EQ(tv_norm(step), 4.0);
  EXPECT_EQ(tv_norm(Tensor::full({5, 5}, 0.3)), 0.0);
}

TEST(TotalVariation, ConstantImageIsFixed) {
  const Tensor c = Tensor::full({8, 8}, 0.4);
  IdentityOperator id({8, 8});
  for (double lambda : {0.01, 1.0, 10.0}) {
    const auto r = tv_reconstruct(id, c, lambda);
    EXPECT_LE(norm(r.x - c), 1e-10);
  }
  const auto p = tv_prox(c, 0.5, 50);
  EXPECT_LE(norm(p.x - c), 1e-12);
}

TEST(TotalVariation, StepDenoisingKeepsEdge) {
  Tensor y({6, 12});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 12; ++j) y[i * 12 + j] = (j < 5 ? 0.2 : 0.8) + noise(rng);
  }
  const auto r = tv_reconstruct(IdentityOperator({6, 12}), y, 0.05);
  EXPECT_LE(tv_norm(r.x), tv_norm(y));
  for (std::size_t i = 0; i < 6; ++i) {
    std::size_t jump = 0;
    double largest = 0.0;
    for (std::size_t j = 0; j + 1 < 12; ++j) {
      const double d = std::abs(r.x[i * 12 + j + 1] - r.x[i * 12 + j]);
      if (d > largest) {
        largest = d;
        jump = j;
      }
    }
    EXPECT_EQ(jump, 4u) << "row " << i;
  }
}

TEST(TotalVariation, DenoisingMatchesSubgradientOracle) {
  std::mt19937_64 rng(12);
  const Tensor y = random_tensor({8, 8}, rng, 0.0, 1.0);
  const double lambda = 0.1;
  const Tensor oracle = tv_subgradient_oracle(y, lambda, 2000000);
  TvSolveConfig cfg;
  cfg.max_iterations = 20000;
  cfg.tolerance = 1e-12;
  const auto r = tv_reconstruct(IdentityOperator({8, 8}), y, lambda, cfg);
  EXPECT_LE(norm(r.x - oracle) / norm(oracle), 1e-3);
  EXPECT_LE(r.gap, 1e-6);
  EXPECT_FALSE(r.warning);
}

TEST(TotalVariation, PdhgAgreesWithDenoisingPath) {
  // ||2x - y||^2 + lam TV(x) = 4 (||x - y/2||^2 + lam/4 TV(x)).
  std::mt19937_64 rng(13);
  const Tensor y = random_tensor({8, 8}, rng, 0.0, 1.0).reshaped({64});
  const auto twice = std::make_shared<MatrixOperator>(Shape{8, 8}, 2.0 * Eigen::MatrixXd::Identity(64, 64));
  TvSolveConfig cfg;
  cfg.max_iterations = 50000;
  cfg.tolerance = 1e-13;
  const auto general = tv_reconstruct(*twice, y, 0.2, cfg);
  const auto denoise = tv_reconstruct(IdentityOperator({8, 8}), (0.5 * y).reshaped({8, 8}), 0.05, cfg);
  EXPECT_LE(norm(general.x - denoise.x) / norm(denoise.x), 1e-5);
  for (std::size_t i = 1; i < general.objective.size(); ++i) {
    EXPECT_TRUE(std::isfinite(general.objective[i]));
  }
}

TEST(Tikhonov, IdentityClosedForm) {
  std::mt19937_64 rng(1);
  const Tensor y = random_tensor({6, 6}, rng);
  SolveSpec s;
  s.op = std::make_shared<IdentityOperator>(Shape{6, 6});
  s.data = y;
  s.lambda = 0.5;
  s.method = Method::Tikhonov;
  const auto r = solve(s);
  EXPECT_LE(relative_error(r.x, (1.0 / 1.5) * y), 1e-7);
  EXPECT_EQ(r.descent_violations(), 0u);
}

TEST(Tikhonov, MatchesNormalEquations) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto A = gaussian_sensing(100, {16, 16}, seed);
    std::mt19937_64 rng(seed);
    const Tensor y = random_tensor({100}, rng);
    const double lambda = 0.1;
    const Eigen::MatrixXd& M = A->matrix();
    const Eigen::VectorXd oracle =
        (M.transpose() * M + lambda * Eigen::MatrixXd::Identity(256, 256)).ldlt().solve(M.transpose() * flat(y));
    SolveSpec s;
    s.op = A;
    s.data = y;
    s.lambda = lambda;
    s.method = Method::Tikhonov;
    s.stopping = {20000, 1e-13};
    const auto r = solve(s);
    EXPECT_LE((flat(r.x) - oracle).norm() / oracle.norm(), 1e-6) << "seed " << seed;
  }
}

TEST(Tikhonov, NormShrinksWithLambda) {
  const auto A = std::make_shared<ConvolutionOperator>(Shape{10, 10}, gaussian_kernel(5, 1.0));
  std::mt19937_64 rng(3);
  const Tensor y = random_tensor({10, 10}, rng, 0.0, 1.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : log_grid(1e-3, 10.0, 5)) {
    SolveSpec s;
    s.op = A;
    s.data = y;
    s.lambda = lambda;
    s.method = Method::Tikhonov;
    const double n = norm(solve(s).x);
    EXPECT_LT(n, previous);
    previous = n;
  }
}

TEST(LatentSolvers, PlantedStartingPoints) {
  const GeneratorModel g = tiny_generator(16, 4, 3);
  const Tensor z0 = Tensor::vector({0.3, -0.8, 0.5, 1.1});
  const auto A = std::make_shared<ConvolutionOperator>(Shape{16, 16}, gaussian_kernel(5, 1.0));
  const Tensor y = A->apply(g.generate(z0));

  SolveSpec hard = latent_spec(g, A, y, Method::Hard);
  hard.init = {InitKind::Given, z0};
  const auto rh = solve(hard);
  EXPECT_DOUBLE_EQ(rh.objective.front(), hard.lambda * squared_norm(z0));
  EXPECT_EQ(rh.x, g.generate(rh.z));
  hard.lambda = 0.0;
  const auto exact = solve(hard);
  EXPECT_EQ(exact.z, z0);
  EXPECT_EQ(exact.x, g.generate(z0));
  EXPECT_EQ(exact.final_objective, 0.0);

  SolveSpec sparse = latent_spec(g, A, y, Method::Sparse);
  sparse.init = {InitKind::Given, z0};
  const auto rs = solve(sparse);
  EXPECT_DOUBLE_EQ(rs.objective.front(), sparse.lambda * sparse.mu * squared_norm(z0));
  sparse.mu = 0.0;
  const auto rs0 = solve(sparse);
  EXPECT_EQ(squared_norm(rs0.u), 0.0);
  EXPECT_EQ(rs0.final_objective, 0.0);

  SolveSpec relaxed = latent_spec(g, A, y, Method::Relaxed);
  relaxed.init = {InitKind::Given, z0};
  EXPECT_DOUBLE_EQ(solve(relaxed).objective.front(), relaxed.lambda * relaxed.mu * squared_norm(z0));

  SolveSpec pgd = latent_spec(g, A, y, Method::Pgd);
  pgd.init = {InitKind::Given, z0};
  const auto rp = solve(pgd);
  EXPECT_LE(norm(rp.x - g.generate(z0)), 1e-12);
}

TEST(LatentSolvers, RelaxedWithConstantGeneratorIsShiftedTikhonov) {
  GeneratorModel g = tiny_generator(8, 3, 1);
  for (const auto& name : g.params().names()) g.params().set(name, Tensor(g.params().get(name).shape()));
  const auto A = gaussian_sensing(30, {8, 8}, 4);
  std::mt19937_64 rng(6);
  const Tensor y = random_tensor({30}, rng);
  SolveSpec s = latent_spec(g, A, y, Method::Relaxed);
  s.mu = 0.0;
  s.lambda = 0.3;
  s.stopping = {50000, 1e-14};
  const auto r = solve(s);
  // G = sigmoid(0) = 1/2 everywhere: (M^T M + lam I) x = M^T y + lam / 2.
  const Eigen::MatrixXd& M = A->matrix();
  const Eigen::VectorXd rhs = M.transpose() * flat(y) + Eigen::VectorXd::Constant(64, 0.15);
  const Eigen::VectorXd oracle = (M.transpose() * M + 0.3 * Eigen::MatrixXd::Identity(64, 64)).ldlt().solve(rhs);
  EXPECT_LE((flat(r.x) - oracle).norm() / oracle.norm(), 1e-6);
}

TEST(LatentSolvers, DescentOnRandomInstances) {
  const GeneratorModel g = tiny_generator(16, 4, 7);
  std::mt19937_64 rng(8);
  for (const auto& op : {OperatorPtr(std::make_shared<ConvolutionOperator>(Shape{16, 16}, gaussian_kernel(5, 1.0))),
                         OperatorPtr(gaussian_sensing(60, {16, 16}, 2)),
                         OperatorPtr(std::make_shared<RadonOperator>(16))}) {
    const Tensor y = add_noise(op->apply(random_tensor({16, 16}, rng, 0.0, 1.0)), {0.05, 3});
    for (Method m : {Method::Hard, Method::Relaxed, Method::Sparse, Method::SparseTv}) {
      SolveSpec s = latent_spec(g, op, y, m);
      s.stopping.max_iterations = 60;
      s.seed = 5;
      const auto r = solve(s);
      EXPECT_EQ(r.descent_violations(), 0u) << to_string(m) << " " << op->name();
      EXPECT_NEAR(r.final_objective, method_objective(s, r.z, m == Method::Relaxed ? r.x : r.u),
                  1e-9 * std::max(1.0, r.final_objective));
      if (m != Method::Hard) EXPECT_LE(norm(r.x - g.generate(r.z) - r.u), 1e-12);
    }
  }
}

TEST(LatentSolvers, RestartsAreSeededAndArgmin) {
  const GeneratorModel g = tiny_generator(16, 4, 9);
  const auto A = gaussian_sensing(50, {16, 16}, 1);
  std::mt19937_64 rng(10);
  const Tensor y = A->apply(random_tensor({16, 16}, rng, 0.0, 1.0));
  SolveSpec s = latent_spec(g, A, y, Method::Hard);
  s.restarts = 3;
  s.seed = 40;
  const auto all = solve(s);
  ASSERT_EQ(all.restart_objectives.size(), 3u);
  const auto best = std::min_element(all.restart_objectives.begin(), all.restart_objectives.end());
  EXPECT_EQ(all.restart, static_cast<std::size_t>(best - all.restart_objectives.begin()));
  SolveSpec single = s;
  single.restarts = 1;
  single.seed = s.seed + all.restart;
  const auto again = solve(single);
  EXPECT_EQ(again.x, all.x);
  EXPECT_EQ(again.final_objective, all.final_objective);
}

TEST(LatentSolvers, HardLatentShrinksWithLambda) {
  const GeneratorModel g = tiny_generator(16, 4, 11);
  const auto A = std::make_shared<ConvolutionOperator>(Shape{16, 16}, gaussian_kernel(5, 1.0));
  std::mt19937_64 rng(2);
  const Tensor y = A->apply(random_tensor({16, 16}, rng, 0.0, 1.0));
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-2, 1.0, 1e2, 1e4}) {
    SolveSpec s = latent_spec(g, A, y, Method::Hard);
    s.lambda = lambda;
    s.init = {InitKind::Given, Tensor::vector({0.5, 0.5, -0.5, 0.5})};
    s.stopping = {2000, 1e-10};
    const double n = norm(solve(s).z);
    EXPECT_LT(n, previous) << lambda;
    previous = n;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(LatentSolvers, SpecValidation) {
  const GeneratorModel g = tiny_generator(16, 4, 1);
  const auto A = std::make_shared<IdentityOperator>(Shape{16, 16});
  SolveSpec s = latent_spec(g, A, Tensor({16, 16}), Method::Hard);
  s.generator = nullptr;
  EXPECT_THROW(solve(s), InvalidArgument);
  s = latent_spec(g, A, Tensor({16, 16}), Method::Tikhonov);
  s.lambda = 0.0;
  EXPECT_THROW(solve(s), InvalidArgument);
  s = latent_spec(g, A, Tensor({15, 16}), Method::Hard);
  EXPECT_THROW(solve(s), std::exception);
  s = latent_spec(g, A, Tensor({16, 16}), Method::Hard);
  s.init.kind = InitKind::Encoder;
  EXPECT_THROW(solve(s), InvalidArgument);
  s.init.kind = InitKind::Given;
  EXPECT_THROW(solve(s), InvalidArgument);
  EXPECT_EQ(parse_method("sparse-tv"), Method::SparseTv);
  EXPECT_THROW(parse_method("admm"), InvalidArgument);
  EXPECT_TRUE(needs_generator(Method::Pgd));
  EXPECT_FALSE(needs_generator(Method::Tv));
}
