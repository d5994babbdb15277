#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genreg/backtracking.hpp"
#include "genreg/models.hpp"
#include "genreg/operators.hpp"

namespace genreg {

enum class Method { Hard, Relaxed, Sparse, SparseTv, Pgd, Tikhonov, Tv };

std::string to_string(Method method);
/// "hard", "relaxed", "sparse", "sparse-tv", "pgd", "tikhonov", "tv".
Method parse_method(const std::string& text);
bool needs_generator(Method method);

enum class InitKind { StandardNormal, Encoder, Given };

struct InitPolicy {
  InitKind kind = InitKind::StandardNormal;
  /// Used with InitKind::Given. Missing image blocks default to G(z0)
  /// (relaxed) and zero (sparse deviations).
  std::optional<Tensor> z0;
  std::optional<Tensor> x0;
  std::optional<Tensor> u0;
};

struct StoppingRule {
  std::size_t max_iterations = 2000;
  double tolerance = 1e-8;
};

struct SolveSpec {
  OperatorPtr op;
  Tensor data;
  Method method = Method::Tikhonov;
  double lambda = 0.0;
  double mu = 0.0;
  const GeneratorModel* generator = nullptr;
  const EncoderModel* encoder = nullptr;  // required by InitKind::Encoder
  InitPolicy init;
  std::uint64_t seed = 0;
  std::size_t restarts = 1;  // restart k draws its latent from seed + k
  StoppingRule stopping;
  BacktrackConfig backtrack;  // max_iterations/tolerance come from `stopping`
  double pgd_step = 0.0;      // 0: 1 / ||A||^2
  std::size_t pgd_inner_iterations = 50;
  std::size_t tv_inner_iterations = 100;
  double tv_gap_tolerance = 1e-6;  // inner prox gap above this is reported
};

/// Throws InvalidArgument if the SolveSpec is inconsistent.
void validate(const SolveSpec& spec);

struct SolveResult {
  Method method = Method::Tikhonov;
  Tensor x;  // reconstruction (H, W)
  Tensor z;  // latent, empty for convex baselines
  Tensor u;  // deviation from G(z) for relaxed/sparse/sparse-tv, else empty
  std::vector<double> objective;
  double final_objective = 0.0;
  double discrepancy = 0.0;  // ||A x - y||
  std::size_t iterations = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::string stop_reason;
  std::size_t restart = 0;          // index of the reported run
  std::vector<double> restart_objectives;
  double gap = 0.0;                 // PDHG residual (tv) or worst inner prox gap (sparse-tv)
  bool warning = false;
  double wall_ms = 0.0;

  std::size_t descent_violations() const;
};

/// Objective of each method at a given point, as minimised by `solve`:
///   hard      ||A G(z) - y||^2 + lambda ||z||^2
///   relaxed   ||A x - y||^2 + lambda (||G(z) - x||^2 + mu ||z||^2)
///   sparse    ||A (G(z) + u) - y||^2 + lambda (||u||_1 + mu ||z||^2)
///   sparse-tv ||A (G(z) + u) - y||^2 + lambda (TV(u) + mu ||z||^2)
///   tikhonov  ||A x - y||^2 + lambda ||x||^2
///   tv        ||A x - y||^2 + lambda TV(x)
///   pgd       ||A x - y||^2
/// `x` is the image block for relaxed and the deviation u for sparse kinds.
double method_objective(const SolveSpec& spec, const Tensor& z, const Tensor& x);

/// Runs `spec.method`, with restarts for latent methods.
SolveResult solve(const SolveSpec& spec);

SolveResult solve_hard(const SolveSpec& spec);
SolveResult solve_relaxed(const SolveSpec& spec);
SolveResult solve_sparse(const SolveSpec& spec);
SolveResult solve_sparse_tv(const SolveSpec& spec);
SolveResult solve_pgd(const SolveSpec& spec);
SolveResult solve_tikhonov(const SolveSpec& spec);
SolveResult solve_tv(const SolveSpec& spec);

}  // namespace genreg
