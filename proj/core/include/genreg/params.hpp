#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "genreg/autodiff.hpp"
#include "genreg/tensor.hpp"

namespace genreg {

using GradMap = std::map<std::string, Tensor>;

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Named trainable tensors with Adam moment accumulators.
///
/// Names are unique and a tensor's shape is fixed once added. Iteration
/// order is lexicographic by name, which keeps checkpoints and gradient
/// reductions deterministic.
class ParamSet {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  /// Replace a value; the shape must match the existing one.
  void set(const std::string& name, Tensor value);

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;
  std::uint64_t step() const { return step_; }

  friend void adam_step(ParamSet& params, const GradMap& grads, const AdamConfig& config);
  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  struct Entry {
    Tensor value;
    Tensor first_moment;
    Tensor second_moment;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
  std::uint64_t step_ = 0;
};

/// One bias-corrected Adam update. Every parameter must have a gradient.
void adam_step(ParamSet& params, const GradMap& grads, const AdamConfig& config);

/// Places a ParamSet on a tape, as leaves when `trainable` and as
/// constants otherwise.
class ParamBinding {
 public:
  ParamBinding(Tape& tape, const ParamSet& params, bool trainable);

  Var operator[](const std::string& name) const;
  bool trainable() const { return trainable_; }

  /// Gradients of the tape's last backward pass, keyed by parameter name.
  GradMap gradients() const;

 private:
  Tape* tape_;
  std::map<std::string, Var> vars_;
  bool trainable_;
};

/// Elementwise a + s * b over matching keys.
void accumulate(GradMap& into, const GradMap& from, double s = 1.0);

}  // namespace genreg
