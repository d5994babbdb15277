#include "genreg/params.hpp"

#include <cmath>

#include "genreg/errors.hpp"

namespace genreg {

void ParamSet::add(const std::string& name, Tensor value) {
  if (entries_.count(name)) throw InvalidArgument("duplicate parameter name '" + name + "'");
  Tensor m(value.shape());
  Tensor v(value.shape());
  entries_.emplace(name, Entry{std::move(value), std::move(m), std::move(v)});
}

const ParamSet::Entry& ParamSet::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamSet::get(const std::string& name) const { return entry(name).value; }

void ParamSet::set(const std::string& name, Tensor value) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  if (it->second.value.shape() != value.shape()) {
    throw ShapeError("parameter '" + name + "' has shape " +
                     shape_string(it->second.value.shape()) + ", got " +
                     shape_string(value.shape()));
  }
  it->second.value = std::move(value);
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  return a.step_ == b.step_ && a.entries_ == b.entries_;
}

void adam_step(ParamSet& params, const GradMap& grads, const AdamConfig& config) {
  for (const auto& [name, _] : params.entries_) {
    if (!grads.count(name)) throw InvalidArgument("missing gradient for parameter '" + name + "'");
  }
  params.step_ += 1;
  const double t = static_cast<double>(params.step_);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, e] : params.entries_) {
    const Tensor& g = grads.at(name);
    if (g.size() != e.value.size()) {
      throw ShapeError("gradient for '" + name + "' has shape " + shape_string(g.shape()));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      e.first_moment[i] = config.beta1 * e.first_moment[i] + (1.0 - config.beta1) * g[i];
      e.second_moment[i] =
          config.beta2 * e.second_moment[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = e.first_moment[i] / c1;
      const double vhat = e.second_moment[i] / c2;
      e.value[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

ParamBinding::ParamBinding(Tape& tape, const ParamSet& params, bool trainable)
    : tape_(&tape), trainable_(trainable) {
  for (const auto& name : params.names()) {
    const Tensor& v = params.get(name);
    vars_.emplace(name, trainable ? tape.leaf(v) : tape.constant(v));
  }
}

Var ParamBinding::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw InvalidArgument("parameter '" + name + "' is not bound");
  return it->second;
}

GradMap ParamBinding::gradients() const {
  GradMap out;
  for (const auto& [name, v] : vars_) out.emplace(name, tape_->grad(v));
  return out;
}

void accumulate(GradMap& into, const GradMap& from, double s) {
  for (const auto& [name, g] : from) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, s * g);
    } else {
      axpy(s, g, it->second);
    }
  }
}

}  // namespace genreg
