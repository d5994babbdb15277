#include <fstream>
#include <set>

#include "experiment.hpp"

namespace genreg::cli {

using nlohmann::json;

namespace {

// Reads fields of one object, remembering which keys were consumed so that
// leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where(key) + " must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(where(key) + " must be a non-negative integer");
      }
    } else {
      if (!v.is_array()) throw ConfigError(where(key) + " must be an array");
      using E = typename T::value_type;
      for (const auto& e : v) {
        if constexpr (std::is_same_v<E, std::string>) {
          if (!e.is_string()) throw ConfigError(where(key) + " entries must be strings");
        } else if constexpr (std::is_floating_point_v<E>) {
          if (!e.is_number()) throw ConfigError(where(key) + " entries must be numbers");
        } else {
          if (!e.is_number_integer() || e.get<long long>() < 0) {
            throw ConfigError(where(key) + " entries must be non-negative integers");
          }
        }
      }
    }
    out = v.get<T>();
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + where(k.c_str()) + "'");
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_;
    if (key) p = p.empty() ? key : p + "." + key;
    return p.empty() ? "config" : p;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  require(d.kind == "shapes" || d.kind == "shapes-plus" || d.kind == "mnist",
          "dataset.kind must be shapes, shapes-plus or mnist");
  require(d.kind != "mnist" || !d.mnist_dir.empty() || !d.cache.empty(),
          "dataset.mnist_dir is required for mnist");
  require(d.image_size >= 16, "dataset.image_size must be at least 16");
  require(d.train_count >= 1 && d.test_count >= 1, "dataset counts must be positive");
  try {
    parse_model_kind(c.model.kind);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model.kind: ") + e.what());
  }
  require(c.model.latent_dim >= 1, "model.latent_dim must be positive");
  require(c.model.batch_size >= 1, "model.batch_size must be positive");
  require(c.model.learning_rate > 0.0, "model.learning_rate must be positive");
  require(c.model.rho > 0.0, "model.rho must be positive");
  require(c.model.critic_steps >= 1, "model.critic_steps must be positive");
  const auto& e = c.evaluation;
  require(e.count >= 1, "evaluation.count must be positive");
  require(e.histogram_bins >= 1 && e.histogram_max > 0.0, "evaluation histogram is empty");
  require(e.far_radius > 0.0, "evaluation.far_radius must be positive");
  const auto& s = c.solver;
  const std::set<std::string> ops{"convolution", "sensing", "tomography", "identity"};
  require(ops.count(s.op.kind) == 1, "solver.operator.kind must be convolution, sensing, tomography or identity");
  require(s.op.kernel_size % 2 == 1, "solver.operator.kernel_size must be odd");
  require(s.op.kernel_width > 0.0, "solver.operator.kernel_width must be positive");
  require(s.op.measurements >= 1, "solver.operator.measurements must be positive");
  require(s.noise_sigma >= 0.0, "solver.noise_sigma must be non-negative");
  require(!s.methods.empty(), "solver.methods must not be empty");
  for (const auto& m : s.methods) {
    try {
      parse_method(m);
    } catch (const InvalidArgument& ex) {
      throw ConfigError(std::string("solver.methods: ") + ex.what());
    }
  }
  require(!s.lambdas.empty() && !s.mus.empty() && !s.seeds.empty(),
          "solver.lambdas, solver.mus and solver.seeds must not be empty");
  for (double l : s.lambdas) require(l >= 0.0, "solver.lambdas must be non-negative");
  for (double m : s.mus) require(m >= 0.0, "solver.mus must be non-negative");
  require(s.images >= 1, "solver.images must be positive");
  require(s.init == "standard-normal" || s.init == "encoder",
          "solver.init must be standard-normal or encoder");
  require(s.max_iterations >= 1 && s.tolerance >= 0.0, "solver stopping rule is invalid");
  require(c.jobs >= 1, "jobs must be positive");
  require(!c.out.empty(), "out must not be empty");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  root.read("jobs", c.jobs);
  root.read("out", c.out);
  if (auto d = root.child("dataset")) {
    d->read("kind", c.dataset.kind);
    d->read("image_size", c.dataset.image_size);
    d->read("train_count", c.dataset.train_count);
    d->read("test_count", c.dataset.test_count);
    d->read("mnist_dir", c.dataset.mnist_dir);
    d->read("cache", c.dataset.cache);
    d->finish();
  }
  if (auto m = root.child("model")) {
    m->read("kind", c.model.kind);
    m->read("latent_dim", c.model.latent_dim);
    m->read("epochs", c.model.epochs);
    m->read("batch_size", c.model.batch_size);
    m->read("learning_rate", c.model.learning_rate);
    m->read("rho", c.model.rho);
    m->read("gp_weight", c.model.gp_weight);
    m->read("critic_steps", c.model.critic_steps);
    m->read("checkpoint", c.model.checkpoint);
    m->finish();
  }
  if (auto e = root.child("evaluation")) {
    e->read("count", c.evaluation.count);
    e->read("restarts", c.evaluation.restarts);
    e->read("max_iterations", c.evaluation.max_iterations);
    e->read("emd_count", c.evaluation.emd_count);
    e->read("projection_count", c.evaluation.projection_count);
    e->read("histogram_bins", c.evaluation.histogram_bins);
    e->read("histogram_max", c.evaluation.histogram_max);
    e->read("far_radius", c.evaluation.far_radius);
    e->read("far_count", c.evaluation.far_count);
    e->finish();
  }
  if (auto s = root.child("solver")) {
    if (auto o = s->child("operator")) {
      std::string interpolation = "linear";
      o->read("kind", c.solver.op.kind);
      o->read("kernel_size", c.solver.op.kernel_size);
      o->read("kernel_width", c.solver.op.kernel_width);
      o->read("measurements", c.solver.op.measurements);
      o->read("seed", c.solver.op.seed);
      o->read("n_angles", c.solver.op.geometry.n_angles);
      o->read("n_detectors", c.solver.op.geometry.n_detectors);
      o->read("interpolation", interpolation);
      require(interpolation == "linear" || interpolation == "nearest",
              "solver.operator.interpolation must be linear or nearest");
      c.solver.op.geometry.interpolation =
          interpolation == "linear" ? Interpolation::Linear : Interpolation::Nearest;
      o->finish();
    }
    s->read("noise_sigma", c.solver.noise_sigma);
    s->read("methods", c.solver.methods);
    s->read("lambdas", c.solver.lambdas);
    s->read("mus", c.solver.mus);
    s->read("images", c.solver.images);
    s->read("tune_images", c.solver.tune_images);
    s->read("seeds", c.solver.seeds);
    s->read("restarts", c.solver.restarts);
    s->read("init", c.solver.init);
    s->read("max_iterations", c.solver.max_iterations);
    s->read("tolerance", c.solver.tolerance);
    s->read("save_images", c.solver.save_images);
    s->finish();
  }
  root.finish();
  check(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  const auto& m = c.model;
  const auto& e = c.evaluation;
  const auto& s = c.solver;
  return json{
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"out", c.out},
      {"dataset",
       {{"kind", d.kind},
        {"image_size", d.image_size},
        {"train_count", d.train_count},
        {"test_count", d.test_count},
        {"mnist_dir", d.mnist_dir},
        {"cache", d.cache}}},
      {"model",
       {{"kind", m.kind},
        {"latent_dim", m.latent_dim},
        {"epochs", m.epochs},
        {"batch_size", m.batch_size},
        {"learning_rate", m.learning_rate},
        {"rho", m.rho},
        {"gp_weight", m.gp_weight},
        {"critic_steps", m.critic_steps},
        {"checkpoint", m.checkpoint}}},
      {"evaluation",
       {{"count", e.count},
        {"restarts", e.restarts},
        {"max_iterations", e.max_iterations},
        {"emd_count", e.emd_count},
        {"projection_count", e.projection_count},
        {"histogram_bins", e.histogram_bins},
        {"histogram_max", e.histogram_max},
        {"far_radius", e.far_radius},
        {"far_count", e.far_count}}},
      {"solver",
       {{"operator",
         {{"kind", s.op.kind},
          {"kernel_size", s.op.kernel_size},
          {"kernel_width", s.op.kernel_width},
          {"measurements", s.op.measurements},
          {"seed", s.op.seed},
          {"n_angles", s.op.geometry.n_angles},
          {"n_detectors", s.op.geometry.n_detectors},
          {"interpolation",
           s.op.geometry.interpolation == Interpolation::Linear ? "linear" : "nearest"}}},
        {"noise_sigma", s.noise_sigma},
        {"methods", s.methods},
        {"lambdas", s.lambdas},
        {"mus", s.mus},
        {"images", s.images},
        {"tune_images", s.tune_images},
        {"seeds", s.seeds},
        {"restarts", s.restarts},
        {"init", s.init},
        {"max_iterations", s.max_iterations},
        {"tolerance", s.tolerance},
        {"save_images", s.save_images}}}};
}

}  // namespace genreg::cli
