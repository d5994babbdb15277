#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genreg/genreg.hpp"

namespace genreg::cli {

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DatasetSection {
  std::string kind = "shapes";  // shapes, shapes-plus, mnist
  std::size_t image_size = 32;
  std::size_t train_count = 4000;
  std::size_t test_count = 500;
  std::string mnist_dir;
  std::string cache;  // directory written by `data`; used instead of synthesis when set
};

struct ModelSection {
  std::string kind = "vae";
  std::size_t latent_dim = 10;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double rho = 0.1;
  double gp_weight = 10.0;
  std::size_t critic_steps = 5;
  std::string checkpoint;  // stem to load; empty means <out>/model
};

struct EvaluationSection {
  std::size_t count = 100;        // test images encoded
  std::size_t restarts = 0;       // 0: 4 for gan, 1 otherwise
  std::size_t max_iterations = 500;
  std::size_t emd_count = 500;
  std::size_t projection_count = 500;
  std::size_t histogram_bins = 20;
  double histogram_max = 1.0;
  double far_radius = 5.0;
  std::size_t far_count = 16;
};

struct SolverSection {
  OperatorConfig op;
  double noise_sigma = 0.1;
  std::vector<std::string> methods{"hard", "tv"};
  std::vector<double> lambdas{0.1};
  std::vector<double> mus{0.0};
  std::size_t images = 10;
  std::size_t tune_images = 0;  // > 0: pick (lambda, mu) per method on held-out images first
  std::vector<std::uint64_t> seeds{0};
  std::size_t restarts = 0;     // 0: 4 for gan-backed solves, 1 otherwise
  std::string init = "standard-normal";  // or "encoder"
  std::size_t max_iterations = 2000;
  double tolerance = 1e-8;
  bool save_images = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out = "runs/default";
  DatasetSection dataset;
  ModelSection model;
  EvaluationSection evaluation;
  SolverSection solver;
};

/// Parses and validates a config object. Unknown keys and wrong types raise
/// ConfigError naming the offending path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field, defaults included; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);

/// Train split from `seed`, test split from a derived seed.
Dataset load_split(const ExperimentConfig& config, Split split);
std::uint64_t test_split_seed(std::uint64_t seed);

/// Default restart count for a model kind.
std::size_t default_restarts(ModelKind kind);

void run_data(const ExperimentConfig& config);
void run_train(const ExperimentConfig& config);
void run_evaluate(const ExperimentConfig& config);
void run_reconstruct(const ExperimentConfig& config);

/// Writes through a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace genreg::cli
