#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace {

std::size_t parse_count(const char* text, const char* what) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text, &end, 10);
  if (end == text || *end != '\0' || v == 0) {
    throw genreg::cli::ConfigError(std::string(what) + " must be a positive integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative regularisation experiments: data, train, evaluate, reconstruct"};
  app.require_subcommand(1);

  std::string config_path, out, kind;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs, n, test_n, image_size, epochs;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--jobs", jobs, "Concurrent solves or encodings")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output directory");
  };
  CLI::App* data = app.add_subcommand("data", "Synthesise or import a dataset");
  add_common(data);
  data->add_option("--kind", kind, "shapes, shapes-plus or mnist");
  data->add_option("--n", n, "Training images")->check(CLI::PositiveNumber);
  data->add_option("--test-n", test_n, "Test images")->check(CLI::PositiveNumber);
  data->add_option("--image-size", image_size, "Image side length");
  CLI::App* train = app.add_subcommand("train", "Train an AE, VAE or WGAN generator");
  add_common(train);
  train->add_option("--kind", kind, "ae, vae or gan");
  train->add_option("--epochs", epochs, "Training epochs");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Generator quality suite");
  add_common(evaluate);
  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Solve inverse problems");
  add_common(reconstruct);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    genreg::cli::ExperimentConfig config;
    if (!config_path.empty()) config = genreg::cli::load_config(config_path);
    if (const char* env = std::getenv("GENREG_OUT"); env && *env) config.out = env;
    if (const char* env = std::getenv("GENREG_JOBS"); env && *env) {
      config.jobs = parse_count(env, "GENREG_JOBS");
    }
    if (!out.empty()) config.out = out;
    if (jobs) config.jobs = *jobs;
    if (seed) config.seed = *seed;
    if (data->parsed()) {
      if (!kind.empty()) config.dataset.kind = kind;
      if (n) config.dataset.train_count = *n;
      if (test_n) config.dataset.test_count = *test_n;
      if (image_size) config.dataset.image_size = *image_size;
    }
    if (train->parsed()) {
      if (!kind.empty()) config.model.kind = kind;
      if (epochs) config.model.epochs = *epochs;
    }
    config = genreg::cli::parse_config(genreg::cli::to_json(config));

    if (data->parsed()) genreg::cli::run_data(config);
    if (train->parsed()) genreg::cli::run_train(config);
    if (evaluate->parsed()) genreg::cli::run_evaluate(config);
    if (reconstruct->parsed()) genreg::cli::run_reconstruct(config);
  } catch (const genreg::NumericalError& e) {
    std::cerr << "genreg: numerical abort: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "genreg: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
