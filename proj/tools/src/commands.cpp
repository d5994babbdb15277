#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "experiment.hpp"

namespace genreg::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

fs::path tmp_sibling(const fs::path& path) {
  fs::path t = path;
  t += ".tmp";
  return t;
}

template <class Fn>
void write_atomic(const fs::path& path, Fn&& write) {
  const fs::path tmp = tmp_sibling(path);
  write(tmp);
  fs::rename(tmp, path);
}

void write_pgm_atomic(const fs::path& path, const Tensor& image) {
  write_atomic(path, [&](const fs::path& p) { write_pgm(p, image); });
}

fs::path out_dir(const ExperimentConfig& c) {
  fs::path d(c.out);
  fs::create_directories(d);
  return d;
}

void write_run_log(const ExperimentConfig& c, const std::string& command, double wall_ms,
                   json extra = json::object()) {
  const fs::path d = out_dir(c);
  write_text_atomic(d / "config.json", to_json(c).dump(2) + "\n");
  extra["command"] = command;
  extra["wall_ms"] = wall_ms;
  extra["config"] = to_json(c);
  write_text_atomic(d / ("run_" + command + ".json"), extra.dump(2) + "\n");
}

fs::path checkpoint_stem(const ExperimentConfig& c) {
  return c.model.checkpoint.empty() ? fs::path(c.out) / "model" : fs::path(c.model.checkpoint);
}

std::string csv_line(std::initializer_list<std::string> cells) {
  std::string s;
  for (const auto& cell : cells) {
    if (!s.empty()) s += ',';
    s += cell;
  }
  return s + '\n';
}

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string tag(const std::string& method, std::size_t li, std::size_t mi, std::size_t image,
                std::uint64_t seed) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_l%02zu_m%02zu_i%04zu_s%llu", method.c_str(), li, mi, image,
                static_cast<unsigned long long>(seed));
  return buf;
}

bool uses_mu(Method m) {
  return m == Method::Relaxed || m == Method::Sparse || m == Method::SparseTv;
}

bool uses_lambda(Method m) { return m != Method::Pgd; }

std::uint64_t noise_seed(std::uint64_t seed, std::size_t image) {
  return seed * 0x9E3779B97F4A7C15ull + image;
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_atomic(path, [&](const fs::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(p.string() + ": cannot open for writing");
    os << text;
    if (!os) throw IoError(p.string() + ": write failed");
  });
}

std::uint64_t test_split_seed(std::uint64_t seed) { return seed + 0x5DEECE66Dull; }

std::size_t default_restarts(ModelKind kind) { return kind == ModelKind::Wasserstein ? 4 : 1; }

Dataset load_split(const ExperimentConfig& c, Split split) {
  const auto& d = c.dataset;
  const std::size_t count = split == Split::Train ? d.train_count : d.test_count;
  if (!d.cache.empty()) {
    Dataset data = load_dataset(d.cache, split);
    if (data.size() < count) {
      throw ConfigError(d.cache + ": cached " + to_string(split) + " split has " +
                        std::to_string(data.size()) + " images, config asks for " +
                        std::to_string(count));
    }
    return data.slice(0, count);
  }
  if (d.kind == "mnist") {
    Dataset data = load_mnist(d.mnist_dir, split, count);
    if (data.height() != d.image_size) {
      throw ConfigError("dataset.image_size does not match the MNIST files");
    }
    return data;
  }
  ShapesConfig sc;
  sc.image_size = d.image_size;
  sc.count = count;
  sc.seed = split == Split::Train ? c.seed : test_split_seed(c.seed);
  sc.bright_spot = d.kind == "shapes-plus";
  return generate_shapes(sc, split);
}

void run_data(const ExperimentConfig& c) {
  const auto start = Clock::now();
  const fs::path d = out_dir(c);
  json splits = json::object();
  for (Split split : {Split::Train, Split::Test}) {
    const Dataset data = load_split(c, split);
    json echo{{"dataset", to_json(c)["dataset"]}, {"seed", c.seed}};
    if (c.dataset.kind != "mnist") {
      ShapesConfig sc;
      sc.image_size = c.dataset.image_size;
      sc.count = data.size();
      sc.seed = split == Split::Train ? c.seed : test_split_seed(c.seed);
      sc.bright_spot = c.dataset.kind == "shapes-plus";
      echo["shapes"] = json::parse(shapes_config_json(sc));
    }
    save_dataset(d, data, echo.dump());
    const std::size_t n = std::min<std::size_t>(data.size(), 64);
    write_pgm_atomic(d / (to_string(split) + "_preview.pgm"),
                     mosaic({data.images.begin(), data.images.begin() + n}, 8));
    splits[to_string(split)] = data.size();
  }
  write_run_log(c, "data", elapsed_ms(start), {{"counts", splits}});
}

void run_train(const ExperimentConfig& c) {
  const auto start = Clock::now();
  const fs::path d = out_dir(c);
  const Dataset data = load_split(c, Split::Train);
  TrainConfig tc;
  tc.epochs = c.model.epochs;
  tc.batch_size = c.model.batch_size;
  tc.learning_rate = c.model.learning_rate;
  tc.seed = c.seed;
  tc.rho = c.model.rho;
  tc.gp_weight = c.model.gp_weight;
  tc.critic_steps = c.model.critic_steps;
  try {
    validate(tc);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  std::vector<EpochRecord> history;
  const ModelKind kind = parse_model_kind(c.model.kind);
  const GenerativeModel model = train_new(kind, data, c.model.latent_dim, tc, &history);

  std::string csv = "epoch,loss,reconstruction,kl,generator,gradient_penalty\n";
  for (const auto& r : history) {
    csv += csv_line({num(r.epoch), num(r.loss), num(r.reconstruction), num(r.kl), num(r.generator),
                     num(r.gradient_penalty)});
  }
  write_text_atomic(d / "loss.csv", csv);

  json extra{{"config", to_json(c)}, {"train", json::parse(to_json(tc))}};
  if (!history.empty()) extra["final_loss"] = history.back().loss;
  const fs::path stem = d / "model";
  save_model(stem, model, extra.dump());

  std::mt19937_64 rng(c.seed);
  const Tensor z = standard_normal({16, model.generator.latent_dim()}, rng);
  write_pgm_atomic(d / "samples.pgm", mosaic(unstack(model.generator.generate_batch(z)), 4));
  write_run_log(c, "train", elapsed_ms(start), {{"epochs", history.size()}});
}

void run_evaluate(const ExperimentConfig& c) {
  const auto start = Clock::now();
  const fs::path d = out_dir(c);
  const GenerativeModel model = load_model(checkpoint_stem(c));
  const GeneratorModel& g = model.generator;
  const EncoderModel* encoder = model.encoder ? &*model.encoder : nullptr;
  const Dataset test = load_split(c, Split::Test);
  const auto& e = c.evaluation;
  const std::size_t count = std::min(e.count, test.size());
  const std::size_t restarts = e.restarts ? e.restarts : default_restarts(model.kind);
  BacktrackConfig bc;
  bc.max_iterations = e.max_iterations;

  std::vector<EncodeResult> enc(count);
  parallel_for(count, c.jobs, [&](std::size_t i) {
    enc[i] = encode_by_optimization(test.images[i], g, encoder, restarts, c.seed + i, bc);
  });

  MetricReport report;
  report.set_provenance("model", checkpoint_stem(c).string());
  report.set_provenance("dataset", c.dataset.cache.empty() ? c.dataset.kind : c.dataset.cache);
  report.set_provenance("seed", std::to_string(c.seed));
  std::vector<std::size_t> hist(e.histogram_bins, 0);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "test_%05zu", i);
    report.add(id, "nrmse", enc[i].nrmse);
    report.add(id, "psnr", psnr_capped(psnr(enc[i].image, test.images[i])));
    const auto bin = static_cast<std::size_t>(enc[i].nrmse / e.histogram_max * e.histogram_bins);
    ++hist[std::min(bin, e.histogram_bins - 1)];
  }
  report.write_records_csv(d / "nrmse.csv");
  report.write_summary_csv(d / "nrmse_summary.csv");
  std::string hcsv = "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < hist.size(); ++b) {
    const double w = e.histogram_max / e.histogram_bins;
    hcsv += csv_line({num(b * w), num((b + 1) * w), num(hist[b])});
  }
  write_text_atomic(d / "nrmse_histogram.csv", hcsv);

  const std::size_t n_emd = std::min(e.emd_count, test.size());
  std::string ecsv = "count,emd,emd_per_image\n";
  if (n_emd > 0) {
    std::mt19937_64 rng(c.seed);
    const auto fakes = unstack(g.generate_batch(standard_normal({n_emd, g.latent_dim()}, rng)));
    const double value = emd({test.images.begin(), test.images.begin() + n_emd}, fakes);
    ecsv += csv_line({num(n_emd), num(value), num(value / n_emd)});
  }
  write_text_atomic(d / "emd.csv", ecsv);

  const std::size_t n_proj = std::min(e.projection_count, count);
  if (n_proj > 0) {
    Tensor latents({n_proj, g.latent_dim()});
    for (std::size_t i = 0; i < n_proj; ++i) {
      std::copy(enc[i].z.data(), enc[i].z.data() + g.latent_dim(),
                latents.data() + i * g.latent_dim());
    }
    std::mt19937_64 rng(c.seed + 1);
    const Tensor reference = standard_normal({n_proj, g.latent_dim()}, rng);
    const Projection2d p = latent_projection_2d(latents, reference, c.seed);
    std::string pcsv = "set,index,x,y\n";
    for (std::size_t i = 0; i < n_proj; ++i) {
      pcsv += csv_line({"encoded", num(i), num(p.latents[2 * i]), num(p.latents[2 * i + 1])});
    }
    for (std::size_t i = 0; i < n_proj; ++i) {
      pcsv += csv_line({"prior", num(i), num(p.reference[2 * i]), num(p.reference[2 * i + 1])});
    }
    write_text_atomic(d / "projection.csv", pcsv);
  }

  Tensor z1, z2, z3;
  if (count >= 3) {
    z1 = enc[0].z, z2 = enc[1].z, z3 = enc[2].z;
  } else {
    std::mt19937_64 rng(c.seed + 2);
    const Tensor zs = standard_normal({3, g.latent_dim()}, rng);
    auto row = [&](std::size_t r) {
      return Tensor({g.latent_dim()}, std::vector<double>(zs.data() + r * g.latent_dim(),
                                                          zs.data() + (r + 1) * g.latent_dim()));
    };
    z1 = row(0), z2 = row(1), z3 = row(2);
  }
  write_pgm_atomic(d / "interpolation.pgm", mosaic(unstack(interpolation_grid(g, z1, z2, z3)), 5));
  if (e.far_count > 0) {
    const FarSamples far = sample_far_from_prior(g, e.far_radius, e.far_count, c.seed);
    write_pgm_atomic(d / "far_from_prior.pgm", mosaic(unstack(far.images), 4));
  }
  const Aggregate a = report.summary("nrmse");
  write_run_log(c, "evaluate", elapsed_ms(start),
                {{"images", count}, {"restarts", restarts}, {"nrmse_median", a.median}});
}

void run_reconstruct(const ExperimentConfig& c) {
  const auto start = Clock::now();
  const fs::path d = out_dir(c);
  const auto& s = c.solver;
  std::vector<Method> methods;
  bool need_model = false;
  for (const auto& name : s.methods) {
    methods.push_back(parse_method(name));
    need_model = need_model || needs_generator(methods.back());
  }
  std::optional<GenerativeModel> model;
  if (need_model) model = load_model(checkpoint_stem(c));
  if (s.init == "encoder" && need_model && !model->encoder) {
    throw ConfigError("solver.init = encoder needs a model with an encoder");
  }
  const Dataset test = load_split(c, Split::Test);
  if (s.images + s.tune_images > test.size()) {
    throw ConfigError("solver.images + solver.tune_images exceeds the test split size");
  }
  const OperatorPtr op = make_operator(s.op, c.dataset.image_size);
  const double morozov = morozov_target({s.noise_sigma, 0}, op->output_size());

  auto base_spec = [&](Method m) {
    SolveSpec spec;
    spec.op = op;
    spec.method = m;
    if (needs_generator(m)) {
      spec.generator = &model->generator;
      spec.encoder = model->encoder ? &*model->encoder : nullptr;
      if (s.init == "encoder") spec.init.kind = InitKind::Encoder;
      spec.restarts = s.restarts ? s.restarts : default_restarts(model->kind);
    }
    spec.stopping = {s.max_iterations, s.tolerance};
    return spec;
  };
  auto observe = [&](std::size_t image, std::uint64_t seed) {
    return add_noise(op->apply(test.images[image]), {s.noise_sigma, noise_seed(seed, image)});
  };

  struct Grid {
    std::vector<double> lambdas, mus;
  };
  std::vector<Grid> grids;
  std::string tuning = "method,lambda,mu,mean_psnr,selected\n";
  for (Method m : methods) {
    Grid grid{uses_lambda(m) ? s.lambdas : std::vector<double>{0.0},
              uses_mu(m) ? s.mus : std::vector<double>{0.0}};
    if (s.tune_images > 0 && grid.lambdas.size() * grid.mus.size() > 1) {
      std::vector<TuningCase> cases;
      for (std::size_t k = 0; k < s.tune_images; ++k) {
        cases.push_back({test.images[s.images + k], observe(s.images + k, s.seeds.front())});
      }
      SolveSpec spec = base_spec(m);
      spec.seed = s.seeds.front();
      const TuningResult best = tune_parameters(spec, cases, grid.lambdas, grid.mus, c.jobs);
      for (const auto& t : best.table) {
        const bool chosen = t.lambda == best.lambda && t.mu == best.mu;
        tuning += csv_line({to_string(m), num(t.lambda), num(t.mu), num(t.mean_psnr), chosen ? "1" : "0"});
      }
      grid = {{best.lambda}, {best.mu}};
    }
    grids.push_back(grid);
  }
  if (s.tune_images > 0) write_text_atomic(d / "tuning.csv", tuning);

  struct Task {
    std::size_t method, li, mi, image;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    for (std::size_t li = 0; li < grids[k].lambdas.size(); ++li) {
      for (std::size_t mi = 0; mi < grids[k].mus.size(); ++mi) {
        for (std::size_t i = 0; i < s.images; ++i) {
          for (std::uint64_t seed : s.seeds) tasks.push_back({k, li, mi, i, seed});
        }
      }
    }
  }
  if (s.save_images) {
    fs::create_directories(d / "images");
    fs::create_directories(d / "traces");
  }
  std::vector<SolveResult> results(tasks.size());
  parallel_for(tasks.size(), c.jobs, [&](std::size_t t) {
    const Task& task = tasks[t];
    const Method m = methods[task.method];
    SolveSpec spec = base_spec(m);
    spec.lambda = grids[task.method].lambdas[task.li];
    spec.mu = grids[task.method].mus[task.mi];
    spec.seed = task.seed;
    spec.data = observe(task.image, task.seed);
    results[t] = solve(spec);
    if (!s.save_images) return;
    const std::string name = tag(s.methods[task.method], task.li, task.mi, task.image, task.seed);
    write_pgm_atomic(d / "images" / (name + ".pgm"), results[t].x);
    write_atomic(d / "images" / (name + ".grt"), [&](const fs::path& p) {
      NamedTensors rec{{"x", results[t].x}};
      if (!results[t].z.empty()) rec.emplace_back("z", results[t].z);
      if (!results[t].u.empty()) rec.emplace_back("u", results[t].u);
      save_tensors(p, rec);
    });
    std::string trace = "iteration,objective\n";
    for (std::size_t i = 0; i < results[t].objective.size(); ++i) {
      trace += csv_line({num(i), num(results[t].objective[i])});
    }
    write_text_atomic(d / "traces" / (name + ".csv"), trace);
  });

  std::string metrics = "method,lambda,mu,image,seed,psnr,nrmse,discrepancy,morozov,iterations,restart,stop_reason\n";
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  json timings = json::array();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    const SolveResult& r = results[t];
    const Tensor& truth = test.images[task.image];
    metrics += csv_line({s.methods[task.method], num(grids[task.method].lambdas[task.li]),
                         num(grids[task.method].mus[task.mi]), num(task.image),
                         std::to_string(task.seed), num(psnr_capped(psnr(r.x, truth))),
                         num(nrmse(r.x, truth)), num(r.discrepancy), num(morozov),
                         num(r.iterations), num(r.restart), r.stop_reason});
    groups[{task.method, task.li, task.mi}].push_back(t);
    timings.push_back({{"solve", t}, {"wall_ms", r.wall_ms}});
  }
  write_text_atomic(d / "metrics.csv", metrics);

  std::string summary = "method,lambda,mu,count,psnr_mean,psnr_std,psnr_median,nrmse_mean,discrepancy_mean,morozov\n";
  for (const auto& [key, members] : groups) {
    const auto [k, li, mi] = key;
    std::vector<double> p, n, dis;
    for (std::size_t t : members) {
      p.push_back(psnr_capped(psnr(results[t].x, test.images[tasks[t].image])));
      n.push_back(nrmse(results[t].x, test.images[tasks[t].image]));
      dis.push_back(results[t].discrepancy);
    }
    const Aggregate ap = aggregate(p);
    summary += csv_line({s.methods[k], num(grids[k].lambdas[li]), num(grids[k].mus[mi]),
                         num(members.size()), num(ap.mean), num(ap.std), num(ap.median),
                         num(aggregate(n).mean), num(aggregate(dis).mean), num(morozov)});
  }
  write_text_atomic(d / "summary.csv", summary);
  write_run_log(c, "reconstruct", elapsed_ms(start), {{"solves", timings}});
}

}  // namespace genreg::cli
