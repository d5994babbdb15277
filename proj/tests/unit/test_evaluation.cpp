#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "genreg/genreg.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace genreg;
using namespace genreg::testing;

namespace {

std::vector<Tensor> random_set(std::size_t n, std::mt19937_64& rng) {
  std::vector<Tensor> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_tensor({3, 3}, rng, 0.0, 1.0));
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Metrics, PsnrExamples) {
  std::mt19937_64 rng(1);
  const Tensor ref = random_tensor({8, 8}, rng, 0.0, 1.0);
  EXPECT_NEAR(psnr(ref + Tensor::full({8, 8}, 0.1), ref), 20.0, 1e-10);
  EXPECT_NEAR(psnr(ref + Tensor::full({8, 8}, 0.1), ref, 2.0), 20.0 + 20.0 * std::log10(2.0), 1e-10);
  EXPECT_TRUE(std::isinf(psnr(ref, ref)));
  EXPECT_EQ(psnr_capped(psnr(ref, ref)), 99.0);
  EXPECT_EQ(psnr_capped(31.5), 31.5);
  EXPECT_THROW(psnr(ref, Tensor({4, 4})), std::exception);

  // Permuting both images the same way leaves the value unchanged.
  const Tensor x = random_tensor({8, 8}, rng, 0.0, 1.0);
  std::vector<std::size_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor px({8, 8}), pr({8, 8});
  for (std::size_t i = 0; i < 64; ++i) {
    px[i] = x[perm[i]];
    pr[i] = ref[perm[i]];
  }
  EXPECT_NEAR(psnr(px, pr), psnr(x, ref), 1e-12);
}

TEST(Metrics, NrmseExamplesAndConsistency) {
  std::mt19937_64 rng(2);
  const Tensor ref = random_tensor({6, 6}, rng, 0.1, 1.0);
  EXPECT_EQ(nrmse(ref, ref), 0.0);
  EXPECT_DOUBLE_EQ(nrmse(2.0 * ref, ref), 1.0);
  EXPECT_DOUBLE_EQ(nrmse(Tensor({6, 6}), ref), 1.0);
  EXPECT_THROW(nrmse(ref, Tensor({6, 6})), InvalidArgument);
  double last_nrmse = 0.0, last_psnr = std::numeric_limits<double>::infinity();
  for (double scale : {0.01, 0.05, 0.2, 0.5, 1.0}) {
    const Tensor x = ref + scale * random_tensor({6, 6}, rng);
    const double n = nrmse(x, ref), p = psnr(x, ref);
    if (n > last_nrmse) EXPECT_LT(p, last_psnr);
    last_nrmse = n;
    last_psnr = p;
  }
}

TEST(Metrics, AggregatesAndReports) {
  const Aggregate a = aggregate({3.0, 1.0, 2.0, 10.0});
  EXPECT_EQ(a.count, 4u);
  EXPECT_DOUBLE_EQ(a.mean, 4.0);
  EXPECT_DOUBLE_EQ(a.median, 2.5);
  EXPECT_NEAR(a.std, std::sqrt(((1.0 + 9.0 + 4.0 + 36.0)) / 3.0), 1e-12);
  EXPECT_EQ(aggregate({5.0}).std, 0.0);

  MetricReport r;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> vals;
  for (int i = 0; i < 25; ++i) {
    vals.push_back(u(rng));
    r.add("img" + std::to_string(i), "nrmse", vals.back());
    r.add("img" + std::to_string(i), "psnr", 10.0 * vals.back());
  }
  r.set_provenance("seed", "3");
  EXPECT_EQ(r.metrics(), (std::vector<std::string>{"nrmse", "psnr"}));
  EXPECT_EQ(r.values("nrmse"), vals);
  EXPECT_NEAR(r.summary("nrmse").mean,
              std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size(), 1e-12);

  const auto dir = std::filesystem::temp_directory_path() / "genreg_eval_report";
  std::filesystem::create_directories(dir);
  r.write_records_csv(dir / "records.csv");
  r.write_summary_csv(dir / "summary.csv");
  std::ifstream in(dir / "records.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "id,metric,value");
  double sum = 0.0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.rfind(',');
    if (line.substr(c1 + 1, c2 - c1 - 1) != "nrmse") continue;
    sum += std::stod(line.substr(c2 + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 25u);
  const std::string summary = slurp(dir / "summary.csv");
  const auto pos = summary.find("nrmse,25,");
  ASSERT_NE(pos, std::string::npos);
  const double mean = std::stod(summary.substr(pos + 9));
  EXPECT_NEAR(mean, sum / 25.0, 1e-12);
  std::filesystem::remove_all(dir);
}

TEST(Metrics, NumberFormattingRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123, -2.5, 0.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Assignment, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const auto a = random_set(n, rng), b = random_set(n, rng);
    EXPECT_EQ(emd(a, b), brute_force_emd(a, b)) << "trial " << trial << " n " << n;
  }
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const Assignment s = solve_assignment(c);
  EXPECT_EQ(s.cost, 5.0);
  EXPECT_EQ(s.column_of_row, (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Assignment, EmdAxioms) {
  std::mt19937_64 rng(6);
  const auto a = random_set(20, rng), b = random_set(20, rng);
  EXPECT_GT(emd(a, b), 0.0);
  EXPECT_NEAR(emd(a, b), emd(b, a), 1e-12);
  auto shuffled = a;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(emd(a, shuffled), 0.0);
  EXPECT_DOUBLE_EQ(emd({a[0]}, {b[0]}), squared_norm(a[0] - b[0]));
  EXPECT_THROW(emd(a, random_set(3, rng)), InvalidArgument);
}

TEST(Diagnostics, EncodeDescendsAndIsSeeded) {
  const GenerativeModel ae = create_model(ModelKind::Autoencoder, desk_architecture(16, 4, ModelKind::Autoencoder), 3);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5; ++i) {
    const Tensor target = random_tensor({16, 16}, rng, 0.0, 1.0);
    for (std::size_t restarts : {1u, 3u}) {
      const auto r = encode_by_optimization(target, ae.generator, &*ae.encoder, restarts, 10 + i);
      EXPECT_LE(r.nrmse, r.initial_nrmse);
      EXPECT_LT(r.restart, restarts);
      EXPECT_EQ(r.image, ae.generator.generate(r.z));
      EXPECT_DOUBLE_EQ(r.nrmse, nrmse(r.image, target));
      const auto again = encode_by_optimization(target, ae.generator, &*ae.encoder, restarts, 10 + i);
      EXPECT_EQ(again.z, r.z);
    }
  }
}

TEST(Diagnostics, LatentProjection) {
  std::mt19937_64 rng(8);
  const Tensor pts = random_tensor({5, 2}, rng);
  const Tensor ref = random_tensor({7, 2}, rng);
  Tensor eye({2, 2});
  eye[0] = eye[3] = 1.0;
  const auto same = latent_projection_2d(pts, ref, 1, eye);
  EXPECT_EQ(same.latents, pts);
  EXPECT_EQ(same.reference, ref);

  const std::size_t n = 10000, d = 6;
  Tensor normal({n, d});
  std::normal_distribution<double> gauss;
  for (std::size_t i = 0; i < normal.size(); ++i) normal[i] = gauss(rng);
  const auto p = latent_projection_2d(normal, normal, 4);
  EXPECT_EQ(p.matrix, latent_projection_2d(normal, normal, 4).matrix);
  EXPECT_NE(p.matrix, latent_projection_2d(normal, normal, 5).matrix);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double row_sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) row_sq += p.matrix[axis * d + k] * p.matrix[axis * d + k];
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p.latents[i * 2 + axis];
    mean /= n;
    for (std::size_t i = 0; i < n; ++i) sq += std::pow(p.latents[i * 2 + axis] - mean, 2);
    EXPECT_NEAR(sq / (n - 1), row_sq, 0.15 * row_sq) << "axis " << axis;
  }
  EXPECT_THROW(latent_projection_2d(random_tensor({3, 4}, rng), random_tensor({3, 5}, rng), 1),
               ShapeError);
}

TEST(Diagnostics, InterpolationGrid) {
  const GeneratorModel g = tiny_generator(16, 4, 4);
  const Tensor z1 = Tensor::vector({1, 0, 0, 0}), z2 = Tensor::vector({0, 1, -1, 0}),
               z3 = Tensor::vector({0.5, 0.5, 0.5, -2});
  const Tensor grid = interpolation_grid(g, z1, z2, z3);
  ASSERT_EQ(grid.shape(), (Shape{5, 5, 16, 16}));
  const auto images = unstack(grid);
  ASSERT_EQ(images.size(), 25u);
  EXPECT_EQ(images[0], g.generate(z1));
  EXPECT_EQ(images[4 * 5], g.generate(z2));
  EXPECT_EQ(images[4], g.generate(z3));
  const auto flat = unstack(interpolation_grid(g, z1, z1, z1));
  for (const auto& im : flat) EXPECT_EQ(im, flat[0]);
}

TEST(Diagnostics, FarFromPrior) {
  const GeneratorModel g = tiny_generator(16, 4, 5);
  const auto far = sample_far_from_prior(g, 7.5, 20, 3);
  ASSERT_EQ(far.latents.shape(), (Shape{20, 4}));
  ASSERT_EQ(far.images.shape(), (Shape{20, 16, 16}));
  double mean_norm = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += far.latents[i * 4 + k] * far.latents[i * 4 + k];
    mean_norm += std::sqrt(s) / 20.0;
  }
  EXPECT_NEAR(mean_norm, 7.5, 1e-9);
  EXPECT_EQ(sample_far_from_prior(g, 7.5, 20, 3).images, far.images);
  const Tensor g0 = g.generate(Tensor({4}));
  const auto near = sample_far_from_prior(g, 1e-7, 3, 1);
  for (const auto& im : unstack(near.images)) EXPECT_LE(norm(im - g0), 1e-5);
  EXPECT_THROW(sample_far_from_prior(g, 0.0, 3, 1), InvalidArgument);
}

TEST(ImageIo, PgmAndMosaic) {
  Tensor im({2, 3});
  for (std::size_t i = 0; i < 6; ++i) im[i] = i / 5.0;
  const auto path = std::filesystem::temp_directory_path() / "genreg_eval.pgm";
  write_pgm(path, im);
  const Tensor back = read_pgm(path);
  EXPECT_LE(norm(back - im), 6 * 0.5 / 255.0);
  std::filesystem::remove(path);
  const Tensor m = mosaic({im, im, im}, 2, 1, 0.5);
  EXPECT_EQ(m.shape(), (Shape{5, 7}));
  EXPECT_EQ(m[3], 0.5);
  EXPECT_EQ(m[4], im[0]);
}
