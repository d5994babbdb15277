#include "genreg/sweep.hpp"

#include <cmath>

#include "genreg/errors.hpp"
#include "genreg/metrics.hpp"
#include "genreg/parallel.hpp"

namespace genreg {

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("log grid needs 0 < lo <= hi");
  if (count == 0) throw InvalidArgument("log grid needs at least one point");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

TuningResult tune_parameters(const SolveSpec& base, const std::vector<TuningCase>& cases,
                             const std::vector<double>& lambdas, const std::vector<double>& mus,
                             std::size_t jobs) {
  if (cases.empty() || lambdas.empty() || mus.empty()) {
    throw InvalidArgument("tuning needs cases, lambdas and mus");
  }
  const std::size_t grid = lambdas.size() * mus.size();
  std::vector<double> scores(grid * cases.size());
  parallel_for(scores.size(), jobs, [&](std::size_t k) {
    const std::size_t g = k / cases.size(), c = k % cases.size();
    SolveSpec s = base;
    s.lambda = lambdas[g / mus.size()];
    s.mu = mus[g % mus.size()];
    s.data = cases[c].data;
    scores[k] = psnr_capped(psnr(solve(s).x, cases[c].truth));
  });
  TuningResult r;
  for (std::size_t g = 0; g < grid; ++g) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cases.size(); ++c) sum += scores[g * cases.size() + c];
    TuningEntry e{lambdas[g / mus.size()], mus[g % mus.size()], sum / static_cast<double>(cases.size())};
    r.table.push_back(e);
    if (g == 0 || e.mean_psnr > r.mean_psnr) {
      r.lambda = e.lambda;
      r.mu = e.mu;
      r.mean_psnr = e.mean_psnr;
    }
  }
  return r;
}

}  // namespace genreg
