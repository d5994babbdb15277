#include "genreg/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "genreg/errors.hpp"

namespace genreg {

double psnr(const Tensor& x, const Tensor& ref, double peak) {
  require_same_shape(x, ref, "psnr");
  if (x.size() == 0) throw InvalidArgument("psnr of empty images");
  const double mse = squared_norm(x - ref) / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr_capped(double value) { return std::min(value, 99.0); }

double nrmse(const Tensor& x, const Tensor& ref) {
  require_same_shape(x, ref, "nrmse");
  const double r = norm(ref);
  if (r == 0.0) throw InvalidArgument("nrmse needs a nonzero reference");
  return norm(x - ref) / r;
}

Aggregate aggregate(std::vector<double> values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(a.count);
  if (a.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(a.count - 1));
  }
  std::sort(values.begin(), values.end());
  const std::size_t m = a.count / 2;
  a.median = a.count % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  return a;
}

void MetricReport::add(std::string id, std::string metric, double value) {
  records_.push_back({std::move(id), std::move(metric), value});
}

void MetricReport::set_provenance(const std::string& key, const std::string& value) {
  provenance_[key] = value;
}

std::vector<std::string> MetricReport::metrics() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (std::find(out.begin(), out.end(), r.metric) == out.end()) out.push_back(r.metric);
  }
  return out;
}

std::vector<double> MetricReport::values(const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : records_) {
    if (r.metric == metric) out.push_back(r.value);
  }
  return out;
}

Aggregate MetricReport::summary(const std::string& metric) const {
  return aggregate(values(metric));
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void MetricReport::write_records_csv(const std::filesystem::path& path) const {
  auto out = open_output(path);
  out << "id,metric,value\n";
  for (const auto& r : records_) out << r.id << ',' << r.metric << ',' << format_number(r.value) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void MetricReport::write_summary_csv(const std::filesystem::path& path) const {
  auto out = open_output(path);
  out << "metric,count,mean,std,median\n";
  for (const auto& m : metrics()) {
    const Aggregate a = summary(m);
    out << m << ',' << a.count << ',' << format_number(a.mean) << ',' << format_number(a.std) << ','
        << format_number(a.median) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace genreg
