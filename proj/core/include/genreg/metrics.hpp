#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "genreg/tensor.hpp"

namespace genreg {

/// 10 log10(peak^2 / MSE). Identical images give +infinity.
double psnr(const Tensor& x, const Tensor& ref, double peak = 1.0);
/// PSNR with +infinity replaced by 99 dB, as written to reports.
double psnr_capped(double value);
/// ||x - ref|| / ||ref||; throws InvalidArgument for a zero reference.
double nrmse(const Tensor& x, const Tensor& ref);

struct MetricRecord {
  std::string id;
  std::string metric;
  double value = 0.0;
};

struct Aggregate {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1), 0 for a single value
  double median = 0.0;
};

Aggregate aggregate(std::vector<double> values);

/// Per-image metric records plus provenance, with aggregates per metric.
class MetricReport {
 public:
  void add(std::string id, std::string metric, double value);
  void set_provenance(const std::string& key, const std::string& value);

  const std::vector<MetricRecord>& records() const { return records_; }
  const std::map<std::string, std::string>& provenance() const { return provenance_; }
  /// Metric names in order of first appearance.
  std::vector<std::string> metrics() const;
  std::vector<double> values(const std::string& metric) const;
  Aggregate summary(const std::string& metric) const;

  /// id,metric,value rows.
  void write_records_csv(const std::filesystem::path& path) const;
  /// metric,count,mean,std,median rows.
  void write_summary_csv(const std::filesystem::path& path) const;

 private:
  std::vector<MetricRecord> records_;
  std::map<std::string, std::string> provenance_;
};

/// Shortest round-trip decimal form, used for every number in CSV output.
std::string format_number(double value);

}  // namespace genreg
