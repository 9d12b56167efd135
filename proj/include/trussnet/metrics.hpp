#pragma once
// Goodness-of-fit metrics over stress/energy records: RMSE, range-normalized
// RMSE, and R^2 with per-path-family standard-deviation normalization.  Every
// reported number is recomputable from the stored sufficient sums.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "trussnet/deformation_paths.hpp"

namespace tn {

// Six stress components in (11, 22, 33, 23, 13, 12) order, then the energy.
inline constexpr int kMetricComponents = 7;
extern const std::array<const char*, kMetricComponents> kMetricComponentNames;

const char* family_name(PathFamily f);

// Sufficient statistics of one (true, predicted) scalar series.
struct SeriesSums {
  std::int64_t n = 0;
  double sum_true = 0.0;
  double sum_true2 = 0.0;
  double sum_pred = 0.0;
  double sum_pred2 = 0.0;
  double sum_cross = 0.0;
  double min_true = 0.0;
  double max_true = 0.0;

  void add(double truth, double pred);
  void merge(const SeriesSums& o);
  double sse() const;       // sum of squared errors
  double variance() const;  // population variance of the true series
};

struct ComponentMetrics {
  std::string component;
  std::int64_t count = 0;
  double rmse = 0.0;
  double nrmse = 0.0;  // rmse / (max - min) of the true series
  double r2 = 0.0;
  double min_true = 0.0;
  double max_true = 0.0;
};

struct MetricsReport {
  std::vector<ComponentMetrics> overall;  // kMetricComponents entries
  std::map<std::string, std::vector<ComponentMetrics>> per_family;
  std::int64_t excluded = 0;  // records skipped as unconverged

  const ComponentMetrics& component(const std::string& name) const;
  double mean_normal_stress_nrmse() const;  // average over S11, S22, S33
  void write_csv(std::ostream& os) const;
};

class MetricsAccumulator {
 public:
  void add(PathFamily family, const Eigen::Matrix<double, 6, 1>& s_true,
           const Eigen::Matrix<double, 6, 1>& s_pred, double w_true, double w_pred);
  void exclude(std::int64_t n = 1) { excluded_ += n; }
  std::int64_t count() const;
  MetricsReport report() const;

 private:
  std::map<PathFamily, std::array<SeriesSums, kMetricComponents>> sums_;
  std::int64_t excluded_ = 0;
};

}  // namespace tn
