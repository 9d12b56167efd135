#include "trussnet/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "trussnet/errors.hpp"

namespace tn {

const std::array<const char*, kMetricComponents> kMetricComponentNames = {
    "S11", "S22", "S33", "S23", "S13", "S12", "W"};

const char* family_name(PathFamily f) {
  switch (f) {
    case PathFamily::kUniaxial: return "UC";
    case PathFamily::kBiaxial: return "BC";
    case PathFamily::kSimpleShear: return "SS";
    case PathFamily::kTriaxial: return "TC";
  }
  throw ValidationError("unknown path family");
}

void SeriesSums::add(double truth, double pred) {
  if (n == 0) {
    min_true = truth;
    max_true = truth;
  } else {
    min_true = std::min(min_true, truth);
    max_true = std::max(max_true, truth);
  }
  ++n;
  sum_true += truth;
  sum_true2 += truth * truth;
  sum_pred += pred;
  sum_pred2 += pred * pred;
  sum_cross += truth * pred;
}

void SeriesSums::merge(const SeriesSums& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  n += o.n;
  sum_true += o.sum_true;
  sum_true2 += o.sum_true2;
  sum_pred += o.sum_pred;
  sum_pred2 += o.sum_pred2;
  sum_cross += o.sum_cross;
  min_true = std::min(min_true, o.min_true);
  max_true = std::max(max_true, o.max_true);
}

double SeriesSums::sse() const { return sum_true2 - 2.0 * sum_cross + sum_pred2; }

double SeriesSums::variance() const {
  if (n == 0) return 0.0;
  double mean = sum_true / static_cast<double>(n);
  // Clamp: roundoff can push the difference of large sums slightly negative.
  return std::max(0.0, sum_true2 / static_cast<double>(n) - mean * mean);
}

namespace {

ComponentMetrics single_series(const std::string& name, const SeriesSums& s) {
  ComponentMetrics m;
  m.component = name;
  m.count = s.n;
  if (s.n == 0) return m;
  m.rmse = std::sqrt(std::max(0.0, s.sse() / static_cast<double>(s.n)));
  double range = s.max_true - s.min_true;
  m.nrmse = range > 0.0 ? m.rmse / range : std::numeric_limits<double>::quiet_NaN();
  double denom = static_cast<double>(s.n) * s.variance();
  m.r2 = denom > 0.0 ? 1.0 - s.sse() / denom : std::numeric_limits<double>::quiet_NaN();
  m.min_true = s.min_true;
  m.max_true = s.max_true;
  return m;
}

}  // namespace

void MetricsAccumulator::add(PathFamily family, const Eigen::Matrix<double, 6, 1>& s_true,
                             const Eigen::Matrix<double, 6, 1>& s_pred, double w_true,
                             double w_pred) {
  std::array<SeriesSums, kMetricComponents>& slot = sums_[family];
  for (int c = 0; c < 6; ++c) slot[c].add(s_true[c], s_pred[c]);
  slot[6].add(w_true, w_pred);
}

std::int64_t MetricsAccumulator::count() const {
  std::int64_t n = 0;
  for (const auto& [family, slot] : sums_) n += slot[0].n;
  return n;
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport rep;
  rep.excluded = excluded_;
  for (int c = 0; c < kMetricComponents; ++c) {
    // Pooled RMSE/NRMSE over the whole split.
    SeriesSums pooled;
    for (const auto& [family, slot] : sums_) pooled.merge(slot[c]);
    ComponentMetrics m = single_series(kMetricComponentNames[c], pooled);

    // R^2 on per-family standard-deviation-normalized values: families with
    // zero variance carry no scale and are left out of the score.
    double ss_res = 0.0, norm_sum = 0.0, norm_sum2 = 0.0;
    std::int64_t norm_n = 0;
    for (const auto& [family, slot] : sums_) {
      const SeriesSums& s = slot[c];
      double var = s.variance();
      if (s.n == 0 || var <= 0.0) continue;
      ss_res += s.sse() / var;
      norm_sum += s.sum_true / std::sqrt(var);
      norm_sum2 += s.sum_true2 / var;
      norm_n += s.n;
    }
    if (norm_n > 0) {
      double mean = norm_sum / static_cast<double>(norm_n);
      double ss_tot = norm_sum2 - static_cast<double>(norm_n) * mean * mean;
      m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : std::numeric_limits<double>::quiet_NaN();
    } else {
      m.r2 = std::numeric_limits<double>::quiet_NaN();
    }
    rep.overall.push_back(m);
  }
  for (const auto& [family, slot] : sums_) {
    std::vector<ComponentMetrics>& rows = rep.per_family[family_name(family)];
    for (int c = 0; c < kMetricComponents; ++c)
      rows.push_back(single_series(kMetricComponentNames[c], slot[c]));
  }
  return rep;
}

const ComponentMetrics& MetricsReport::component(const std::string& name) const {
  for (const ComponentMetrics& m : overall)
    if (m.component == name) return m;
  throw ValidationError("no metric component named " + name);
}

double MetricsReport::mean_normal_stress_nrmse() const {
  return (component("S11").nrmse + component("S22").nrmse + component("S33").nrmse) / 3.0;
}

void MetricsReport::write_csv(std::ostream& os) const {
  os << "scope,component,count,rmse,nrmse,r2,min_true,max_true\n";
  os.precision(17);
  auto rows = [&os](const std::string& scope, const std::vector<ComponentMetrics>& list) {
    for (const ComponentMetrics& m : list)
      os << scope << ',' << m.component << ',' << m.count << ',' << m.rmse << ',' << m.nrmse
         << ',' << m.r2 << ',' << m.min_true << ',' << m.max_true << '\n';
  };
  rows("overall", overall);
  for (const auto& [name, list] : per_family) rows(name, list);
}

}  // namespace tn
