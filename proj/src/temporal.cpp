#include "liinit/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace liinit {

std::vector<double> magnitude_series(const std::vector<Vec3>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].norm();
  return out;
}

CoarseOffset cross_correlate(const std::vector<double>& imu_mag,
                             const std::vector<double>& lidar_mag, int d_range, double period) {
  if (imu_mag.empty() || lidar_mag.empty()) {
    throw std::invalid_argument("cross_correlate: empty input series");
  }
  if (d_range < 0) throw std::invalid_argument("cross_correlate: negative search range");
  if (!(period > 0.0)) throw std::invalid_argument("cross_correlate: period must be positive");

  const auto all_zero = [](const std::vector<double>& m) {
    return std::all_of(m.begin(), m.end(), [](double v) { return v == 0.0; });
  };
  if (all_zero(imu_mag) || all_zero(lidar_mag)) {
    throw std::invalid_argument("cross_correlate: all-zero magnitude series");
  }

  const int ni = static_cast<int>(imu_mag.size());
  const int nl = static_cast<int>(lidar_mag.size());

  CoarseOffset out;
  out.d_min = -d_range;
  out.profile.assign(2 * d_range + 1, std::numeric_limits<double>::quiet_NaN());

  double best = -std::numeric_limits<double>::infinity();
  bool any_overlap = false;
  // Scan lags outward from zero so that on exact ties the first (smallest |d|,
  // positive before negative) candidate wins.
  for (int step = 0; step <= 2 * d_range; ++step) {
    const int d = (step % 2 == 1) ? (step + 1) / 2 : -step / 2;
    if (d < -d_range || d > d_range) continue;
    const int k_begin = std::max(0, -d);
    const int k_end = std::min(nl, ni - d);
    if (k_end <= k_begin) continue;
    any_overlap = true;
    double score = 0.0;
    for (int k = k_begin; k < k_end; ++k) score += imu_mag[k + d] * lidar_mag[k];
    score /= static_cast<double>(k_end - k_begin);
    out.profile[d - out.d_min] = score;
    if (score > best) {
      best = score;
      out.d_star = d;
    }
  }
  if (!any_overlap) {
    throw std::invalid_argument("cross_correlate: no lag has overlapping samples");
  }

  out.correlation_peak = best;
  out.offset_seconds = out.d_star * period;
  return out;
}

}  // namespace liinit
