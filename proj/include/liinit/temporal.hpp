#ifndef LIINIT_TEMPORAL_HPP
#define LIINIT_TEMPORAL_HPP

// Coarse temporal alignment: the integer-sample part of the IMU-to-odometry
// time offset from the cross-correlation of angular-velocity magnitudes.
// Magnitudes make the score independent of the unknown extrinsic rotation.

#include <vector>

#include "liinit/types.hpp"

namespace liinit {

struct CoarseOffset {
  int d_star = 0;                // IMU series index lead, in odometry samples
  double offset_seconds = 0.0;   // d_star * odometry period
  double correlation_peak = 0.0; // overlap-normalized score at d_star
  int d_min = 0;                 // first candidate lag searched
  std::vector<double> profile;   // normalized score per lag, NaN where no overlap
};

std::vector<double> magnitude_series(const std::vector<Vec3>& v);

/// Maximizes sum_k imu_mag[k + d] * lidar_mag[k] over d in [-d_range, d_range],
/// normalized by the overlap length so candidates with different overlaps are
/// comparable. Exact ties prefer smaller |d|, then the positive lag.
CoarseOffset cross_correlate(const std::vector<double>& imu_mag,
                             const std::vector<double>& lidar_mag, int d_range, double period);

}  // namespace liinit

#endif
