#ifndef LIINIT_CSV_IO_HPP
#define LIINIT_CSV_IO_HPP

// Locale-independent CSV ingest/export of the two stream formats.
//   IMU:      t,wx,wy,wz,ax,ay,az
//   odometry: t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,wx,wy,wz
// Quaternions are Hamilton wxyz, converted to rotation matrices on ingest;
// doubles are written shortest-roundtrip so read-back is bit exact.

#include <string>
#include <vector>

#include "liinit/preprocess.hpp"

namespace liinit {

std::vector<ImuSample> read_imu_csv(const std::string& path);
std::vector<OdomSample> read_odom_csv(const std::string& path);

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples);
void write_odom_csv(const std::string& path, const std::vector<OdomSample>& samples);

/// Shortest-roundtrip decimal form of a double, locale independent.
std::string format_double(double v);

}  // namespace liinit

#endif
