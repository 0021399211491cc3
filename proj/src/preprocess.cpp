#include "liinit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "liinit/so3.hpp"

namespace liinit {

namespace {

double median_spacing(const std::vector<double>& t) {
  std::vector<double> dt(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) dt[i - 1] = t[i] - t[i - 1];
  std::nth_element(dt.begin(), dt.begin() + dt.size() / 2, dt.end());
  return dt[dt.size() / 2];
}

void require_increasing(const std::vector<double>& t, const char* who) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      throw std::invalid_argument(std::string(who) + ": timestamps must be strictly increasing");
    }
  }
}

// Expands a polynomial in z^-1 from its roots: prod_k (1 - r_k z^-1).
std::vector<std::complex<double>> poly_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
  }
  return c;
}

}  // namespace

ButterworthCoeffs butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz) {
  if (order < 1) throw std::invalid_argument("butterworth_lowpass: order must be >= 1");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz)) {
    throw std::invalid_argument("butterworth_lowpass: cutoff must lie in (0, Nyquist)");
  }

  const double fs2 = 2.0 * sample_rate_hz;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);

  // Analog prototype poles on the left unit semicircle, scaled to the warped
  // cutoff, then mapped through the bilinear transform.
  std::vector<std::complex<double>> zpoles(order);
  for (int k = 0; k < order; ++k) {
    const double ang = std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order);
    const std::complex<double> s = warped * std::polar(1.0, ang);
    zpoles[k] = (fs2 + s) / (fs2 - s);
  }

  const auto den = poly_from_roots(zpoles);
  // All zeros sit at z = -1: the numerator is a scaled binomial row.
  std::vector<std::complex<double>> nzeros(order, std::complex<double>(-1.0, 0.0));
  const auto num = poly_from_roots(nzeros);

  ButterworthCoeffs c;
  c.a.resize(order + 1);
  c.b.resize(order + 1);
  for (int i = 0; i <= order; ++i) {
    c.a[i] = den[i].real();
    c.b[i] = num[i].real();
  }
  // Pin the DC gain to exactly 1.
  double sa = 0.0, sb = 0.0;
  for (int i = 0; i <= order; ++i) {
    sa += c.a[i];
    sb += c.b[i];
  }
  const double scale = sa / sb;
  for (auto& v : c.b) v *= scale;
  return c;
}

std::vector<double> filter_forward(const ButterworthCoeffs& c, const std::vector<double>& x) {
  const std::size_t n = c.a.size();
  if (n < 2 || c.b.size() != n) throw std::invalid_argument("filter_forward: bad coefficients");
  if (x.empty()) return {};

  // Direct form II transposed. The state starts at its steady-state value for
  // a constant input x[0]; with unit DC gain that is the suffix sum of b - a,
  // which makes constant series exact fixed points.
  std::vector<double> z(n - 1, 0.0);
  double acc = 0.0;
  for (std::size_t i = n - 1; i >= 1; --i) {
    acc += c.b[i] - c.a[i];
    z[i - 1] = acc * x.front();
  }

  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xi = x[k];
    const double yi = c.b[0] * xi + z[0];
    for (std::size_t i = 0; i + 1 < n - 1; ++i) {
      z[i] = c.b[i + 1] * xi + z[i + 1] - c.a[i + 1] * yi;
    }
    z[n - 2] = c.b[n - 1] * xi - c.a[n - 1] * yi;
    y[k] = yi;
  }
  return y;
}

std::vector<double> filtfilt(const ButterworthCoeffs& c, const std::vector<double>& x) {
  const int order = static_cast<int>(c.a.size()) - 1;
  const int pad = 3 * order;
  if (static_cast<int>(x.size()) <= pad) {
    throw std::invalid_argument("filtfilt: series must be longer than 3*order");
  }

  // Odd reflection about both end samples.
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  const std::size_t nx = x.size();
  for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[nx - 1 - i]);

  std::vector<double> y = filter_forward(c, ext);
  std::reverse(y.begin(), y.end());
  y = filter_forward(c, y);
  std::reverse(y.begin(), y.end());

  return std::vector<double>(y.begin() + pad, y.begin() + pad + nx);
}

std::vector<Vec3> zero_phase_lowpass(const std::vector<double>& t, const std::vector<Vec3>& x,
                                     double cutoff_hz, int order) {
  if (t.size() != x.size()) throw std::invalid_argument("zero_phase_lowpass: size mismatch");
  if (t.size() < 2) throw std::invalid_argument("zero_phase_lowpass: series too short");
  require_increasing(t, "zero_phase_lowpass");

  const double period = median_spacing(t);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - period) > 0.01 * period) {
      throw std::invalid_argument("zero_phase_lowpass: sampling is not uniform within 1%");
    }
  }

  const auto coeffs = butterworth_lowpass(order, cutoff_hz, 1.0 / period);
  std::vector<Vec3> out(x.size());
  std::vector<double> comp(x.size());
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < x.size(); ++i) comp[i] = x[i][c];
    const auto filtered = filtfilt(coeffs, comp);
    for (std::size_t i = 0; i < x.size(); ++i) out[i][c] = filtered[i];
  }
  return out;
}

std::vector<Vec3> central_difference(const std::vector<double>& t, const std::vector<Vec3>& x) {
  if (t.size() != x.size()) throw std::invalid_argument("central_difference: size mismatch");
  if (t.size() < 3) throw std::invalid_argument("central_difference: need at least 3 samples");
  require_increasing(t, "central_difference");

  const std::size_t n = t.size();
  std::vector<Vec3> d(n);
  d[0] = (x[1] - x[0]) / (t[1] - t[0]);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    // Deep in the interior of a uniform grid, a seven-point stencil keeps the
    // derivative's relative error at (omega*h)^6/140 instead of (omega*h)^2/6,
    // which matters when the result feeds a least-squares fit of small biases.
    if (k >= 3 && k + 3 < n) {
      const double h = (t[k + 3] - t[k - 3]) / 6.0;
      double worst = 0.0;
      for (int j = -3; j < 3; ++j) {
        worst = std::max(worst, std::abs(t[k + j + 1] - t[k + j] - h));
      }
      if (worst <= 1e-3 * h) {
        d[k] = (45.0 * (x[k + 1] - x[k - 1]) - 9.0 * (x[k + 2] - x[k - 2]) +
                (x[k + 3] - x[k - 3])) /
               (60.0 * h);
        continue;
      }
    }
    d[k] = (x[k + 1] - x[k - 1]) / (t[k + 1] - t[k - 1]);
  }
  d[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
  return d;
}

ResampledImu downsample_interpolate(const ImuDerived& imu, const std::vector<double>& odom_times) {
  if (imu.size() < 2) throw std::invalid_argument("downsample_interpolate: IMU series too short");
  require_increasing(imu.t, "downsample_interpolate");
  require_increasing(odom_times, "downsample_interpolate");

  ResampledImu out;
  bool first_kept = false;
  for (std::size_t q = 0; q < odom_times.size(); ++q) {
    const double tq = odom_times[q];
    if (tq < imu.t.front()) {
      ++out.dropped_head;
      continue;
    }
    if (tq > imu.t.back()) {
      ++out.dropped_tail;
      continue;
    }
    if (!first_kept) {
      out.first_odom_index = static_cast<int>(q);
      first_kept = true;
    }
    auto hi = std::upper_bound(imu.t.begin(), imu.t.end(), tq);
    std::size_t i = (hi == imu.t.end()) ? imu.t.size() - 2
                                        : static_cast<std::size_t>(hi - imu.t.begin()) - 1;
    const double s = (tq - imu.t[i]) / (imu.t[i + 1] - imu.t[i]);
    out.series.t.push_back(tq);
    out.series.omega.push_back((1.0 - s) * imu.omega[i] + s * imu.omega[i + 1]);
    out.series.accel.push_back((1.0 - s) * imu.accel[i] + s * imu.accel[i + 1]);
    out.series.omega_dot.push_back((1.0 - s) * imu.omega_dot[i] + s * imu.omega_dot[i + 1]);
  }
  return out;
}

LidarDerived build_lidar_derived(const std::vector<OdomSample>& odom, double cutoff_hz,
                                 int order) {
  LidarDerived d;
  d.t.reserve(odom.size());
  d.rotation.reserve(odom.size());
  std::vector<Vec3> omega_raw, vel_raw;
  omega_raw.reserve(odom.size());
  vel_raw.reserve(odom.size());
  for (const auto& s : odom) {
    d.t.push_back(s.t);
    d.rotation.push_back(s.rotation);
    omega_raw.push_back(s.omega);
    vel_raw.push_back(s.velocity);
  }
  d.omega = zero_phase_lowpass(d.t, omega_raw, cutoff_hz, order);
  d.velocity = zero_phase_lowpass(d.t, vel_raw, cutoff_hz, order);
  d.omega_dot = central_difference(d.t, d.omega);
  d.accel = central_difference(d.t, d.velocity);
  return d;
}

ImuDerived build_imu_derived(const std::vector<ImuSample>& imu, double cutoff_hz, int order) {
  ImuDerived d;
  d.t.reserve(imu.size());
  std::vector<Vec3> gyro_raw, accel_raw;
  gyro_raw.reserve(imu.size());
  accel_raw.reserve(imu.size());
  for (const auto& s : imu) {
    d.t.push_back(s.t);
    gyro_raw.push_back(s.gyro);
    accel_raw.push_back(s.accel);
  }
  d.omega = zero_phase_lowpass(d.t, gyro_raw, cutoff_hz, order);
  d.accel = zero_phase_lowpass(d.t, accel_raw, cutoff_hz, order);
  d.omega_dot = central_difference(d.t, d.omega);
  return d;
}

std::vector<std::pair<int, int>> uniform_segments(const std::vector<double>& t, double tol_frac,
                                                  double max_gap) {
  std::vector<std::pair<int, int>> seg;
  if (t.size() < 2) {
    if (!t.empty()) seg.emplace_back(0, static_cast<int>(t.size()));
    return seg;
  }
  require_increasing(t, "uniform_segments");
  const double period = median_spacing(t);
  int begin = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double dt = t[i] - t[i - 1];
    const bool uniform = std::abs(dt - period) <= tol_frac * period;
    const bool bridgeable = dt > period && dt <= max_gap * period;
    if (!uniform && !bridgeable) {
      seg.emplace_back(begin, static_cast<int>(i));
      begin = static_cast<int>(i);
    }
  }
  seg.emplace_back(begin, static_cast<int>(t.size()));
  return seg;
}

namespace {

ImuSample lerp_sample(const ImuSample& a, const ImuSample& b, double s) {
  ImuSample out;
  out.t = (1.0 - s) * a.t + s * b.t;
  out.gyro = (1.0 - s) * a.gyro + s * b.gyro;
  out.accel = (1.0 - s) * a.accel + s * b.accel;
  return out;
}

OdomSample lerp_sample(const OdomSample& a, const OdomSample& b, double s) {
  OdomSample out;
  out.t = (1.0 - s) * a.t + s * b.t;
  out.rotation =
      a.rotation * so3_exp<double>(Vec3(s * so3_log<double>(Mat3(a.rotation.transpose() * b.rotation))));
  out.position = (1.0 - s) * a.position + s * b.position;
  out.velocity = (1.0 - s) * a.velocity + s * b.velocity;
  out.omega = (1.0 - s) * a.omega + s * b.omega;
  return out;
}

template <typename Sample>
std::vector<std::vector<Sample>> regularize_impl(const std::vector<Sample>& samples,
                                                 int* inserted) {
  if (inserted) *inserted = 0;
  std::vector<std::vector<Sample>> segments;
  if (samples.size() < 2) {
    segments.push_back(samples);
    return segments;
  }
  std::vector<double> t(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) t[i] = samples[i].t;
  require_increasing(t, "regularize");
  const double period = median_spacing(t);

  std::vector<Sample> cur{samples.front()};
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = t[i] - t[i - 1];
    if (std::abs(dt - period) <= 0.01 * period) {
      cur.push_back(samples[i]);
    } else if (dt > period && dt <= 3.5 * period) {
      const int missing = static_cast<int>(std::lround(dt / period)) - 1;
      for (int j = 1; j <= missing; ++j) {
        cur.push_back(lerp_sample(samples[i - 1], samples[i],
                                  static_cast<double>(j) / (missing + 1)));
      }
      if (inserted) *inserted += missing;
      cur.push_back(samples[i]);
    } else {
      segments.push_back(std::move(cur));
      cur = {samples[i]};
    }
  }
  segments.push_back(std::move(cur));
  return segments;
}

}  // namespace

std::vector<std::vector<ImuSample>> regularize_imu(const std::vector<ImuSample>& samples,
                                                   int* inserted) {
  return regularize_impl(samples, inserted);
}

std::vector<std::vector<OdomSample>> regularize_odom(const std::vector<OdomSample>& samples,
                                                     int* inserted) {
  return regularize_impl(samples, inserted);
}

}  // namespace liinit
