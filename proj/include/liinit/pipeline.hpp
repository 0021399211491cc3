#pragma once

#include <optional>
#include <string>
#include <vector>

#include "liinit/cv_filter.hpp"
#include "liinit/excitation.hpp"
#include "liinit/gauss_newton.hpp"
#include "liinit/preprocess.hpp"
#include "liinit/types.hpp"

namespace liinit {

/// Tuning knobs for the full initialization run.  Defaults are sized for
/// 10 Hz odometry against a 100-1000 Hz IMU.
struct PipelineConfig {
  double odom_cutoff_hz = 2.0;   ///< low-pass cutoff for odometry-derived signals
  double imu_cutoff_hz = 10.0;   ///< low-pass cutoff for raw IMU signals
  int filter_order = 4;
  double d_range_seconds = 2.0;  ///< +/- search window for the coarse offset
  /// Seconds dropped from each end of the filtered series before solving.
  /// The zero-phase filter is exact only away from the data boundaries; three
  /// seconds puts the leftover edge transient below 1e-8 for the default
  /// cutoffs.  Shrunk automatically when the recording is too short.
  double edge_trim_seconds = 3.0;
  bool refine_time_offset = true;
  bool use_huber = false;
  SolverOptions solver;
  ExcitationThresholds excitation;
  bool force_insufficient = false;  ///< solve anyway when excitation gating fails

  // Scan-update settings (lo-sim verb).
  int subframe_count = 3;
  double point_noise = 0.02;
  /// Sized for the stock simulated trajectory: its velocity slews by up to
  /// ~3 m/s^2 and its body rate by ~6 rad/s^2, so the constant-velocity
  /// prediction needs this much slack per unit time to stay honest.
  ProcessNoise process_noise{4.0, 8.0};
  double lo_sim_duration = 20.0;
  int lo_sim_planes = 8;
  int lo_sim_points_per_scan = 300;
  unsigned long long lo_sim_seed = 1;
  bool lo_sim_compensate = true;
  double lo_sim_range_noise = 0.0;
};

/// Everything the initialization estimates, plus per-stage diagnostics.
struct CalibrationResult {
  double time_offset = 0.0;  ///< total IMU-vs-odometry clock offset [s]
  int d_star = 0;            ///< whole-sample part of the offset
  double delta_t = 0.0;      ///< sub-sample refinement [s]
  double correlation_peak = 0.0;

  Mat3 r_imu_lidar = Mat3::Identity();
  Vec3 p_imu_in_lidar = Vec3::Zero();
  Vec3 p_lidar_in_imu = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gravity = Vec3::Zero();

  SolverStats rot_stats;
  SolverStats trans_stats;

  double data_begin = 0.0;
  double data_end = 0.0;
  int odom_count = 0;
  int imu_count = 0;
  int odom_inserted = 0;
  int imu_inserted = 0;
  int odom_discarded = 0;
  int imu_discarded = 0;
};

/// Outcome wrapper: either a result, or the stage that refused and why.
struct InitializationOutcome {
  std::string status = "failure";  ///< success | insufficient_excitation | failure
  std::string failed_stage;
  std::string message;
  std::optional<ExcitationReport> excitation;
  std::optional<CalibrationResult> result;
};

InitializationOutcome run_initialization(const std::vector<ImuSample>& imu,
                                         const std::vector<OdomSample>& odom,
                                         const PipelineConfig& cfg);

/// Excitation-only assessment of an odometry stream (no IMU needed).
InitializationOutcome run_assessment(const std::vector<OdomSample>& odom,
                                     const PipelineConfig& cfg);

/// Closed-loop scan-matching simulation: a constant-velocity filter tracks a
/// synthetic trajectory through plane landmarks.  Used to exercise the scan
/// update, motion compensation, and sub-frame splitting end to end.
struct LoSimResult {
  int scan_count = 0;
  double pose_rmse_rot = 0.0;    ///< rad, at scan ends vs ground truth
  double pose_rmse_pos = 0.0;    ///< m
  double mean_abs_residual_compensated = 0.0;    ///< point-to-plane, est. states
  double mean_abs_residual_uncompensated = 0.0;
  bool diverged = false;
  int diverged_at_scan = -1;
};

LoSimResult run_lo_sim(const PipelineConfig& cfg);

/// Deterministic JSON report (stable key order, shortest-roundtrip numbers).
std::string report_json(const InitializationOutcome& outcome, const PipelineConfig& cfg);

/// Parses `key = value` lines (with # comments) into a config.  Unknown keys
/// throw.  Returns the list of keys that were set.
std::vector<std::string> load_config_file(const std::string& path, PipelineConfig* cfg);

}  // namespace liinit
