#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "liinit/csv_io.hpp"
#include "liinit/pipeline.hpp"
#include "liinit/simulator.hpp"
#include "liinit/so3.hpp"

using namespace liinit;

namespace {

SensorRig test_rig() {
  SensorRig rig;
  rig.r_imu_lidar = so3_exp<double>(Vec3(0.0, -0.0349, 3.1067));  // the hard ~178 deg yaw
  rig.p_imu_in_lidar = Vec3(0.12, 0.0, 0.11);
  rig.time_offset = 0.137;  // off the IMU grid: exercises sub-sample recovery
  rig.gyro_bias = Vec3(0.01, -0.02, 0.005);
  rig.accel_bias = Vec3(0.05, -0.03, 0.02);
  rig.gravity = so3_exp<double>(Vec3(0.03, 0.02, 0.0)) * Vec3(0.0, 0.0, -9.81);
  return rig;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/liinit_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("noiseless end-to-end run recovers every parameter") {
  const TrajectorySpec spec = smooth_excitation_trajectory(40.0);
  const SensorRig rig = test_rig();
  const auto imu = synth_imu(spec, rig, 40.0, 7);
  const auto odom = synth_odometry(spec, rig, 40.0, 7);

  const PipelineConfig cfg;
  const InitializationOutcome out = run_initialization(imu, odom, cfg);
  REQUIRE(out.status == "success");
  REQUIRE(out.result.has_value());
  REQUIRE(out.excitation.has_value());
  CHECK(out.excitation->sufficient);

  const CalibrationResult& r = *out.result;
  CHECK(std::abs(r.time_offset - rig.time_offset) < 1e-6);
  CHECK(so3_log<double>(Mat3(rig.r_imu_lidar.transpose() * r.r_imu_lidar)).norm() < 1e-6);
  CHECK((r.p_imu_in_lidar - rig.p_imu_in_lidar).norm() < 5e-6);
  CHECK((r.p_lidar_in_imu - rig.p_lidar_in_imu()).norm() < 5e-6);
  CHECK((r.gyro_bias - rig.gyro_bias).norm() < 1e-6);
  CHECK((r.accel_bias - rig.accel_bias).norm() < 5e-6);
  CHECK(std::acos(std::min(1.0, r.gravity.normalized().dot(rig.gravity.normalized()))) < 1e-6);
  CHECK(std::abs(r.gravity.norm() - 9.81) < 1e-9);
  CHECK(r.rot_stats.converged);
  CHECK(r.trans_stats.converged);
  CHECK(r.d_star == 1);  // 0.137 s at 10 Hz odometry
  // The whole-sample and sub-sample parts recombine into the total.
  CHECK(std::abs(r.d_star * 0.1 + r.delta_t - r.time_offset) < 1e-12);
}

TEST_CASE("single-axis motion stops the pipeline unless forced") {
  const TrajectorySpec spec = single_axis_trajectory(2, 40.0);
  SensorRig rig = test_rig();
  rig.time_offset = 0.05;

  const auto imu = synth_imu(spec, rig, 40.0, 3);
  const auto odom = synth_odometry(spec, rig, 40.0, 3);

  PipelineConfig cfg;
  const InitializationOutcome out = run_initialization(imu, odom, cfg);
  CHECK(out.status == "insufficient_excitation");
  CHECK(out.failed_stage == "excitation");
  CHECK_FALSE(out.result.has_value());
  REQUIRE(out.excitation.has_value());
  CHECK_FALSE(out.excitation->sufficient);
  // The degenerate direction is the rotation axis (z).
  CHECK(std::abs(out.excitation->weakest_rot_axis.z()) > 1.0 - 1e-6);
  CHECK(out.message.find("weakest") != std::string::npos);

  cfg.force_insufficient = true;
  const InitializationOutcome forced = run_initialization(imu, odom, cfg);
  CHECK(forced.status == "success");
  REQUIRE(forced.result.has_value());
  // Forcing an unobservable problem must not silently look as good as a
  // well-excited one: the lever arm along the spin axis is unconstrained.
  CHECK((forced.result->p_imu_in_lidar - rig.p_imu_in_lidar).norm() > 1e-3);
}

TEST_CASE("assessment verb mirrors the gating decision") {
  SensorRig rig;  // noiseless, identity rig: assessment only reads odometry
  const auto good = synth_odometry(smooth_excitation_trajectory(40.0), rig, 40.0, 1);
  const auto bad = synth_odometry(single_axis_trajectory(0, 40.0), rig, 40.0, 1);

  const PipelineConfig cfg;
  const InitializationOutcome ok = run_assessment(good, cfg);
  CHECK(ok.status == "success");
  REQUIRE(ok.excitation.has_value());
  CHECK(ok.excitation->sufficient);

  const InitializationOutcome flagged = run_assessment(bad, cfg);
  CHECK(flagged.status == "insufficient_excitation");
  REQUIRE(flagged.excitation.has_value());
  CHECK(std::abs(flagged.excitation->weakest_rot_axis.x()) > 1.0 - 1e-6);

  const InitializationOutcome broken = run_assessment({}, cfg);
  CHECK(broken.status == "failure");
}

TEST_CASE("reports are byte-identical across repeated runs") {
  const TrajectorySpec spec = smooth_excitation_trajectory(40.0);
  SensorRig rig = test_rig();
  rig.gyro_noise = 0.005;
  rig.accel_noise = 0.05;
  rig.odom_att_noise = 0.002;
  rig.odom_pos_noise = 0.005;
  rig.odom_vel_noise = 0.01;
  rig.odom_omega_noise = 0.01;
  const auto imu = synth_imu(spec, rig, 40.0, 11);
  const auto odom = synth_odometry(spec, rig, 40.0, 12);

  const PipelineConfig cfg;
  const std::string a = report_json(run_initialization(imu, odom, cfg), cfg);
  const std::string b = report_json(run_initialization(imu, odom, cfg), cfg);
  CHECK(a == b);
  CHECK(a.find("\"status\": \"success\"") != std::string::npos);
  CHECK(a.find("\"version\"") != std::string::npos);
  CHECK(a.find("\"time_offset\"") != std::string::npos);
  CHECK(a.back() == '\n');

  // Failure reports serialize too, and stay deterministic.
  const std::string f1 = report_json(run_initialization({}, odom, cfg), cfg);
  const std::string f2 = report_json(run_initialization({}, odom, cfg), cfg);
  CHECK(f1 == f2);
  CHECK(f1.find("\"status\": \"failure\"") != std::string::npos);
  CHECK(f1.find("\"failed_stage\": \"input\"") != std::string::npos);
}

TEST_CASE("config files load, override defaults, and reject junk") {
  TempFile file("config.cfg");
  {
    std::ofstream out(file.path);
    out << "# tuning\n"
        << "odom_cutoff_hz = 1.5\n"
        << "imu_cutoff_hz = 8\n"
        << "filter_order = 2\n"
        << "d_range_seconds = 1.0   # trailing comment\n"
        << "edge_trim_seconds = 2.5\n"
        << "refine_time_offset = false\n"
        << "use_huber = true\n"
        << "force_insufficient = 1\n"
        << "rotation_threshold = 0.2\n"
        << "translation_threshold = 0.3\n"
        << "solver_max_iterations = 17\n"
        << "subframe_count = 5\n"
        << "lo_sim_seed = 9\n";
  }
  PipelineConfig cfg;
  const auto seen = load_config_file(file.path, &cfg);
  CHECK(seen.size() == 13);
  CHECK(cfg.odom_cutoff_hz == 1.5);
  CHECK(cfg.imu_cutoff_hz == 8.0);
  CHECK(cfg.filter_order == 2);
  CHECK(cfg.d_range_seconds == 1.0);
  CHECK(cfg.edge_trim_seconds == 2.5);
  CHECK_FALSE(cfg.refine_time_offset);
  CHECK(cfg.use_huber);
  CHECK(cfg.force_insufficient);
  CHECK(cfg.excitation.rotation == 0.2);
  CHECK(cfg.excitation.translation == 0.3);
  CHECK(cfg.solver.max_iterations == 17);
  CHECK(cfg.subframe_count == 5);
  CHECK(cfg.lo_sim_seed == 9);

  {
    std::ofstream out(file.path);
    out << "no_such_key = 1\n";
  }
  PipelineConfig fresh;
  CHECK_THROWS_WITH_AS(load_config_file(file.path, &fresh),
                       doctest::Contains("unknown key"), std::runtime_error);

  {
    std::ofstream out(file.path);
    out << "odom_cutoff_hz\n";
  }
  CHECK_THROWS_WITH_AS(load_config_file(file.path, &fresh),
                       doctest::Contains("expected key = value"), std::runtime_error);

  {
    std::ofstream out(file.path);
    out << "odom_cutoff_hz = fast\n";
  }
  CHECK_THROWS_WITH_AS(load_config_file(file.path, &fresh),
                       doctest::Contains("malformed number"), std::runtime_error);

  CHECK_THROWS_AS(load_config_file("/nonexistent/liinit.cfg", &fresh), std::runtime_error);
}

TEST_CASE("csv streams survive a write-read round trip bit-exactly") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto rand3 = [&] { return Vec3(gauss(rng), gauss(rng), gauss(rng)); };

  std::vector<ImuSample> imu(64);
  for (int i = 0; i < 64; ++i) {
    imu[i].t = 0.32 + i * 0.005 + 1e-9 * gauss(rng);
    imu[i].gyro = rand3();
    imu[i].accel = 9.81 * rand3();
  }
  TempFile imu_file("imu.csv");
  write_imu_csv(imu_file.path, imu);
  const auto imu_back = read_imu_csv(imu_file.path);
  REQUIRE(imu_back.size() == imu.size());
  for (int i = 0; i < 64; ++i) {
    CHECK(imu_back[i].t == imu[i].t);
    CHECK(imu_back[i].gyro == imu[i].gyro);
    CHECK(imu_back[i].accel == imu[i].accel);
  }

  std::vector<OdomSample> odom(32);
  for (int k = 0; k < 32; ++k) {
    odom[k].t = k * 0.1;
    odom[k].rotation = so3_exp<double>(rand3());
    odom[k].position = rand3();
    odom[k].velocity = rand3();
    odom[k].omega = rand3();
  }
  TempFile odom_file("odom.csv");
  write_odom_csv(odom_file.path, odom);
  const auto odom_back = read_odom_csv(odom_file.path);
  REQUIRE(odom_back.size() == odom.size());
  for (int k = 0; k < 32; ++k) {
    CHECK(odom_back[k].t == odom[k].t);
    CHECK(odom_back[k].position == odom[k].position);
    CHECK(odom_back[k].velocity == odom[k].velocity);
    CHECK(odom_back[k].omega == odom[k].omega);
    // The rotation passes through a quaternion with canonical sign; exact to
    // a couple of ulps rather than bitwise.
    CHECK((odom_back[k].rotation - odom[k].rotation).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  // Malformed input is rejected with the offending line number.
  TempFile bad("bad.csv");
  {
    std::ofstream out(bad.path);
    out << "t,wx,wy,wz,ax,ay,az\n0.0,1,2,3,4,5,potato\n";
  }
  CHECK_THROWS_WITH_AS(read_imu_csv(bad.path), doctest::Contains(":2:"), std::runtime_error);
  {
    std::ofstream out(bad.path);
    out << "time,wx,wy,wz,ax,ay,az\n";
  }
  CHECK_THROWS_AS(read_imu_csv(bad.path), std::runtime_error);
  {
    std::ofstream out(bad.path);
    out << "t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,wx,wy,wz\n"
        << "0.0,0,0,0,0,1,2,3,4,5,6,7,8,9\n";
  }
  CHECK_THROWS_AS(read_odom_csv(bad.path), std::runtime_error);
}

TEST_CASE("scan-matching simulation tracks the trajectory and rewards compensation") {
  PipelineConfig cfg;
  cfg.lo_sim_duration = 6.0;
  cfg.lo_sim_points_per_scan = 200;

  const LoSimResult three = run_lo_sim(cfg);
  CHECK_FALSE(three.diverged);
  CHECK(three.scan_count == 60);
  CHECK(three.pose_rmse_pos < 0.05);
  CHECK(three.pose_rmse_rot < 0.05);
  CHECK(three.mean_abs_residual_compensated < three.mean_abs_residual_uncompensated);

  PipelineConfig whole = cfg;
  whole.subframe_count = 1;
  const LoSimResult one = run_lo_sim(whole);
  CHECK_FALSE(one.diverged);
  // Finer sub-division tracks the smooth motion more closely.
  CHECK(three.pose_rmse_pos < one.pose_rmse_pos);

  CHECK_THROWS_AS(run_lo_sim([] {
                    PipelineConfig c;
                    c.subframe_count = 0;
                    return c;
                  }()),
                  std::invalid_argument);
}

TEST_CASE("edge trimming is reported in the data accounting") {
  const TrajectorySpec spec = smooth_excitation_trajectory(40.0);
  SensorRig rig = test_rig();
  const auto imu = synth_imu(spec, rig, 40.0, 5);
  const auto odom = synth_odometry(spec, rig, 40.0, 5);

  PipelineConfig cfg;  // default trim: 3 s = 30 odometry samples per side
  const InitializationOutcome out = run_initialization(imu, odom, cfg);
  REQUIRE(out.status == "success");
  CHECK(out.result->odom_discarded >= 60);
  CHECK(out.result->data_begin >= 2.9);
  CHECK(out.result->data_end <= 37.1);

  PipelineConfig no_trim = cfg;
  no_trim.edge_trim_seconds = 0.0;
  const InitializationOutcome full = run_initialization(imu, odom, no_trim);
  REQUIRE(full.status == "success");
  CHECK(full.result->odom_count > out.result->odom_count);
  // Still accurate without trimming on clean data, just less guarded.
  CHECK(std::abs(full.result->time_offset - rig.time_offset) < 1e-3);
}

}  // TEST_SUITE
