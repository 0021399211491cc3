// Command-line front end: calibrate | simulate | assess | lo-sim.
// Exit codes: 0 success, 2 insufficient excitation, 1 any other failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "liinit/csv_io.hpp"
#include "liinit/pipeline.hpp"
#include "liinit/simulator.hpp"
#include "liinit/so3.hpp"

namespace {

using liinit::Mat3;
using liinit::Vec3;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

json jvec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

int status_code(const liinit::InitializationOutcome& outcome) {
  if (outcome.status == "success") return 0;
  if (outcome.status == "insufficient_excitation") return 2;
  return 1;
}

Vec3 to_vec3(const std::vector<double>& v) { return Vec3(v[0], v[1], v[2]); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-inertial initialization: temporal offset, extrinsics, biases, gravity"};
  app.require_subcommand(1);

  // --- calibrate ---------------------------------------------------------
  auto* cal = app.add_subcommand("calibrate", "estimate calibration from IMU + odometry CSVs");
  std::string cal_imu, cal_odom, cal_config, cal_out;
  bool cal_force = false, cal_huber = false, cal_no_refine = false;
  double cal_d_range = 2.0, cal_odom_cutoff = 2.0, cal_imu_cutoff = 10.0;
  cal->add_option("--imu", cal_imu, "IMU CSV: t,wx,wy,wz,ax,ay,az")->required();
  cal->add_option("--odom", cal_odom, "odometry CSV: t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,wx,wy,wz")
      ->required();
  cal->add_option("--config", cal_config, "key = value config file");
  cal->add_option("--out", cal_out, "write the JSON report here instead of stdout");
  cal->add_flag("--force", cal_force, "solve even when excitation gating fails");
  cal->add_flag("--huber", cal_huber, "robust reweighting in the solves");
  cal->add_flag("--no-refine-dt", cal_no_refine, "skip the sub-sample offset refinement");
  cal->add_option("--d-range", cal_d_range, "coarse offset search window, seconds");
  cal->add_option("--odom-cutoff", cal_odom_cutoff, "odometry low-pass cutoff, Hz");
  cal->add_option("--imu-cutoff", cal_imu_cutoff, "IMU low-pass cutoff, Hz");

  // --- assess ------------------------------------------------------------
  auto* ass = app.add_subcommand("assess", "excitation report for an odometry CSV");
  std::string ass_odom, ass_out;
  double ass_rot_th = 0.1, ass_trans_th = 0.25;
  ass->add_option("--odom", ass_odom, "odometry CSV")->required();
  ass->add_option("--out", ass_out, "write the JSON report here instead of stdout");
  ass->add_option("--rotation-threshold", ass_rot_th, "per-sample rotation Gram threshold");
  ass->add_option("--translation-threshold", ass_trans_th, "per-sample translation Gram threshold");

  // --- simulate ----------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "write synthetic imu.csv, odom.csv and truth.json");
  std::string sim_dir;
  double sim_duration = 40.0, sim_offset = 0.0, sim_gravity_tilt = 0.0;
  double sim_imu_rate = 200.0, sim_odom_rate = 10.0;
  double sim_gyro_noise = 0.0, sim_accel_noise = 0.0;
  double sim_att_noise = 0.0, sim_pos_noise = 0.0, sim_vel_noise = 0.0, sim_omega_noise = 0.0;
  std::uint64_t sim_seed = 1;
  int sim_single_axis = -1;
  std::vector<double> sim_rotvec{0.0, 0.0, 0.0};
  std::vector<double> sim_lever{0.0, 0.0, 0.0};
  std::vector<double> sim_gyro_bias{0.0, 0.0, 0.0};
  std::vector<double> sim_accel_bias{0.0, 0.0, 0.0};
  sim->add_option("--out-dir", sim_dir, "output directory")->required();
  sim->add_option("--duration", sim_duration, "seconds of data");
  sim->add_option("--seed", sim_seed, "noise seed");
  sim->add_option("--time-offset", sim_offset, "added to IMU timestamps, seconds");
  sim->add_option("--rotvec", sim_rotvec, "LiDAR->IMU rotation vector, rad")->expected(3);
  sim->add_option("--lever", sim_lever, "IMU origin in the LiDAR frame, m")->expected(3);
  sim->add_option("--gyro-bias", sim_gyro_bias, "rad/s")->expected(3);
  sim->add_option("--accel-bias", sim_accel_bias, "m/s^2")->expected(3);
  sim->add_option("--gravity-tilt-deg", sim_gravity_tilt, "tilt of gravity about +x, degrees");
  sim->add_option("--imu-rate", sim_imu_rate, "Hz");
  sim->add_option("--odom-rate", sim_odom_rate, "Hz");
  sim->add_option("--gyro-noise", sim_gyro_noise, "per-sample std, rad/s");
  sim->add_option("--accel-noise", sim_accel_noise, "per-sample std, m/s^2");
  sim->add_option("--odom-att-noise", sim_att_noise, "rad");
  sim->add_option("--odom-pos-noise", sim_pos_noise, "m");
  sim->add_option("--odom-vel-noise", sim_vel_noise, "m/s");
  sim->add_option("--odom-omega-noise", sim_omega_noise, "rad/s");
  sim->add_option("--single-axis", sim_single_axis,
                  "use the degenerate single-axis trajectory about this axis (0/1/2)");

  // --- lo-sim ------------------------------------------------------------
  auto* lo = app.add_subcommand("lo-sim", "closed-loop scan-matching simulation");
  std::string lo_out;
  double lo_duration = 20.0, lo_point_noise = 0.02, lo_range_noise = 0.0;
  int lo_planes = 8, lo_points = 300, lo_subframes = 3;
  std::uint64_t lo_seed = 1;
  bool lo_no_comp = false;
  lo->add_option("--out", lo_out, "write the JSON summary here instead of stdout");
  lo->add_option("--duration", lo_duration, "seconds");
  lo->add_option("--planes", lo_planes, "world plane count");
  lo->add_option("--points", lo_points, "points per scan");
  lo->add_option("--seed", lo_seed, "world and scan seed");
  lo->add_option("--subframes", lo_subframes, "scan sub-intervals per update");
  lo->add_option("--point-noise", lo_point_noise, "point-to-plane measurement std, m");
  lo->add_option("--range-noise", lo_range_noise, "per-point range noise std, m");
  lo->add_flag("--no-compensate", lo_no_comp, "skip per-point motion compensation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(cal)) {
      liinit::PipelineConfig cfg;
      if (!cal_config.empty()) liinit::load_config_file(cal_config, &cfg);
      if (cal->count("--d-range")) cfg.d_range_seconds = cal_d_range;
      if (cal->count("--odom-cutoff")) cfg.odom_cutoff_hz = cal_odom_cutoff;
      if (cal->count("--imu-cutoff")) cfg.imu_cutoff_hz = cal_imu_cutoff;
      if (cal_force) cfg.force_insufficient = true;
      if (cal_huber) cfg.use_huber = true;
      if (cal_no_refine) cfg.refine_time_offset = false;

      const auto imu = liinit::read_imu_csv(cal_imu);
      const auto odom = liinit::read_odom_csv(cal_odom);
      const auto outcome = liinit::run_initialization(imu, odom, cfg);
      write_text(cal_out, liinit::report_json(outcome, cfg));
      if (outcome.status != "success") {
        std::cerr << "calibrate: " << outcome.status
                  << (outcome.message.empty() ? "" : ": " + outcome.message) << "\n";
      }
      return status_code(outcome);
    }

    if (app.got_subcommand(ass)) {
      liinit::PipelineConfig cfg;
      cfg.excitation.rotation = ass_rot_th;
      cfg.excitation.translation = ass_trans_th;
      const auto odom = liinit::read_odom_csv(ass_odom);
      const auto outcome = liinit::run_assessment(odom, cfg);
      write_text(ass_out, liinit::report_json(outcome, cfg));
      return status_code(outcome);
    }

    if (app.got_subcommand(sim)) {
      liinit::SensorRig rig;
      rig.r_imu_lidar = liinit::so3_exp<double>(to_vec3(sim_rotvec));
      rig.p_imu_in_lidar = to_vec3(sim_lever);
      rig.time_offset = sim_offset;
      rig.gyro_bias = to_vec3(sim_gyro_bias);
      rig.accel_bias = to_vec3(sim_accel_bias);
      const double tilt = sim_gravity_tilt * M_PI / 180.0;
      rig.gravity = liinit::so3_exp<double>(Vec3(tilt, 0.0, 0.0)) * Vec3(0.0, 0.0, -9.81);
      rig.imu_rate_hz = sim_imu_rate;
      rig.odom_rate_hz = sim_odom_rate;
      rig.gyro_noise = sim_gyro_noise;
      rig.accel_noise = sim_accel_noise;
      rig.odom_att_noise = sim_att_noise;
      rig.odom_pos_noise = sim_pos_noise;
      rig.odom_vel_noise = sim_vel_noise;
      rig.odom_omega_noise = sim_omega_noise;
      rig.validate();

      const liinit::TrajectorySpec spec =
          sim_single_axis >= 0 ? liinit::single_axis_trajectory(sim_single_axis, sim_duration)
                               : liinit::smooth_excitation_trajectory(sim_duration);

      std::filesystem::create_directories(sim_dir);
      const auto imu = liinit::synth_imu(spec, rig, sim_duration, sim_seed);
      const auto odom = liinit::synth_odometry(spec, rig, sim_duration, sim_seed + 1);
      liinit::write_imu_csv(sim_dir + "/imu.csv", imu);
      liinit::write_odom_csv(sim_dir + "/odom.csv", odom);

      json truth;
      truth["duration"] = sim_duration;
      truth["seed"] = sim_seed;
      truth["imu_rate_hz"] = rig.imu_rate_hz;
      truth["odom_rate_hz"] = rig.odom_rate_hz;
      truth["trajectory"] = sim_single_axis >= 0 ? "single_axis" : "smooth_excitation";
      truth["time_offset"] = rig.time_offset;
      truth["rotvec_imu_lidar"] = jvec(liinit::so3_log<double>(rig.r_imu_lidar));
      truth["p_imu_in_lidar"] = jvec(rig.p_imu_in_lidar);
      truth["p_lidar_in_imu"] = jvec(rig.p_lidar_in_imu());
      truth["gyro_bias"] = jvec(rig.gyro_bias);
      truth["accel_bias"] = jvec(rig.accel_bias);
      truth["gravity"] = jvec(rig.gravity);
      truth["noise"] = {
          {"gyro", rig.gyro_noise},         {"accel", rig.accel_noise},
          {"odom_att", rig.odom_att_noise}, {"odom_pos", rig.odom_pos_noise},
          {"odom_vel", rig.odom_vel_noise}, {"odom_omega", rig.odom_omega_noise},
      };
      write_text(sim_dir + "/truth.json", truth.dump(2) + "\n");
      return 0;
    }

    if (app.got_subcommand(lo)) {
      liinit::PipelineConfig cfg;
      cfg.lo_sim_duration = lo_duration;
      cfg.lo_sim_planes = lo_planes;
      cfg.lo_sim_points_per_scan = lo_points;
      cfg.lo_sim_seed = lo_seed;
      cfg.subframe_count = lo_subframes;
      cfg.point_noise = lo_point_noise;
      cfg.lo_sim_range_noise = lo_range_noise;
      cfg.lo_sim_compensate = !lo_no_comp;

      const liinit::LoSimResult res = liinit::run_lo_sim(cfg);
      json j;
      j["scan_count"] = res.scan_count;
      j["pose_rmse_rot"] = res.pose_rmse_rot;
      j["pose_rmse_pos"] = res.pose_rmse_pos;
      j["mean_abs_residual_compensated"] = res.mean_abs_residual_compensated;
      j["mean_abs_residual_uncompensated"] = res.mean_abs_residual_uncompensated;
      j["diverged"] = res.diverged;
      j["diverged_at_scan"] = res.diverged_at_scan;
      j["subframes"] = lo_subframes;
      j["compensate"] = !lo_no_comp;
      write_text(lo_out, j.dump(2) + "\n");
      return res.diverged ? 1 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
