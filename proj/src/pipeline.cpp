#include "liinit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Geometry>
#include <json.hpp>

#include "liinit/simulator.hpp"
#include "liinit/so3.hpp"
#include "liinit/spatial.hpp"
#include "liinit/temporal.hpp"

namespace liinit {

namespace {

using nlohmann::json;

template <typename Sample>
const std::vector<Sample>& largest_segment(const std::vector<std::vector<Sample>>& segments) {
  if (segments.empty()) throw std::runtime_error("no usable data segment");
  std::size_t best = 0;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].size() > segments[best].size()) best = i;
  }
  return segments[best];
}

template <typename Sample>
int total_size(const std::vector<std::vector<Sample>>& segments) {
  int n = 0;
  for (const auto& s : segments) n += static_cast<int>(s.size());
  return n;
}

LidarDerived slice(const LidarDerived& in, int begin, int count) {
  const auto cut = [&](const auto& src) {
    using V = std::remove_cvref_t<decltype(src)>;
    return V(src.begin() + begin, src.begin() + begin + count);
  };
  LidarDerived out;
  out.t = cut(in.t);
  out.rotation = cut(in.rotation);
  out.omega = cut(in.omega);
  out.velocity = cut(in.velocity);
  out.omega_dot = cut(in.omega_dot);
  out.accel = cut(in.accel);
  return out;
}

ImuDerived slice_imu(const ImuDerived& in, int begin, int count) {
  const auto cut = [&](const auto& src) {
    using V = std::remove_cvref_t<decltype(src)>;
    return V(src.begin() + begin, src.begin() + begin + count);
  };
  ImuDerived out;
  out.t = cut(in.t);
  out.omega = cut(in.omega);
  out.accel = cut(in.accel);
  out.omega_dot = cut(in.omega_dot);
  return out;
}

/// Samples to drop per side so the zero-phase filter's boundary transient is
/// excluded, capped so at least 20 samples survive.
int edge_trim_count(int n, double seconds, double period) {
  if (n < 3 || !(period > 0.0) || !(seconds > 0.0)) return 0;
  const int want = static_cast<int>(std::lround(seconds / period));
  const int cap = std::max(0, (n - 20) / 2);
  return std::clamp(want, 0, cap);
}

std::string axis_string(const Vec3& v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%.3f, %.3f, %.3f]", v.x(), v.y(), v.z());
  return buf;
}

json jvec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json jquat(const Mat3& r) {
  Eigen::Quaterniond q(r);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return json::array({q.w(), q.x(), q.y(), q.z()});
}

json excitation_json(const ExcitationReport& e, const ExcitationThresholds& th) {
  json j;
  j["sample_count"] = e.sample_count;
  j["degenerate"] = e.degenerate;
  const double n = std::max(e.sample_count, 1);
  j["rotation"] = {
      {"singular_values", json::array({e.rot_singular[0], e.rot_singular[1], e.rot_singular[2]})},
      {"min_per_sample", e.rot_singular[2] / n},
      {"threshold", th.rotation},
      {"sufficient", e.rot_sufficient},
      {"weakest_axis", jvec(e.weakest_rot_axis)},
  };
  j["translation"] = {
      {"singular_values",
       json::array({e.trans_singular[0], e.trans_singular[1], e.trans_singular[2]})},
      {"min_per_sample", e.trans_singular[2] / n},
      {"threshold", th.translation},
      {"sufficient", e.trans_sufficient},
      {"weakest_axis", jvec(e.weakest_trans_axis)},
  };
  j["sufficient"] = e.sufficient;
  return j;
}

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

double parse_number(const std::string& value, const std::string& key) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("config key '" + key + "': malformed number '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::runtime_error("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

InitializationOutcome run_initialization(const std::vector<ImuSample>& imu,
                                         const std::vector<OdomSample>& odom,
                                         const PipelineConfig& cfg) {
  InitializationOutcome out;
  std::string stage = "input";
  try {
    if (imu.empty()) throw std::invalid_argument("empty IMU stream");
    if (odom.empty()) throw std::invalid_argument("empty odometry stream");

    stage = "preprocess";
    CalibrationResult res;
    const auto imu_segments = regularize_imu(imu, &res.imu_inserted);
    const auto odom_segments = regularize_odom(odom, &res.odom_inserted);
    const auto& imu_seg = largest_segment(imu_segments);
    const auto& odom_seg = largest_segment(odom_segments);
    res.imu_discarded = total_size(imu_segments) - static_cast<int>(imu_seg.size());
    res.odom_discarded = total_size(odom_segments) - static_cast<int>(odom_seg.size());

    ImuDerived imu_rate = build_imu_derived(imu_seg, cfg.imu_cutoff_hz, cfg.filter_order);
    LidarDerived lidar_full =
        build_lidar_derived(odom_seg, cfg.odom_cutoff_hz, cfg.filter_order);

    // Drop the filter's boundary transients on both series.
    {
      const int ni = static_cast<int>(imu_rate.size());
      const double pi = (imu_rate.t.back() - imu_rate.t.front()) / (ni - 1);
      const int ti = edge_trim_count(ni, cfg.edge_trim_seconds, pi);
      if (ti > 0) imu_rate = slice_imu(imu_rate, ti, ni - 2 * ti);
      res.imu_discarded += 2 * ti;

      const int no = static_cast<int>(lidar_full.size());
      const double po = (lidar_full.t.back() - lidar_full.t.front()) / (no - 1);
      const int to = edge_trim_count(no, cfg.edge_trim_seconds, po);
      if (to > 0) lidar_full = slice(lidar_full, to, no - 2 * to);
      res.odom_discarded += 2 * to;
    }

    // Co-index the two odometry-rate series: keep only the odometry samples
    // whose timestamps fall inside the IMU span.
    const ResampledImu rs = downsample_interpolate(imu_rate, lidar_full.t);
    res.odom_discarded += rs.dropped_head + rs.dropped_tail;
    const int n = static_cast<int>(rs.series.size());
    if (n < 10) throw std::runtime_error("fewer than 10 co-timed samples after resampling");
    const LidarDerived lidar = slice(lidar_full, rs.first_odom_index, n);

    res.data_begin = lidar.t.front();
    res.data_end = lidar.t.back();
    res.odom_count = n;
    res.imu_count = static_cast<int>(imu_rate.size());
    const double period = (lidar.t.back() - lidar.t.front()) / (n - 1);

    stage = "excitation";
    ExcitationAccumulator acc;
    for (int k = 0; k < n; ++k) acc.add(lidar.omega[k], lidar.omega_dot[k]);
    const ExcitationReport excitation = acc.report(cfg.excitation);
    out.excitation = excitation;
    if (!excitation.sufficient && !cfg.force_insufficient) {
      out.status = "insufficient_excitation";
      out.failed_stage = stage;
      std::string weak;
      if (!excitation.rot_sufficient) {
        weak += "rotation about " + axis_string(excitation.weakest_rot_axis);
      }
      if (!excitation.trans_sufficient) {
        if (!weak.empty()) weak += ", ";
        weak += "angular acceleration about " + axis_string(excitation.weakest_trans_axis);
      }
      out.message = "motion does not excite all axes (weakest: " + weak + ")";
      return out;
    }

    stage = "temporal";
    const int d_range =
        std::max(1, static_cast<int>(std::lround(cfg.d_range_seconds / period)));
    const CoarseOffset coarse =
        cross_correlate(magnitude_series(rs.series.omega), magnitude_series(lidar.omega),
                        d_range, period);
    res.d_star = coarse.d_star;
    res.correlation_peak = coarse.correlation_peak;

    stage = "rotation";
    SolverOptions opts = cfg.solver;
    opts.use_huber = cfg.use_huber;
    RotTimeSolution rot =
        solve_rot_bias_dt(lidar.omega, rs.series, coarse.d_star, period,
                          cfg.refine_time_offset, opts);
    double total_offset = coarse.d_star * period + rot.delta_t;

    // The solver linearizes the gyro signal in the sub-sample offset, which
    // leaves an O(delta_t^2) bias in every parameter.  Re-interpolating the
    // IMU-rate series at the shifted odometry times and re-solving with the
    // offset already applied removes it (and, for the translation stage, the
    // coarse-grid interpolation error in the specific force).
    ImuDerived series = rs.series;
    LidarDerived lidar_cur = lidar;
    int d_cur = coarse.d_star;
    double dt_cur = rot.delta_t;
    if (cfg.refine_time_offset) {
      for (int pass = 0; pass < 2 && std::abs(dt_cur) > 1e-7; ++pass) {
        std::vector<double> shifted = lidar.t;
        for (double& t : shifted) t += total_offset;
        const ResampledImu again = downsample_interpolate(imu_rate, shifted);
        const int n2 = static_cast<int>(again.series.size());
        if (n2 < 10) break;
        const RotTimeSolution refined =
            solve_rot_bias_dt(slice(lidar, again.first_odom_index, n2).omega, again.series, 0,
                              period, true, opts);
        series = again.series;
        lidar_cur = slice(lidar, again.first_odom_index, n2);
        d_cur = 0;
        dt_cur = refined.delta_t;
        total_offset += refined.delta_t;
        rot = refined;
      }
    }
    res.r_imu_lidar = rot.r_imu_lidar;
    res.gyro_bias = rot.gyro_bias;
    res.delta_t = total_offset - coarse.d_star * period;
    res.time_offset = total_offset;
    res.rot_stats = {rot.final_cost, rot.iterations, rot.converged};

    stage = "translation";
    const AlignedImu aligned =
        align_imu(series, static_cast<int>(lidar_cur.size()), d_cur, dt_cur, period);
    const TransGravSolution trans =
        solve_trans_bias_gravity(lidar_cur, aligned, rot.r_imu_lidar, 0.0, opts);
    res.p_imu_in_lidar = trans.p_imu_in_lidar;
    res.p_lidar_in_imu = trans.p_lidar_in_imu;
    res.accel_bias = trans.accel_bias;
    res.gravity = trans.gravity;
    res.trans_stats = {trans.final_cost, trans.iterations, trans.converged};

    out.status = "success";
    out.result = res;
  } catch (const std::exception& e) {
    out.status = "failure";
    out.failed_stage = stage;
    out.message = e.what();
  }
  return out;
}

InitializationOutcome run_assessment(const std::vector<OdomSample>& odom,
                                     const PipelineConfig& cfg) {
  InitializationOutcome out;
  try {
    if (odom.empty()) throw std::invalid_argument("empty odometry stream");
    int inserted = 0;
    const auto segments = regularize_odom(odom, &inserted);
    const auto& seg = largest_segment(segments);
    const LidarDerived lidar = build_lidar_derived(seg, cfg.odom_cutoff_hz, cfg.filter_order);
    ExcitationAccumulator acc;
    for (std::size_t k = 0; k < lidar.size(); ++k) acc.add(lidar.omega[k], lidar.omega_dot[k]);
    const ExcitationReport excitation = acc.report(cfg.excitation);
    out.excitation = excitation;
    out.status = excitation.sufficient ? "success" : "insufficient_excitation";
    if (!excitation.sufficient) out.failed_stage = "excitation";
  } catch (const std::exception& e) {
    out.status = "failure";
    out.failed_stage = "excitation";
    out.message = e.what();
  }
  return out;
}

LoSimResult run_lo_sim(const PipelineConfig& cfg) {
  if (cfg.subframe_count < 1) throw std::invalid_argument("run_lo_sim: subframe_count < 1");
  if (!(cfg.lo_sim_duration > 0.0)) throw std::invalid_argument("run_lo_sim: duration <= 0");

  // Fixed 20 s frequency characteristic: lo_sim_duration only sets how long
  // the run lasts, not how violent the motion is (the factory scales its
  // frequencies inversely with the window it is given).
  const TrajectorySpec spec = smooth_excitation_trajectory(20.0);
  const std::vector<PlaneLandmark> world = gen_plane_world(cfg.lo_sim_planes, cfg.lo_sim_seed);

  const double scan_period = 0.1;
  const int n_scans = static_cast<int>(std::floor(cfg.lo_sim_duration / scan_period));
  const int n_sub = cfg.subframe_count;

  const TrajectorySample truth0 = eval_trajectory(spec, 0.0);
  CvState x{truth0.rotation, truth0.position, truth0.velocity, truth0.omega};
  Mat12 cov = 1e-4 * Mat12::Identity();

  UpdateOptions uo;
  uo.point_noise = cfg.point_noise;
  uo.compensate = cfg.lo_sim_compensate;

  LoSimResult out;
  double rot_sq = 0.0, pos_sq = 0.0;
  double res_comp = 0.0, res_raw = 0.0;
  long point_count = 0;

  for (int s = 0; s < n_scans; ++s) {
    const double t0 = s * scan_period;
    const double t1 = (s + 1) * scan_period;
    const auto scan =
        raycast_scan(world, spec, t0, t1, cfg.lo_sim_points_per_scan,
                     cfg.lo_sim_seed + 1 + static_cast<std::uint64_t>(s), cfg.lo_sim_range_noise);

    std::vector<std::vector<PlaneAssociation>> subsets(n_sub);
    for (const auto& assoc : scan) {
      subsets[subframe_index(assoc.point.t, t0, t1, n_sub)].push_back(assoc);
    }

    for (int i = 0; i < n_sub; ++i) {
      const double sub_end = t0 + (t1 - t0) * (i + 1) / n_sub;
      const Prediction pred = predict(x, cov, scan_period / n_sub, cfg.process_noise);
      const UpdateResult upd = iterated_update(pred.state, pred.cov, subsets[i], sub_end, uo);
      x = upd.state;
      cov = upd.cov;
    }

    const TrajectorySample truth = eval_trajectory(spec, t1);
    const double rot_err =
        so3_log<double>(Mat3(truth.rotation.transpose() * x.rotation)).norm();
    const double pos_err = (x.position - truth.position).norm();
    rot_sq += rot_err * rot_err;
    pos_sq += pos_err * pos_err;
    ++out.scan_count;

    for (const auto& assoc : scan) {
      const Vec3 q = compensate_point(x, assoc.point, t1);
      const Vec3 w_comp = x.rotation * q + x.position;
      const Vec3 w_raw = x.rotation * assoc.point.xyz + x.position;
      res_comp += std::abs(assoc.plane.normal.dot(w_comp) - assoc.plane.offset);
      res_raw += std::abs(assoc.plane.normal.dot(w_raw) - assoc.plane.offset);
      ++point_count;
    }

    if (pos_err > 2.0) {
      out.diverged = true;
      out.diverged_at_scan = s;
      break;
    }
  }

  if (out.scan_count > 0) {
    out.pose_rmse_rot = std::sqrt(rot_sq / out.scan_count);
    out.pose_rmse_pos = std::sqrt(pos_sq / out.scan_count);
  }
  if (point_count > 0) {
    out.mean_abs_residual_compensated = res_comp / point_count;
    out.mean_abs_residual_uncompensated = res_raw / point_count;
  }
  return out;
}

std::string report_json(const InitializationOutcome& outcome, const PipelineConfig& cfg) {
  json j;
  j["version"] = "0.1.0";
  j["status"] = outcome.status;
  if (!outcome.failed_stage.empty()) j["failed_stage"] = outcome.failed_stage;
  if (!outcome.message.empty()) j["message"] = outcome.message;

  j["config"] = {
      {"odom_cutoff_hz", cfg.odom_cutoff_hz},
      {"imu_cutoff_hz", cfg.imu_cutoff_hz},
      {"filter_order", cfg.filter_order},
      {"d_range_seconds", cfg.d_range_seconds},
      {"edge_trim_seconds", cfg.edge_trim_seconds},
      {"refine_time_offset", cfg.refine_time_offset},
      {"use_huber", cfg.use_huber},
      {"force_insufficient", cfg.force_insufficient},
      {"rotation_threshold", cfg.excitation.rotation},
      {"translation_threshold", cfg.excitation.translation},
  };

  if (outcome.excitation) j["excitation"] = excitation_json(*outcome.excitation, cfg.excitation);

  if (outcome.result) {
    const CalibrationResult& r = *outcome.result;
    json jr;
    jr["time_offset"] = r.time_offset;
    jr["coarse_offset_samples"] = r.d_star;
    jr["time_offset_refinement"] = r.delta_t;
    jr["correlation_peak"] = r.correlation_peak;
    jr["q_imu_lidar_wxyz"] = jquat(r.r_imu_lidar);
    jr["rotvec_imu_lidar"] = jvec(so3_log<double>(r.r_imu_lidar));
    jr["p_imu_in_lidar"] = jvec(r.p_imu_in_lidar);
    jr["p_lidar_in_imu"] = jvec(r.p_lidar_in_imu);
    jr["gyro_bias"] = jvec(r.gyro_bias);
    jr["accel_bias"] = jvec(r.accel_bias);
    jr["gravity"] = jvec(r.gravity);
    jr["stages"] = {
        {"rotation",
         {{"final_cost", r.rot_stats.final_cost},
          {"iterations", r.rot_stats.iterations},
          {"converged", r.rot_stats.converged}}},
        {"translation",
         {{"final_cost", r.trans_stats.final_cost},
          {"iterations", r.trans_stats.iterations},
          {"converged", r.trans_stats.converged}}},
    };
    jr["data"] = {
        {"begin", r.data_begin},           {"end", r.data_end},
        {"odom_count", r.odom_count},      {"imu_count", r.imu_count},
        {"odom_inserted", r.odom_inserted}, {"imu_inserted", r.imu_inserted},
        {"odom_discarded", r.odom_discarded}, {"imu_discarded", r.imu_discarded},
    };
    j["result"] = jr;
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> load_config_file(const std::string& path, PipelineConfig* cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);

  std::vector<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }

    if (key == "odom_cutoff_hz") cfg->odom_cutoff_hz = parse_number(value, key);
    else if (key == "imu_cutoff_hz") cfg->imu_cutoff_hz = parse_number(value, key);
    else if (key == "filter_order") cfg->filter_order = static_cast<int>(parse_number(value, key));
    else if (key == "d_range_seconds") cfg->d_range_seconds = parse_number(value, key);
    else if (key == "edge_trim_seconds") cfg->edge_trim_seconds = parse_number(value, key);
    else if (key == "refine_time_offset") cfg->refine_time_offset = parse_bool(value, key);
    else if (key == "use_huber") cfg->use_huber = parse_bool(value, key);
    else if (key == "force_insufficient") cfg->force_insufficient = parse_bool(value, key);
    else if (key == "rotation_threshold") cfg->excitation.rotation = parse_number(value, key);
    else if (key == "translation_threshold") cfg->excitation.translation = parse_number(value, key);
    else if (key == "solver_lambda_init") cfg->solver.lambda_init = parse_number(value, key);
    else if (key == "solver_step_tolerance") cfg->solver.step_tolerance = parse_number(value, key);
    else if (key == "solver_max_iterations")
      cfg->solver.max_iterations = static_cast<int>(parse_number(value, key));
    else if (key == "subframe_count") cfg->subframe_count = static_cast<int>(parse_number(value, key));
    else if (key == "point_noise") cfg->point_noise = parse_number(value, key);
    else if (key == "process_noise_velocity") cfg->process_noise.velocity = parse_number(value, key);
    else if (key == "process_noise_omega") cfg->process_noise.omega = parse_number(value, key);
    else if (key == "lo_sim_duration") cfg->lo_sim_duration = parse_number(value, key);
    else if (key == "lo_sim_planes") cfg->lo_sim_planes = static_cast<int>(parse_number(value, key));
    else if (key == "lo_sim_points_per_scan")
      cfg->lo_sim_points_per_scan = static_cast<int>(parse_number(value, key));
    else if (key == "lo_sim_seed")
      cfg->lo_sim_seed = static_cast<unsigned long long>(parse_number(value, key));
    else if (key == "lo_sim_compensate") cfg->lo_sim_compensate = parse_bool(value, key);
    else if (key == "lo_sim_range_noise") cfg->lo_sim_range_noise = parse_number(value, key);
    else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                               "'");
    }
    seen.push_back(key);
  }
  return seen;
}

}  // namespace liinit
