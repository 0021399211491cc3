#include "liinit/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Geometry>

namespace liinit {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view field, const std::string& path, int line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number '" +
                             std::string(field) + "'");
  }
  return v;
}

std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

template <typename RowFn>
void read_csv(const std::string& path, const std::string& expected_header, std::size_t n_fields,
              RowFn&& row) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || chomp(line) != expected_header) {
    throw std::runtime_error(path + ": expected header '" + expected_header + "'");
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != n_fields) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(n_fields) + " fields, got " +
                               std::to_string(fields.size()));
    }
    std::vector<double> values(n_fields);
    for (std::size_t i = 0; i < n_fields; ++i) values[i] = parse_double(fields[i], path, line_no);
    row(values, line_no);
  }
}

}  // namespace

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::vector<ImuSample> out;
  read_csv(path, "t,wx,wy,wz,ax,ay,az", 7, [&](const std::vector<double>& v, int) {
    ImuSample s;
    s.t = v[0];
    s.gyro = Vec3(v[1], v[2], v[3]);
    s.accel = Vec3(v[4], v[5], v[6]);
    out.push_back(s);
  });
  return out;
}

std::vector<OdomSample> read_odom_csv(const std::string& path) {
  std::vector<OdomSample> out;
  read_csv(path, "t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,wx,wy,wz", 14,
           [&](const std::vector<double>& v, int line_no) {
             Eigen::Quaterniond q(v[1], v[2], v[3], v[4]);
             if (q.norm() < 1e-6) {
               throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                        ": quaternion has near-zero norm");
             }
             q.normalize();
             OdomSample s;
             s.t = v[0];
             s.rotation = q.toRotationMatrix();
             s.position = Vec3(v[5], v[6], v[7]);
             s.velocity = Vec3(v[8], v[9], v[10]);
             s.omega = Vec3(v[11], v[12], v[13]);
             out.push_back(s);
           });
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,wx,wy,wz,ax,ay,az\n";
  for (const auto& s : samples) {
    out << format_double(s.t);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(s.gyro[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(s.accel[i]);
    out << '\n';
  }
}

void write_odom_csv(const std::string& path, const std::vector<OdomSample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,wx,wy,wz\n";
  for (const auto& s : samples) {
    Eigen::Quaterniond q(s.rotation);
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // canonical sign for determinism
    out << format_double(s.t);
    out << ',' << format_double(q.w()) << ',' << format_double(q.x()) << ','
        << format_double(q.y()) << ',' << format_double(q.z());
    for (int i = 0; i < 3; ++i) out << ',' << format_double(s.position[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(s.velocity[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(s.omega[i]);
    out << '\n';
  }
}

}  // namespace liinit
