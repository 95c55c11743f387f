#include "nhsim/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace nhsim {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    std::ostringstream msg;
    msg << "non-numeric field '" << s << "' on line " << line_no;
    throw SimError(ErrorCode::malformed_file, msg.str());
  }
  return v;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int m = traj.m();
  const int n = traj.n();
  out << 't';
  for (int i = 1; i <= m; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",v" << i;
  for (int i = 1; i <= m; ++i) out << ",acc" << i;
  out << ",H";
  for (int i = 1; i <= n; ++i) out << ",cres" << i;
  out << '\n';
  for (std::size_t j = 0; j < traj.size(); ++j) {
    out << fmt17(traj.time(j));
    for (int i = 0; i < m; ++i) out << ',' << fmt17(traj.x[j][i]);
    for (int i = 0; i < m; ++i) out << ',' << fmt17(traj.v[j][i]);
    for (int i = 0; i < m; ++i) out << ',' << fmt17(traj.acc[j][i]);
    out << ',' << fmt17(traj.energy[j]);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(traj.cres[j][i]);
    out << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) {
    throw SimError(ErrorCode::malformed_file, "cannot open '" + path + "' for writing");
  }
  write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw SimError(ErrorCode::malformed_file, "empty trajectory file");
  }
  const auto header = split_csv_line(line);

  // Expected layout: t, m x's, m v's, m acc's, H, n cres's.
  std::size_t idx = 0;
  if (header.empty() || header[idx++] != "t") {
    throw SimError(ErrorCode::malformed_file, "header must start with 't'");
  }
  const auto count_prefixed = [&](const std::string& prefix) {
    int count = 0;
    while (idx < header.size() &&
           header[idx] == prefix + std::to_string(count + 1)) {
      ++count;
      ++idx;
    }
    return count;
  };
  const int m = count_prefixed("x");
  const int mv = count_prefixed("v");
  const int ma = count_prefixed("acc");
  if (m < 1 || mv != m || ma != m || idx >= header.size() || header[idx] != "H") {
    throw SimError(ErrorCode::malformed_file, "unrecognized trajectory header");
  }
  ++idx;
  const int n = count_prefixed("cres");
  if (n < 1 || idx != header.size()) {
    throw SimError(ErrorCode::malformed_file, "unrecognized trajectory header");
  }

  const std::size_t ncols = header.size();
  Trajectory traj;
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != ncols) {
      std::ostringstream msg;
      msg << "line " << line_no << " has " << fields.size() << " fields, expected "
          << ncols;
      throw SimError(ErrorCode::malformed_file, msg.str());
    }
    std::size_t f = 0;
    times.push_back(parse_field(fields[f++], line_no));
    Vec x(m), v(m), acc(m), cres(n);
    for (int i = 0; i < m; ++i) x[i] = parse_field(fields[f++], line_no);
    for (int i = 0; i < m; ++i) v[i] = parse_field(fields[f++], line_no);
    for (int i = 0; i < m; ++i) acc[i] = parse_field(fields[f++], line_no);
    const double H = parse_field(fields[f++], line_no);
    for (int i = 0; i < n; ++i) cres[i] = parse_field(fields[f++], line_no);
    traj.x.push_back(std::move(x));
    traj.v.push_back(std::move(v));
    traj.acc.push_back(std::move(acc));
    traj.energy.push_back(H);
    traj.cres.push_back(std::move(cres));
  }
  if (times.size() < 2) {
    throw SimError(ErrorCode::malformed_file, "trajectory needs at least 2 rows");
  }
  if (times.front() != 0.0) {
    throw SimError(ErrorCode::malformed_file, "time column must start at 0");
  }
  traj.dt = times[1] - times[0];
  if (!(traj.dt > 0.0)) {
    throw SimError(ErrorCode::malformed_file, "time column must increase");
  }
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (std::abs(times[j] - static_cast<double>(j) * traj.dt) >
        1e-9 * std::max(1.0, std::abs(times.back()))) {
      throw SimError(ErrorCode::malformed_file, "time column not uniformly spaced");
    }
  }
  traj.h_prime = traj.energy.front();
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw SimError(ErrorCode::malformed_file, "cannot open '" + path + "'");
  }
  return read_trajectory_csv(in);
}

void write_multiplier_csv(const std::string& path, const Trajectory& traj,
                          const MultiplierTrack& track) {
  if (track.gamma.size() != traj.size()) {
    throw SimError(ErrorCode::grid_mismatch, "multiplier track grid differs");
  }
  std::ofstream out(path);
  if (!out) {
    throw SimError(ErrorCode::malformed_file, "cannot open '" + path + "' for writing");
  }
  const int n = track.gamma.empty() ? 0 : static_cast<int>(track.gamma.front().size());
  out << 't';
  for (int i = 1; i <= n; ++i) out << ",gamma" << i;
  out << '\n';
  for (std::size_t j = 0; j < traj.size(); ++j) {
    out << fmt17(traj.time(j));
    for (int i = 0; i < n; ++i) out << ',' << fmt17(track.gamma[j][i]);
    out << '\n';
  }
}

}  // namespace nhsim
