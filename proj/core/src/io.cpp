#include "compsnn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "compsnn/error.hpp"

namespace compsnn {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return {buf, res.ptr};
}

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    // from_chars does not accept "nan"/"inf" spellings with a sign on every libc.
    if (text == "nan" || text == "NaN" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<RawTrajectory> read_trajectories_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"traj_id", "t", "x", "y"}) {
    throw Error(ErrorCode::ParseError, path.string() + ": expected header traj_id,t,x,y");
  }
  std::vector<RawTrajectory> out;
  std::set<std::string> finished;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 4) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    if (out.empty() || out.back().id != cols[0]) {
      if (!out.empty()) finished.insert(out.back().id);
      if (finished.contains(cols[0])) {
        throw Error(ErrorCode::ParseError, path.string() + ": rows of '" + cols[0] + "' are not contiguous");
      }
      out.push_back({cols[0], {}});
    }
    out.back().samples.push_back({parse_double(cols[1]), parse_double(cols[2]), parse_double(cols[3])});
  }
  return out;
}

void write_trajectories_csv(const std::vector<RawTrajectory>& trajectories, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "traj_id,t,x,y\n";
  for (const RawTrajectory& traj : trajectories) {
    for (const Sample& s : traj.samples) {
      out << traj.id << ',' << format_double(s.t) << ',' << format_double(s.x) << ',' << format_double(s.y) << '\n';
    }
  }
}

std::vector<DemographicRecord> read_demographics_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "traj_id") {
    throw Error(ErrorCode::ParseError, path.string() + ": header must start with traj_id");
  }
  std::vector<DemographicRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != header.size()) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": column count mismatch");
    }
    DemographicRecord rec{cols[0], {}};
    for (std::size_t i = 1; i < cols.size(); ++i) rec.fields[header[i]] = cols[i];
    out.push_back(std::move(rec));
  }
  return out;
}

void write_demographics_csv(const std::vector<DemographicRecord>& records, const DemographicSchema& schema,
                            const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "traj_id";
  for (const auto& f : schema.fields) out << ',' << f.name;
  out << '\n';
  for (const DemographicRecord& rec : records) {
    out << rec.traj_id;
    for (const auto& f : schema.fields) {
      const auto it = rec.fields.find(f.name);
      if (it == rec.fields.end()) throw Error(ErrorCode::MissingField, rec.traj_id + " lacks '" + f.name + "'");
      out << ',' << it->second;
    }
    out << '\n';
  }
}

}  // namespace compsnn
