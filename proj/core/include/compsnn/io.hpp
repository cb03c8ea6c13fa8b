#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "compsnn/demographics.hpp"
#include "compsnn/trajectory.hpp"

namespace compsnn {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Fixed-precision formatting ("%.<digits>g"), used for human-facing output.
std::string format_sig(double value, int digits = 6);

double parse_double(std::string_view text);

/// Splits one CSV line on commas. Quoting is not supported; none of the
/// formats written here need it.
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads `traj_id,t,x,y` rows. Rows of one trajectory must be contiguous;
/// trajectories come back in file order. No validation is applied.
std::vector<RawTrajectory> read_trajectories_csv(const std::filesystem::path& path);
void write_trajectories_csv(const std::vector<RawTrajectory>& trajectories, const std::filesystem::path& path);

struct DemographicRecord {
  std::string traj_id;
  std::map<std::string, std::string> fields;
};

/// Reads `traj_id,<field>,...` with one column per schema field name.
std::vector<DemographicRecord> read_demographics_csv(const std::filesystem::path& path);
void write_demographics_csv(const std::vector<DemographicRecord>& records, const DemographicSchema& schema,
                            const std::filesystem::path& path);

}  // namespace compsnn
