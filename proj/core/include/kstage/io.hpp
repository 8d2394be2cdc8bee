#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kstage/experiments.hpp"
#include "kstage/ode.hpp"
#include "kstage/scaling.hpp"
#include "kstage/sde.hpp"
#include "kstage/trajectory.hpp"

namespace kstage {

/* Shortest decimal rendering that round-trips the exact double;
 * locale-independent, so identical runs serialize byte-identically. */
std::string format_double(double v);

/* CSV writers. Every table starts with a header row and uses '\n' endings. */
std::string trajectory_csv(const Trajectory& traj);                          // time,a_0,...
std::string rescaled_csv(const Trajectory& traj, const ScalingConstants& c); // time,A_0,...
std::string diffusion_csv(const DiffusionPath& path);                        // time,A_0,...
std::string ode_csv(const OdeSolution& sol);                                 // time,x_0,x_2,...
std::string table_csv(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);
std::string table_csv(const ReplicaTable& table);
std::string ks_entries_csv(const std::vector<KsEntry>& entries);
std::string statistics_csv(const StudyReport& report);
std::string partition_csv(const std::vector<PartitionSample>& samples);

/* Structured-text (JSON) serializations. Keys are emitted in sorted order,
 * so output is deterministic. Non-finite values serialize as null. */
std::string trajectory_summary_json(const Trajectory& traj);
std::string report_json(const StudyReport& report);
std::string ode_properties_json(const OdePropertyReport& report);
std::string terminal_outbreak_json(const TerminalOutbreak& terminal);

/* Table as a column list plus row arrays, the --format json twin of table_csv. */
std::string table_json(const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows);

/* Writes atomically enough for our purposes: truncate-and-write, throwing
 * std::runtime_error on any filesystem failure. Parent directories must
 * already exist. */
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace kstage
