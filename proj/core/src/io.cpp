#include "kstage/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace kstage {

namespace {

using nlohmann::json;

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string header_row(const std::vector<std::string>& columns) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(columns[i]);
  }
  out += '\n';
  return out;
}

const char* stop_name(StopKind kind) {
  switch (kind) {
    case StopKind::absorption: return "absorption";
    case StopKind::horizon: return "horizon";
    case StopKind::stage1_extinction: return "stage1-extinction";
  }
  return "unknown";
}

json seed_json(RngSeed seed) { return json{{"key", seed.key}, {"stream", seed.stream}}; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::vector<std::string> columns = {"time"};
  for (int k = 0; k <= traj.params.K + 1; ++k) columns.push_back("a_" + std::to_string(k));
  std::string out = header_row(columns);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += format_double(traj.times[i]);
    for (std::int64_t v : traj.states[i].a) {
      out += ',';
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

std::string rescaled_csv(const Trajectory& traj, const ScalingConstants& c) {
  const RescaledView view(traj, c);
  std::vector<std::string> columns = {"time"};
  for (int k = 0; k <= traj.params.K + 1; ++k) columns.push_back("A_" + std::to_string(k));
  std::string out = header_row(columns);
  for (std::size_t i = 0; i < view.rows(); ++i) {
    out += format_double(view.time(i));
    for (int k = 0; k <= traj.params.K + 1; ++k) {
      out += ',';
      out += format_double(view.value(i, k));
    }
    out += '\n';
  }
  return out;
}

std::string diffusion_csv(const DiffusionPath& path) {
  std::vector<std::string> columns = {"time"};
  for (int k = 0; k <= path.spec.K + 1; ++k) columns.push_back("A_" + std::to_string(k));
  std::string out = header_row(columns);
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    out += format_double(path.times[i]);
    for (double v : path.values[i]) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string ode_csv(const OdeSolution& sol) {
  std::vector<std::string> columns = {"time"};
  for (const std::string& name : sol.coordinate_names()) columns.push_back(name);
  std::string out = header_row(columns);
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    out += format_double(sol.times[i]);
    for (double v : sol.values[i]) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string table_csv(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::string out = header_row(columns);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

std::string table_csv(const ReplicaTable& table) { return table_csv(table.columns, table.rows); }

std::string ks_entries_csv(const std::vector<KsEntry>& entries) {
  std::string out = header_row({"column", "kind", "n_a", "n_b", "statistic", "p_value"});
  for (const KsEntry& e : entries) {
    out += csv_quote(e.column);
    out += ',';
    out += e.kind;
    out += ',';
    out += std::to_string(e.n_a);
    out += ',';
    out += std::to_string(e.n_b);
    out += ',';
    out += format_double(e.statistic);
    out += ',';
    out += format_double(e.p_value);
    out += '\n';
  }
  return out;
}

std::string statistics_csv(const StudyReport& report) {
  std::string out = header_row({"name", "value", "uncertainty", "replicas"});
  for (const Statistic& s : report.statistics) {
    out += csv_quote(s.name);
    out += ',';
    out += format_double(s.value);
    out += ',';
    out += format_double(s.uncertainty);
    out += ',';
    out += std::to_string(s.replicas);
    out += '\n';
  }
  return out;
}

std::string partition_csv(const std::vector<PartitionSample>& samples) {
  std::size_t K = 0;
  for (const auto& s : samples) {
    if (!s.block_counters.empty()) K = s.block_counters.front().size();
  }
  std::vector<std::string> columns = {"sample", "block", "size"};
  for (std::size_t k = 1; k <= K; ++k) columns.push_back("N_" + std::to_string(k));
  std::string out = header_row(columns);
  for (std::size_t si = 0; si < samples.size(); ++si) {
    const PartitionSample& s = samples[si];
    for (std::size_t b = 0; b < s.block_sizes.size(); ++b) {
      out += std::to_string(si);
      out += ',';
      out += std::to_string(b);
      out += ',';
      out += std::to_string(s.block_sizes[b]);
      for (std::int64_t c : s.block_counters[b]) {
        out += ',';
        out += std::to_string(c);
      }
      out += '\n';
    }
  }
  return out;
}

std::string trajectory_summary_json(const Trajectory& traj) {
  json j;
  j["seed"] = seed_json(traj.seed);
  j["n"] = traj.params.n;
  j["K"] = traj.params.K;
  j["delta"] = traj.params.delta;
  j["epsilon"] = traj.params.epsilon;
  j["stop_rule"] = stop_name(traj.stop);
  j["final_state"] = traj.final_state.a;
  j["final_time"] = traj.final_time;
  j["N"] = traj.ever_in_stage;
  j["T0_stage1"] = traj.t0_stage1;  // +inf serializes as null
  j["events"] = traj.event_resolved ? json(traj.times.size() - 1) : json();
  return j.dump(2) + "\n";
}

std::string report_json(const StudyReport& report) {
  json j;
  j["study_kind"] = report.study_kind;
  json params = json::object();
  for (const auto& [key, value] : report.parameters) params[key] = value;
  j["parameters"] = params;
  json stats = json::array();
  for (const Statistic& s : report.statistics) {
    stats.push_back(json{{"name", s.name},
                         {"value", s.value},
                         {"uncertainty", s.uncertainty},
                         {"replicas", s.replicas}});
  }
  j["statistics"] = stats;
  j["replica_count"] = report.replica_count;
  j["master_seed"] = report.master_seed;
  j["warnings"] = report.warnings;
  j["notes"] = report.notes;
  j["verdict"] = report.has_verdict ? json(report.verdict) : json();
  return j.dump(2) + "\n";
}

std::string ode_properties_json(const OdePropertyReport& report) {
  json checks = json::array();
  for (const OdePropertyCheck& c : report.checks) {
    checks.push_back(json{{"name", c.name}, {"passed", c.passed}, {"margin", c.margin}});
  }
  json j;
  j["checks"] = checks;
  j["x0_terminal"] = report.x0_terminal;
  j["x0_upper"] = report.x0_upper;
  j["all_passed"] = report.all_passed();
  return j.dump(2) + "\n";
}

std::string terminal_outbreak_json(const TerminalOutbreak& terminal) {
  json j;
  j["value"] = terminal.value;
  j["t0_a1"] = terminal.t0_a1;
  j["tail_added"] = terminal.tail_added;
  j["ode_time"] = terminal.ode_time;
  j["seed"] = seed_json(terminal.seed);
  j["dt"] = terminal.dt;
  return j.dump(2) + "\n";
}

std::string table_json(const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows) {
  json j;
  j["columns"] = columns;
  json data = json::array();
  for (const auto& row : rows) data.push_back(row);
  j["rows"] = data;
  return j.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace kstage
