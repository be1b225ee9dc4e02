#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpp {

/// Invalid configuration (unknown case, bad key, bad ladder): CLI exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Numerical failure while running a valid configuration: CLI exit 3.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat INI-style configuration: [section] blocks of key = value lines,
/// '#' and ';' comments.
struct Config {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Overlay: every key in `overrides` wins over this config.
  void merge(const Config& overrides);
  /// Deterministic text rendering (sorted sections/keys) for reproducibility.
  std::string dump() const;
};

/// Built-in case names in registry order.
std::vector<std::string> list_cases();

/// Default configuration of a named case; throws ConfigError when unknown.
Config case_defaults(const std::string& name);

/// Resolve a user config against the named case's defaults ([case] name=...).
Config resolve_config(const Config& user);

/// Run one case end to end; writes fields_*.vtk, report.csv and report.txt
/// into [output] dir and echoes the resolved config to `log`.
/// Throws ConfigError / SolverError.
void run_case(const Config& config, std::ostream& log);

/// Convergence study over a mesh-size or order ladder (>= 3 rungs); writes
/// convergence.csv. Returns the number of failed rungs.
int run_convergence(const Config& config, const std::vector<int>& ladder, bool p_ladder,
                    std::ostream& log);

/// Generate and write only the mesh of a configuration (mesh.txt).
void emit_mesh(const Config& config, std::ostream& log);

}  // namespace dpp
