#pragma once

#include "polyneck/geometry.hpp"
#include "polyneck/linear_solver.hpp"
#include "polyneck/yamabe.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace polyneck {

// Flat dotted keys ("section.key") mapped to raw values.
using Settings = std::map<std::string, std::string>;

Settings default_settings();
// Reads key = value lines with optional [section] headers; keys inside a
// section are prefixed with "section.".
Settings parse_settings(std::istream& in);
Settings load_settings(const std::filesystem::path& path);
// Applies "key=value"; throws InvalidConfig for unknown keys or bad syntax.
void apply_override(Settings& settings, const std::string& assignment);
void merge_settings(Settings& into, const Settings& from);

struct RunConfig {
  ModelSpec model;
  double epsilon = 0.05;
  std::optional<double> alpha;  // nullopt selects the smallest admissible alpha
  double delta = 0.3;
  double cutoff_width = 1.0;
  std::vector<double> sweep_epsilons;
  std::vector<double> barrier_deltas;
  std::vector<double> barrier_epsilons;
  std::optional<double> barrier_alpha;
  int barrier_t_samples = 41;
  int barrier_theta_samples = 5;
  double neck_t_step = 0.05;
  double curvature_step = 1e-3;
  int resolution = 64;
  SolverOptions solver;
  double picard_tol = 1e-12;
  int picard_max_iter = 200;
  double picard_step = 5e-3;
  SourceVariant variant = SourceVariant::Full;
  int jobs = 1;
  std::filesystem::path out = "out";
  Settings settings;

  // Gluing configuration with model, epsilon, delta and alpha resolved.
  GluingConfig gluing(double eps, double delta_value, std::optional<double> alpha_value) const;
  GluingConfig gluing(double eps) const { return gluing(eps, delta, alpha); }
  PicardOptions picard() const;
};

// Parses and validates every value; throws InvalidConfig and the module
// precondition errors.
RunConfig make_run_config(const Settings& settings);

struct CheckRow {
  std::string name;
  double measured = 0.0;
  std::string relation;  // "<=", ">=" or "=="
  double bound = 0.0;
  // "analytic" (exact oracle), "theorem" (rate or bound of the construction)
  // or "design" (numerical tolerance of this implementation).
  std::string bound_origin;
  bool passed = false;
  std::string note;
};

CheckRow make_check(std::string name, double measured, std::string relation, double bound,
                    std::string origin, std::string note = {});

struct RunResult {
  std::string command;
  std::vector<CheckRow> checks;
  std::vector<std::string> files;

  bool passed() const;
  const CheckRow* find(const std::string& name) const;
};

const std::vector<std::string>& command_names();

// Runs one subcommand and writes its artifacts into cfg.out. Throws Error on
// precondition failures before any computation.
RunResult run_command(const std::string& command, const RunConfig& cfg);

// Full driver: builds the configuration, runs, prints a summary to `log`.
// Returns 0 when all checks pass, 1 when a check fails, 2 on configuration
// or precondition errors.
int execute(const std::string& command, const std::optional<std::filesystem::path>& config_path,
            const std::vector<std::string>& overrides, const std::optional<std::string>& out,
            std::optional<int> jobs, std::ostream& log);

// printf("%.12g") formatting used in every artifact.
std::string format_number(double value);

}  // namespace polyneck
