#include "polyneck/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of the generalized connected sum Yamabe construction"};
  app.require_subcommand(1);

  std::optional<std::string> config;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
  std::optional<int> jobs;

  for (const auto& name : polyneck::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Config file (key = value, [section] headers)");
    sub->add_option("--set", overrides, "Override key=value (repeatable)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--jobs", jobs, "Worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::optional<std::filesystem::path> config_path;
  if (config) config_path = *config;
  return polyneck::execute(command, config_path, overrides, out, jobs, std::cout);
}
