#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <iostream>

#include "dpp/cases.hpp"

namespace {

dpp::Config load_config(const std::string& arg) {
  // a bare case name resolves against the built-in registry
  for (const auto& name : dpp::list_cases())
    if (arg == name) {
      dpp::Config c;
      c.set("case", "name", name);
      return c;
    }
  return dpp::Config::parse_file(arg);
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("DPP_NUM_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));
  else
    Eigen::setNbThreads(1);

  CLI::App app{"Double-porosity Darcy flow solver"};
  app.require_subcommand(1);

  std::string config_arg;
  std::vector<int> ladder;
  bool p_ladder = false;

  auto* run = app.add_subcommand("run", "Run a case (built-in name or config file)");
  run->add_option("config", config_arg, "case name or INI config file")->required();

  auto* conv = app.add_subcommand("converge", "Run a convergence study");
  conv->add_option("config", config_arg, "case name or INI config file")->required();
  conv->add_option("--ladder", ladder, "mesh sizes (or orders with --p-ladder); >= 3 rungs")
      ->required()
      ->expected(-1);
  conv->add_flag("--p-ladder", p_ladder, "ladder entries are polynomial orders");

  auto* cases = app.add_subcommand("cases", "List built-in cases");

  auto* meshcmd = app.add_subcommand("mesh", "Generate and write only the mesh");
  meshcmd->add_option("config", config_arg, "case name or INI config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cases->parsed()) {
      for (const auto& name : dpp::list_cases()) std::cout << name << '\n';
      return 0;
    }
    if (run->parsed()) {
      dpp::run_case(load_config(config_arg), std::cout);
      return 0;
    }
    if (conv->parsed()) {
      const int failures =
          dpp::run_convergence(load_config(config_arg), ladder, p_ladder, std::cout);
      if (failures > 0) {
        std::cerr << failures << " rung(s) failed\n";
        return 3;
      }
      return 0;
    }
    if (meshcmd->parsed()) {
      dpp::emit_mesh(load_config(config_arg), std::cout);
      return 0;
    }
  } catch (const dpp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const dpp::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
