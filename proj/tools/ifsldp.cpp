// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ifsldp/ifsldp.h"
#include "json.hpp"

namespace {

int report_error(ifsldp_status st) {
  std::cerr << "ifsldp: " << ifsldp_last_error() << "\n";
  return ifsldp_exit_code(st);
}

// Prints the command's messages and returns its exit code.
int finish(ifsldp_status st, char* result, bool print_json) {
  if (st != IFSLDP_OK) return report_error(st);
  const auto j = nlohmann::json::parse(result);
  ifsldp_string_free(result);
  std::ostream& os = j["exit_code"].get<int>() == 0 ? std::cout : std::cerr;
  for (const auto& m : j["messages"]) os << m.get<std::string>() << "\n";
  for (const auto& f : j["files"]) std::cout << "wrote " << f.get<std::string>() << "\n";
  if (print_json) std::cout << j["summary"].dump(2) << "\n";
  return j["exit_code"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IFS thermodynamic formalism and tropical zero-temperature limits"};
  app.set_version_flag("--version", std::string(ifsldp_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t threads = 1;
  std::vector<std::string> overrides;
  bool print_json = false;
  app.add_option("--config", config_path, "experiment YAML file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--threads", threads, "concurrent beta jobs")->check(CLI::PositiveNumber);
  app.add_option("--tol-override", overrides, "KEY=VAL on a scalar config field, repeatable");
  app.add_flag("--json", print_json, "print the summary as JSON");

  auto* validate = app.add_subcommand("validate", "check the config and the system it defines");
  double beta = 0.0;
  auto* thermo = app.add_subcommand("thermo", "eigenpair, q, Gibbs measure and pressure at one beta");
  thermo->add_option("--beta", beta, "inverse temperature")->required()->check(CLI::PositiveNumber);
  auto* tropical = app.add_subcommand("tropical", "m(A), subaction, closure, Aubry set and density");
  auto* ldp = app.add_subcommand("ldp", "beta sweep with LDP, Varadhan and trend checks");
  std::string target = "mane";
  std::size_t depth = 0;
  auto* oracle = app.add_subcommand("oracle", "exhaustive word enumeration against the grid solvers");
  oracle->add_option("--target", target, "mane, density or rate")
      ->check(CLI::IsMember({"mane", "density", "rate"}));
  oracle->add_option("--depth", depth, "word length (default: symbolic.depth)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  ifsldp_config* cfg = nullptr;
  ifsldp_status st = ifsldp_config_load(config_path.c_str(), &cfg);
  if (st != IFSLDP_OK) return report_error(st);
  for (const auto& ov : overrides) {
    st = ifsldp_config_override(cfg, ov.c_str());
    if (st != IFSLDP_OK) {
      ifsldp_config_free(cfg);
      return report_error(st);
    }
  }
  if (!out_dir.empty()) ifsldp_config_set_output_dir(cfg, out_dir.c_str());

  char* result = nullptr;
  if (*validate)
    st = ifsldp_run_validate(cfg, &result);
  else if (*thermo)
    st = ifsldp_run_thermo(cfg, beta, &result);
  else if (*tropical)
    st = ifsldp_run_tropical(cfg, &result);
  else if (*ldp)
    st = ifsldp_run_ldp(cfg, threads, &result);
  else
    st = ifsldp_run_oracle(cfg, target.c_str(), depth, &result);
  ifsldp_config_free(cfg);
  return finish(st, result, print_json);
}
