// Simulated machine: bus server plus storage ring, and generators for the
// optics and response files that the services load.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tool_util.hpp"

int main(int argc, char** argv) {
  constexpr const char* kProg = "ringd-sim";
  CLI::App app{"Simulated storage ring"};
  app.require_subcommand(1);

  std::string bus, config, name = "nominal", out;
  std::vector<std::string> sets;
  double duration = 0;

  auto* run = app.add_subcommand("run", "serve the bus and run the ring until interrupted");
  run->add_option("--bus", bus, "listen address host:port (port 0 picks one)");
  run->add_option("--config", config, "ring configuration file");
  run->add_option("--set", sets, "extra key=value configuration, repeatable");
  run->add_option("--duration", duration, "stop after this many seconds");

  auto* optics = app.add_subcommand("optics-file", "write the optics file for this machine");
  optics->add_option("--config", config, "ring configuration file");
  optics->add_option("--name", name, "optics name");
  optics->add_option("--out,-o", out)->required();

  auto* response = app.add_subcommand("response-file", "write the orbit response file for this machine");
  response->add_option("--config", config, "ring configuration file");
  response->add_option("--out,-o", out)->required();

  app.add_subcommand("config", "print the built-in configuration");

  CLI11_PARSE(app, argc, argv);

  if (optics->parsed())
    return tool::report(kProg, ringd_write_optics_file(tool::or_null(config), name.c_str(), out.c_str()));
  if (response->parsed())
    return tool::report(kProg, ringd_write_response_file(tool::or_null(config), out.c_str()));
  if (app.got_subcommand("config")) {
    char* text = nullptr;
    const int rc = ringd_default_config(&text);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    std::fputs(text, stdout);
    ringd_free_string(text);
    return 0;
  }

  std::string overrides;
  for (const auto& s : sets) overrides.append(s).push_back('\n');
  tool::block_stop_signals();
  ringd_service* machine = nullptr;
  const int rc = ringd_machine_start(tool::or_null(bus), tool::or_null(config), overrides.c_str(), &machine);
  if (rc != RINGD_OK) return tool::report(kProg, rc);
  std::printf("listening on port %d\n", ringd_service_port(machine));
  std::fflush(stdout);
  tool::wait_for_stop(duration);
  ringd_service_stop(machine);
  return 0;
}
