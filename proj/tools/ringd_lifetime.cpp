// Lifetime service: publishes LIFETIME:* from the beam current.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "tool_util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Beam lifetime service"};
  std::string bus;
  std::size_t window = 30;
  double duration = 0;
  app.add_option("--bus", bus, "bus address host:port");
  app.add_option("--window", window, "samples in the fit window")->check(CLI::Range(2, 100000));
  app.add_option("--duration", duration, "stop after this many seconds");
  CLI11_PARSE(app, argc, argv);

  tool::block_stop_signals();
  ringd_service* service = nullptr;
  const int rc = ringd_lifetime_start(tool::or_null(bus), window, &service);
  if (rc != RINGD_OK) return tool::report("ringd-lifetime", rc);
  tool::wait_for_stop(duration);
  ringd_service_stop(service);
  return 0;
}
