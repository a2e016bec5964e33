// Slow orbit feedback service.
#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "tool_util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Slow orbit feedback"};
  ringd_ofb_options opts;
  ringd_ofb_options_default(&opts);
  std::string bus, response, mode = "stopped";
  bool vertical = false;
  double duration = 0;
  app.add_option("--bus", bus, "bus address host:port");
  app.add_option("--response", response, "response file")->required();
  app.add_option("--period", opts.period, "loop period in seconds")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode, "initial mode")
      ->check(CLI::IsMember({"stopped", "passive", "active"}, CLI::ignore_case));
  app.add_option("--f-step", opts.f_step, "RF frequency step in Hz")->check(CLI::PositiveNumber);
  app.add_option("--gain", opts.gain, "feedback gain (0, 1]")->check(CLI::Range(1e-9, 1.0));
  app.add_flag("--vertical", vertical, "also run the vertical plane (starts STOPPED)");
  app.add_option("--duration", duration, "stop after this many seconds");
  CLI11_PARSE(app, argc, argv);

  const std::map<std::string, int> modes{
      {"stopped", RINGD_OFB_STOPPED}, {"passive", RINGD_OFB_PASSIVE}, {"active", RINGD_OFB_ACTIVE}};
  std::string lower = mode;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  opts.mode = modes.at(lower);
  opts.vertical = vertical ? 1 : 0;

  tool::block_stop_signals();
  ringd_service* service = nullptr;
  const int rc = ringd_ofb_start(tool::or_null(bus), response.c_str(), &opts, &service);
  if (rc != RINGD_OK) return tool::report("ringd-ofb", rc);
  tool::wait_for_stop(duration);
  ringd_service_stop(service);
  return 0;
}
