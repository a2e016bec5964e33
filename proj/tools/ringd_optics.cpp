// Optics in six parameters: apply, infer, serve, and snapshot save/restore.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tool_util.hpp"

namespace {

constexpr const char* kProg = "ringd-optics";

void print_params(const ringd_optics_params& p) {
  std::printf("d_nu_x %.17g\nd_nu_y %.17g\nd_xi_x %.17g\nd_xi_y %.17g\ns_sext %.17g\ns_energy %.17g\n", p.d_nu_x,
              p.d_nu_y, p.d_xi_x, p.d_xi_y, p.s_sext, p.s_energy);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnet optics from six physical parameters"};
  app.require_subcommand(1);
  std::string bus, optics, file;
  std::vector<std::string> params, globs;
  bool reset = false;
  double duration = 0;
  app.add_option("--bus", bus, "bus address host:port");

  auto* apply = app.add_subcommand("apply", "compute and write all magnet currents");
  apply->add_option("--optics", optics, "optics file")->required();
  apply->add_option("--param", params, "k=v with k in d_nu_x d_nu_y d_xi_x d_xi_y s_sext s_energy");
  apply->add_flag("--reset", reset, "start from the identity parameters instead of the live ones");

  auto* infer = app.add_subcommand("infer", "deduce the six parameters from the live magnet currents");
  infer->add_option("--optics", optics, "optics file")->required();

  auto* serve = app.add_subcommand("serve", "re-apply whenever a parameter channel changes");
  serve->add_option("--optics", optics, "optics file")->required();
  serve->add_option("--duration", duration, "stop after this many seconds");

  auto* save = app.add_subcommand("save", "snapshot the optics parameter channels");
  save->add_option("--file,-o", file)->required();
  save->add_option("--glob", globs, "channels to save (default OPTICS:*)");
  save->add_option("--optics", optics, "optics name for the header");

  auto* restore = app.add_subcommand("restore", "put the entries of a snapshot");
  restore->add_option("--file", file)->required();

  CLI11_PARSE(app, argc, argv);

  if (serve->parsed()) {
    tool::block_stop_signals();
    ringd_service* service = nullptr;
    const int rc = ringd_optics_serve(tool::or_null(bus), optics.c_str(), &service);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    tool::wait_for_stop(duration);
    ringd_service_stop(service);
    return 0;
  }

  ringd_client* client = nullptr;
  int rc = ringd_client_connect(tool::or_null(bus), 5.0, &client);
  if (rc != RINGD_OK) return tool::report(kProg, rc);
  struct Closer {
    ringd_client* c;
    ~Closer() { ringd_client_close(c); }
  } closer{client};

  if (apply->parsed()) {
    ringd_optics_params p;
    ringd_optics_params_default(&p);
    if (!reset && ringd_optics_read_params(client, &p) != RINGD_OK) ringd_optics_params_default(&p);
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      char* end = nullptr;
      const double value = eq == std::string::npos ? 0.0 : std::strtod(kv.c_str() + eq + 1, &end);
      if (eq == std::string::npos || end == kv.c_str() + eq + 1 || *end != '\0') {
        std::fprintf(stderr, "%s: --param needs key=number, got '%s'\n", kProg, kv.c_str());
        return 5;
      }
      rc = ringd_optics_set_param(&p, kv.substr(0, eq).c_str(), value);
      if (rc != RINGD_OK) return tool::report(kProg, rc);
    }
    rc = ringd_optics_apply(client, optics.c_str(), &p);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    print_params(p);
    return 0;
  }

  if (infer->parsed()) {
    ringd_optics_inferred r;
    rc = ringd_optics_infer(client, optics.c_str(), &r);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    print_params(r.params);
    std::printf("quad_residual %.6g\nsext_residual %.6g\nbend_residual %.6g\n", r.quad_residual, r.sext_residual,
                r.bend_residual);
    return 0;
  }

  if (save->parsed()) {
    if (globs.empty()) globs.push_back("OPTICS:*");
    std::vector<const char*> ptrs;
    for (const auto& g : globs) ptrs.push_back(g.c_str());
    size_t saved = 0, warnings = 0;
    rc = ringd_snapshot_save(client, ptrs.data(), ptrs.size(), file.c_str(), tool::or_null(optics), &saved,
                             &warnings);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    std::fprintf(stderr, "saved %zu channels, %zu warnings\n", saved, warnings);
    return 0;
  }

  size_t applied = 0, failed = 0;
  rc = ringd_snapshot_restore(client, file.c_str(), &applied, &failed);
  if (rc != RINGD_OK) return tool::report(kProg, rc);
  if (failed > 0) std::fputs(ringd_last_error(), stderr);
  std::fprintf(stderr, "restored %zu channels, %zu failed\n", applied, failed);
  return failed > 0 ? 1 : 0;
}
