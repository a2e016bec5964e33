// Archiver: record channels to an append-only store, query it as CSV.
#include <cstdio>
#include <limits>
#include <string>

#include "CLI11.hpp"
#include "tool_util.hpp"

int main(int argc, char** argv) {
  constexpr const char* kProg = "ringd-arch";
  CLI::App app{"Channel archiver"};
  app.require_subcommand(1);
  std::string bus, policy, store, name, csv;
  double duration = 0;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();

  auto* record = app.add_subcommand("record", "append matching channels to a store until interrupted");
  record->add_option("--bus", bus, "bus address host:port");
  record->add_option("--policy", policy, "policy file")->required();
  record->add_option("--out,-o", store, "store file")->required();
  record->add_option("--duration", duration, "stop after this many seconds");

  auto* query = app.add_subcommand("query", "print or write the records of one channel as CSV");
  query->add_option("--store", store)->required();
  query->add_option("--name", name)->required();
  query->add_option("--from", t0, "start time (inclusive)");
  query->add_option("--to", t1, "end time (inclusive)");
  query->add_option("--csv", csv, "write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (record->parsed()) {
    tool::block_stop_signals();
    ringd_service* service = nullptr;
    const int rc = ringd_archive_start(tool::or_null(bus), policy.c_str(), store.c_str(), &service);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    tool::wait_for_stop(duration);
    ringd_service_stop(service);
    return 0;
  }

  char* text = nullptr;
  size_t rows = 0, corrupt = 0;
  const int rc = ringd_archive_query_csv(store.c_str(), name.c_str(), t0, t1, &text, &rows, &corrupt);
  if (rc != RINGD_OK) return tool::report(kProg, rc);
  if (corrupt > 0) std::fprintf(stderr, "%s: skipped %zu corrupt lines:\n%s", kProg, corrupt, ringd_last_error());
  int status = 0;
  if (csv.empty()) {
    std::fputs(text, stdout);
  } else if (std::FILE* f = std::fopen(csv.c_str(), "wb")) {
    std::fputs(text, f);
    if (std::fclose(f) != 0) status = 1;
  } else {
    std::fprintf(stderr, "%s: cannot write '%s'\n", kProg, csv.c_str());
    status = 1;
  }
  ringd_free_string(text);
  return status;
}
