// Generic channel tool: get, put, monitor, list, save, restore.
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tool_util.hpp"

namespace {

constexpr const char* kProg = "ringd";

struct Connection {
  ringd_client* client = nullptr;
  ~Connection() { ringd_client_close(client); }
};

std::string value_line(const char* name, const ringd_value* v) {
  char ts[64];
  // Timestamps are seconds with microsecond resolution; values are exact.
  std::snprintf(ts, sizeof ts, "%.6f", ringd_value_timestamp(v));
  std::string line = std::string(name) + " " + ts;
  if (!ringd_value_valid(v)) line += " !INVALID";
  const char* text = ringd_value_text(v);
  if (*text) line.append(" ").append(text);
  return line;
}

struct MonitorState {
  std::mutex mutex;
  std::condition_variable cv;
  long seen = 0;
  long limit = 0;
};

void on_event(void* user, const char* name, const ringd_value* v) {
  auto* st = static_cast<MonitorState*>(user);
  std::lock_guard lock(st->mutex);
  if (st->limit > 0 && st->seen >= st->limit) return;
  const std::string line = "EV " + value_line(name, v) + "\n";
  std::fwrite(line.data(), 1, line.size(), stdout);
  std::fflush(stdout);
  ++st->seen;
  st->cv.notify_all();
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Read, write, watch, save and restore bus channels"};
  app.require_subcommand(1);
  std::string bus;
  app.add_option("--bus", bus, "bus address host:port (default $RINGD_BUS_ADDR or 127.0.0.1:5064)");
  double timeout = 5.0;
  app.add_option("--timeout", timeout, "connect timeout in seconds");

  std::string name;
  auto* get = app.add_subcommand("get", "print <name> <ts> <value...>");
  get->add_option("name", name)->required();

  std::vector<std::string> values;
  auto* put = app.add_subcommand("put", "write a value (vector entries as separate arguments)");
  put->add_option("name", name)->required();
  put->add_option("value", values);
  std::string line;
  put->add_option("--line", line, "a line as printed by 'get'; its timestamp is ignored");

  long count = 0;
  auto* monitor = app.add_subcommand("monitor", "stream EV lines, starting with the current value");
  monitor->add_option("name", name)->required();
  monitor->add_option("--count,-n", count, "exit after this many events");

  std::string glob;
  auto* list = app.add_subcommand("list", "list channel names");
  list->add_option("glob", glob);

  std::vector<std::string> patterns;
  std::string file;
  auto* save = app.add_subcommand("save", "write matching channels to a snapshot file");
  save->add_option("--out,-o", file)->required();
  save->add_option("patterns", patterns, "globs or names (default: all)");

  auto* restore = app.add_subcommand("restore", "put every entry of a snapshot file");
  restore->add_option("file", file)->required();

  CLI11_PARSE(app, argc, argv);

  Connection conn;
  int rc = ringd_client_connect(tool::or_null(bus), timeout, &conn.client);
  if (rc != RINGD_OK) return tool::report(kProg, rc);

  if (get->parsed()) {
    ringd_value* v = nullptr;
    rc = ringd_get(conn.client, name.c_str(), &v);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    std::printf("%s\n", value_line(name.c_str(), v).c_str());
    ringd_value_free(v);
    return 0;
  }

  if (put->parsed()) {
    std::string text = join(values);
    if (!line.empty()) {
      // <name> <ts> [!INVALID] <value...>
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
      std::vector<std::string> tokens;
      std::size_t pos = 0;
      while (pos < line.size()) {
        const auto next = line.find(' ', pos);
        const auto tok = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (!tok.empty()) tokens.push_back(tok);
        if (next == std::string::npos) break;
        pos = next + 1;
      }
      std::size_t first = 2;
      if (tokens.size() > 2 && tokens[2] == "!INVALID") first = 3;
      if (tokens.size() < 2) {
        std::fprintf(stderr, "%s: --line needs '<name> <ts> <value...>'\n", kProg);
        return 5;
      }
      text = join(std::vector<std::string>(tokens.begin() + static_cast<long>(std::min(first, tokens.size())),
                                           tokens.end()));
    }
    return tool::report(kProg, ringd_put_text(conn.client, name.c_str(), text.c_str()));
  }

  if (monitor->parsed()) {
    MonitorState st;
    st.limit = count;
    ringd_monitor* m = nullptr;
    rc = ringd_monitor_start(conn.client, name.c_str(), on_event, &st, &m);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    {
      // Ctrl-C simply ends the process.
      std::unique_lock lock(st.mutex);
      while ((count == 0 || st.seen < count) && ringd_client_connected(conn.client))
        st.cv.wait_for(lock, std::chrono::milliseconds(200));
    }
    ringd_monitor_stop(m);
    if (!ringd_client_connected(conn.client) && (count == 0 || st.seen < count)) {
      std::fprintf(stderr, "%s: connection lost\n", kProg);
      return 1;
    }
    return 0;
  }

  if (list->parsed()) {
    char* names = nullptr;
    rc = ringd_list(conn.client, tool::or_null(glob), &names);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    std::fputs(names, stdout);
    ringd_free_string(names);
    return 0;
  }

  if (save->parsed()) {
    std::vector<const char*> ptrs;
    for (const auto& p : patterns) ptrs.push_back(p.c_str());
    size_t saved = 0, warnings = 0;
    rc = ringd_snapshot_save(conn.client, ptrs.data(), ptrs.size(), file.c_str(), nullptr, &saved, &warnings);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    std::fprintf(stderr, "saved %zu channels, %zu warnings\n", saved, warnings);
    return 0;
  }

  if (restore->parsed()) {
    size_t applied = 0, failed = 0;
    rc = ringd_snapshot_restore(conn.client, file.c_str(), &applied, &failed);
    if (rc != RINGD_OK) return tool::report(kProg, rc);
    if (failed > 0) std::fputs(ringd_last_error(), stderr);
    std::fprintf(stderr, "restored %zu channels, %zu failed\n", applied, failed);
    return failed > 0 ? 1 : 0;
  }
  return 0;
}
