#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "bus/access.hpp"
#include "bus/supervisor.hpp"

namespace ringd::archive {

struct Record {
  double t = 0.0;
  std::string name;
  Value value;
  Status status = Status::Ok;
};

// Store line: `A <t> <name> [!INVALID] <value...>`. Numbers are shortest
// round-trip decimals. Text goes in double quotes, backslash-escaping quote
// and backslash, so it never reads back as a number.
std::string format_record(const Record& record);
// Throws Parse on a malformed line.
Record parse_record(std::string_view line);

struct PolicyRule {
  enum class Mode { OnChange, Periodic };
  std::string glob;
  Mode mode = Mode::OnChange;
  double dt = 0.0;  // periodic only
};

// Policy file lines: `<glob> on-change` or `<glob> periodic <dt>`; `#`
// starts a comment. The first rule matching a channel decides its mode.
struct Policy {
  std::vector<PolicyRule> rules;

  static Policy parse(std::string_view text);  // Parse with line number
  static Policy load(const std::string& path);
  static Policy on_change(std::vector<std::string> globs);
};

// Subscribes to every channel matched at start and appends to the store.
// The file is flushed at least every `flush_interval` seconds. On a write
// error the recorder stops writing; the file stays valid up to its last
// complete line.
class Recorder final : public bus::Service {
 public:
  Recorder(bus::ChannelAccess& access, Policy policy, std::string store_path, double flush_interval = 1.0);
  ~Recorder() override;

  void start() override;
  void stop() override;

  void flush();
  std::size_t records_written() const;
  std::vector<std::string> channels() const;
  bool failed() const;
  std::string last_error() const;

 private:
  struct Periodic {
    std::string name;
    double dt;
    double next;
  };

  void append(Record record);
  void write_pending();
  void background();

  bus::ChannelAccess& bus_;
  Policy policy_;
  std::string path_;
  double flush_interval_;

  mutable std::mutex mutex_;
  std::FILE* file_ = nullptr;
  std::string pending_;
  std::size_t written_ = 0;
  std::size_t buffered_ = 0;
  bool failed_ = false;
  std::string last_error_;
  std::vector<std::string> channels_;
  std::vector<Periodic> periodic_;
  std::vector<bus::Subscription> subscriptions_;

  std::atomic<bool> stop_{true};
  std::mutex wake_mutex_;
  std::condition_variable wake_;
  std::thread thread_;
};

struct QueryResult {
  std::vector<Record> records;       // sorted by t
  std::vector<std::string> corrupt;  // "byte <offset>: <reason>"
};

// All records of `name` with t0 <= t <= t1, in time order. Throws
// UnknownChannel when the store has no record of `name` at all,
// InvalidArgument when t0 > t1, Io when the store cannot be read.
QueryResult query(const std::string& store_path, const std::string& name, double t0, double t1);

// CSV with header `t,<name>` (scalars and text) or `t,<name>[0],...`
// (vectors), one row per record. Throws InvalidArgument for an empty series
// unless allow_empty, ShapeMismatch for mixed shapes.
std::string format_csv(const std::vector<Record>& series, const std::string& name, bool allow_empty = true);
void export_csv(const std::vector<Record>& series, const std::string& name, const std::string& path,
                bool allow_empty = true);

}  // namespace ringd::archive
