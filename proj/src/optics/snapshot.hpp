#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bus/access.hpp"

namespace ringd::optics {

// Snapshot file:
//   --- RINGD SNAPSHOT v1 ---
//   # time <iso8601>
//   # optics <name>            (optional)
//   <channel-name> <value...>  (one per line, floats as shortest round-trip decimals)
//   <END>
// `#` lines are comments anywhere after the first line.
inline constexpr std::string_view kSnapshotHeader = "--- RINGD SNAPSHOT v1 ---";
inline constexpr std::string_view kSnapshotEnd = "<END>";

struct SnapshotEntry {
  std::string name;
  std::string value;  // exactly as written: space-separated floats or text
};

struct Snapshot {
  int version = 1;
  std::string time;
  std::string optics;
  std::vector<SnapshotEntry> entries;

  const SnapshotEntry* find(std::string_view name) const;
  // Numeric value of a pseudo-channel; throws Parse if missing or not numeric.
  std::vector<double> numbers(std::string_view name) const;
  void add(std::string name, const Value& value);
};

std::string format_snapshot(const Snapshot& snapshot);
// Throws Parse with the 1-based line number of the problem.
Snapshot parse_snapshot(std::string_view text);
Snapshot read_snapshot(const std::string& path);
void write_snapshot(const std::string& path, const Snapshot& snapshot);

std::string iso8601_utc(double epoch_seconds);

struct CaptureResult {
  Snapshot snapshot;
  std::size_t warnings = 0;  // patterns matching nothing, channels that vanished
};

// Reads every channel matching any of `patterns` (globs or plain names).
CaptureResult capture_snapshot(bus::ChannelAccess& access, const std::vector<std::string>& patterns);

struct SaveResult {
  std::size_t saved = 0;
  std::size_t warnings = 0;
};
SaveResult save_snapshot(bus::ChannelAccess& access, const std::vector<std::string>& patterns,
                         const std::string& path, const std::string& optics_name = {});

struct RestoreResult {
  std::size_t applied = 0;
  std::size_t failed = 0;
  std::vector<std::string> failures;  // "<name>: <reason>"
};

// Puts every entry in file order. Unknown or mismatched channels are counted
// as failures; a lost connection propagates.
RestoreResult apply_snapshot(bus::ChannelAccess& access, const Snapshot& snapshot);
RestoreResult restore_snapshot(bus::ChannelAccess& access, const std::string& path);

}  // namespace ringd::optics
