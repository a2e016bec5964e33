#include "optics/snapshot.hpp"

#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"

namespace ringd::optics {

const SnapshotEntry* Snapshot::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<double> Snapshot::numbers(std::string_view name) const {
  const auto* e = find(name);
  if (!e) throw Error(ErrorCode::Parse, "snapshot has no entry '" + std::string(name) + "'");
  std::vector<double> out;
  for (auto tok : split_tokens(e->value)) {
    auto d = parse_double(tok);
    if (!d) throw Error(ErrorCode::Parse, "entry '" + std::string(name) + "' is not numeric");
    out.push_back(*d);
  }
  return out;
}

void Snapshot::add(std::string name, const Value& value) {
  entries.push_back({std::move(name), format_value(value)});
}

std::string format_snapshot(const Snapshot& s) {
  std::string out;
  out.append(kSnapshotHeader).push_back('\n');
  out.append("# time ").append(s.time).push_back('\n');
  if (!s.optics.empty()) out.append("# optics ").append(s.optics).push_back('\n');
  for (const auto& e : s.entries) {
    out.append(e.name);
    if (!e.value.empty()) out.append(" ").append(e.value);
    out.push_back('\n');
  }
  out.append(kSnapshotEnd).push_back('\n');
  return out;
}

Snapshot parse_snapshot(std::string_view text) {
  Snapshot s;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  bool ended = false;
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::Parse, "snapshot line " + std::to_string(line_no) + ": " + what, line_no);
  };

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line_no == 1) {
      if (trim(line) != kSnapshotHeader) throw fail("missing snapshot header");
      continue;
    }
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      auto comment = trim(body.substr(1));
      if (comment.substr(0, 5) == "time ") s.time = std::string(trim(comment.substr(5)));
      else if (comment.substr(0, 7) == "optics ") s.optics = std::string(trim(comment.substr(7)));
      continue;
    }
    if (ended) throw fail("content after <END>");
    if (body == kSnapshotEnd) {
      ended = true;
      continue;
    }
    const auto space = line.find(' ');
    std::string name(line.substr(0, space));
    std::string_view value = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
    if (!valid_channel_name(name)) throw fail("bad channel name '" + name + "'");
    if (!seen.insert(name).second) throw fail("duplicate channel '" + name + "'");
    s.entries.push_back({std::move(name), std::string(trim(value))});
  }
  if (line_no == 0) throw Error(ErrorCode::Parse, "snapshot line 1: empty file", 1);
  if (!ended) {
    ++line_no;
    throw fail("missing <END> (truncated file)");
  }
  return s;
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open snapshot '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_snapshot(ss.str());
}

void write_snapshot(const std::string& path, const Snapshot& snapshot) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write snapshot '" + path + "'");
    out << format_snapshot(snapshot);
    if (!out.flush()) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error(ErrorCode::Io, "cannot move snapshot into place at '" + path + "'");
}

std::string iso8601_utc(double epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CaptureResult capture_snapshot(bus::ChannelAccess& access, const std::vector<std::string>& patterns) {
  CaptureResult result;
  result.snapshot.time = iso8601_utc(wall_clock_now());
  std::set<std::string, std::less<>> taken;
  for (const auto& pattern : patterns) {
    const auto names = access.list(pattern);
    if (names.empty()) ++result.warnings;
    for (const auto& name : names) {
      if (!taken.insert(name).second) continue;
      try {
        result.snapshot.add(name, access.get(name).value);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnknownChannel) throw;
        ++result.warnings;
      }
    }
  }
  return result;
}

SaveResult save_snapshot(bus::ChannelAccess& access, const std::vector<std::string>& patterns,
                         const std::string& path, const std::string& optics_name) {
  auto captured = capture_snapshot(access, patterns);
  captured.snapshot.optics = optics_name;
  write_snapshot(path, captured.snapshot);
  return {captured.snapshot.entries.size(), captured.warnings};
}

RestoreResult apply_snapshot(bus::ChannelAccess& access, const Snapshot& snapshot) {
  RestoreResult r;
  for (const auto& e : snapshot.entries) {
    try {
      access.put_text(e.name, e.value);
      ++r.applied;
    } catch (const Error& err) {
      if (err.code() == ErrorCode::Connection) throw;
      ++r.failed;
      r.failures.push_back(e.name + ": " + error_token(err.code()));
    }
  }
  return r;
}

RestoreResult restore_snapshot(bus::ChannelAccess& access, const std::string& path) {
  return apply_snapshot(access, read_snapshot(path));
}

}  // namespace ringd::optics
