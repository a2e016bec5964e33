#include "archive/archive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "common/error.hpp"

namespace ringd::archive {

namespace {

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string unquote(std::string_view text) {
  if (text.size() < 2 || text.front() != '"' || text.back() != '"')
    throw Error(ErrorCode::Parse, "unterminated text value");
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    char c = text[i];
    if (c == '\\') {
      if (i + 2 >= text.size()) throw Error(ErrorCode::Parse, "dangling escape in text value");
      c = text[++i];
    } else if (c == '"') {
      throw Error(ErrorCode::Parse, "stray quote in text value");
    }
    out.push_back(c);
  }
  return out;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_record(const Record& r) {
  std::string line = "A ";
  line.append(format_double(r.t)).append(" ").append(r.name);
  if (r.status == Status::Invalid) line.append(" !INVALID");
  if (const auto* text = std::get_if<std::string>(&r.value)) {
    line.append(" ").append(quote(*text));
  } else {
    const std::string v = format_value(r.value);
    if (!v.empty()) line.append(" ").append(v);
  }
  return line;
}

Record parse_record(std::string_view line) {
  std::string_view rest = trim(line);
  auto next = [&rest]() {
    rest = trim(rest);
    const auto sp = rest.find(' ');
    auto tok = rest.substr(0, sp);
    rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
    return tok;
  };
  if (next() != "A") throw Error(ErrorCode::Parse, "record does not start with 'A'");
  Record r;
  const auto t = parse_double(next());
  if (!t) throw Error(ErrorCode::Parse, "bad record time");
  r.t = *t;
  r.name = std::string(next());
  if (!valid_channel_name(r.name)) throw Error(ErrorCode::Parse, "bad channel name in record");
  rest = trim(rest);
  if (rest.substr(0, 8) == "!INVALID" && (rest.size() == 8 || rest[8] == ' ')) {
    r.status = Status::Invalid;
    rest = trim(rest.substr(8));
  }
  if (!rest.empty() && rest.front() == '"') {
    r.value = unquote(rest);
    return r;
  }
  std::vector<double> values;
  for (auto tok : split_tokens(rest)) {
    const auto d = parse_double(tok);
    if (!d) throw Error(ErrorCode::Parse, "bad number in record");
    values.push_back(*d);
  }
  if (values.empty()) throw Error(ErrorCode::Parse, "record has no value");
  if (values.size() == 1) r.value = values[0];
  else r.value = std::move(values);
  return r;
}

Policy Policy::parse(std::string_view text) {
  Policy p;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::Parse, "policy line " + std::to_string(line_no) + ": " + what, line_no);
    };
    PolicyRule rule;
    rule.glob = std::string(tokens[0]);
    if (tokens.size() == 2 && tokens[1] == "on-change") {
      rule.mode = PolicyRule::Mode::OnChange;
    } else if (tokens.size() == 3 && tokens[1] == "periodic") {
      const auto dt = parse_double(tokens[2]);
      if (!dt || !(*dt > 0.0)) throw fail("periodic interval must be a number > 0");
      rule.mode = PolicyRule::Mode::Periodic;
      rule.dt = *dt;
    } else {
      throw fail("expected '<glob> on-change' or '<glob> periodic <dt>'");
    }
    p.rules.push_back(std::move(rule));
  }
  return p;
}

Policy Policy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open policy '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Policy Policy::on_change(std::vector<std::string> globs) {
  Policy p;
  for (auto& g : globs) p.rules.push_back({std::move(g), PolicyRule::Mode::OnChange, 0.0});
  return p;
}

Recorder::Recorder(bus::ChannelAccess& access, Policy policy, std::string store_path, double flush_interval)
    : bus_(access), policy_(std::move(policy)), path_(std::move(store_path)), flush_interval_(flush_interval) {
  if (!(flush_interval_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "flush interval must be > 0");
}

Recorder::~Recorder() {
  stop();
  std::lock_guard lock(mutex_);
  if (file_) std::fclose(file_);
}

void Recorder::start() {
  {
    std::lock_guard lock(mutex_);
    if (!file_) {
      file_ = std::fopen(path_.c_str(), "ab");
      if (!file_) throw Error(ErrorCode::Io, "cannot open store '" + path_ + "' for appending");
    }
    channels_.clear();
    periodic_.clear();
  }

  std::set<std::string> taken;
  std::vector<std::string> on_change;
  std::vector<Periodic> periodic;
  const double now = wall_clock_now();
  for (const auto& rule : policy_.rules)
    for (const auto& name : bus_.list(rule.glob)) {
      if (!taken.insert(name).second) continue;
      if (rule.mode == PolicyRule::Mode::OnChange) on_change.push_back(name);
      else periodic.push_back({name, rule.dt, now});
    }
  {
    std::lock_guard lock(mutex_);
    channels_.assign(taken.begin(), taken.end());
    periodic_ = std::move(periodic);
  }
  for (const auto& name : on_change)
    subscriptions_.push_back(bus_.monitor(name, [this](const std::string& n, const TimedValue& v) {
      append({v.timestamp, n, v.value, v.status});
    }));

  stop_ = false;
  thread_ = std::thread([this] { background(); });
}

void Recorder::stop() {
  for (auto& s : subscriptions_) s.cancel();
  subscriptions_.clear();
  {
    std::lock_guard lock(wake_mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
  flush();
}

void Recorder::append(Record record) {
  std::lock_guard lock(mutex_);
  if (failed_) return;
  pending_.append(format_record(record)).push_back('\n');
  ++buffered_;
}

void Recorder::write_pending() {
  if (failed_ || !file_ || pending_.empty()) return;
  const bool ok = std::fwrite(pending_.data(), 1, pending_.size(), file_) == pending_.size() && std::fflush(file_) == 0;
  if (!ok) {
    failed_ = true;
    last_error_ = "write to '" + path_ + "' failed";
    return;
  }
  written_ += buffered_;
  buffered_ = 0;
  pending_.clear();
}

void Recorder::flush() {
  std::lock_guard lock(mutex_);
  write_pending();
}

void Recorder::background() {
  using namespace std::chrono;
  double next_flush = wall_clock_now() + flush_interval_;
  while (!stop_) {
    double now = wall_clock_now();
    std::vector<std::string> due;
    double wake_at = next_flush;
    {
      std::lock_guard lock(mutex_);
      for (auto& p : periodic_) {
        if (p.next <= now) {
          due.push_back(p.name);
          p.next += p.dt * std::max(1.0, std::floor((now - p.next) / p.dt) + 1.0);
        }
        wake_at = std::min(wake_at, p.next);
      }
    }
    for (const auto& name : due) {
      try {
        const TimedValue v = bus_.get(name);
        append({now, name, v.value, v.status});
      } catch (const Error&) {
        // channel gone or link down; try again next period
      }
    }
    if (now >= next_flush) {
      flush();
      next_flush = now + flush_interval_;
      wake_at = std::min(wake_at, next_flush);
    }
    std::unique_lock lock(wake_mutex_);
    const double wait = std::max(0.0, wake_at - wall_clock_now());
    wake_.wait_for(lock, duration<double>(wait), [this] { return stop_.load(); });
  }
}

std::size_t Recorder::records_written() const {
  std::lock_guard lock(mutex_);
  return written_;
}

std::vector<std::string> Recorder::channels() const {
  std::lock_guard lock(mutex_);
  return channels_;
}

bool Recorder::failed() const {
  std::lock_guard lock(mutex_);
  return failed_;
}

std::string Recorder::last_error() const {
  std::lock_guard lock(mutex_);
  return last_error_;
}

QueryResult query(const std::string& store_path, const std::string& name, double t0, double t1) {
  if (!(t0 <= t1)) throw Error(ErrorCode::InvalidArgument, "query needs t0 <= t1");
  std::ifstream in(store_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open store '" + store_path + "'");

  QueryResult result;
  bool seen = false;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t here = offset;
    const bool complete = !in.eof();
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    try {
      Record r = parse_record(line);
      if (r.name != name) continue;
      seen = true;
      if (r.t >= t0 && r.t <= t1) result.records.push_back(std::move(r));
    } catch (const Error& e) {
      result.corrupt.push_back("byte " + std::to_string(here) + ": " + e.what() +
                               (complete ? "" : " (torn last line)"));
    }
  }
  if (!seen) throw Error(ErrorCode::UnknownChannel, "store has no records of '" + name + "'");
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const Record& a, const Record& b) { return a.t < b.t; });
  return result;
}

std::string format_csv(const std::vector<Record>& series, const std::string& name, bool allow_empty) {
  if (series.empty() && !allow_empty) throw Error(ErrorCode::InvalidArgument, "empty series");
  std::size_t width = 0;  // 0: scalar or text column
  if (!series.empty())
    if (const auto* v = std::get_if<std::vector<double>>(&series.front().value)) width = v->size();

  std::string out = "t";
  if (width == 0) {
    out.append(",").append(csv_field(name));
  } else {
    for (std::size_t i = 0; i < width; ++i) out.append(",").append(csv_field(name + "[" + std::to_string(i) + "]"));
  }
  out.push_back('\n');
  for (const auto& r : series) {
    out.append(format_double(r.t));
    if (const auto* v = std::get_if<std::vector<double>>(&r.value)) {
      if (v->size() != width) throw Error(ErrorCode::ShapeMismatch, "series mixes value shapes");
      for (double x : *v) out.append(",").append(format_double(x));
    } else {
      if (width != 0) throw Error(ErrorCode::ShapeMismatch, "series mixes value shapes");
      if (const auto* d = std::get_if<double>(&r.value)) out.append(",").append(format_double(*d));
      else out.append(",").append(csv_field(std::get<std::string>(r.value)));
    }
    out.push_back('\n');
  }
  return out;
}

void export_csv(const std::vector<Record>& series, const std::string& name, const std::string& path,
                bool allow_empty) {
  const std::string text = format_csv(series, name, allow_empty);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
}

}  // namespace ringd::archive
