#include "bus/wire.hpp"

#include <array>

namespace ringd::bus::wire {

std::string_view next_token(std::string_view& s) {
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  std::size_t j = i;
  while (j < s.size() && s[j] != ' ') ++j;
  auto tok = s.substr(i, j - i);
  while (j < s.size() && s[j] == ' ') ++j;
  s.remove_prefix(j);
  return tok;
}

std::string value_frame(std::string_view verb, std::string_view name, const TimedValue& value) {
  std::string line;
  line.reserve(64);
  line.append(verb).append(" ").append(name).append(" ").append(format_double(value.timestamp));
  if (value.status == Status::Invalid) line.append(" ").append(kInvalidMarker);
  const std::string body = format_value(value.value);
  if (!body.empty()) line.append(" ").append(body);
  line.push_back('\n');
  return line;
}

std::string error_frame(std::string_view name, ErrorCode code) {
  std::string line = "ERR ";
  line.append(name.empty() ? "-" : name).append(" ").append(error_token(code)).push_back('\n');
  return line;
}

std::string put_request(std::string_view name, const TimedValue& value) {
  std::string line = "PUT ";
  line.append(name);
  if (value.timestamp >= 0) line.append(" @").append(format_double(value.timestamp));
  if (value.status == Status::Invalid) line.append(" ").append(kInvalidMarker);
  const std::string body = format_value(value.value);
  if (!body.empty()) line.append(" ").append(body);
  line.push_back('\n');
  return line;
}

std::string define_request(std::string_view name, const ChannelMeta& meta) {
  static constexpr std::array<const char*, 3> kinds{"scalar", "vector", "text"};
  std::string line = "DEF ";
  line.append(name).append(" ").append(kinds[static_cast<std::size_t>(meta.kind)]);
  line.append(" ").append(std::to_string(meta.vector_length));
  line.append(meta.writable ? " rw" : " ro");
  if (!meta.units.empty()) line.append(" ").append(meta.units);
  line.push_back('\n');
  return line;
}

PutArgs parse_put_args(std::string_view rest) {
  PutArgs args;
  for (;;) {
    std::string_view probe = rest;
    auto tok = next_token(probe);
    if (!tok.empty() && tok.front() == '@') {
      auto ts = parse_double(tok.substr(1));
      if (!ts || *ts < 0) throw Error(ErrorCode::Protocol, "bad timestamp");
      args.timestamp = *ts;
      rest = probe;
    } else if (tok == kInvalidMarker) {
      args.status = Status::Invalid;
      rest = probe;
    } else {
      break;
    }
  }
  args.value_text = rest;
  return args;
}

ChannelMeta parse_define_args(std::string_view rest) {
  auto kind = next_token(rest);
  auto len = parse_double(next_token(rest));
  auto access = next_token(rest);
  if (!len || *len < 0 || (access != "ro" && access != "rw"))
    throw Error(ErrorCode::Protocol, "bad DEF arguments");
  const bool writable = access == "rw";
  const std::string units(trim(rest));
  if (kind == "scalar") return ChannelMeta::scalar(units, writable);
  if (kind == "vector") return ChannelMeta::vector(static_cast<std::size_t>(*len), units, writable);
  if (kind == "text") return ChannelMeta::text(writable);
  throw Error(ErrorCode::Protocol, "bad DEF kind");
}

ServerFrame parse_server_frame(std::string_view line) {
  ServerFrame f;
  std::string_view rest = line;
  f.verb = std::string(next_token(rest));
  if (f.verb == "OK") {
    f.reason = std::string(next_token(rest));
    return f;
  }
  if (f.verb == "ERR") {
    f.name = std::string(next_token(rest));
    f.reason = std::string(next_token(rest));
    return f;
  }
  if (f.verb == "CHANNELS") {
    auto n = parse_double(next_token(rest));
    if (!n || *n < 0) throw Error(ErrorCode::Protocol, "bad CHANNELS frame");
    f.count = static_cast<std::size_t>(*n);
    return f;
  }
  if (f.verb == "VAL" || f.verb == "EV") {
    f.name = std::string(next_token(rest));
    auto ts = parse_double(next_token(rest));
    if (f.name.empty() || !ts) throw Error(ErrorCode::Protocol, "bad value frame");
    f.value.timestamp = *ts;
    std::string_view probe = rest;
    if (next_token(probe) == kInvalidMarker) {
      f.value.status = Status::Invalid;
      rest = probe;
    }
    f.value.value = parse_value_guess(rest);
    return f;
  }
  throw Error(ErrorCode::Protocol, "unknown frame '" + std::string(line) + "'");
}

ErrorCode error_from_token(std::string_view token) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::InvalidArgument); ++c)
    if (token == error_token(static_cast<ErrorCode>(c))) return static_cast<ErrorCode>(c);
  return ErrorCode::Protocol;
}

}  // namespace ringd::bus::wire
