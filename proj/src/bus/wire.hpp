#pragma once

#include <string>
#include <string_view>

#include "common/error.hpp"
#include "common/value.hpp"

// Line protocol shared by the server and the client.
//
//   client -> server  GET <name> | PUT <name> [@<ts>] [!INVALID] <value...>
//                     MON <name> | UNMON <name> | LIST [<glob>]
//                     DEF <name> scalar|vector|text <len> ro|rw [<units>]
//   server -> client  VAL <name> <ts> [!INVALID] <value...> | OK
//                     ERR <name|-> <reason> | EV <name> <ts> [!INVALID] <value...>
//                     CHANNELS <n> followed by n name lines
namespace ringd::bus::wire {

inline constexpr std::string_view kInvalidMarker = "!INVALID";

// Pops the next space-delimited token off the front of `s`.
std::string_view next_token(std::string_view& s);

std::string value_frame(std::string_view verb, std::string_view name, const TimedValue& value);
std::string error_frame(std::string_view name, ErrorCode code);
std::string put_request(std::string_view name, const TimedValue& value);
std::string define_request(std::string_view name, const ChannelMeta& meta);

struct PutArgs {
  double timestamp = kAssignTimestamp;
  Status status = Status::Ok;
  std::string_view value_text;
};
PutArgs parse_put_args(std::string_view rest);

ChannelMeta parse_define_args(std::string_view rest);

struct ServerFrame {
  std::string verb;  // VAL, EV, OK, ERR, CHANNELS
  std::string name;
  TimedValue value;
  std::string reason;
  std::size_t count = 0;
};
ServerFrame parse_server_frame(std::string_view line);

ErrorCode error_from_token(std::string_view token);

}  // namespace ringd::bus::wire
