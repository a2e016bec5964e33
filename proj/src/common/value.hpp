#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ringd {

enum class Status { Ok, Invalid };

enum class ValueKind { Scalar, Vector, Text };

using Value = std::variant<double, std::vector<double>, std::string>;

// Timestamps are seconds since the epoch (or simulated seconds). A negative
// timestamp on put means "let the bus stamp it".
inline constexpr double kAssignTimestamp = -1.0;

struct TimedValue {
  Value value = 0.0;
  double timestamp = kAssignTimestamp;
  Status status = Status::Ok;

  TimedValue() = default;
  TimedValue(Value v, double ts = kAssignTimestamp, Status st = Status::Ok)
      : value(std::move(v)), timestamp(ts), status(st) {}

  ValueKind kind() const noexcept { return static_cast<ValueKind>(value.index()); }
  bool ok() const noexcept { return status == Status::Ok; }

  // Numeric accessors. A length-1 vector reads as a scalar and a scalar reads
  // as a length-1 vector, since a wire parse cannot tell the two apart.
  double scalar() const;
  std::vector<double> vector() const;
  const std::string& text() const;
};

bool operator==(const TimedValue& a, const TimedValue& b);

struct ChannelMeta {
  ValueKind kind = ValueKind::Scalar;
  std::size_t vector_length = 0;  // 0 unless kind == Vector
  bool writable = true;
  std::string units;
  std::string description;

  static ChannelMeta scalar(std::string units, bool writable = true, std::string description = {});
  static ChannelMeta vector(std::size_t n, std::string units, bool writable = true,
                            std::string description = {});
  static ChannelMeta text(bool writable = true, std::string description = {});

  bool same_shape(const ChannelMeta& other) const noexcept {
    return kind == other.kind && vector_length == other.vector_length && writable == other.writable;
  }
};

// `[A-Za-z0-9:_-]+`, at most 60 characters.
bool valid_channel_name(std::string_view name) noexcept;
void require_channel_name(std::string_view name);

// Throws ShapeMismatch when the value does not fit the channel shape or is
// not finite.
void check_shape(const ChannelMeta& meta, const Value& value);

// Shortest decimal that round-trips to the same double.
std::string format_double(double x);
std::optional<double> parse_double(std::string_view token);

// Space-separated floats, or the text verbatim.
std::string format_value(const Value& value);

// Parses value tokens for a channel of known shape.
Value parse_value_for(const ChannelMeta& meta, std::string_view text);

// Parses value tokens with no shape information: all-numeric token lists
// become a scalar (one token) or a vector, anything else is text.
Value parse_value_guess(std::string_view text);

std::vector<std::string_view> split_tokens(std::string_view text);
std::string_view trim(std::string_view s);

bool glob_match(std::string_view pattern, std::string_view name);

double wall_clock_now();

}  // namespace ringd
