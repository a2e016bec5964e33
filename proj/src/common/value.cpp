#include "common/value.hpp"

#include <fnmatch.h>

#include <charconv>
#include <chrono>
#include <cmath>

#include "common/error.hpp"

namespace ringd {

double TimedValue::scalar() const {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* v = std::get_if<std::vector<double>>(&value); v && v->size() == 1) return v->front();
  throw Error(ErrorCode::ShapeMismatch, "value is not a scalar");
}

std::vector<double> TimedValue::vector() const {
  if (const auto* v = std::get_if<std::vector<double>>(&value)) return *v;
  if (const auto* d = std::get_if<double>(&value)) return {*d};
  throw Error(ErrorCode::ShapeMismatch, "value is not numeric");
}

const std::string& TimedValue::text() const {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  throw Error(ErrorCode::ShapeMismatch, "value is not text");
}

bool operator==(const TimedValue& a, const TimedValue& b) {
  return a.value == b.value && a.timestamp == b.timestamp && a.status == b.status;
}

ChannelMeta ChannelMeta::scalar(std::string units, bool writable, std::string description) {
  return {ValueKind::Scalar, 0, writable, std::move(units), std::move(description)};
}

ChannelMeta ChannelMeta::vector(std::size_t n, std::string units, bool writable,
                                std::string description) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "vector channel needs length >= 1");
  return {ValueKind::Vector, n, writable, std::move(units), std::move(description)};
}

ChannelMeta ChannelMeta::text(bool writable, std::string description) {
  return {ValueKind::Text, 0, writable, "", std::move(description)};
}

bool valid_channel_name(std::string_view name) noexcept {
  if (name.empty() || name.size() > 60) return false;
  for (char c : name) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == ':' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void require_channel_name(std::string_view name) {
  if (!valid_channel_name(name))
    throw Error(ErrorCode::BadName, "invalid channel name '" + std::string(name) + "'");
}

void check_shape(const ChannelMeta& meta, const Value& value) {
  switch (meta.kind) {
    case ValueKind::Scalar: {
      const auto* d = std::get_if<double>(&value);
      if (!d) throw Error(ErrorCode::ShapeMismatch, "expected scalar");
      if (!std::isfinite(*d)) throw Error(ErrorCode::ShapeMismatch, "non-finite value");
      return;
    }
    case ValueKind::Vector: {
      const auto* v = std::get_if<std::vector<double>>(&value);
      if (!v && meta.vector_length == 1 && std::holds_alternative<double>(value)) {
        if (!std::isfinite(std::get<double>(value)))
          throw Error(ErrorCode::ShapeMismatch, "non-finite value");
        return;
      }
      if (!v || v->size() != meta.vector_length)
        throw Error(ErrorCode::ShapeMismatch,
                    "expected vector of length " + std::to_string(meta.vector_length));
      for (double x : *v)
        if (!std::isfinite(x)) throw Error(ErrorCode::ShapeMismatch, "non-finite value");
      return;
    }
    case ValueKind::Text: {
      const auto* s = std::get_if<std::string>(&value);
      if (!s) throw Error(ErrorCode::ShapeMismatch, "expected text");
      if (s->find_first_of("\r\n") != std::string::npos)
        throw Error(ErrorCode::ShapeMismatch, "text may not contain line breaks");
      return;
    }
  }
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw Error(ErrorCode::InvalidArgument, "cannot format double");
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  if (!std::isfinite(x)) return std::nullopt;
  return x;
}

std::string format_value(const Value& value) {
  if (const auto* d = std::get_if<double>(&value)) return format_double(*d);
  if (const auto* v = std::get_if<std::vector<double>>(&value)) {
    std::string out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (i) out.push_back(' ');
      out += format_double((*v)[i]);
    }
    return out;
  }
  return std::get<std::string>(value);
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Value parse_value_for(const ChannelMeta& meta, std::string_view text) {
  if (meta.kind == ValueKind::Text) return std::string(text);
  const auto tokens = split_tokens(text);
  std::vector<double> values;
  values.reserve(tokens.size());
  for (auto tok : tokens) {
    auto d = parse_double(tok);
    if (!d) throw Error(ErrorCode::ShapeMismatch, "not a finite number: '" + std::string(tok) + "'");
    values.push_back(*d);
  }
  if (meta.kind == ValueKind::Scalar) {
    if (values.size() != 1) throw Error(ErrorCode::ShapeMismatch, "expected one value");
    return values.front();
  }
  if (values.size() != meta.vector_length)
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(meta.vector_length) +
                                              " values, got " + std::to_string(values.size()));
  return values;
}

Value parse_value_guess(std::string_view text) {
  const auto tokens = split_tokens(text);
  if (tokens.empty()) return std::string(text);
  std::vector<double> values;
  values.reserve(tokens.size());
  for (auto tok : tokens) {
    auto d = parse_double(tok);
    if (!d) return std::string(text);
    values.push_back(*d);
  }
  if (values.size() == 1) return values.front();
  return values;
}

bool glob_match(std::string_view pattern, std::string_view name) {
  if (pattern.empty()) return true;
  return ::fnmatch(std::string(pattern).c_str(), std::string(name).c_str(), 0) == 0;
}

double wall_clock_now() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace ringd
