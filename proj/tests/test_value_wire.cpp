#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "bus/wire.hpp"
#include "common/error.hpp"
#include "common/value.hpp"
#include "doctest.h"

using namespace ringd;
namespace wire = ringd::bus::wire;

namespace {

double random_bits_double(std::mt19937_64& rng) {
  for (;;) {
    const double x = std::bit_cast<double>(rng());
    if (std::isfinite(x)) return x;
  }
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("shortest decimal round-trips every finite double bit-exactly") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100000; ++i) {
    const double x = random_bits_double(rng);
    const auto back = parse_double(format_double(x));
    REQUIRE(back.has_value());
    CHECK(std::bit_cast<std::uint64_t>(*back) == std::bit_cast<std::uint64_t>(x));
  }
  for (double x : {0.0, -0.0, 5e-324, std::numeric_limits<double>::max(), -std::numeric_limits<double>::min(),
                   0.1, 1.0 / 3.0}) {
    CHECK(std::bit_cast<std::uint64_t>(*parse_double(format_double(x))) == std::bit_cast<std::uint64_t>(x));
  }
  CHECK(format_double(150.0) == "150");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("parse_double rejects junk and non-finite tokens") {
  CHECK_FALSE(parse_double("").has_value());
  CHECK_FALSE(parse_double("abc").has_value());
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("inf").has_value());
  CHECK_FALSE(parse_double("nan").has_value());
  CHECK(*parse_double("+2.5") == 2.5);
  CHECK(*parse_double("-1e-3") == -1e-3);
}

TEST_CASE("channel names") {
  CHECK(valid_channel_name("ARIDI-BEAM:CURRENT"));
  CHECK(valid_channel_name("OFB-DF"));
  CHECK(valid_channel_name("a_b:9"));
  CHECK_FALSE(valid_channel_name(""));
  CHECK_FALSE(valid_channel_name("has space"));
  CHECK_FALSE(valid_channel_name("star*"));
  CHECK_FALSE(valid_channel_name(std::string(61, 'A')));
  CHECK(valid_channel_name(std::string(60, 'A')));
  CHECK(code_of([] { require_channel_name("bad name"); }) == ErrorCode::BadName);
}

TEST_CASE("values are parsed against the channel shape") {
  const auto scalar = ChannelMeta::scalar("mA");
  const auto vec3 = ChannelMeta::vector(3, "mm");
  const auto text = ChannelMeta::text();

  CHECK(std::get<double>(parse_value_for(scalar, "150")) == 150.0);
  CHECK(std::get<std::vector<double>>(parse_value_for(vec3, "1 2  3")) == std::vector<double>{1, 2, 3});
  CHECK(std::get<std::string>(parse_value_for(text, "nominal 2024")) == "nominal 2024");

  CHECK(code_of([&] { parse_value_for(scalar, "1 2"); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { parse_value_for(vec3, "1 2"); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { parse_value_for(scalar, "x"); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { check_shape(scalar, std::vector<double>{1, 2}); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { check_shape(scalar, std::nan("")); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { check_shape(vec3, std::vector<double>{1, INFINITY, 3}); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("value guessing without a shape") {
  CHECK(std::get<double>(parse_value_guess("2.5")) == 2.5);
  CHECK(std::get<std::vector<double>>(parse_value_guess("1 2")) == std::vector<double>{1, 2});
  CHECK(std::get<std::string>(parse_value_guess("ACTIVE")) == "ACTIVE");
  CHECK(std::get<std::string>(parse_value_guess("1 two")) == "1 two");
}

TEST_CASE("scalar and length-1 vector read interchangeably") {
  TimedValue s(3.0);
  TimedValue v(std::vector<double>{3.0});
  CHECK(s.vector() == std::vector<double>{3.0});
  CHECK(v.scalar() == 3.0);
  CHECK_THROWS(TimedValue(std::vector<double>{1, 2}).scalar());
  CHECK_THROWS(TimedValue(std::string("x")).scalar());
}

TEST_CASE("glob matching") {
  CHECK(glob_match("OPTICS:*", "OPTICS:D-NU-X"));
  CHECK_FALSE(glob_match("OPTICS:*", "OFB-DF"));
  CHECK(glob_match("OFB-?RMS", "OFB-XRMS"));
  CHECK(glob_match("", "anything"));
  CHECK(glob_match("*", "anything"));
  CHECK(glob_match("A*B*C", "AxxBxxC"));
  CHECK_FALSE(glob_match("A*B*C", "AxxBxx"));
}

TEST_CASE("wire frames round trip") {
  TimedValue v(std::vector<double>{0.1, -2.5e-300, 7}, 1700000000.123456, Status::Invalid);
  const auto frame = wire::value_frame("VAL", "ARIDI-BPM:X", v);
  CHECK(frame == "VAL ARIDI-BPM:X 1700000000.123456 !INVALID 0.1 -2.5e-300 7\n");
  const auto parsed = wire::parse_server_frame(std::string_view(frame).substr(0, frame.size() - 1));
  CHECK(parsed.verb == "VAL");
  CHECK(parsed.name == "ARIDI-BPM:X");
  CHECK(parsed.value == v);

  const auto ev = wire::parse_server_frame("EV OFB-XRMS 12 0.5");
  CHECK(ev.verb == "EV");
  CHECK(ev.value.scalar() == 0.5);
  CHECK(ev.value.ok());

  CHECK(wire::error_frame("nosuch", ErrorCode::UnknownChannel) == "ERR nosuch unknown-channel\n");
  const auto err = wire::parse_server_frame("ERR nosuch unknown-channel");
  CHECK(wire::error_from_token(err.reason) == ErrorCode::UnknownChannel);
  CHECK(wire::error_from_token("no-such-token") == ErrorCode::Protocol);
  CHECK(wire::parse_server_frame("CHANNELS 4").count == 4);
  CHECK(wire::parse_server_frame("OK adopted").reason == "adopted");
  CHECK_THROWS_AS(wire::parse_server_frame("HELLO"), Error);
  CHECK_THROWS_AS(wire::parse_server_frame("VAL x notanumber 1"), Error);
}

TEST_CASE("put requests carry timestamp and status") {
  TimedValue v(2.0, 5.5, Status::Invalid);
  const auto line = wire::put_request("X", v);
  CHECK(line == "PUT X @5.5 !INVALID 2\n");
  const auto args = wire::parse_put_args("@5.5 !INVALID 2");
  CHECK(args.timestamp == 5.5);
  CHECK(args.status == Status::Invalid);
  CHECK(args.value_text == "2");

  const auto plain = wire::parse_put_args("1 2 3");
  CHECK(plain.timestamp < 0);
  CHECK(plain.status == Status::Ok);
  CHECK(plain.value_text == "1 2 3");
  CHECK_THROWS_AS(wire::parse_put_args("@-1 3"), Error);
}

TEST_CASE("define requests") {
  const auto line = wire::define_request("OFB:SV", ChannelMeta::vector(73, "", false));
  CHECK(line == "DEF OFB:SV vector 73 ro\n");
  std::string_view rest = std::string_view(line).substr(4 + 7, line.size() - 12);
  const auto meta = wire::parse_define_args(rest);
  CHECK(meta.kind == ValueKind::Vector);
  CHECK(meta.vector_length == 73);
  CHECK_FALSE(meta.writable);
  const auto scalar = wire::parse_define_args("scalar 0 rw mA");
  CHECK(scalar.units == "mA");
  CHECK(scalar.writable);
  CHECK_THROWS_AS(wire::parse_define_args("matrix 0 rw"), Error);
  CHECK_THROWS_AS(wire::parse_define_args("scalar 0 maybe"), Error);
}

TEST_CASE("error tokens are distinct and invertible") {
  for (int c = 0; c <= static_cast<int>(ErrorCode::InvalidArgument); ++c) {
    const auto code = static_cast<ErrorCode>(c);
    CHECK(wire::error_from_token(error_token(code)) == code);
    CHECK(std::strchr(error_token(code), ' ') == nullptr);
  }
}
