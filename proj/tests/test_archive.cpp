#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "archive/archive.hpp"
#include "bus/bus.hpp"
#include "common/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ringd;
using namespace ringd::archive;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

bool bit_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<double>(&a)) return std::bit_cast<std::uint64_t>(*x) == std::bit_cast<std::uint64_t>(std::get<double>(b));
  if (auto* v = std::get_if<std::vector<double>>(&a)) {
    const auto& w = std::get<std::vector<double>>(b);
    if (v->size() != w.size()) return false;
    for (std::size_t i = 0; i < v->size(); ++i)
      if (std::bit_cast<std::uint64_t>((*v)[i]) != std::bit_cast<std::uint64_t>(w[i])) return false;
    return true;
  }
  return std::get<std::string>(a) == std::get<std::string>(b);
}

void append_lines(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::app);
  for (const auto& r : records) out << format_record(r) << '\n';
}

}  // namespace

TEST_CASE("record lines round trip, including text that looks numeric") {
  const std::vector<Record> cases{
      {1.5, "OFB-DF", 20.0, Status::Ok},
      {2.0, "ARIDI-BPM:X", std::vector<double>{0.1, -3e-300, 7}, Status::Ok},
      {3.0, "OPTICS:NAME", std::string("low \"beta\" \\ 2"), Status::Ok},
      {4.0, "OPTICS:NAME", std::string("123"), Status::Ok},
      {5.0, "LIFETIME:EXPFIT", 9.5, Status::Invalid},
  };
  for (const auto& r : cases) {
    const auto line = format_record(r);
    const auto back = parse_record(line);
    CHECK(back.t == r.t);
    CHECK(back.name == r.name);
    CHECK(back.status == r.status);
    CHECK(bit_equal(back.value, r.value));
  }
  CHECK(format_record(cases[0]) == "A 1.5 OFB-DF 20");
  CHECK(format_record(cases[4]) == "A 5 LIFETIME:EXPFIT !INVALID 9.5");
  CHECK(code_of([] { parse_record("B 1 X 2"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_record("A x X 2"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_record("A 1 X \"unterminated"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_record("A 1"); }) == ErrorCode::Parse);
}

TEST_CASE("policy parsing") {
  const auto p = Policy::parse("# comment\nOFB-* on-change\nARIDI-BEAM:CURRENT periodic 2\n\n");
  REQUIRE(p.rules.size() == 2);
  CHECK(p.rules[1].mode == PolicyRule::Mode::Periodic);
  CHECK(p.rules[1].dt == 2.0);
  try {
    Policy::parse("A on-change\nB sometimes\n");
    FAIL("expected Parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(e.line() == 2);
  }
  CHECK(code_of([] { Policy::parse("B periodic 0"); }) == ErrorCode::Parse);
}

TEST_CASE("query is inclusive, sorted, and reports corrupt lines") {
  test::TempDir dir;
  const auto store = dir.file("store");
  append_lines(store, {{3.0, "X", 3.0}, {1.0, "X", 1.0}, {2.0, "Y", 9.0}, {2.0, "X", 2.0}});
  {
    std::ofstream out(store, std::ios::app);
    out << "garbage line\n";
  }
  append_lines(store, {{5.0, "X", 5.0}, {4.0, "X", 4.0}});

  const auto all = query(store, "X", -INFINITY, INFINITY);
  REQUIRE(all.records.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(all.records[i].t == static_cast<double>(i + 1));
  REQUIRE(all.corrupt.size() == 1);
  CHECK(all.corrupt[0].rfind("byte ", 0) == 0);

  const auto window = query(store, "X", 2.0, 4.0);
  REQUIRE(window.records.size() == 3);
  CHECK(window.records.front().t == 2.0);
  CHECK(window.records.back().t == 4.0);

  CHECK(query(store, "X", 10.0, 20.0).records.empty());
  CHECK(code_of([&] { query(store, "NOPE", 0, 1); }) == ErrorCode::UnknownChannel);
  CHECK(code_of([&] { query(store, "X", 2, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { query(dir.file("missing"), "X", 0, 1); }) == ErrorCode::Io);
}

TEST_CASE("a torn final line is skipped") {
  test::TempDir dir;
  const auto store = dir.file("store");
  append_lines(store, {{1.0, "X", 1.0}});
  std::ofstream(store, std::ios::app) << "A 2 X";
  const auto r = query(store, "X", 0, 10);
  CHECK(r.records.size() == 1);
  CHECK(r.corrupt.size() == 1);
}

TEST_CASE("CSV export") {
  std::vector<Record> scalars{{1.0, "OFB-DF", 10.0}, {2.5, "OFB-DF", 0.1}};
  CHECK(format_csv(scalars, "OFB-DF") == "t,OFB-DF\n1,10\n2.5,0.1\n");
  std::vector<Record> vecs{{1.0, "V", std::vector<double>{1, 2, 3}}};
  CHECK(format_csv(vecs, "V") == "t,V[0],V[1],V[2]\n1,1,2,3\n");
  CHECK(format_csv({}, "V") == "t,V\n");
  CHECK(code_of([] { format_csv({}, "V", false); }) == ErrorCode::InvalidArgument);
  std::vector<Record> mixed{{1.0, "V", std::vector<double>{1, 2}}, {2.0, "V", 1.0}};
  CHECK(code_of([&] { format_csv(mixed, "V"); }) == ErrorCode::ShapeMismatch);
  std::vector<Record> text{{1.0, "N", std::string("a,\"b\"")}};
  CHECK(format_csv(text, "N") == "t,N\n1,\"a,\"\"b\"\"\"\n");

  test::TempDir dir;
  export_csv(scalars, "OFB-DF", dir.file("out.csv"));
  std::ifstream in(dir.file("out.csv"));
  std::string content((std::istreambuf_iterator<char>(in)), {});
  CHECK(content == "t,OFB-DF\n1,10\n2.5,0.1\n");
}

TEST_CASE("recorder: on-change gives one record per put plus the initial value") {
  test::TempDir dir;
  bus::Bus b;
  b.create_channel("OFB-DF", ChannelMeta::scalar("Hz"), TimedValue(0.0, 1.0));
  b.create_channel("OTHER", ChannelMeta::scalar(""), TimedValue(0.0, 1.0));
  auto access = b.session();
  Recorder rec(*access, Policy::on_change({"OFB-*"}), dir.file("store"), 0.05);
  rec.start();
  for (int k = 1; k <= 3; ++k) b.put("OFB-DF", TimedValue(10.0 * k, 1.0 + k));
  b.put("OTHER", TimedValue(5.0));
  b.drain();
  rec.stop();
  CHECK(rec.channels() == std::vector<std::string>{"OFB-DF"});
  CHECK(rec.records_written() == 4);
  const auto r = query(dir.file("store"), "OFB-DF", 0, 100);
  REQUIRE(r.records.size() == 4);
  CHECK(r.records.back().value == Value(30.0));
  CHECK_FALSE(rec.failed());
}

TEST_CASE("recorder: a glob matching nothing leaves an empty valid store") {
  test::TempDir dir;
  bus::Bus b;
  auto access = b.session();
  Recorder rec(*access, Policy::on_change({"NOTHING:*"}), dir.file("store"));
  rec.start();
  rec.stop();
  CHECK(rec.records_written() == 0);
  CHECK(std::filesystem::exists(dir.file("store")));
  CHECK(code_of([&] { query(dir.file("store"), "X", 0, 1); }) == ErrorCode::UnknownChannel);
}

TEST_CASE("recorder: periodic sampling") {
  test::TempDir dir;
  bus::Bus b;
  b.create_channel("ARIDI-BEAM:CURRENT", ChannelMeta::scalar("mA"), TimedValue(150.0));
  auto access = b.session();
  Recorder rec(*access, Policy::parse("ARIDI-BEAM:CURRENT periodic 0.1\n"), dir.file("store"), 0.05);
  rec.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(1000));
  rec.stop();
  const auto n = query(dir.file("store"), "ARIDI-BEAM:CURRENT", -INFINITY, INFINITY).records.size();
  CHECK(n >= 9);
  CHECK(n <= 11);
}

TEST_CASE("recorder: the store is flushed while running") {
  test::TempDir dir;
  bus::Bus b;
  b.create_channel("A", ChannelMeta::scalar(""), TimedValue(1.0));
  auto access = b.session();
  Recorder rec(*access, Policy::on_change({"A"}), dir.file("store"), 0.05);
  rec.start();
  b.put("A", TimedValue(2.0));
  b.drain();
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  CHECK(query(dir.file("store"), "A", -INFINITY, INFINITY).records.size() == 2);
  rec.stop();
}

TEST_CASE("recorder: an unwritable store fails cleanly") {
  bus::Bus b;
  b.create_channel("A", ChannelMeta::scalar(""), TimedValue(1.0));
  auto access = b.session();
  Recorder rec(*access, Policy::on_change({"A"}), "/nonexistent-dir/store");
  CHECK(code_of([&] { rec.start(); }) == ErrorCode::Io);
}

TEST_CASE("10,000 records survive record, query and CSV losslessly") {
  test::TempDir dir;
  bus::Bus b;
  b.create_channel("S", ChannelMeta::scalar(""), TimedValue(0.0, 0.0));
  b.create_channel("V", ChannelMeta::vector(4, ""), TimedValue(std::vector<double>(4, 0.0), 0.0));
  auto access = b.session();
  Recorder rec(*access, Policy::on_change({"S", "V"}), dir.file("store"));
  rec.start();
  std::mt19937_64 rng(31);
  std::vector<double> sent{0.0};
  std::vector<std::vector<double>> sent_v{std::vector<double>(4, 0.0)};
  auto rnd = [&] {
    for (;;) {
      const double x = std::bit_cast<double>(rng());
      if (std::isfinite(x)) return x;
    }
  };
  for (int k = 1; k < 9000; ++k) {
    sent.push_back(rnd());
    b.put("S", TimedValue(sent.back(), k * 0.5));
  }
  for (int k = 1; k < 1000; ++k) {
    sent_v.push_back({rnd(), rnd(), rnd(), rnd()});
    b.put("V", TimedValue(sent_v.back(), k * 0.5));
  }
  b.drain();
  rec.stop();
  CHECK(rec.records_written() == 10000);

  const auto s = query(dir.file("store"), "S", -INFINITY, INFINITY);
  REQUIRE(s.records.size() == sent.size());
  for (std::size_t k = 0; k < sent.size(); ++k) REQUIRE(bit_equal(s.records[k].value, sent[k]));
  const auto v = query(dir.file("store"), "V", -INFINITY, INFINITY);
  REQUIRE(v.records.size() == sent_v.size());
  for (std::size_t k = 0; k < sent_v.size(); ++k) REQUIRE(bit_equal(v.records[k].value, sent_v[k]));

  // CSV cells parse back to the same bits
  const auto csv = format_csv(s.records, "S");
  std::size_t pos = csv.find('\n') + 1, row = 0;
  while (pos < csv.size()) {
    const auto end = csv.find('\n', pos);
    const auto line = csv.substr(pos, end - pos);
    const auto comma = line.find(',');
    REQUIRE(parse_double(line.substr(0, comma)) == s.records[row].t);
    REQUIRE(std::bit_cast<std::uint64_t>(*parse_double(line.substr(comma + 1))) ==
            std::bit_cast<std::uint64_t>(sent[row]));
    ++row;
    pos = end + 1;
  }
  CHECK(row == sent.size());
}
