#include <cmath>
#include <random>

#include "bus/bus.hpp"
#include "common/error.hpp"
#include "doctest.h"
#include "ring/config.hpp"
#include "ring/lattice.hpp"
#include "ring/ring_model.hpp"
#include "test_util.hpp"

using namespace ringd;
using namespace ringd::ring;
namespace ch = ringd::ring::channels;

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

struct Rig {
  explicit Rig(RingConfig c = RingConfig::quiet()) : bus([] { return 0.0; }), session(bus.session()), model(c, *session) {}
  bus::Bus bus;
  std::unique_ptr<bus::ChannelAccess> session;
  RingModel model;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\n[ring]\nn_bpm = 10\nnu_x = 5.3  # trailing\ntau_gas = inf\ncolocated = true\n");
  CHECK(c.n_bpm == 10);
  CHECK(c.nu_x == 5.3);
  CHECK(std::isinf(c.tau_gas));
  CHECK(c.colocated);
  CHECK(parse_config(format_config(c)).nu_x == 5.3);

  try {
    parse_config("n_bpm = 10\nbogus = 1\n");
    FAIL("expected Parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(e.line() == 2);
  }
  CHECK(code_of([] { parse_config("no equals sign"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_config("n_bpm = 1.5"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_config("dt = -1"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_config("topup_threshold = 151"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("closed-form current decay") {
  CHECK(decay_current(100.0, 2.0, 10.0, kInfinity) == doctest::Approx(100.0 * std::exp(-2.0 / 36000.0)).epsilon(1e-15));
  // Riccati solution against a fine RK4 integration
  const double i0 = 150, tau = 10, c = 1500, t_end = 3600;
  double i = i0;
  const double h = 0.5;
  auto f = [&](double x) { return -x * (1.0 / (tau * 3600) + x / (c * 3600)); };
  for (double t = 0; t < t_end; t += h) {
    const double k1 = f(i), k2 = f(i + h / 2 * k1), k3 = f(i + h / 2 * k2), k4 = f(i + h * k3);
    i += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK(rel(decay_current(i0, t_end, tau, c), i) < 1e-12);
  CHECK(instantaneous_lifetime(150, 10, 1500) == doctest::Approx(1.0 / (0.1 + 0.1)));
  CHECK(std::isinf(instantaneous_lifetime(150, kInfinity, kInfinity)));
}

TEST_CASE("pure exponential over 10^4 steps") {
  Rig rig;
  const double i0 = rig.model.state().current;
  for (int k = 0; k < 10000; ++k) rig.model.step();
  const double t = rig.model.state().t_sim;
  CHECK(t == 20000.0);
  CHECK(rel(rig.model.state().current, i0 * std::exp(-t / 36000.0)) < 1e-12);
  CHECK(rig.bus.get(ch::kCurrent).scalar() == rig.model.state().current);
  CHECK(rig.bus.get(ch::kCurrent).timestamp == t);
  CHECK(rig.bus.get(ch::kTrueLifetime).scalar() == doctest::Approx(10.0));
}

TEST_CASE("unperturbed orbit is zero and a unit kick gives column j of R") {
  Rig rig;
  rig.model.step();
  for (double x : rig.bus.get(ch::kBpmX).vector()) CHECK(x == 0.0);
  for (double y : rig.bus.get(ch::kBpmY).vector()) CHECK(y == 0.0);

  const auto& r = rig.model.response();
  for (std::size_t j : {0u, 17u, 71u}) {
    std::vector<double> kicks(72, 0.0);
    kicks[j] = 1.0;
    rig.bus.put(ch::kCorX, TimedValue(kicks));
    rig.model.step();
    CHECK(rig.bus.get(ch::kBpmX).vector() == r.r_x.column(j));
  }
}

TEST_CASE("orbit linearity and self-consistency with derive_response") {
  Rig rig;
  std::mt19937_64 rng(9);
  const auto t1 = test::random_vector(72, rng, 0.1), t2 = test::random_vector(72, rng, 0.1);
  auto orbit_for = [&](const std::vector<double>& kicks) {
    rig.bus.put(ch::kCorX, TimedValue(kicks));
    rig.model.step();
    return rig.bus.get(ch::kBpmX).vector();
  };
  std::vector<double> sum(72);
  for (int i = 0; i < 72; ++i) sum[i] = t1[i] + t2[i];
  const auto x0 = orbit_for(std::vector<double>(72, 0.0));
  const auto x1 = orbit_for(t1), x2 = orbit_for(t2), x12 = orbit_for(sum);
  const auto expected = rig.model.response().r_x * t1;
  for (int i = 0; i < 72; ++i) {
    CHECK(std::abs(x12[i] - (x1[i] + x2[i] - x0[i])) <= 1e-12 * (1 + std::abs(x12[i])));
    CHECK(std::abs(x1[i] - expected[i]) <= 1e-12);
  }
}

TEST_CASE("frequency response equals -eta df / (f0 alpha_c)") {
  Rig rig;
  rig.bus.put(ch::kRfDeltaF, TimedValue(30.0));
  rig.model.step();
  const auto x = rig.bus.get(ch::kBpmX).vector();
  const auto& m = rig.model.response();
  const auto col = m.frequency_column();
  for (int i = 0; i < 72; ++i) {
    const double expected = -1000.0 * m.eta[i] * 30.0 / (m.f0 * m.alpha_c);
    CHECK(std::abs(x[i] - expected) <= 1e-12 * std::abs(expected));
    CHECK(col[i] * 30.0 == doctest::Approx(expected).epsilon(1e-14));
    CHECK(m.eta[i] > 0);
  }
  CHECK(m.extended_x().cols() == 73);
}

TEST_CASE("response is symmetric for a co-located uniform lattice") {
  auto c = RingConfig::quiet();
  c.colocated = true;
  c.uniform_beta = true;
  const auto m = derive_response(c);
  REQUIRE(m.r_x.rows() == m.r_x.cols());
  CHECK(linalg::max_abs(m.r_x - m.r_x.transpose()) <= 1e-14 * linalg::max_abs(m.r_x));
  CHECK(linalg::max_abs(m.r_y - m.r_y.transpose()) <= 1e-14 * linalg::max_abs(m.r_y));
}

TEST_CASE("closed-orbit element formula") {
  const double nu = 20.43;
  const double e = closed_orbit_element(4.0, 9.0, 1.0, 0.5, nu);
  CHECK(e == doctest::Approx(6.0 * std::cos(M_PI * nu - 0.5) / (2 * std::sin(M_PI * nu))).epsilon(1e-15));
}

TEST_CASE("integer and half-integer tunes are rejected") {
  auto c = RingConfig::quiet();
  c.nu_x = 20.0;
  CHECK(code_of([&] { derive_response(c); }) == ErrorCode::DegenerateTune);
  c.nu_x = 20.43;
  c.nu_y = 9.0;
  CHECK(code_of([&] { derive_response(c); }) == ErrorCode::DegenerateTune);
}

TEST_CASE("the default lattice response is well conditioned") {
  const auto m = derive_response(RingConfig{});
  const auto sx = linalg::svd(m.r_x), sy = linalg::svd(m.r_y);
  CHECK(sx.w.front() / sx.w.back() < 1e4);
  CHECK(sy.w.front() / sy.w.back() < 1e4);
}

TEST_CASE("injection") {
  Rig rig;
  auto& m = rig.model;
  m.step();
  const double before = m.state().current;
  CHECK(m.inject(0.0) == before);
  CHECK(m.inject(0.2) == before + 0.2);
  CHECK(rig.bus.get(ch::kCurrent).scalar() == before + 0.2);
  CHECK(code_of([&] { m.inject(-1.0); }) == ErrorCode::NegativeInjection);

  auto c = RingConfig::quiet();
  c.initial_current = 149.8;
  Rig r2(c);
  CHECK(r2.model.inject(0.2) == doctest::Approx(150.0).epsilon(1e-15));
}

TEST_CASE("top-up keeps the current within the band") {
  auto c = RingConfig::quiet();
  c.tau_gas = 2.0;
  Rig rig(c);
  rig.model.set_top_up(true, 149.9, 150.0);
  double lo = 1e9, hi = 0;
  int refills = 0;
  double prev = rig.model.state().current;
  for (int k = 0; k < 1000; ++k) {
    rig.model.step();
    const double i = rig.model.state().current;
    lo = std::min(lo, i);
    hi = std::max(hi, i);
    if (i > prev) ++refills;
    prev = i;
  }
  CHECK(lo >= 149.9);
  CHECK(hi <= 150.0);
  CHECK(refills > 10);

  CHECK(code_of([&] { rig.model.set_top_up(true, 150.0, 150.0); }) == ErrorCode::BadThreshold);
  rig.model.set_top_up(false, 0, 1);
  rig.model.step();
  const double a = rig.model.state().current;
  for (int k = 0; k < 200; ++k) rig.model.step();
  CHECK(rig.model.state().current < a);
  CHECK(rig.model.state().current < 149.9);
}

TEST_CASE("identical seed and puts give bit-identical publications") {
  RingConfig c;  // noise, drift and walk enabled
  auto run = [&] {
    Rig rig(c);
    std::vector<double> all;
    for (int k = 0; k < 50; ++k) {
      if (k == 20) rig.bus.put(ch::kRfDeltaF, TimedValue(10.0));
      rig.model.step();
      const auto x = rig.bus.get(ch::kBpmX).vector();
      all.insert(all.end(), x.begin(), x.end());
      all.push_back(rig.bus.get(ch::kCurrent).scalar());
    }
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("tunes follow the quadrupole setpoints through G") {
  Rig rig;
  const auto& mag = rig.model.magnets();
  auto quad = mag.i_quad_nom;
  quad[3] += 2.0;
  rig.bus.put(ch::kQuad, TimedValue(quad));
  rig.model.step();
  CHECK(rig.bus.get(ch::kTuneX).scalar() == doctest::Approx(20.43 + 2.0 * mag.g_tune(0, 3)).epsilon(1e-14));
  CHECK(rig.bus.get(ch::kTuneY).scalar() == doctest::Approx(8.74 + 2.0 * mag.g_tune(1, 3)).epsilon(1e-14));
}
