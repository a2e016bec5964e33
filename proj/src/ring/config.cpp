#include "ring/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/value.hpp"

namespace ringd::ring {

RingConfig RingConfig::quiet() {
  RingConfig c;
  c.c_touschek = kInfinity;
  c.bpm_noise_rms = 0.0;
  c.static_orbit_rms = 0.0;
  c.drift_amplitude = 0.0;
  c.walk_rms = 0.0;
  c.energy_drift = 0.0;
  return c;
}

void validate(const RingConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "ring config: " + what); };
  if (c.n_bpm < 1 || c.n_corr < 1 || c.n_quad < 1 || c.n_sext < 1 || c.n_bend < 1) fail("counts must be >= 1");
  if (!(c.f0 > 0)) fail("f0 must be > 0");
  if (c.alpha_c == 0 || !std::isfinite(c.alpha_c)) fail("alpha_c must be non-zero");
  if (!(c.tau_gas > 0)) fail("tau_gas must be > 0");
  if (!(c.c_touschek > 0)) fail("c_touschek must be > 0");
  if (c.initial_current < 0) fail("initial_current must be >= 0");
  if (c.bpm_noise_rms < 0 || c.static_orbit_rms < 0 || c.drift_amplitude < 0 || c.walk_rms < 0)
    fail("noise and drift amplitudes must be >= 0");
  if (!(c.drift_period > 0)) fail("drift_period must be > 0");
  if (!(c.dt > 0)) fail("dt must be > 0");
  if (!(c.speedup > 0)) fail("speedup must be > 0");
  if (c.topup_threshold >= c.topup_refill) fail("topup_threshold must be below topup_refill");
}

namespace {

using Setter = std::function<void(RingConfig&, std::string_view)>;

double to_double(std::string_view key, std::string_view v) {
  if (v == "inf" || v == "infinity") return kInfinity;
  auto d = parse_double(v);
  if (!d) throw Error(ErrorCode::InvalidArgument, "ring config: bad number for " + std::string(key));
  return *d;
}

std::size_t to_count(std::string_view key, std::string_view v) {
  const double d = to_double(key, v);
  if (d < 0 || d != std::floor(d) || !std::isfinite(d))
    throw Error(ErrorCode::InvalidArgument, "ring config: bad count for " + std::string(key));
  return static_cast<std::size_t>(d);
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidArgument, "ring config: bad flag for " + std::string(key));
}

const std::map<std::string, Setter, std::less<>>& setters() {
#define RINGD_DOUBLE(field) {#field, [](RingConfig& c, std::string_view v) { c.field = to_double(#field, v); }}
#define RINGD_COUNT(field) {#field, [](RingConfig& c, std::string_view v) { c.field = to_count(#field, v); }}
#define RINGD_BOOL(field) {#field, [](RingConfig& c, std::string_view v) { c.field = to_bool(#field, v); }}
  static const std::map<std::string, Setter, std::less<>> table{
      RINGD_COUNT(n_bpm), RINGD_COUNT(n_corr), RINGD_COUNT(n_quad), RINGD_COUNT(n_sext),
      RINGD_COUNT(n_bend), RINGD_DOUBLE(f0), RINGD_DOUBLE(alpha_c), RINGD_DOUBLE(nu_x),
      RINGD_DOUBLE(nu_y), RINGD_DOUBLE(xi_x), RINGD_DOUBLE(xi_y), RINGD_DOUBLE(initial_current),
      RINGD_DOUBLE(tau_gas), RINGD_DOUBLE(c_touschek), RINGD_DOUBLE(bpm_noise_rms),
      RINGD_DOUBLE(static_orbit_rms), RINGD_DOUBLE(drift_amplitude), RINGD_DOUBLE(drift_period),
      RINGD_DOUBLE(walk_rms), RINGD_DOUBLE(energy_drift), RINGD_BOOL(colocated),
      RINGD_BOOL(uniform_beta), RINGD_BOOL(topup_enabled), RINGD_DOUBLE(topup_threshold),
      RINGD_DOUBLE(topup_refill), RINGD_DOUBLE(dt), RINGD_DOUBLE(speedup),
      {"seed", [](RingConfig& c, std::string_view v) { c.seed = to_count("seed", v); }},
  };
#undef RINGD_DOUBLE
#undef RINGD_COUNT
#undef RINGD_BOOL
  return table;
}

}  // namespace

RingConfig parse_config(std::string_view text) {
  RingConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Parse, "ring config line " + std::to_string(line_no) + ": expected key = value",
                  static_cast<int>(line_no));
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    auto it = setters().find(key);
    if (it == setters().end())
      throw Error(ErrorCode::Parse, "ring config line " + std::to_string(line_no) + ": unknown key '" +
                                        std::string(key) + "'",
                  static_cast<int>(line_no));
    it->second(config, value);
  }
  validate(config);
  return config;
}

RingConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open ring config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RingConfig& c) {
  auto num = [](double x) { return std::isinf(x) ? std::string("inf") : format_double(x); };
  std::ostringstream out;
  out << "n_bpm = " << c.n_bpm << "\nn_corr = " << c.n_corr << "\nn_quad = " << c.n_quad
      << "\nn_sext = " << c.n_sext << "\nn_bend = " << c.n_bend << "\nf0 = " << num(c.f0)
      << "\nalpha_c = " << num(c.alpha_c) << "\nnu_x = " << num(c.nu_x) << "\nnu_y = " << num(c.nu_y)
      << "\nxi_x = " << num(c.xi_x) << "\nxi_y = " << num(c.xi_y)
      << "\ninitial_current = " << num(c.initial_current) << "\ntau_gas = " << num(c.tau_gas)
      << "\nc_touschek = " << num(c.c_touschek) << "\nbpm_noise_rms = " << num(c.bpm_noise_rms)
      << "\nstatic_orbit_rms = " << num(c.static_orbit_rms)
      << "\ndrift_amplitude = " << num(c.drift_amplitude) << "\ndrift_period = " << num(c.drift_period)
      << "\nwalk_rms = " << num(c.walk_rms) << "\nenergy_drift = " << num(c.energy_drift)
      << "\ncolocated = " << (c.colocated ? "true" : "false")
      << "\nuniform_beta = " << (c.uniform_beta ? "true" : "false")
      << "\ntopup_enabled = " << (c.topup_enabled ? "true" : "false")
      << "\ntopup_threshold = " << num(c.topup_threshold) << "\ntopup_refill = " << num(c.topup_refill)
      << "\ndt = " << num(c.dt) << "\nspeedup = " << num(c.speedup) << "\nseed = " << c.seed << "\n";
  return out.str();
}

}  // namespace ringd::ring
