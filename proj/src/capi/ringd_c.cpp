#include "ringd/ringd.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <memory>
#include <string>
#include <variant>

#include "archive/archive.hpp"
#include "bus/client.hpp"
#include "bus/supervisor.hpp"
#include "common/error.hpp"
#include "lifetime/service.hpp"
#include "ofb/feedback.hpp"
#include "ofb/response_file.hpp"
#include "optics/optics.hpp"
#include "optics/service.hpp"
#include "optics/snapshot.hpp"
#include "ring/machine.hpp"

using namespace ringd;

struct ringd_value {
  TimedValue value;
  std::vector<double> data;
  std::string text;

  explicit ringd_value(TimedValue v) : value(std::move(v)) {
    if (const auto* d = std::get_if<double>(&value.value)) data = {*d};
    else if (const auto* vec = std::get_if<std::vector<double>>(&value.value)) data = *vec;
    text = format_value(value.value);
  }
};

struct ringd_client {
  std::unique_ptr<bus::WireClient> client;
};

struct ringd_monitor {
  bus::Subscription subscription;
};

struct ringd_service {
  std::unique_ptr<ring::Machine> machine;
  std::unique_ptr<bus::Supervisor> supervisor;
};

namespace {

thread_local std::string g_last_error;

int code_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownChannel: return RINGD_E_UNKNOWN_CHANNEL;
    case ErrorCode::ShapeMismatch: return RINGD_E_SHAPE_MISMATCH;
    case ErrorCode::ReadOnly: return RINGD_E_READ_ONLY;
    case ErrorCode::Parse: return RINGD_E_PARSE;
    case ErrorCode::Connection: return RINGD_E_CONNECTION;
    case ErrorCode::Protocol: return RINGD_E_PROTOCOL;
    case ErrorCode::Io: return RINGD_E_IO;
    case ErrorCode::InvalidArgument: return RINGD_E_INVALID_ARGUMENT;
    case ErrorCode::DuplicateName: return RINGD_E_DUPLICATE_NAME;
    case ErrorCode::BadName: return RINGD_E_BAD_NAME;
    case ErrorCode::BindFailure: return RINGD_E_BIND;
    case ErrorCode::InsufficientData: return RINGD_E_INSUFFICIENT_DATA;
    case ErrorCode::NonPositiveCurrent: return RINGD_E_NON_POSITIVE_CURRENT;
    case ErrorCode::NegativeInjection: return RINGD_E_NEGATIVE_INJECTION;
    case ErrorCode::BadThreshold: return RINGD_E_BAD_THRESHOLD;
    case ErrorCode::DegenerateTune: return RINGD_E_DEGENERATE_TUNE;
    case ErrorCode::SingularFit: return RINGD_E_SINGULAR_FIT;
    case ErrorCode::RankDeficient: return RINGD_E_RANK_DEFICIENT;
    case ErrorCode::ConvergenceFailure: return RINGD_E_CONVERGENCE;
    case ErrorCode::AllDisabled: return RINGD_E_ALL_DISABLED;
    case ErrorCode::BadTransition: return RINGD_E_BAD_TRANSITION;
    case ErrorCode::BadMask: return RINGD_E_BAD_MASK;
  }
  return RINGD_E_INTERNAL;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
int guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RINGD_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return RINGD_E_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

bus::Endpoint endpoint_of(const char* address) { return bus::resolve_endpoint(address ? address : ""); }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

ring::RingConfig config_from(const char* path, const char* overrides = nullptr) {
  std::string text;
  if (path && *path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, std::string("cannot open config '") + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (overrides && *overrides) text.append("\n").append(overrides);
  return text.empty() ? ring::RingConfig{} : ring::parse_config(text);
}

optics::AdjustmentParams to_params(const ringd_optics_params& p) {
  return {p.d_nu_x, p.d_nu_y, p.d_xi_x, p.d_xi_y, p.s_sext, p.s_energy};
}

ringd_optics_params from_params(const optics::AdjustmentParams& p) {
  return {p.d_nu_x, p.d_nu_y, p.d_xi_x, p.d_xi_y, p.s_sext, p.s_energy};
}

// Both feedback planes behind one lifecycle.
class FeedbackPair final : public bus::Service {
 public:
  FeedbackPair(bus::ChannelAccess& access, const ring::ResponseModel& model, const ringd_ofb_options& o) {
    ofb::FeedbackSettings s;
    s.period = o.period;
    s.f_step = o.f_step;
    s.gain = o.gain;
    s.mode = o.mode == RINGD_OFB_ACTIVE ? ofb::Mode::Active
             : o.mode == RINGD_OFB_PASSIVE ? ofb::Mode::Passive
                                           : ofb::Mode::Stopped;
    planes_.push_back(std::make_unique<ofb::FeedbackService>(access, model, ofb::PlaneChannels::horizontal(), s));
    if (o.vertical) {
      s.mode = ofb::Mode::Stopped;
      planes_.push_back(std::make_unique<ofb::FeedbackService>(access, model, ofb::PlaneChannels::vertical(), s));
    }
  }
  void start() override {
    for (auto& p : planes_) p->start();
  }
  void stop() override {
    for (auto& p : planes_) p->stop();
  }

 private:
  std::vector<std::unique_ptr<ofb::FeedbackService>> planes_;
};

int start_supervised(const char* address, bus::Supervisor::Factory factory, ringd_service** out) {
  return guard([&] {
    require(out, "out");
    auto s = std::make_unique<ringd_service>();
    s->supervisor = std::make_unique<bus::Supervisor>(endpoint_of(address), std::move(factory));
    *out = s.release();
  });
}

}  // namespace

extern "C" {

const char* ringd_status_name(int status) {
  switch (status) {
    case RINGD_OK: return "ok";
    case RINGD_E_INTERNAL: return "internal";
    case RINGD_E_UNKNOWN_CHANNEL: return "unknown-channel";
    case RINGD_E_SHAPE_MISMATCH: return "shape-mismatch";
    case RINGD_E_READ_ONLY: return "read-only";
    case RINGD_E_PARSE: return "parse-error";
    case RINGD_E_CONNECTION: return "connection";
    case RINGD_E_PROTOCOL: return "protocol";
    case RINGD_E_IO: return "io";
    case RINGD_E_INVALID_ARGUMENT: return "invalid-argument";
    case RINGD_E_DUPLICATE_NAME: return "duplicate-name";
    case RINGD_E_BAD_NAME: return "bad-name";
    case RINGD_E_BIND: return "bind-failure";
    case RINGD_E_INSUFFICIENT_DATA: return "insufficient-data";
    case RINGD_E_NON_POSITIVE_CURRENT: return "non-positive-current";
    case RINGD_E_NEGATIVE_INJECTION: return "negative-injection";
    case RINGD_E_BAD_THRESHOLD: return "bad-threshold";
    case RINGD_E_DEGENERATE_TUNE: return "degenerate-tune";
    case RINGD_E_SINGULAR_FIT: return "singular-fit";
    case RINGD_E_RANK_DEFICIENT: return "rank-deficient";
    case RINGD_E_CONVERGENCE: return "convergence-failure";
    case RINGD_E_ALL_DISABLED: return "all-disabled";
    case RINGD_E_BAD_TRANSITION: return "bad-transition";
    case RINGD_E_BAD_MASK: return "bad-mask";
  }
  return "unknown-status";
}

const char* ringd_last_error(void) { return g_last_error.c_str(); }
const char* ringd_version(void) { return "0.1.0"; }
void ringd_free_string(char* s) { std::free(s); }

int ringd_value_kind(const ringd_value* v) {
  switch (v->value.kind()) {
    case ValueKind::Scalar: return RINGD_SCALAR;
    case ValueKind::Vector: return RINGD_VECTOR;
    case ValueKind::Text: return RINGD_TEXT;
  }
  return RINGD_TEXT;
}
double ringd_value_timestamp(const ringd_value* v) { return v->value.timestamp; }
int ringd_value_valid(const ringd_value* v) { return v->value.ok() ? 1 : 0; }
size_t ringd_value_length(const ringd_value* v) {
  return v->value.kind() == ValueKind::Text ? v->text.size() : v->data.size();
}
const double* ringd_value_data(const ringd_value* v) {
  return v->value.kind() == ValueKind::Text ? nullptr : v->data.data();
}
const char* ringd_value_text(const ringd_value* v) { return v->text.c_str(); }
void ringd_value_free(ringd_value* v) { delete v; }

int ringd_client_connect(const char* address, double timeout_s, ringd_client** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    auto c = std::make_unique<ringd_client>();
    c->client = bus::WireClient::connect(endpoint_of(address), timeout_s > 0 ? timeout_s : 5.0);
    *out = c.release();
  });
}

void ringd_client_close(ringd_client* c) {
  if (!c) return;
  if (c->client) c->client->close();
  delete c;
}

int ringd_client_connected(const ringd_client* c) { return c && c->client && c->client->connected() ? 1 : 0; }

int ringd_get(ringd_client* c, const char* name, ringd_value** out) {
  return guard([&] {
    require(c, "client");
    require(name, "name");
    require(out, "out");
    *out = new ringd_value(c->client->get(name));
  });
}

int ringd_put_text(ringd_client* c, const char* name, const char* value_text) {
  return guard([&] {
    require(c, "client");
    require(name, "name");
    c->client->put_text(name, value_text ? value_text : "");
  });
}

int ringd_put_scalar(ringd_client* c, const char* name, double value) {
  return guard([&] {
    require(c, "client");
    require(name, "name");
    c->client->put(name, TimedValue(value));
  });
}

int ringd_put_vector(ringd_client* c, const char* name, const double* values, size_t n) {
  return guard([&] {
    require(c, "client");
    require(name, "name");
    if (n > 0) require(values, "values");
    c->client->put(name, TimedValue(std::vector<double>(values, values + n)));
  });
}

int ringd_list(ringd_client* c, const char* glob, char** names_out) {
  return guard([&] {
    require(c, "client");
    require(names_out, "names_out");
    std::string joined;
    for (const auto& n : c->client->list(glob ? glob : "")) joined.append(n).push_back('\n');
    *names_out = dup_string(joined);
  });
}

int ringd_monitor_start(ringd_client* c, const char* name, ringd_monitor_fn fn, void* user, ringd_monitor** out) {
  return guard([&] {
    require(c, "client");
    require(name, "name");
    require(reinterpret_cast<const void*>(fn), "callback");
    require(out, "out");
    auto m = std::make_unique<ringd_monitor>();
    m->subscription = c->client->monitor(name, [fn, user](const std::string& n, const TimedValue& v) {
      const ringd_value value(v);
      fn(user, n.c_str(), &value);
    });
    *out = m.release();
  });
}

void ringd_monitor_stop(ringd_monitor* m) { delete m; }

int ringd_snapshot_save(ringd_client* c, const char* const* patterns, size_t n_patterns, const char* path,
                        const char* optics_name, size_t* saved, size_t* warnings) {
  return guard([&] {
    require(c, "client");
    require(path, "path");
    std::vector<std::string> globs;
    for (size_t i = 0; i < n_patterns; ++i) {
      require(patterns[i], "pattern");
      globs.emplace_back(patterns[i]);
    }
    if (globs.empty()) globs.emplace_back("*");
    const auto r = optics::save_snapshot(*c->client, globs, path, optics_name ? optics_name : "");
    if (saved) *saved = r.saved;
    if (warnings) *warnings = r.warnings;
  });
}

int ringd_snapshot_restore(ringd_client* c, const char* path, size_t* applied, size_t* failed) {
  return guard([&] {
    require(c, "client");
    require(path, "path");
    const auto r = optics::restore_snapshot(*c->client, path);
    if (applied) *applied = r.applied;
    if (failed) *failed = r.failed;
    if (!r.failures.empty()) {
      std::string msg;
      for (const auto& f : r.failures) msg.append(f).push_back('\n');
      g_last_error = msg;
    }
  });
}

void ringd_optics_params_default(ringd_optics_params* p) {
  if (p) *p = from_params(optics::AdjustmentParams{});
}

int ringd_optics_set_param(ringd_optics_params* p, const char* key, double value) {
  return guard([&] {
    require(p, "params");
    require(key, "key");
    auto q = to_params(*p);
    optics::set_param(q, key, value);
    *p = from_params(q);
  });
}

int ringd_optics_read_params(ringd_client* c, ringd_optics_params* out) {
  return guard([&] {
    require(c, "client");
    require(out, "out");
    *out = from_params(optics::read_params(*c->client));
  });
}

int ringd_optics_apply(ringd_client* c, const char* optics_path, const ringd_optics_params* p) {
  return guard([&] {
    require(c, "client");
    require(optics_path, "optics path");
    require(p, "params");
    const auto setup = optics::load_optics(optics_path);
    optics::apply(*c->client, setup, to_params(*p));
  });
}

int ringd_optics_infer(ringd_client* c, const char* optics_path, ringd_optics_inferred* out) {
  return guard([&] {
    require(c, "client");
    require(optics_path, "optics path");
    require(out, "out");
    const auto r = optics::infer_from_bus(*c->client, optics::load_optics(optics_path));
    out->params = from_params(r.params);
    out->quad_residual = r.quad_residual;
    out->sext_residual = r.sext_residual;
    out->bend_residual = r.bend_residual;
  });
}

int ringd_write_optics_file(const char* config_path, const char* optics_name, const char* out_path) {
  return guard([&] {
    require(out_path, "out path");
    const auto magnets = ring::derive_magnets(config_from(config_path));
    optics::write_optics(out_path, optics::generate_optics(magnets, optics_name ? optics_name : "nominal"));
  });
}

int ringd_write_response_file(const char* config_path, const char* out_path) {
  return guard([&] {
    require(out_path, "out path");
    ofb::write_response(out_path, ring::derive_response(config_from(config_path)));
  });
}

int ringd_default_config(char** text_out) {
  return guard([&] {
    require(text_out, "text_out");
    *text_out = dup_string(ring::format_config(ring::RingConfig{}));
  });
}

int ringd_archive_query_csv(const char* store_path, const char* name, double t0, double t1, char** csv_out,
                            size_t* rows, size_t* corrupt_lines) {
  return guard([&] {
    require(store_path, "store path");
    require(name, "name");
    require(csv_out, "csv_out");
    const auto r = archive::query(store_path, name, t0, t1);
    *csv_out = dup_string(archive::format_csv(r.records, name));
    if (rows) *rows = r.records.size();
    if (corrupt_lines) *corrupt_lines = r.corrupt.size();
    if (!r.corrupt.empty()) {
      std::string msg;
      for (const auto& line : r.corrupt) msg.append(line).push_back('\n');
      g_last_error = msg;
    }
  });
}

int ringd_machine_start(const char* address, const char* config_path, const char* overrides, ringd_service** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<ringd_service>();
    s->machine = std::make_unique<ring::Machine>(config_from(config_path, overrides), endpoint_of(address));
    *out = s.release();
  });
}

int ringd_service_port(const ringd_service* s) { return s && s->machine ? s->machine->port() : -1; }

int ringd_lifetime_start(const char* address, size_t window, ringd_service** out) {
  if (window < 2) window = lifetime::LifetimeService::kDefaultWindow;
  return start_supervised(address, [window](bus::ChannelAccess& a) -> std::unique_ptr<bus::Service> {
    return std::make_unique<lifetime::LifetimeService>(a, window);
  }, out);
}

void ringd_ofb_options_default(ringd_ofb_options* o) {
  if (o) *o = {1.0, 10.0, 1.0, RINGD_OFB_STOPPED, 0};
}

int ringd_ofb_start(const char* address, const char* response_path, const ringd_ofb_options* o,
                    ringd_service** out) {
  ring::ResponseModel model;
  ringd_ofb_options opts;
  ringd_ofb_options_default(&opts);
  if (o) opts = *o;
  const int rc = guard([&] {
    require(response_path, "response path");
    model = ofb::load_response(response_path);
    if (opts.vertical && model.r_y.rows() == 0)
      throw Error(ErrorCode::Parse, "response file has no vertical rows");
    // Fail early on bad settings instead of inside the reconnect loop.
    if (!(opts.period > 0) || !(opts.f_step > 0) || !(opts.gain > 0 && opts.gain <= 1))
      throw Error(ErrorCode::InvalidArgument, "period and f_step must be > 0, gain in (0, 1]");
  });
  if (rc != RINGD_OK) return rc;
  return start_supervised(address, [model, opts](bus::ChannelAccess& a) -> std::unique_ptr<bus::Service> {
    return std::make_unique<FeedbackPair>(a, model, opts);
  }, out);
}

int ringd_optics_serve(const char* address, const char* optics_path, ringd_service** out) {
  optics::OpticsSetup setup;
  const int rc = guard([&] {
    require(optics_path, "optics path");
    setup = optics::load_optics(optics_path);
  });
  if (rc != RINGD_OK) return rc;
  return start_supervised(address, [setup](bus::ChannelAccess& a) -> std::unique_ptr<bus::Service> {
    return std::make_unique<optics::OpticsService>(a, setup);
  }, out);
}

int ringd_archive_start(const char* address, const char* policy_path, const char* store_path, ringd_service** out) {
  archive::Policy policy;
  std::string store;
  const int rc = guard([&] {
    require(policy_path, "policy path");
    require(store_path, "store path");
    policy = archive::Policy::load(policy_path);
    store = store_path;
    std::FILE* probe = std::fopen(store_path, "ab");
    if (!probe) throw Error(ErrorCode::Io, std::string("cannot append to '") + store_path + "'");
    std::fclose(probe);
  });
  if (rc != RINGD_OK) return rc;
  return start_supervised(address, [policy, store](bus::ChannelAccess& a) -> std::unique_ptr<bus::Service> {
    return std::make_unique<archive::Recorder>(a, policy, store);
  }, out);
}

int ringd_service_attached(const ringd_service* s) {
  if (!s) return 0;
  if (s->machine) return 1;
  return s->supervisor && s->supervisor->attached() ? 1 : 0;
}

void ringd_service_stop(ringd_service* s) {
  if (!s) return;
  if (s->supervisor) s->supervisor->stop();
  if (s->machine) s->machine->stop();
  delete s;
}

}  // extern "C"
