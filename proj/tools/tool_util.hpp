#pragma once

#include <csignal>
#include <cstdio>
#include <ctime>
#include <string>

#include "ringd/ringd.h"

namespace tool {

// Library status to process exit code: 2 unknown channel, 3 shape, 4
// read-only, 5 parse error, 1 anything else.
inline int exit_code(int status) {
  switch (status) {
    case RINGD_OK: return 0;
    case RINGD_E_UNKNOWN_CHANNEL:
    case RINGD_E_SHAPE_MISMATCH:
    case RINGD_E_READ_ONLY:
    case RINGD_E_PARSE: return status;
    default: return 1;
  }
}

inline int report(const char* prog, int status) {
  if (status != RINGD_OK) std::fprintf(stderr, "%s: %s: %s\n", prog, ringd_status_name(status), ringd_last_error());
  return exit_code(status);
}

// Blocks SIGINT/SIGTERM for this thread and every thread started after the
// call, so the wait below is the only place they are delivered.
inline void block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

// Waits for SIGINT/SIGTERM, or `duration` seconds when positive. True when
// a signal ended the wait.
inline bool wait_for_stop(double duration) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  if (duration > 0) {
    timespec ts{};
    ts.tv_sec = static_cast<time_t>(duration);
    ts.tv_nsec = static_cast<long>((duration - static_cast<double>(ts.tv_sec)) * 1e9);
    return sigtimedwait(&set, nullptr, &ts) > 0;
  }
  int sig = 0;
  return sigwait(&set, &sig) == 0;
}

inline const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace tool
