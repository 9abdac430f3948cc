// SPDX-License-Identifier: Apache-2.0
//
// extern "C" boundary: every entry point catches all exceptions and turns
// them into a status code plus a thread-local message.

#include "mhs/mhs.h"

#include "orbit_enum.hpp"
#include "runner.hpp"
#include "transfer.hpp"

#include <cstring>
#include <memory>
#include <new>
#include <string>

struct mhs_session {
  mhs::runner::Options options;
  std::string summary;
  std::vector<std::string> artifacts;
};

struct mhs_operator {
  std::unique_ptr<mhs::spectral::TransferOperator> op;
};

namespace {

thread_local std::string g_last_error;

template <class F>
mhs_status guarded(F&& body) {
  try {
    body();
    return MHS_OK;
  } catch (const mhs::Error& e) {
    g_last_error = e.what();
    return static_cast<mhs_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MHS_E_CAPACITY;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return MHS_E_INTERNAL;
  } catch (...) {
    g_last_error = "internal error: unknown exception";
    return MHS_E_INTERNAL;
  }
}

mhs_status null_argument(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return MHS_E_USAGE;
}

const mhs::runner::CommandSpec* command_at(int c) {
  const auto& cs = mhs::runner::commands();
  if (c < 0 || c >= static_cast<int>(cs.size())) return nullptr;
  return &cs[c];
}

const mhs::runner::OptionSpec* option_at(int c, int o) {
  const auto* cmd = command_at(c);
  if (!cmd || o < 0 || o >= static_cast<int>(cmd->options.size())) return nullptr;
  return &cmd->options[o];
}

}  // namespace

extern "C" {

const char* mhs_version(void) {
  static const std::string v = mhs::runner::version();
  return v.c_str();
}

const char* mhs_last_error(void) { return g_last_error.c_str(); }

const char* mhs_status_name(mhs_status status) {
  switch (status) {
    case MHS_OK: return "ok";
    case MHS_E_USAGE: return "usage";
    case MHS_E_DIMENSION: return "dimension";
    case MHS_E_INVALID_STATE: return "invalid_state";
    case MHS_E_DOMAIN: return "domain";
    case MHS_E_EXCEPTIONAL: return "exceptional";
    case MHS_E_INVARIANT: return "invariant";
    case MHS_E_CONVERGENCE: return "convergence";
    case MHS_E_GEOMETRY: return "geometry";
    case MHS_E_FIT: return "fit";
    case MHS_E_CAPACITY: return "capacity";
    case MHS_E_IO: return "io";
    case MHS_E_NO_ROOT: return "no_root";
    case MHS_E_EMPTY: return "empty";
    case MHS_E_INTERNAL: return "internal";
  }
  return "unknown";
}

int mhs_command_count(void) { return static_cast<int>(mhs::runner::commands().size()); }
const char* mhs_command_name(int c) { return command_at(c) ? command_at(c)->name.c_str() : nullptr; }
const char* mhs_command_help(int c) { return command_at(c) ? command_at(c)->help.c_str() : nullptr; }
int mhs_option_count(int c) { return command_at(c) ? static_cast<int>(command_at(c)->options.size()) : 0; }
const char* mhs_option_key(int c, int o) { return option_at(c, o) ? option_at(c, o)->key.c_str() : nullptr; }
const char* mhs_option_help(int c, int o) { return option_at(c, o) ? option_at(c, o)->help.c_str() : nullptr; }
const char* mhs_option_default(int c, int o) {
  return option_at(c, o) ? option_at(c, o)->default_value.c_str() : nullptr;
}
int mhs_option_is_flag(int c, int o) { return option_at(c, o) && option_at(c, o)->flag ? 1 : 0; }
int mhs_option_is_required(int c, int o) { return option_at(c, o) && option_at(c, o)->required ? 1 : 0; }

mhs_status mhs_session_new(mhs_session** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new mhs_session(); });
}

void mhs_session_free(mhs_session* session) { delete session; }

mhs_status mhs_session_set(mhs_session* session, const char* key, const char* value) {
  if (!session) return null_argument("session");
  if (!key || !value) return null_argument("key/value");
  return guarded([&] {
    std::string k = key;
    if (k.rfind("--", 0) == 0) k = k.substr(2);
    if (k.empty()) mhs::fail(mhs::ErrorCode::usage, "empty option key");
    session->options[k] = value;
  });
}

mhs_status mhs_session_load_config(mhs_session* session, const char* path) {
  if (!session) return null_argument("session");
  if (!path) return null_argument("path");
  return guarded([&] {
    for (const auto& [k, v] : mhs::runner::load_config(path)) session->options[k] = v;
  });
}

mhs_status mhs_session_run(mhs_session* session, const char* command) {
  if (!session) return null_argument("session");
  if (!command) return null_argument("command");
  session->summary.clear();
  session->artifacts.clear();
  mhs_status st = guarded([&] {
    auto r = mhs::runner::run(command, session->options);
    session->summary = r.summary;
    session->artifacts = r.artifacts;
    if (r.status != 0) mhs::fail(static_cast<mhs::ErrorCode>(r.status), "check failed: " + r.summary);
  });
  return st;
}

const char* mhs_session_summary(const mhs_session* session) { return session ? session->summary.c_str() : ""; }

size_t mhs_session_artifact_count(const mhs_session* session) { return session ? session->artifacts.size() : 0; }

const char* mhs_session_artifact(const mhs_session* session, size_t index) {
  if (!session || index >= session->artifacts.size()) return nullptr;
  return session->artifacts[index].c_str();
}

mhs_status mhs_operator_new(int n, int grid, int A_max, int threads, mhs_operator** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    mhs::spectral::OperatorConfig cfg;
    cfg.n = n;
    cfg.grid = grid;
    cfg.A_max = A_max;
    cfg.threads = threads;
    auto h = std::make_unique<mhs_operator>();
    h->op = std::make_unique<mhs::spectral::TransferOperator>(cfg);
    *out = h.release();
  });
}

void mhs_operator_free(mhs_operator* op) { delete op; }

size_t mhs_operator_size(const mhs_operator* op) { return op ? op->op->size() : 0; }

mhs_status mhs_operator_leading_eigenvalue(mhs_operator* op, double s, double* lambda, double* residual) {
  if (!op) return null_argument("op");
  if (!lambda) return null_argument("lambda");
  return guarded([&] {
    const auto e = mhs::spectral::leading_eigen(*op->op, s);
    *lambda = e.lambda;
    if (residual) *residual = e.residual;
  });
}

mhs_status mhs_operator_solve_beta(mhs_operator* op, double tol, double* beta, double* lo, double* hi) {
  if (!op) return null_argument("op");
  if (!beta) return null_argument("beta");
  return guarded([&] {
    const auto r = mhs::spectral::solve_beta(*op->op, tol);
    *beta = r.beta;
    if (lo) *lo = r.lo;
    if (hi) *hi = r.hi;
  });
}

mhs_status mhs_count_ball(int n, long a, long k, const char* R, char* buf, size_t size) {
  if (!R) return null_argument("R");
  if (!buf || size == 0) return null_argument("buf");
  return guarded([&] {
    mhs::core::Params p;
    p.n = n;
    p.a = a;
    p.k = k;
    p.validate();
    const mhs::BigInt r = mhs::parse_big(R);
    if (r < 1) mhs::fail(mhs::ErrorCode::usage, "R must be positive");
    mhs::orbit::CountOptions opt;
    const auto s = mhs::orbit::count_series(p, mhs::orbit::integer_thresholds(r, 1), opt);
    const std::string text = std::to_string(s.rows.back().count);
    if (text.size() + 1 > size) mhs::fail(mhs::ErrorCode::usage, "buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

}  // extern "C"
