// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end.  Subcommands and their options come from the
// library's command table, so the CLI and the C API cannot drift apart.

#include <CLI11.hpp>

#include "mhs/mhs.h"

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

struct Sub {
  std::string name;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::string config;
};

struct SessionDeleter {
  void operator()(mhs_session* s) const { mhs_session_free(s); }
};

int report(mhs_status st) {
  std::fprintf(stderr, "error (%s): %s\n", mhs_status_name(st), mhs_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orbit counting on Markoff-Hurwitz surfaces and the spectral growth exponent"};
  app.set_version_flag("--version", std::string(mhs_version()));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Sub>> subs;
  for (int c = 0; c < mhs_command_count(); ++c) {
    auto sub = std::make_unique<Sub>();
    sub->name = mhs_command_name(c);
    sub->app = app.add_subcommand(sub->name, mhs_command_help(c));
    sub->app->add_option("--config", sub->config, "key=value file; command-line options override it");
    for (int o = 0; o < mhs_option_count(c); ++o) {
      const std::string key = mhs_option_key(c, o);
      std::string help = mhs_option_help(c, o);
      const std::string def = mhs_option_default(c, o);
      if (!def.empty()) help += " [default: " + def + "]";
      if (mhs_option_is_required(c, o)) help += " (required)";
      if (mhs_option_is_flag(c, o)) {
        sub->flags[key] = false;
        sub->app->add_flag("--" + key, sub->flags[key], help);
      } else {
        sub->values[key];
        sub->app->add_option("--" + key, sub->values[key], help);
      }
    }
    subs.push_back(std::move(sub));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(MHS_E_USAGE);
  }

  for (const auto& sub : subs) {
    if (!sub->app->parsed()) continue;
    mhs_session* raw = nullptr;
    mhs_status st = mhs_session_new(&raw);
    if (st != MHS_OK) return report(st);
    std::unique_ptr<mhs_session, SessionDeleter> session(raw);
    if (!sub->config.empty() && (st = mhs_session_load_config(session.get(), sub->config.c_str())) != MHS_OK)
      return report(st);
    for (const auto& [key, value] : sub->values)
      if (sub->app->get_option("--" + key)->count() > 0 &&
          (st = mhs_session_set(session.get(), key.c_str(), value.c_str())) != MHS_OK)
        return report(st);
    for (const auto& [key, on] : sub->flags)
      if (sub->app->get_option("--" + key)->count() > 0 &&
          (st = mhs_session_set(session.get(), key.c_str(), on ? "true" : "false")) != MHS_OK)
        return report(st);
    st = mhs_session_run(session.get(), sub->name.c_str());
    const char* summary = mhs_session_summary(session.get());
    if (summary && *summary) std::printf("%s\n", summary);
    for (size_t i = 0; i < mhs_session_artifact_count(session.get()); ++i)
      std::printf("wrote %s\n", mhs_session_artifact(session.get(), i));
    if (st != MHS_OK) return report(st);
    return 0;
  }
  return static_cast<int>(MHS_E_USAGE);
}
