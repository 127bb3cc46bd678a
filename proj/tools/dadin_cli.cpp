// Command-line front end. Talks to the library only through the C API.
//
//   dadin <command> [--config FILE] [--<key> VALUE ...] [--json]
//
// Values are layered: defaults, then the config file, then flags.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dadin/dadin.h"

namespace {

struct ConfigDeleter {
  void operator()(dadin_config* c) const { dadin_config_destroy(c); }
};
struct ResultDeleter {
  void operator()(dadin_result* r) const { dadin_result_destroy(r); }
};

int report(dadin_status st) {
  std::fprintf(stderr, "error (%s): %s\n", dadin_status_name(st), dadin_last_error());
  return static_cast<int>(st);
}

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_file;
  bool json = false;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-adversarial cross-domain click-through-rate experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dadin_version());

  std::vector<std::unique_ptr<Subcommand>> subs;
  for (std::size_t c = 0; c < dadin_command_count(); ++c) {
    auto sub = std::make_unique<Subcommand>();
    const std::string name = dadin_command_name(c);
    sub->app = app.add_subcommand(name, dadin_command_help(c));
    sub->app->add_option("--config", sub->config_file, "key = value file applied before flags")->check(CLI::ExistingFile);
    sub->app->add_flag("--json", sub->json, "print the JSON digest instead of the summary");
    for (std::size_t k = 0; k < dadin_config_key_count(); ++k) {
      const std::string key = dadin_config_key_name(k);
      sub->options[key] = sub->app->add_option("--" + key, sub->values[key], dadin_config_key_help(k));
    }
    subs.push_back(std::move(sub));
  }

  CLI11_PARSE(app, argc, argv);

  const Subcommand* chosen = nullptr;
  for (const auto& s : subs) {
    if (s->app->parsed()) chosen = s.get();
  }
  if (!chosen) return 1;

  dadin_config* raw = nullptr;
  if (auto st = dadin_config_create(&raw); st != DADIN_OK) return report(st);
  std::unique_ptr<dadin_config, ConfigDeleter> config(raw);

  if (!chosen->config_file.empty()) {
    if (auto st = dadin_config_load(config.get(), chosen->config_file.c_str()); st != DADIN_OK) return report(st);
  }
  for (const auto& [key, opt] : chosen->options) {
    if (opt->count() == 0) continue;
    if (auto st = dadin_config_set(config.get(), key.c_str(), chosen->values.at(key).c_str()); st != DADIN_OK) {
      return report(st);
    }
  }

  dadin_result* res_raw = nullptr;
  if (auto st = dadin_run(config.get(), chosen->app->get_name().c_str(), &res_raw); st != DADIN_OK) return report(st);
  std::unique_ptr<dadin_result, ResultDeleter> result(res_raw);

  if (chosen->json) {
    std::printf("%s\n", dadin_result_json(result.get()));
  } else {
    std::fputs(dadin_result_summary(result.get()), stdout);
    for (std::size_t i = 0; i < dadin_result_file_count(result.get()); ++i) {
      std::printf("wrote %s\n", dadin_result_file(result.get(), i));
    }
  }
  return 0;
}
