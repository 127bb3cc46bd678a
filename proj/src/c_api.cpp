#include "dadin/dadin.h"

#include <cstring>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "dadin/commands.hpp"
#include "dadin/config.hpp"
#include "dadin/errors.hpp"
#include "dadin/metrics.hpp"

struct dadin_config {
  dadin::ExperimentConfig config;
  mutable std::string snapshot;
};

struct dadin_result {
  std::string summary;
  std::string json;
  std::vector<std::string> files;
};

namespace {

thread_local std::string last_error;

dadin_status fail(dadin_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Most specific class first: SchemaError derives from DataError.
dadin_status status_of_current_exception() {
  try {
    throw;
  } catch (const dadin::SchemaError& e) {
    return fail(DADIN_ERR_SCHEMA, e.what());
  } catch (const dadin::DataError& e) {
    return fail(DADIN_ERR_DATA, e.what());
  } catch (const dadin::ConfigError& e) {
    return fail(DADIN_ERR_CONFIG, e.what());
  } catch (const dadin::DimensionError& e) {
    return fail(DADIN_ERR_DIMENSION, e.what());
  } catch (const dadin::DegenerateInputError& e) {
    return fail(DADIN_ERR_DEGENERATE_INPUT, e.what());
  } catch (const dadin::ContractError& e) {
    return fail(DADIN_ERR_CONTRACT, e.what());
  } catch (const dadin::LookupError& e) {
    return fail(DADIN_ERR_LOOKUP, e.what());
  } catch (const dadin::DivergenceError& e) {
    return fail(DADIN_ERR_DIVERGENCE, e.what());
  } catch (const dadin::CheckpointError& e) {
    return fail(DADIN_ERR_CHECKPOINT, e.what());
  } catch (const dadin::UndefinedMetricError& e) {
    return fail(DADIN_ERR_UNDEFINED_METRIC, e.what());
  } catch (const dadin::NotApplicableError& e) {
    return fail(DADIN_ERR_NOT_APPLICABLE, e.what());
  } catch (const dadin::IoError& e) {
    return fail(DADIN_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DADIN_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DADIN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DADIN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DADIN_ERR_INTERNAL, "unknown error");
  }
}

template <class F>
dadin_status guarded(F&& body) {
  try {
    body();
    return DADIN_OK;
  } catch (...) {
    return status_of_current_exception();
  }
}

dadin_status null_argument(const char* what) {
  return fail(DADIN_ERR_INVALID_ARGUMENT, std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* dadin_version(void) { return "1.0.0"; }

const char* dadin_status_name(dadin_status status) {
  switch (status) {
    case DADIN_OK: return "ok";
    case DADIN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DADIN_ERR_CONFIG: return "configuration error";
    case DADIN_ERR_DATA: return "data error";
    case DADIN_ERR_SCHEMA: return "schema error";
    case DADIN_ERR_DIMENSION: return "dimension error";
    case DADIN_ERR_DEGENERATE_INPUT: return "degenerate input";
    case DADIN_ERR_CONTRACT: return "contract violation";
    case DADIN_ERR_LOOKUP: return "lookup error";
    case DADIN_ERR_DIVERGENCE: return "divergence";
    case DADIN_ERR_CHECKPOINT: return "checkpoint error";
    case DADIN_ERR_UNDEFINED_METRIC: return "undefined metric";
    case DADIN_ERR_NOT_APPLICABLE: return "not applicable";
    case DADIN_ERR_IO: return "i/o error";
    case DADIN_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case DADIN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* dadin_last_error(void) { return last_error.c_str(); }

dadin_status dadin_config_create(dadin_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new dadin_config(); });
}

void dadin_config_destroy(dadin_config* config) { delete config; }

dadin_status dadin_config_set(dadin_config* config, const char* key, const char* value) {
  if (!config) return null_argument("config");
  if (!key) return null_argument("key");
  if (!value) return null_argument("value");
  return guarded([&] { config->config.set(key, value); });
}

dadin_status dadin_config_get(const dadin_config* config, const char* key, char* buf, size_t capacity,
                              size_t* needed) {
  if (!config) return null_argument("config");
  if (!key) return null_argument("key");
  std::string value;
  const auto st = guarded([&] { value = config->config.get(key); });
  if (st != DADIN_OK) return st;
  if (needed) *needed = value.size() + 1;
  if (!buf || capacity < value.size() + 1) {
    return fail(DADIN_ERR_BUFFER_TOO_SMALL, "value of '" + std::string(key) + "' needs " +
                                                std::to_string(value.size() + 1) + " bytes");
  }
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return DADIN_OK;
}

dadin_status dadin_config_load(dadin_config* config, const char* path) {
  if (!config) return null_argument("config");
  if (!path) return null_argument("path");
  return guarded([&] { config->config.load_file(path); });
}

const char* dadin_config_snapshot(const dadin_config* config) {
  if (!config) return nullptr;
  config->snapshot = config->config.snapshot();
  return config->snapshot.c_str();
}

dadin_status dadin_config_validate(const dadin_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { config->config.validate(); });
}

size_t dadin_config_key_count(void) { return dadin::config_keys().size(); }

const char* dadin_config_key_name(size_t index) {
  const auto& keys = dadin::config_keys();
  return index < keys.size() ? keys[index].name.c_str() : nullptr;
}

const char* dadin_config_key_help(size_t index) {
  const auto& keys = dadin::config_keys();
  return index < keys.size() ? keys[index].help.c_str() : nullptr;
}

size_t dadin_command_count(void) { return dadin::command_names().size(); }

const char* dadin_command_name(size_t index) {
  const auto& names = dadin::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

const char* dadin_command_help(size_t index) {
  const auto& help = dadin::command_help();
  return index < help.size() ? help[index].c_str() : nullptr;
}

dadin_status dadin_run(const dadin_config* config, const char* command, dadin_result** out) {
  if (!config) return null_argument("config");
  if (!command) return null_argument("command");
  if (!out) return null_argument("out");
  return guarded([&] {
    auto r = dadin::run_command(command, config->config);
    auto* res = new dadin_result{std::move(r.summary), std::move(r.json), {}};
    for (const auto& f : r.files) res->files.push_back(f.string());
    *out = res;
  });
}

void dadin_result_destroy(dadin_result* result) { delete result; }

const char* dadin_result_summary(const dadin_result* result) { return result ? result->summary.c_str() : nullptr; }

const char* dadin_result_json(const dadin_result* result) { return result ? result->json.c_str() : nullptr; }

size_t dadin_result_file_count(const dadin_result* result) { return result ? result->files.size() : 0; }

const char* dadin_result_file(const dadin_result* result, size_t index) {
  return result && index < result->files.size() ? result->files[index].c_str() : nullptr;
}

dadin_status dadin_auc(const double* scores, const double* labels, size_t n, double* out) {
  if (!out) return null_argument("out");
  if (n > 0 && (!scores || !labels)) return null_argument("scores or labels");
  return guarded([&] {
    *out = dadin::auc(std::span<const double>(scores, n), std::span<const double>(labels, n));
  });
}

dadin_status dadin_logloss(const double* scores, const double* labels, size_t n, double* out) {
  if (!out) return null_argument("out");
  if (n > 0 && (!scores || !labels)) return null_argument("scores or labels");
  return guarded([&] {
    *out = dadin::logloss(std::span<const double>(scores, n), std::span<const double>(labels, n));
  });
}

}  // extern "C"
