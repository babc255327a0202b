#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "persona_eval/backends.hpp"
#include "persona_eval/datamodel.hpp"

namespace persona_eval::cli {

enum class Service { embedder, classifier, grammar, translator };
inline constexpr std::array kServices = {Service::embedder, Service::classifier, Service::grammar, Service::translator};

std::string_view to_string(Service s);
/// Environment variable holding the endpoint of `s` (PE_EMBED_URL, ...).
std::string_view endpoint_env(Service s);

/// Values given on the command line; unset fields fall through to the
/// environment, then the config file, then built-in defaults.
struct FlagOverrides {
  std::optional<std::filesystem::path> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool stub_backends = false;
  std::optional<double> tau_sim;
  std::optional<double> tau_cls;
  std::optional<double> tau_gram;
  std::optional<std::string> aggregation;
  std::optional<std::string> policy;
  std::optional<std::string> rollup;
  std::map<Service, std::string> endpoints;
};

struct Settings {
  EvalConfig eval;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool stub_backends = false;
  std::map<Service, BackendConfig> backends;
  /// Which layer supplied each setting: flag, env, file or default.
  std::map<std::string, std::string> sources;
};

/// Resolves settings with precedence flag > environment > config file >
/// default. Throws ParseError / InvalidArgument on a bad config file.
Settings resolve_settings(const FlagOverrides& flags);

/// Throws BackendUnavailable when `s` has no endpoint and stubs are off.
BackendConfig backend_for(const Settings& settings, Service s);

/// Manifest form; bearer tokens are redacted.
nlohmann::json settings_to_json(const Settings& settings);

}  // namespace persona_eval::cli
