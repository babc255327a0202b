#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "persona_eval/errors.hpp"
#include "persona_eval/report.hpp"

namespace persona_eval::cli {

using nlohmann::json;

std::string_view to_string(Service s) {
  switch (s) {
    case Service::embedder:
      return "embedder";
    case Service::classifier:
      return "classifier";
    case Service::grammar:
      return "grammar";
    case Service::translator:
      return "translator";
  }
  return "embedder";
}

std::string_view endpoint_env(Service s) {
  switch (s) {
    case Service::embedder:
      return "PE_EMBED_URL";
    case Service::classifier:
      return "PE_CLASSIFY_URL";
    case Service::grammar:
      return "PE_GRAMMAR_URL";
    case Service::translator:
      return "PE_TRANSLATE_URL";
  }
  return "PE_EMBED_URL";
}

namespace {

std::optional<std::string> env(std::string_view name) {
  const char* v = std::getenv(std::string(name).c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <class T>
T parse_enum(std::optional<T> (*parse)(std::string_view), const std::string& value, std::string_view what) {
  const auto v = parse(value);
  if (!v) throw InvalidArgument("invalid " + std::string(what) + " '" + value + "'");
  return *v;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    if (!allowed.contains(k)) throw InvalidArgument("unknown key '" + k + "' in " + where);
  }
}

void apply_backend_file(BackendConfig& b, const json& j, const std::string& where) {
  check_keys(j, {"endpoint", "timeout_ms", "max_batch", "max_in_flight", "bearer_token"}, where);
  if (j.contains("endpoint")) b.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("timeout_ms")) b.timeout = std::chrono::milliseconds(j["timeout_ms"].get<std::int64_t>());
  if (j.contains("max_batch")) b.max_batch = j["max_batch"].get<std::size_t>();
  if (j.contains("max_in_flight")) b.max_in_flight = j["max_in_flight"].get<std::size_t>();
  if (j.contains("bearer_token")) b.bearer_token = j["bearer_token"].get<std::string>();
}

void apply_file(Settings& s, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(0, path.string() + ": config must be an object");
  const auto where = path.string();
  check_keys(doc,
             {"tau_sim", "tau_cls", "tau_gram", "aggregation", "empty_denominator_policy", "rollup", "seed", "jobs",
              "stub_backends", "backends"},
             where);
  try {
    auto take = [&](const char* key, auto& field) {
      if (!doc.contains(key)) return;
      field = doc[key].get<std::decay_t<decltype(field)>>();
      s.sources[key] = "file";
    };
    take("tau_sim", s.eval.tau_sim);
    take("tau_cls", s.eval.tau_cls);
    take("tau_gram", s.eval.tau_gram);
    take("seed", s.seed);
    take("jobs", s.jobs);
    take("stub_backends", s.stub_backends);
    if (doc.contains("aggregation")) {
      s.eval.aggregation = parse_enum(parse_aggregation, doc["aggregation"].get<std::string>(), "aggregation");
      s.sources["aggregation"] = "file";
    }
    if (doc.contains("empty_denominator_policy")) {
      s.eval.empty_denominator_policy =
          parse_enum(parse_policy, doc["empty_denominator_policy"].get<std::string>(), "empty_denominator_policy");
      s.sources["empty_denominator_policy"] = "file";
    }
    if (doc.contains("rollup")) {
      s.eval.rollup = parse_enum(parse_rollup, doc["rollup"].get<std::string>(), "rollup");
      s.sources["rollup"] = "file";
    }
    if (doc.contains("backends")) {
      const auto& b = doc["backends"];
      check_keys(b, {"embedder", "classifier", "grammar", "translator"}, where + " backends");
      for (const auto svc : kServices) {
        const auto name = std::string(to_string(svc));
        if (!b.contains(name)) continue;
        apply_backend_file(s.backends[svc], b[name], where + " backends." + name);
        if (b[name].contains("endpoint")) s.sources["backends." + name] = "file";
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(0, where + ": " + e.what());
  }
}

}  // namespace

Settings resolve_settings(const FlagOverrides& flags) {
  Settings s;
  s.eval.empty_denominator_policy = EmptyDenominatorPolicy::skip_sample;
  s.jobs = std::max(1u, std::thread::hardware_concurrency());
  for (const auto svc : kServices) s.backends[svc] = BackendConfig{};
  for (const auto* key : {"tau_sim", "tau_cls", "tau_gram", "aggregation", "empty_denominator_policy", "rollup",
                          "seed", "jobs", "stub_backends"}) {
    s.sources[key] = "default";
  }
  for (const auto svc : kServices) s.sources["backends." + std::string(to_string(svc))] = "default";

  if (flags.config_file) {
    apply_file(s, *flags.config_file);
  } else if (const auto path = env("PE_CONFIG")) {
    apply_file(s, *path);
  }

  const auto token = env("PE_BEARER_TOKEN");
  for (const auto svc : kServices) {
    if (const auto url = env(endpoint_env(svc))) {
      s.backends[svc].endpoint = *url;
      s.sources["backends." + std::string(to_string(svc))] = "env";
    }
    if (token) s.backends[svc].bearer_token = token;
  }

  auto flag = [&](const auto& value, auto& field, const char* key) {
    if (!value) return;
    field = *value;
    s.sources[key] = "flag";
  };
  flag(flags.tau_sim, s.eval.tau_sim, "tau_sim");
  flag(flags.tau_cls, s.eval.tau_cls, "tau_cls");
  flag(flags.tau_gram, s.eval.tau_gram, "tau_gram");
  flag(flags.seed, s.seed, "seed");
  flag(flags.jobs, s.jobs, "jobs");
  if (flags.aggregation) {
    s.eval.aggregation = parse_enum(parse_aggregation, *flags.aggregation, "aggregation");
    s.sources["aggregation"] = "flag";
  }
  if (flags.policy) {
    s.eval.empty_denominator_policy = parse_enum(parse_policy, *flags.policy, "empty_denominator_policy");
    s.sources["empty_denominator_policy"] = "flag";
  }
  if (flags.rollup) {
    s.eval.rollup = parse_enum(parse_rollup, *flags.rollup, "rollup");
    s.sources["rollup"] = "flag";
  }
  if (flags.stub_backends) {
    s.stub_backends = true;
    s.sources["stub_backends"] = "flag";
  }
  for (const auto& [svc, url] : flags.endpoints) {
    s.backends[svc].endpoint = url;
    s.sources["backends." + std::string(to_string(svc))] = "flag";
  }
  if (s.jobs == 0) throw InvalidArgument("jobs must be at least 1");
  validate(s.eval);
  return s;
}

BackendConfig backend_for(const Settings& settings, Service s) {
  if (settings.stub_backends) return BackendConfig{};
  auto b = settings.backends.at(s);
  if (b.endpoint.empty()) {
    throw BackendUnavailable("no endpoint configured for the " + std::string(to_string(s)) + " backend (set " +
                             std::string(endpoint_env(s)) + ", backends." + std::string(to_string(s)) +
                             ".endpoint in the config file, or pass --stub-backends)");
  }
  b.kind = BackendKind::remote;
  validate(b);
  return b;
}

json settings_to_json(const Settings& settings) {
  json backends = json::object();
  for (const auto& [svc, b] : settings.backends) {
    const char* kind = settings.stub_backends ? "stub" : b.endpoint.empty() ? "unconfigured" : "remote";
    backends[std::string(to_string(svc))] = {{"kind", kind},
                                             {"endpoint", b.endpoint.empty() ? json(nullptr) : json(b.endpoint)},
                                             {"timeout_ms", b.timeout.count()},
                                             {"max_batch", b.max_batch},
                                             {"max_in_flight", b.max_in_flight},
                                             {"bearer_token", b.bearer_token ? json("<redacted>") : json(nullptr)}};
  }
  return {{"tau_sim", settings.eval.tau_sim},
          {"tau_cls", settings.eval.tau_cls},
          {"tau_gram", settings.eval.tau_gram},
          {"aggregation", to_string(settings.eval.aggregation)},
          {"empty_denominator_policy", to_string(settings.eval.empty_denominator_policy)},
          {"rollup", to_string(settings.eval.rollup)},
          {"seed", settings.seed},
          {"jobs", settings.jobs},
          {"stub_backends", settings.stub_backends},
          {"backends", std::move(backends)},
          {"sources", settings.sources}};
}

}  // namespace persona_eval::cli
