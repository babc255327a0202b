#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "persona_eval/backends.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string base;    // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

// One connection per call: httplib::Client is not safe for concurrent use.
json post_json(const BackendConfig& config, const std::string& route, const json& body) {
  const auto url = split_url(config.endpoint);
  httplib::Client client(url.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (config.bearer_token) client.set_bearer_token_auth(*config.bearer_token);

  const auto result = client.Post(url.prefix + route, body.dump(), "application/json");
  if (!result) {
    throw BackendUnavailable(config.endpoint + route + ": " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw BadResponse(route + " returned HTTP " + std::to_string(result->status));
  }
  try {
    return json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw BadResponse(route + " returned malformed JSON: " + e.what());
  }
}

const json& require_field(const json& body, const char* key, const std::string& route) {
  if (!body.is_object()) throw BadResponse(route + ": response is not an object");
  const auto it = body.find(key);
  if (it == body.end()) throw BadResponse(route + ": response lacks '" + key + "'");
  return *it;
}

double require_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw BadResponse(what + " is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw BadResponse(what + " is not finite");
  return x;
}

void require_non_empty(std::span<const std::string> texts) {
  for (const auto& t : texts) {
    if (text::is_blank(t)) throw EmptyText("backend inputs must be non-empty");
  }
}

// Splits `inputs` into max_batch-sized chunks, runs up to max_in_flight of
// them concurrently and concatenates results in input order. A failure is
// rethrown for the lowest failing chunk index.
template <typename Out, typename Fn>
std::vector<Out> run_chunked(const BackendConfig& config, std::span<const std::string> inputs, Fn&& call_chunk) {
  if (inputs.empty()) return {};
  const std::size_t batch = config.max_batch;
  const std::size_t n_chunks = (inputs.size() + batch - 1) / batch;
  std::vector<std::vector<Out>> results(n_chunks);
  std::vector<std::exception_ptr> errors(n_chunks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      const auto begin = c * batch;
      const auto chunk = inputs.subspan(begin, std::min(batch, inputs.size() - begin));
      try {
        results[c] = call_chunk(chunk);
        if (results[c].size() != chunk.size()) {
          throw BadResponse("expected " + std::to_string(chunk.size()) + " results, got " +
                            std::to_string(results[c].size()));
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  const std::size_t n_workers = std::min(config.max_in_flight, n_chunks);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (!errors[c]) continue;
    try {
      std::rethrow_exception(errors[c]);
    } catch (const BackendUnavailable& e) {
      throw BackendUnavailable("chunk " + std::to_string(c) + ": " + e.what());
    } catch (const BadResponse& e) {
      throw BadResponse("chunk " + std::to_string(c) + ": " + e.what());
    }
  }

  std::vector<Out> out;
  out.reserve(inputs.size());
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(out));
  return out;
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(BackendConfig config) : config_(std::move(config)) { validate(config_); }

std::vector<EmbeddingVector> RemoteEmbedder::embed_texts(std::span<const std::string> texts) const {
  require_non_empty(texts);
  return run_chunked<EmbeddingVector>(config_, texts, [this](std::span<const std::string> chunk) {
    const std::string route = "/v1/embed";
    const auto body = post_json(config_, route, {{"texts", json(std::vector<std::string>(chunk.begin(), chunk.end()))}});
    const auto& embeddings = require_field(body, "embeddings", route);
    if (!embeddings.is_array()) throw BadResponse(route + ": 'embeddings' is not an array");
    std::vector<EmbeddingVector> out;
    std::size_t dim = 0;
    for (const auto& row : embeddings) {
      if (!row.is_array() || row.empty()) throw BadResponse(route + ": embedding is not a non-empty array");
      if (dim == 0) dim = row.size();
      if (row.size() != dim) throw BadResponse(route + ": inconsistent embedding dimensions");
      EmbeddingVector v;
      v.values.reserve(row.size());
      for (const auto& x : row) v.values.push_back(require_number(x, "embedding value"));
      out.push_back(std::move(v));
    }
    return out;
  });
}

RemoteClassifier::RemoteClassifier(BackendConfig config) : config_(std::move(config)) { validate(config_); }

PersonaProbabilities RemoteClassifier::classify_persona(std::string_view dialogue_text,
                                                        std::string_view persona) const {
  if (text::is_blank(dialogue_text) || text::is_blank(persona)) {
    throw EmptyText("classifier inputs must be non-empty");
  }
  const std::string route = "/v1/classify";
  const auto body = post_json(config_, route, {{"dialogue", dialogue_text}, {"persona", persona}});
  const auto& probs = require_field(body, "probs", route);
  if (!probs.is_object()) throw BadResponse(route + ": 'probs' is not an object");
  PersonaProbabilities p{require_number(require_field(probs, "bot_0", route), "probs.bot_0"),
                         require_number(require_field(probs, "bot_1", route), "probs.bot_1"),
                         require_number(require_field(probs, "neutral", route), "probs.neutral")};
  if (!is_valid(p)) throw BadResponse(route + ": probabilities are not a distribution");
  return p;
}

RemoteGrammarScorer::RemoteGrammarScorer(BackendConfig config) : config_(std::move(config)) { validate(config_); }

std::vector<double> RemoteGrammarScorer::grammar_scores(std::span<const std::string> sentences) const {
  require_non_empty(sentences);
  return run_chunked<double>(config_, sentences, [this](std::span<const std::string> chunk) {
    const std::string route = "/v1/grammar";
    const auto body =
        post_json(config_, route, {{"sentences", json(std::vector<std::string>(chunk.begin(), chunk.end()))}});
    const auto& scores = require_field(body, "scores", route);
    if (!scores.is_array()) throw BadResponse(route + ": 'scores' is not an array");
    std::vector<double> out;
    for (const auto& s : scores) {
      const double v = require_number(s, "grammar score");
      if (v < 0.0 || v > 1.0) throw BadResponse(route + ": score outside [0,1]");
      out.push_back(v);
    }
    return out;
  });
}

RemoteTranslator::RemoteTranslator(BackendConfig config) : config_(std::move(config)) { validate(config_); }

std::vector<std::string> RemoteTranslator::translate_texts(std::span<const std::string> texts,
                                                           std::string_view source,
                                                           std::string_view target) const {
  if (source == target) {
    throw UnsupportedLanguagePair("source and target language are both '" + std::string(source) + "'");
  }
  require_non_empty(texts);
  return run_chunked<std::string>(config_, texts, [&](std::span<const std::string> chunk) {
    const std::string route = "/v1/translate";
    const auto body = post_json(config_, route,
                                {{"texts", json(std::vector<std::string>(chunk.begin(), chunk.end()))},
                                 {"source", source},
                                 {"target", target}});
    const auto& translations = require_field(body, "translations", route);
    if (!translations.is_array()) throw BadResponse(route + ": 'translations' is not an array");
    std::vector<std::string> out;
    for (const auto& t : translations) {
      if (!t.is_string()) throw BadResponse(route + ": translation is not a string");
      out.push_back(t.get<std::string>());
    }
    return out;
  });
}

}  // namespace persona_eval
