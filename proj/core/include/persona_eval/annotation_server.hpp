#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "persona_eval/annotation.hpp"

namespace persona_eval {

struct AnnotationServerOptions {
  /// Directory with the built annotation UI; a placeholder page is served
  /// when unset or missing.
  std::optional<std::filesystem::path> ui_dir;
  /// Used to attach automatic results to new sessions.
  AutoEvaluator evaluator;
};

/// JSON-over-HTTP front end for an AnnotationStore.
///
///   POST /api/session                      {dialogues, extractions, sample_size, seed}
///   GET  /api/session/{id}/next?annotator=A[&show_auto=1]
///   POST /api/session/{id}/decision        {task_id, annotator, pairs, notes?}
///   GET  /api/session/{id}/metrics?annotator=A
///   GET  /api/session/{id}/correlation?annotator=A
///   GET  /                                 UI bundle
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, AnnotationServerOptions options);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds without serving. Port 0 picks a free port. Returns the bound
  /// port, or nullopt when the address is unavailable.
  std::optional<int> bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace persona_eval
