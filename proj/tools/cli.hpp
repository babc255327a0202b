#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "persona_eval/annotation_server.hpp"

namespace persona_eval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitBackend = 2;

struct RunHooks {
  /// Called by `serve` once the port is bound, before blocking.
  std::function<void(AnnotationServer&, int port)> on_serving;
};

/// Runs `persona-eval` with `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const RunHooks& hooks = {});

}  // namespace persona_eval::cli
