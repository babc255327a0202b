#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "persona_eval/dataset_tools.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/report.hpp"
#include "persona_eval/translation_qa.hpp"

#ifndef PERSONA_EVAL_VERSION
#define PERSONA_EVAL_VERSION "0.0.0"
#endif

namespace persona_eval::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path sidecar(const fs::path& out, std::string_view suffix) { return fs::path(out.string() + std::string(suffix)); }

/// Collects what a RunManifest records while a command runs.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::string started_at = utc_now();
  json inputs = json::object();
  json outputs = json::object();

  void write(const fs::path& primary_output, const Settings& settings) const {
    const json doc = {{"format", 1},
                      {"tool", "persona-eval"},
                      {"version", PERSONA_EVAL_VERSION},
                      {"command", command},
                      {"argv", argv},
                      {"config", settings_to_json(settings)},
                      {"seed", settings.seed},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"started_at", started_at},
                      {"finished_at", utc_now()}};
    write_file_atomic(sidecar(primary_output, ".manifest.json"), doc.dump(2) + "\n");
  }
};

template <class T>
CLI::Option* optional_option(CLI::App* app, const std::string& name, std::optional<T>& target,
                             const std::string& help) {
  return app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.contains("f1") ? j.at("f1").get<double>() : f1(r.precision, r.recall);
  r.samples = j.value("samples", std::size_t{0});
  r.skipped = j.value("skipped", std::size_t{0});
  return r;
}

std::string render_correlation(const json& doc) {
  std::string out = "Series                                               r\n";
  for (const auto& s : doc.at("series")) {
    auto name = s.at("name").get<std::string>();
    name.resize(std::max<std::size_t>(name.size(), 52), ' ');
    char buf[32];
    if (s.at("r").is_null()) {
      std::snprintf(buf, sizeof buf, "undefined");
    } else {
      std::snprintf(buf, sizeof buf, "%.3f", s.at("r").get<double>());
    }
    out += name + " " + buf + "\n";
  }
  out += "Sample size: " + std::to_string(doc.at("sample_size").get<std::size_t>()) + "\n\n";
  out += render_manual_vs_automatic(report_from_json(doc.at("manual")), report_from_json(doc.at("automatic")));
  return out;
}

std::atomic<AnnotationServer*> g_serving{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* s = g_serving.load()) s->stop();
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err, const RunHooks& hooks) : out_(out), err_(err), hooks_(hooks) {}

  int run(const std::vector<std::string>& args);

 private:
  void add_threshold_flags(CLI::App* cmd);
  void add_endpoint_flag(CLI::App* cmd, const std::string& name, Service svc);

  int evaluate();
  int filter_translations();
  int build_cls_data();
  int serve();
  int report();
  int stats();

  std::ostream& out_;
  std::ostream& err_;
  const RunHooks& hooks_;
  FlagOverrides flags_;
  Manifest manifest_;

  std::string dialogues_path_, extractions_path_, out_path_, name_;
  std::string in_path_, source_path_, stats_path_;
  std::string host_ = "127.0.0.1", data_dir_ = "annotation-data";
  std::optional<std::string> ui_dir_;
  int port_ = 8765;
  std::vector<std::string> report_files_;
  std::string scope_ = "micro";
  bool correlation_ = false;
  std::string verdicts_path_;
};

void Runner::add_threshold_flags(CLI::App* cmd) {
  optional_option(cmd, "--tau-sim", flags_.tau_sim, "Similarity threshold for persona matching");
  optional_option(cmd, "--tau-cls", flags_.tau_cls, "Classifier confidence threshold for the fallback");
  optional_option(cmd, "--aggregation", flags_.aggregation, "micro, macro or both");
  optional_option(cmd, "--policy", flags_.policy, "Empty-denominator policy: error or skip_sample");
  optional_option(cmd, "--rollup", flags_.rollup, "any_sentence or all_sentences");
}

void Runner::add_endpoint_flag(CLI::App* cmd, const std::string& name, Service svc) {
  cmd->add_option_function<std::string>(
      name, [this, svc](const std::string& v) { flags_.endpoints[svc] = v; },
      "Endpoint of the " + std::string(to_string(svc)) + " backend");
}

int Runner::run(const std::vector<std::string>& args) {
  CLI::App app{"Persona-extraction evaluation toolkit", "persona-eval"};
  app.set_version_flag("--version", PERSONA_EVAL_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  optional_option(&app, "--config", flags_.config_file, "JSON config file");
  optional_option(&app, "--seed", flags_.seed, "Random seed");
  optional_option(&app, "--jobs", flags_.jobs, "Worker threads for per-sample work");
  app.add_flag("--stub-backends", flags_.stub_backends, "Use the deterministic offline backends");

  auto* evaluate = app.add_subcommand("evaluate", "Score extractions against target personas");
  evaluate->add_option("--dialogues", dialogues_path_, "Dialogue dataset (JSONL)")->required();
  evaluate->add_option("--extractions", extractions_path_, "Extraction records (JSONL)")->required();
  evaluate->add_option("--out", out_path_, "Report file to write")->required();
  evaluate->add_option("--name", name_, "Run name shown in comparison tables");
  add_threshold_flags(evaluate);
  add_endpoint_flag(evaluate, "--embed-url", Service::embedder);
  add_endpoint_flag(evaluate, "--classify-url", Service::classifier);

  auto* filter = app.add_subcommand("filter-translations", "Detect and re-translate corrupted translations");
  filter->add_option("--in", in_path_, "Translated dialogue dataset")->required();
  filter->add_option("--source", source_path_, "Original-language dataset with the same ids")->required();
  filter->add_option("--out", out_path_, "Repaired dataset to write")->required();
  optional_option(filter, "--tau-gram", flags_.tau_gram, "Grammaticality threshold");
  filter->add_option("--stats", stats_path_, "Also write the corruption table to this file");
  add_endpoint_flag(filter, "--grammar-url", Service::grammar);
  add_endpoint_flag(filter, "--translate-url", Service::translator);

  auto* build = app.add_subcommand("build-cls-data", "Build the persona-classifier dataset");
  build->add_option("--in", in_path_, "Dialogue dataset")->required();
  build->add_option("--out", out_path_, "Classifier dataset to write")->required();

  auto* serve = app.add_subcommand("serve", "Run the manual annotation service");
  serve->add_option("--port", port_, "Port to listen on (0 picks a free port)");
  serve->add_option("--host", host_, "Address to bind");
  serve->add_option("--data-dir", data_dir_, "Session storage directory");
  optional_option(serve, "--ui-dir", ui_dir_, "Built annotation UI to serve at /");
  add_threshold_flags(serve);
  add_endpoint_flag(serve, "--embed-url", Service::embedder);
  add_endpoint_flag(serve, "--classify-url", Service::classifier);

  auto* report = app.add_subcommand("report", "Render comparison tables from report files");
  report->add_option("files", report_files_, "Report files")->required();
  report->add_option("--scope", scope_, "micro or macro")->check(CLI::IsMember({"micro", "macro"}));
  report->add_flag("--correlation", correlation_, "Inputs are annotation correlation documents");
  report->add_option("--out", out_path_, "Also write the table to this file");

  auto* stats = app.add_subcommand("stats", "Render the corruption table from a verdicts file");
  stats->add_option("verdicts", verdicts_path_, "Verdicts file (JSONL)")->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kExitOk : kExitInput;
  }

  manifest_.argv = args;
  try {
    if (*evaluate) return this->evaluate();
    if (*filter) return filter_translations();
    if (*build) return build_cls_data();
    if (*serve) return this->serve();
    if (*report) return this->report();
    if (*stats) return this->stats();
  } catch (const BackendError& e) {
    err_ << "error: backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    err_ << "error: malformed input: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int Runner::evaluate() {
  manifest_.command = "evaluate";
  const auto settings = resolve_settings(flags_);
  const auto dialogues = load_dialogues(dialogues_path_);
  const auto records = load_extractions(extractions_path_);
  check_references(records, dialogues);
  const auto embedder = make_embedder(backend_for(settings, Service::embedder));
  const auto classifier = make_classifier(backend_for(settings, Service::classifier));

  const auto eval = evaluate_corpus(dialogues, records, *embedder, *classifier, settings.eval, settings.jobs);
  const fs::path out_path(out_path_);
  const auto name = name_.empty() ? out_path.stem().string() : name_;
  write_file_atomic(out_path, render_evaluation_report(eval, settings.eval, name));
  out_ << render_evaluation_summary(eval);

  manifest_.inputs = {{"dialogues", dialogues_path_}, {"extractions", extractions_path_}};
  manifest_.outputs = {{"report", out_path_}};
  manifest_.write(out_path, settings);
  return kExitOk;
}

int Runner::filter_translations() {
  manifest_.command = "filter-translations";
  const auto settings = resolve_settings(flags_);
  const auto translated = load_dialogues(in_path_);
  const auto originals = load_dialogues(source_path_);
  const auto sources = SourceTexts::from_dialogues(originals);
  const auto scorer = make_grammar_scorer(backend_for(settings, Service::grammar));
  const auto translator = make_translator(backend_for(settings, Service::translator));

  const auto result = repair_dataset(translated, *scorer, *translator, sources, settings.eval.tau_gram);
  const fs::path out_path(out_path_);
  std::ostringstream data, verdicts;
  write_dialogues(data, result.dialogues);
  write_verdicts(verdicts, result.verdicts);
  write_file_atomic(out_path, data.str());
  const auto verdicts_path = sidecar(out_path, ".verdicts.jsonl");
  write_file_atomic(verdicts_path, verdicts.str());

  const auto table = render_corruption_table(corruption_stats(result.verdicts));
  out_ << table;
  manifest_.inputs = {{"translated", in_path_}, {"source", source_path_}};
  manifest_.outputs = {{"dataset", out_path_}, {"verdicts", verdicts_path.string()}};
  if (!stats_path_.empty()) {
    write_file_atomic(stats_path_, table);
    manifest_.outputs["stats"] = stats_path_;
  }
  manifest_.write(out_path, settings);
  return kExitOk;
}

int Runner::build_cls_data() {
  manifest_.command = "build-cls-data";
  const auto settings = resolve_settings(flags_);
  const auto dialogues = load_dialogues(in_path_);
  const auto examples = build_classifier_dataset(dialogues, settings.seed);
  std::ostringstream data;
  write_classifier_dataset(data, examples);
  const fs::path out_path(out_path_);
  write_file_atomic(out_path, data.str());

  std::array<std::size_t, 3> per_label{};
  for (const auto& e : examples) ++per_label[static_cast<std::size_t>(e.label)];
  out_ << "examples=" << examples.size() << " bot_0=" << per_label[0] << " bot_1=" << per_label[1]
       << " neutral=" << per_label[2] << "\n";
  manifest_.inputs = {{"dialogues", in_path_}};
  manifest_.outputs = {{"dataset", out_path_}};
  manifest_.write(out_path, settings);
  return kExitOk;
}

int Runner::serve() {
  manifest_.command = "serve";
  const auto settings = resolve_settings(flags_);
  AnnotationServerOptions options;
  if (ui_dir_) options.ui_dir = *ui_dir_;

  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<PersonaClassifier> classifier;
  try {
    embedder = make_embedder(backend_for(settings, Service::embedder));
    classifier = make_classifier(backend_for(settings, Service::classifier));
  } catch (const BackendUnavailable& e) {
    err_ << "warning: automatic results disabled: " << e.what() << "\n";
  }
  if (embedder && classifier) {
    options.evaluator = [embedder, classifier, config = settings.eval](const Dialogue& d, const ExtractionRecord& r) {
      auto s = evaluate_sample(d, r, *embedder, *classifier, config);
      return AutoResult{s.counts, std::move(s.outcome)};
    };
  }

  AnnotationStore store(data_dir_);
  AnnotationServer server(store, std::move(options));
  const auto port = server.bind(host_, port_);
  if (!port) {
    err_ << "error: cannot listen on " << host_ << ":" << port_ << " (port in use or unavailable)\n";
    return kExitInput;
  }
  out_ << "annotation service listening on http://" << host_ << ":" << *port << "/ (data: " << data_dir_ << ")"
       << std::endl;

  g_serving = &server;
  auto previous_int = std::signal(SIGINT, handle_stop_signal);
  auto previous_term = std::signal(SIGTERM, handle_stop_signal);
  if (hooks_.on_serving) hooks_.on_serving(server, *port);
  server.serve();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  g_serving = nullptr;
  out_ << "annotation service stopped" << std::endl;
  return kExitOk;
}

int Runner::report() {
  std::string table;
  if (correlation_) {
    for (const auto& f : report_files_) {
      json doc;
      try {
        doc = json::parse(read_file(f));
      } catch (const json::parse_error& e) {
        throw ParseError(0, f + ": " + e.what());
      }
      if (report_files_.size() > 1) table += "== " + fs::path(f).filename().string() + "\n";
      table += render_correlation(doc);
    }
  } else {
    std::vector<RunSummary> runs;
    for (const auto& f : report_files_) {
      try {
        runs.push_back(parse_run_summary(read_file(f), scope_, fs::path(f).stem().string()));
      } catch (const ParseError& e) {
        throw ParseError(0, f + ": " + e.what());
      }
    }
    table = render_comparison_table(std::move(runs));
  }
  out_ << table;
  if (!out_path_.empty()) write_file_atomic(out_path_, table);
  return kExitOk;
}

int Runner::stats() {
  std::ifstream in(verdicts_path_, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + verdicts_path_);
  out_ << render_corruption_table(corruption_stats(read_verdicts(in)));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const RunHooks& hooks) {
  Runner runner(out, err, hooks);
  return runner.run(args);
}

}  // namespace persona_eval::cli
