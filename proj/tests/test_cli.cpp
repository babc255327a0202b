#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "config.hpp"
#include "httplib.h"
#include "json.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/translation_qa.hpp"
#include "test_support.hpp"

using namespace persona_eval;
using nlohmann::json;
using testing_support::fixture;
using testing_support::read_text;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const cli::RunHooks& hooks = {}) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err, hooks);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* v : {"PE_EMBED_URL", "PE_CLASSIFY_URL", "PE_GRAMMAR_URL", "PE_TRANSLATE_URL", "PE_BEARER_TOKEN",
                          "PE_CONFIG"}) {
      ::unsetenv(v);
    }
  }
  void TearDown() override { SetUp(); }

  TempDir dir;
};

std::vector<std::string> evaluate_args(const std::string& out, const std::string& jobs) {
  return {"--stub-backends",
          "--jobs",
          jobs,
          "evaluate",
          "--dialogues",
          fixture("corpus/dialogues.jsonl"),
          "--extractions",
          fixture("corpus/extractions.jsonl"),
          "--out",
          out,
          "--name",
          "golden"};
}

}  // namespace

TEST_F(Cli, EvaluateMatchesGoldenReport) {
  const auto golden = read_text(fixture("corpus/golden_report.json"));
  ASSERT_FALSE(golden.empty());
  for (const auto* jobs : {"1", "3", "8"}) {
    const auto out = dir / (std::string("report_") + jobs + ".json");
    const auto r = run_cli(evaluate_args(out.string(), jobs));
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(read_text(out), golden) << "jobs=" << jobs;
  }
}

TEST_F(Cli, EvaluateWritesSummaryAndManifest) {
  const auto out = dir / "r.json";
  const auto r = run_cli(evaluate_args(out.string(), "2"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("micro"), std::string::npos);
  const auto manifest = json::parse(read_text(dir / "r.json.manifest.json"));
  EXPECT_EQ(manifest.at("command"), "evaluate");
  EXPECT_EQ(manifest.at("tool"), "persona-eval");
  EXPECT_EQ(manifest.at("config").at("sources").at("stub_backends"), "flag");
  EXPECT_EQ(manifest.at("config").at("sources").at("jobs"), "flag");
  EXPECT_EQ(manifest.at("inputs").at("dialogues"), fixture("corpus/dialogues.jsonl"));
  EXPECT_TRUE(manifest.contains("started_at"));
  EXPECT_TRUE(manifest.contains("finished_at"));
}

TEST_F(Cli, PerfectExtractionScoresOne) {
  const auto out = dir / "p.json";
  const auto r = run_cli({"--stub-backends", "evaluate", "--dialogues", fixture("corpus/dialogues.jsonl"),
                          "--extractions", fixture("corpus/perfect.jsonl"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(read_text(out));
  for (const auto* scope : {"micro", "macro"}) {
    EXPECT_DOUBLE_EQ(doc.at(scope).at("precision").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(doc.at(scope).at("recall").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(doc.at(scope).at("f1").get<double>(), 1.0);
  }
}

TEST_F(Cli, MissingInputIsInputError) {
  const auto missing = (dir / "absent.jsonl").string();
  const auto r = run_cli({"--stub-backends", "evaluate", "--dialogues", missing, "--extractions",
                          fixture("corpus/extractions.jsonl"), "--out", (dir / "x.json").string()});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find(missing), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.json"));
}

TEST_F(Cli, MalformedDatasetIsInputError) {
  const auto bad = dir / "bad.jsonl";
  write_text(bad, "{\"id\": \"x\"}\n");
  const auto r = run_cli({"--stub-backends", "evaluate", "--dialogues", bad.string(), "--extractions",
                          fixture("corpus/extractions.jsonl"), "--out", (dir / "x.json").string()});
  EXPECT_EQ(r.code, cli::kExitInput);
}

TEST_F(Cli, NoBackendIsBackendError) {
  const auto r = run_cli({"evaluate", "--dialogues", fixture("corpus/dialogues.jsonl"), "--extractions",
                          fixture("corpus/extractions.jsonl"), "--out", (dir / "x.json").string()});
  EXPECT_EQ(r.code, cli::kExitBackend);
  EXPECT_NE(r.err.find("PE_EMBED_URL"), std::string::npos);
  EXPECT_NE(r.err.find("--stub-backends"), std::string::npos);
}

TEST_F(Cli, UnreachableBackendIsBackendError) {
  const auto r = run_cli({"evaluate", "--dialogues", fixture("corpus/dialogues.jsonl"), "--extractions",
                          fixture("corpus/extractions.jsonl"), "--out", (dir / "x.json").string(), "--embed-url",
                          "http://127.0.0.1:1", "--classify-url", "http://127.0.0.1:1"});
  EXPECT_EQ(r.code, cli::kExitBackend);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"evaluate"}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.code, cli::kExitOk);
  EXPECT_FALSE(v.out.empty());
  const auto bad_tau = run_cli({"--stub-backends", "evaluate", "--dialogues", fixture("corpus/dialogues.jsonl"),
                                "--extractions", fixture("corpus/extractions.jsonl"), "--out",
                                (dir / "x.json").string(), "--tau-sim", "1.5"});
  EXPECT_EQ(bad_tau.code, cli::kExitInput);
  const auto bad_agg = run_cli({"--stub-backends", "evaluate", "--dialogues", fixture("corpus/dialogues.jsonl"),
                                "--extractions", fixture("corpus/extractions.jsonl"), "--out",
                                (dir / "x.json").string(), "--aggregation", "median"});
  EXPECT_EQ(bad_agg.code, cli::kExitInput);
}

TEST_F(Cli, FilterTranslationsRepairsAndReports) {
  const auto out = dir / "fixed.jsonl";
  const auto r = run_cli({"--stub-backends", "filter-translations", "--in", fixture("translation/translated.jsonl"),
                          "--source", fixture("translation/source.jsonl"), "--out", out.string(), "--stats",
                          (dir / "table.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0.33"), std::string::npos);
  EXPECT_EQ(read_text(dir / "table.txt"), r.out);
  const auto fixed = load_dialogues(out);
  ASSERT_EQ(fixed.size(), 1u);
  EXPECT_EQ(fixed[0].turns[1].text, "[tx]I prefer coffee.");
  EXPECT_EQ(fixed[0].turns[0].text, "Я люблю чай.");
  std::ifstream vin(dir / "fixed.jsonl.verdicts.jsonl");
  const auto verdicts = read_verdicts(vin);
  EXPECT_EQ(verdicts.size(), 5u);

  const auto s = run_cli({"stats", (dir / "fixed.jsonl.verdicts.jsonl").string()});
  EXPECT_EQ(s.code, 0);
  EXPECT_EQ(s.out, r.out);
}

TEST_F(Cli, FilterTranslationsCleanInput) {
  const auto out = dir / "clean_out.jsonl";
  const auto r = run_cli({"--stub-backends", "filter-translations", "--in", fixture("translation/clean.jsonl"),
                          "--source", fixture("translation/source.jsonl"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0.00"), std::string::npos);
  EXPECT_EQ(r.out.find("0.33"), std::string::npos);
  EXPECT_EQ(load_dialogues(out), load_dialogues(fixture("translation/clean.jsonl")));
}

TEST_F(Cli, FilterTranslationsThresholdZeroKeepsEverything) {
  const auto out = dir / "t0.jsonl";
  const auto r = run_cli({"--stub-backends", "filter-translations", "--in", fixture("translation/translated.jsonl"),
                          "--source", fixture("translation/source.jsonl"), "--out", out.string(), "--tau-gram",
                          "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_dialogues(out), load_dialogues(fixture("translation/translated.jsonl")));
}

TEST_F(Cli, BuildClassifierData) {
  const auto dialogues = fixture("corpus/dialogues.jsonl");
  const auto a = run_cli({"--stub-backends", "--seed", "3", "build-cls-data", "--in", dialogues, "--out",
                          (dir / "a.jsonl").string()});
  const auto b = run_cli({"--seed", "3", "build-cls-data", "--in", dialogues, "--out", (dir / "b.jsonl").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_text(dir / "a.jsonl"), read_text(dir / "b.jsonl"));
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("examples=", 0), 0u);
  const auto manifest = json::parse(read_text(dir / "a.jsonl.manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 3);
}

TEST_F(Cli, ReportComparisonTable) {
  const auto r1 = dir / "alpha.json";
  const auto r2 = dir / "beta.json";
  write_text(r1, R"({"name":"alpha","micro":{"precision":0.811,"recall":0.588}})");
  write_text(r2, R"({"micro":{"precision":0.902,"recall":0.749},"auxiliary":{"rougeL":0.4}})");
  const auto r = run_cli({"report", r1.string(), r2.string(), "--out", (dir / "table.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(r.out.find("beta"), r.out.find("alpha"));
  EXPECT_NE(r.out.find("0.818"), std::string::npos);
  EXPECT_NE(r.out.find("0.682"), std::string::npos);
  EXPECT_EQ(read_text(dir / "table.txt"), r.out);

  write_text(dir / "broken.json", "{");
  const auto bad = run_cli({"report", (dir / "broken.json").string()});
  EXPECT_EQ(bad.code, cli::kExitInput);
  EXPECT_NE(bad.err.find("broken.json"), std::string::npos);
  EXPECT_EQ(run_cli({"report", r1.string(), "--scope", "weighted"}).code, cli::kExitInput);
}

TEST_F(Cli, ReportCorrelationDocument) {
  const auto doc = dir / "corr.json";
  write_text(doc, R"({"sample_size":3,"series":[{"name":"Total Extracted Personas","manual":[1,2,3],"automatic":[1,2,3],"r":1.0},{"name":"Flat","manual":[1,1,1],"automatic":[2,2,2],"r":null}],"manual":{"precision":0.5,"recall":0.5,"f1":0.5},"automatic":{"precision":0.6,"recall":0.4,"f1":0.48}})");
  const auto r = run_cli({"report", "--correlation", doc.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1.000"), std::string::npos);
  EXPECT_NE(r.out.find("undefined"), std::string::npos);
  EXPECT_NE(r.out.find("Sample size: 3"), std::string::npos);
  EXPECT_NE(r.out.find("0.600  0.400  0.480"), std::string::npos);
}

TEST_F(Cli, ServeOnBusyPortFails) {
  httplib::Server blocker;
  const int port = blocker.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  const auto r = run_cli({"--stub-backends", "serve", "--port", std::to_string(port), "--data-dir",
                          (dir / "data").string()});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("cannot listen"), std::string::npos);
}

TEST_F(Cli, ServeAnswersAndStops) {
  int seen_port = 0;
  std::string body;
  cli::RunHooks hooks;
  hooks.on_serving = [&](AnnotationServer& server, int port) {
    seen_port = port;
    std::thread([&server, &body, port] {
      for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
      httplib::Client client("127.0.0.1", port);
      if (auto res = client.Get("/api/sessions")) body = res->body;
      server.stop();
    }).detach();
  };
  const auto r = run_cli({"--stub-backends", "serve", "--port", "0", "--data-dir", (dir / "data").string()}, hooks);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_GT(seen_port, 0);
  EXPECT_EQ(json::parse(body).at("sessions"), json::array());
  EXPECT_NE(r.out.find("listening"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "data"));
}

TEST_F(Cli, ServeWithoutBackendsWarns) {
  cli::RunHooks hooks;
  hooks.on_serving = [](AnnotationServer& server, int) {
    std::thread([&server] {
      for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
      server.stop();
    }).detach();
  };
  const auto r = run_cli({"serve", "--port", "0", "--data-dir", (dir / "data").string()}, hooks);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("automatic results disabled"), std::string::npos);
}

TEST_F(Cli, ConfigPrecedence) {
  const auto cfg = dir / "config.json";
  write_text(cfg, R"({"tau_sim": 0.6, "tau_cls": 0.9, "seed": 5,
                      "backends": {"embedder": {"endpoint": "http://file:1", "bearer_token": "secret"}}})");
  ::setenv("PE_CONFIG", cfg.string().c_str(), 1);
  ::setenv("PE_EMBED_URL", "http://env:2", 1);

  cli::FlagOverrides flags;
  flags.tau_cls = 0.75;
  const auto s = cli::resolve_settings(flags);
  EXPECT_DOUBLE_EQ(s.eval.tau_sim, 0.6);
  EXPECT_EQ(s.sources.at("tau_sim"), "file");
  EXPECT_DOUBLE_EQ(s.eval.tau_cls, 0.75);
  EXPECT_EQ(s.sources.at("tau_cls"), "flag");
  EXPECT_EQ(s.seed, 5u);
  EXPECT_DOUBLE_EQ(s.eval.tau_gram, 0.5);
  EXPECT_EQ(s.sources.at("tau_gram"), "default");
  EXPECT_EQ(s.eval.empty_denominator_policy, EmptyDenominatorPolicy::skip_sample);
  EXPECT_EQ(s.backends.at(cli::Service::embedder).endpoint, "http://env:2");
  EXPECT_EQ(s.sources.at("backends.embedder"), "env");

  flags.endpoints[cli::Service::embedder] = "http://flag:3";
  const auto f = cli::resolve_settings(flags);
  EXPECT_EQ(f.backends.at(cli::Service::embedder).endpoint, "http://flag:3");
  const auto b = cli::backend_for(f, cli::Service::embedder);
  EXPECT_EQ(b.kind, BackendKind::remote);
  EXPECT_EQ(b.bearer_token, "secret");
  EXPECT_THROW(cli::backend_for(f, cli::Service::grammar), BackendUnavailable);

  const auto j = cli::settings_to_json(f);
  EXPECT_EQ(j.dump().find("secret"), std::string::npos);
}

TEST_F(Cli, ConfigFileErrors) {
  const auto unknown = dir / "unknown.json";
  write_text(unknown, R"({"tau_simm": 0.6})");
  cli::FlagOverrides flags;
  flags.config_file = unknown;
  EXPECT_THROW(cli::resolve_settings(flags), InvalidArgument);
  const auto broken = dir / "broken.json";
  write_text(broken, "{");
  flags.config_file = broken;
  EXPECT_THROW(cli::resolve_settings(flags), ParseError);
  flags.config_file = dir / "missing.json";
  EXPECT_THROW(cli::resolve_settings(flags), InvalidArgument);

  const auto r = run_cli({"--config", broken.string(), "--stub-backends", "build-cls-data", "--in",
                          fixture("corpus/dialogues.jsonl"), "--out", (dir / "x.jsonl").string()});
  EXPECT_EQ(r.code, cli::kExitInput);
}
