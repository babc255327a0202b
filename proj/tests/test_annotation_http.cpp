#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "persona_eval/annotation_server.hpp"
#include "persona_eval/errors.hpp"
#include "test_support.hpp"

using namespace persona_eval;
using nlohmann::json;
using testing_support::TempDir;

namespace {

class HttpFixture : public ::testing::Test {
 protected:
  void start(AnnotationServerOptions options = {}) {
    store_ = std::make_unique<AnnotationStore>(dir_.path() / "data");
    server_ = std::make_unique<AnnotationServer>(*store_, std::move(options));
    const auto port = server_->bind("127.0.0.1", 0);
    ASSERT_TRUE(port.has_value());
    thread_ = std::thread([this] { server_->serve(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", *port);
    for (int i = 0; i < 200 && !server_->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  void TearDown() override {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string create_session(std::size_t sample_size = 3) {
    const json body = {{"dialogues", testing_support::fixture("corpus/dialogues.jsonl")},
                       {"extractions", testing_support::fixture("corpus/extractions.jsonl")},
                       {"sample_size", sample_size},
                       {"seed", 5}};
    const auto res = client_->Post("/api/session", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201) << res->body;
    const auto doc = json::parse(res->body);
    EXPECT_EQ(doc.at("tasks"), sample_size);
    return doc.at("session_id").get<std::string>();
  }

  std::pair<int, json> get(const std::string& path) {
    const auto res = client_->Get(path);
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> post(const std::string& path, const json& body) {
    const auto res = client_->Post(path, body.dump(), "application/json");
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body)};
  }

  TempDir dir_;
  std::unique_ptr<AnnotationStore> store_;
  std::unique_ptr<AnnotationServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
};

AutoEvaluator stub_evaluator() {
  return [](const Dialogue& d, const ExtractionRecord& r) {
    static const StubEmbedder e;
    static const StubClassifier c;
    EvalConfig cfg;
    cfg.empty_denominator_policy = EmptyDenominatorPolicy::skip_sample;
    auto ev = evaluate_sample(d, r, e, c, cfg);
    return AutoResult{ev.counts, ev.outcome};
  };
}

}  // namespace

TEST_F(HttpFixture, FullAnnotationFlow) {
  start({std::nullopt, stub_evaluator()});
  const auto s = create_session(3);

  for (std::size_t i = 0; i < 3; ++i) {
    const auto [status, task] = get("/api/session/" + s + "/next?annotator=ann&show_auto=1");
    ASSERT_EQ(status, 200);
    EXPECT_FALSE(task.at("done").get<bool>());
    EXPECT_EQ(task.at("task_id"), i);
    EXPECT_EQ(task.at("progress").at("done"), i);
    EXPECT_EQ(task.at("progress").at("total"), 3);
    EXPECT_TRUE(task.at("dialogue").get<std::string>().starts_with("bot_"));
    EXPECT_TRUE(task.contains("auto_outcome"));
    json pairs = json::array();
    if (!task.at("extracted").empty() && !task.at("target").empty()) pairs.push_back({0, 0});
    const auto [st, ack] = post("/api/session/" + s + "/decision",
                                {{"task_id", i}, {"annotator", "ann"}, {"pairs", pairs}, {"notes", "ok"}});
    ASSERT_EQ(st, 200) << ack.dump();
    EXPECT_EQ(ack.at("progress").at("done"), i + 1);
  }
  const auto [status, done] = get("/api/session/" + s + "/next?annotator=ann");
  EXPECT_EQ(status, 200);
  EXPECT_TRUE(done.at("done").get<bool>());

  const auto [ms, metrics] = get("/api/session/" + s + "/metrics?annotator=ann");
  ASSERT_EQ(ms, 200) << metrics.dump();
  EXPECT_TRUE(metrics.contains("precision"));

  const auto [cs, corr] = get("/api/session/" + s + "/correlation?annotator=ann");
  ASSERT_EQ(cs, 200) << corr.dump();
  EXPECT_EQ(corr.at("sample_size"), 3);
  EXPECT_EQ(corr.at("series").size(), 4u);

  const auto [ls, list] = get("/api/sessions");
  EXPECT_EQ(ls, 200);
  EXPECT_EQ(list.at("sessions"), json::array({s}));
  EXPECT_EQ(store_->log_size(s), 3u);
}

TEST_F(HttpFixture, ErrorStatuses) {
  start();
  const auto s = create_session(2);
  EXPECT_EQ(get("/api/session/nope/next?annotator=a").first, 404);
  EXPECT_EQ(get("/api/session/" + s + "/next").first, 400);
  EXPECT_EQ(get("/api/session/" + s + "/metrics?annotator=a").first, 409);
  EXPECT_EQ(post("/api/session/" + s + "/decision", {{"task_id", 99}, {"annotator", "a"}, {"pairs", json::array()}})
                .first,
            404);
  EXPECT_EQ(post("/api/session/" + s + "/decision", {{"task_id", 0}, {"annotator", "a"}, {"pairs", {{50, 0}}}})
                .first,
            400);
  EXPECT_EQ(post("/api/session/" + s + "/decision", {{"task_id", 0}, {"annotator", "a"}}).first, 400);
  const json too_many = {{"dialogues", testing_support::fixture("corpus/dialogues.jsonl")},
                         {"extractions", testing_support::fixture("corpus/extractions.jsonl")},
                         {"sample_size", 1000}};
  EXPECT_EQ(post("/api/session", too_many).first, 409);
  const json missing = {{"dialogues", (dir_.path() / "none.jsonl").string()},
                        {"extractions", testing_support::fixture("corpus/extractions.jsonl")},
                        {"sample_size", 1}};
  const auto [ms, err] = post("/api/session", missing);
  EXPECT_EQ(ms, 400);
  EXPECT_NE(err.at("error").get<std::string>().find("none.jsonl"), std::string::npos);

  const auto raw = client_->Post("/api/session", "{not json", "application/json");
  ASSERT_TRUE(raw);
  EXPECT_EQ(raw->status, 400);
}

TEST_F(HttpFixture, CorrelationWithoutAutoResults) {
  start();
  const auto s = create_session(1);
  ASSERT_EQ(post("/api/session/" + s + "/decision", {{"task_id", 0}, {"annotator", "a"}, {"pairs", json::array()}})
                .first,
            200);
  EXPECT_EQ(get("/api/session/" + s + "/correlation?annotator=a").first, 409);
}

TEST_F(HttpFixture, ServesPlaceholderOrBundle) {
  start();
  auto res = client_->Get("/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_NE(res->body.find("/api"), std::string::npos);
}

TEST_F(HttpFixture, ServesUiBundle) {
  const auto ui = dir_.path() / "ui";
  std::filesystem::create_directories(ui);
  testing_support::write_text(ui / "index.html", "<html>bundle</html>");
  start({ui, {}});
  auto res = client_->Get("/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>bundle</html>");
}

TEST(AnnotationServer, PortInUse) {
  TempDir dir;
  AnnotationStore store(dir.path());
  AnnotationServer first(store, {});
  const auto port = first.bind("127.0.0.1", 0);
  ASSERT_TRUE(port);
  AnnotationServer second(store, {});
  EXPECT_FALSE(second.bind("127.0.0.1", *port).has_value());
  EXPECT_THROW(second.serve(), InvalidArgument);
}
