#include <fmt/format.h>
#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "selfpref/collector.hpp"
#include "selfpref/error.hpp"

using namespace selfpref;
using namespace std::chrono_literals;

namespace {

class StubEndpoint : public ChatEndpoint {
 public:
  using Handler = std::function<ChatResponse(const ChatRequest&)>;
  explicit StubEndpoint(Handler h) : handler_(std::move(h)) {}

  ChatResponse complete(const ChatRequest& request) override {
    ++calls;
    return handler_(request);
  }

  std::atomic<int> calls{0};

 private:
  Handler handler_;
};

ChatResponse logprob_response(double p_a, double p_b) {
  ChatResponse r;
  r.has_logprobs = true;
  r.first_token_top_logprobs = {{"A", std::log(p_a)}, {"B", std::log(p_b)}, {"\n", std::log(0.001)}};
  r.content = "A";
  return r;
}

PairTask task(const std::string& ex = "q1", const std::string& subject_text = "SUBJECT",
              const std::string& ref_text = "REFERENCE") {
  PairTask t;
  t.query = {"d", ex};
  t.judge = {"judge-model", "fj"};
  t.reference = {"ref-model", "fr"};
  t.subject = {"judge-model", "fj"};
  t.question = "What is 2+2?";
  t.subject_response = subject_text;
  t.reference_response = ref_text;
  t.outcome = 0;
  return t;
}

bool subject_first(const ChatRequest& r) { return r.prompt.find("SUBJECT") < r.prompt.find("REFERENCE"); }

const SleepFn kNoSleep = [](std::chrono::milliseconds) {};

}  // namespace

TEST(CollectPair, AveragesBothOrders) {
  StubEndpoint ep([](const ChatRequest& r) {
    EXPECT_EQ(r.model, "judge-model");
    EXPECT_EQ(r.max_tokens, 1);
    EXPECT_TRUE(r.logprobs);
    return subject_first(r) ? logprob_response(0.8, 0.2) : logprob_response(0.4, 0.6);
  });
  auto out = collect_pair(ep, {}, builtin_template("verifiable-math"), task(), kNoSleep);
  ASSERT_TRUE(out.record);
  EXPECT_FALSE(out.failure);
  EXPECT_NEAR(*out.record->p_subject_first, 0.8, 1e-12);
  EXPECT_NEAR(*out.record->p_subject_second, 0.6, 1e-12);
  EXPECT_NEAR(out.record->s, 0.7, 1e-12);
  EXPECT_EQ(ep.calls, 2);
}

TEST(CollectPair, IdenticalCandidatesAreSymmetric) {
  // A judge with a fixed lean toward the first slot.
  StubEndpoint ep([](const ChatRequest&) { return logprob_response(0.65, 0.35); });
  auto out = collect_pair(ep, {}, builtin_template("alpaca"), task("q", "same", "same"), kNoSleep);
  ASSERT_TRUE(out.record);
  EXPECT_NEAR(out.record->s, 0.5, 1e-12);
}

TEST(CollectPair, MissingLabelsAreACollectionFailure) {
  StubEndpoint ep([](const ChatRequest&) {
    ChatResponse r;
    r.has_logprobs = true;
    r.first_token_top_logprobs = {{"Sure", -0.1}, {"I", -2.0}};
    return r;
  });
  auto out = collect_pair(ep, {}, builtin_template("verifiable-math"), task(), kNoSleep);
  EXPECT_FALSE(out.record);
  ASSERT_TRUE(out.failure);
  EXPECT_FALSE(out.failure->partial);
  EXPECT_NE(out.failure->reason.find("label tokens absent"), std::string::npos);
}

TEST(CollectPair, MissingLogprobs) {
  StubEndpoint ep([](const ChatRequest&) { return ChatResponse{"A", {}, false}; });
  auto out = collect_pair(ep, {}, builtin_template("verifiable-math"), task(), kNoSleep);
  ASSERT_TRUE(out.failure);
  EXPECT_NE(out.failure->reason.find("missing logprobs"), std::string::npos);
}

TEST(CollectPair, OneSidedOnlyAfterPermanentEndpointFailure) {
  StubEndpoint ep([](const ChatRequest& r) -> ChatResponse {
    if (!subject_first(r)) throw EndpointError("HTTP 400", false, 400);
    return logprob_response(0.9, 0.1);
  });
  auto out = collect_pair(ep, {}, builtin_template("verifiable-math"), task(), kNoSleep);
  ASSERT_TRUE(out.record);
  EXPECT_TRUE(out.record->p_subject_first);
  EXPECT_FALSE(out.record->p_subject_second);
  ASSERT_TRUE(out.failure);
  EXPECT_TRUE(out.failure->partial);

  // An extraction failure on one order drops the whole pair.
  StubEndpoint half([](const ChatRequest& r) {
    if (!subject_first(r)) return ChatResponse{"", {{"Z", -0.1}}, true};
    return logprob_response(0.9, 0.1);
  });
  auto dropped = collect_pair(half, {}, builtin_template("verifiable-math"), task(), kNoSleep);
  EXPECT_FALSE(dropped.record);
  EXPECT_FALSE(dropped.failure->partial);
}

TEST(CollectPair, ChainOfThought) {
  StubEndpoint ep([](const ChatRequest& r) {
    EXPECT_FALSE(r.logprobs);
    EXPECT_EQ(r.max_tokens, 1024);
    // The judge always names the subject.
    return ChatResponse{
        subject_first(r) ? "Reasoning... My final verdict is $$A$$." : "Hmm. My final verdict is $$B$$.", {}, false};
  });
  auto out = collect_pair(ep, {}, builtin_template("cot-math"), task(), kNoSleep);
  ASSERT_TRUE(out.record);
  EXPECT_EQ(out.record->s, 1.0);

  StubEndpoint tie([](const ChatRequest&) { return ChatResponse{"My final verdict is $$T$$.", {}, false}; });
  EXPECT_EQ(collect_pair(tie, {}, builtin_template("cot-math"), task(), kNoSleep).record->s, 0.5);

  StubEndpoint bad([](const ChatRequest&) { return ChatResponse{"I refuse.", {}, false}; });
  auto failed = collect_pair(bad, {}, builtin_template("cot-math"), task(), kNoSleep);
  EXPECT_FALSE(failed.record);
  EXPECT_NE(failed.failure->reason.find("no_verdict_marker"), std::string::npos);
}

TEST(Retry, ExponentialJitteredBackoff) {
  int failures_left = 3;
  StubEndpoint ep([&](const ChatRequest&) -> ChatResponse {
    if (failures_left-- > 0) throw EndpointError("HTTP 503", true, 503);
    return logprob_response(0.5, 0.5);
  });
  std::vector<std::chrono::milliseconds> sleeps;
  RetryPolicy policy;
  complete_with_retry(ep, {}, policy, [&](auto d) { sleeps.push_back(d); });
  ASSERT_EQ(sleeps.size(), 3u);
  for (std::size_t i = 0; i < sleeps.size(); ++i) {
    const double nominal = 1000.0 * (1 << i);
    EXPECT_GE(sleeps[i].count(), nominal * 0.75 - 1);
    EXPECT_LE(sleeps[i].count(), nominal * 1.25 + 1);
  }
}

TEST(Retry, GivesUpAfterBudget) {
  StubEndpoint ep([](const ChatRequest&) -> ChatResponse { throw EndpointError("timeout", true); });
  int slept = 0;
  EXPECT_THROW(complete_with_retry(ep, {}, {}, [&](auto) { ++slept; }), EndpointError);
  EXPECT_EQ(ep.calls, 6);
  EXPECT_EQ(slept, 5);

  StubEndpoint permanent([](const ChatRequest&) -> ChatResponse { throw EndpointError("HTTP 401", false, 401); });
  EXPECT_THROW(complete_with_retry(permanent, {}, {}, kNoSleep), EndpointError);
  EXPECT_EQ(permanent.calls, 1);
}

TEST(CollectAll, BoundedConcurrencyAndInputOrder) {
  std::atomic<int> in_flight{0}, peak{0};
  StubEndpoint ep([&](const ChatRequest& r) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(2ms);
    --in_flight;
    return subject_first(r) ? logprob_response(0.7, 0.3) : logprob_response(0.3, 0.7);
  });
  std::vector<PairTask> tasks;
  for (int i = 0; i < 40; ++i) tasks.push_back(task(fmt::format("q{:02}", i)));
  CollectorConfig cfg;
  cfg.max_in_flight = 3;
  auto result = collect_all(ep, cfg, builtin_template("verifiable-math"), tasks, kNoSleep);
  EXPECT_LE(peak.load(), 3);
  EXPECT_GE(peak.load(), 2);
  ASSERT_EQ(result.records.size(), 40u);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(result.records.records()[i].query.example_id, fmt::format("q{:02}", i));
  EXPECT_TRUE(result.failures.empty());
}

TEST(PairTasks, ParseAndValidate) {
  const std::string good =
      R"({"dataset":"d","example_id":"1","judge":"j","judge_family":"fj","reference":"r","reference_family":"fr","subject":"j","subject_family":"fj","question":"q","subject_response":"a","reference_response":"b","outcome":1,"extra":{"article":"text"}})";
  auto tasks = parse_pair_tasks(good + "\n\n", "mem");
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].extra.at("article"), "text");
  EXPECT_EQ(tasks[0].outcome, 1);
  EXPECT_THROW(parse_pair_tasks(good + "\n" + good, "mem"), Error);
  auto tie = good;
  tie.replace(tie.find("\"outcome\":1"), 11, "\"outcome\":0.5");
  EXPECT_THROW(parse_pair_tasks(tie, "mem"), Error);
}

TEST(Failures, SidecarLines) {
  std::vector<CollectionFailure> f{{{"d", "q"}, "j", "s", "subject-first: missing logprobs", false}};
  auto text = serialize_failures(f);
  auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["example_id"], "q");
  EXPECT_EQ(j["partial"], false);
  EXPECT_EQ(text.back(), '\n');
}

TEST(ChatResponse, Parsing) {
  auto r = parse_chat_response(
      R"({"choices":[{"message":{"content":"A"},"logprobs":{"content":[{"token":"A","logprob":-0.2,"top_logprobs":[{"token":"A","logprob":-0.2},{"token":"B","logprob":-1.7}]}]}}]})");
  EXPECT_EQ(r.content, "A");
  ASSERT_TRUE(r.has_logprobs);
  EXPECT_EQ(r.first_token_top_logprobs.size(), 2u);
  EXPECT_FALSE(parse_chat_response(R"({"choices":[{"message":{"content":"x"}}]})").has_logprobs);
  EXPECT_THROW(parse_chat_response("{}"), Error);
  EXPECT_THROW(parse_chat_response("<html>"), Error);
}

class LocalServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      bodies_.push_back(req.body);
      auth_ = req.get_header_value("Authorization");
      if (fail_next_ > 0) {
        --fail_next_;
        res.status = 503;
        return;
      }
      if (reject_) {
        res.status = 400;
        return;
      }
      res.set_content(
          R"({"choices":[{"message":{"content":"A"},"logprobs":{"content":[{"token":"A","logprob":-0.1,"top_logprobs":[{"token":"A","logprob":-0.1},{"token":"B","logprob":-2.4}]}]}}]})",
          "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  EndpointConfig config() const {
    EndpointConfig c;
    c.url = fmt::format("http://127.0.0.1:{}/v1/chat/completions", port_);
    c.api_key_env = "SELFPREF_TEST_KEY";
    c.timeout = 5s;
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::vector<std::string> bodies_;
  std::string auth_;
  int fail_next_ = 0;
  bool reject_ = false;
};

TEST_F(LocalServer, RoundTripWithRetries) {
  ::setenv("SELFPREF_TEST_KEY", "secret-token", 1);
  fail_next_ = 2;
  HttpChatEndpoint ep(config());
  ChatRequest req;
  req.model = "m";
  req.prompt = "hello";
  int slept = 0;
  auto res = complete_with_retry(ep, req, {}, [&](auto) { ++slept; });
  EXPECT_EQ(slept, 2);
  ASSERT_TRUE(res.has_logprobs);
  EXPECT_NEAR(res.first_token_top_logprobs[1].logprob, -2.4, 1e-12);
  std::lock_guard lock(mu_);
  EXPECT_EQ(auth_, "Bearer secret-token");
  auto body = nlohmann::json::parse(bodies_.back());
  EXPECT_EQ(body["messages"][0]["content"], "hello");
  EXPECT_EQ(body["top_logprobs"], 20);
  EXPECT_EQ(body["temperature"], 0.0);
  ::unsetenv("SELFPREF_TEST_KEY");
}

TEST_F(LocalServer, PermanentStatusIsNotRetried) {
  reject_ = true;
  HttpChatEndpoint ep(config());
  try {
    complete_with_retry(ep, {}, {}, kNoSleep);
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_FALSE(e.transient());
    EXPECT_EQ(e.status(), 400);
  }
  std::lock_guard lock(mu_);
  EXPECT_EQ(bodies_.size(), 1u);
}

TEST(HttpEndpoint, UnreachableIsTransient) {
  EndpointConfig c;
  c.url = "http://127.0.0.1:1/v1/chat/completions";
  c.timeout = 1s;
  HttpChatEndpoint ep(c);
  try {
    ep.complete({});
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_TRUE(e.transient());
  }
  EXPECT_THROW(HttpChatEndpoint(EndpointConfig{"no-scheme", "", 1s}), Error);
}
