#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that clashes
// with Eigen parameter names.
#include "vidcomp/error.hpp"
#include "vidcomp/evaluator.hpp"
#include "vidcomp/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace vidcomp;
using Json = nlohmann::json;

namespace {

// Localhost server on an ephemeral port, stopped on scope exit.
class MockServer {
 public:
  MockServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("prompt templates") {
  const auto reorder = render_prompt(PromptKind::Reorder, "A man runs. He stops.");
  CHECK(reorder.find("A man runs. He stops.") != std::string::npos);
  CHECK(reorder.find("{paragraph}") == std::string::npos);
  CHECK(prompt_template(PromptKind::Reorder).find("{paragraph}") != std::string::npos);
  for (auto k : {PromptKind::Structure, PromptKind::ActionReplace}) {
    CHECK(render_prompt(k, "XYZ").find("XYZ") != std::string::npos);
  }
  // A candidate that itself contains a placeholder is not expanded twice.
  const auto choice = render_choice_prompt("first {paragraph_2}", "second");
  CHECK(choice.find("first {paragraph_2}") != std::string::npos);
  CHECK(choice.find("second") != std::string::npos);
  CHECK(choice_prompt_template().find("{paragraph_1}") != std::string::npos);
}

TEST_CASE("url splitting") {
  const auto p = split_url("http://localhost:8080/v1/chat/completions");
  CHECK(p.origin == "http://localhost:8080");
  CHECK(p.path == "/v1/chat/completions");
  CHECK(split_url("http://host").path == "/");
  for (const char* bad : {"https://host/x", "ftp://host", "localhost:80/x", ""}) {
    try {
      split_url(bad);
      FAIL("expected InvalidInput");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidInput);
    }
  }
}

TEST_CASE("chat completion client") {
  MockServer mock;
  std::string seen_auth;
  Json seen_body;
  mock.server().Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = Json::parse(req.body);
    res.set_content(Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "rewritten"}}}}}}}.dump(),
                    "application/json");
  });
  mock.server().Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\": 1}", "application/json");
  });
  mock.server().Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });

  ::setenv("VIDCOMP_TEST_KEY", "secret", 1);
  HttpLlmClient client({mock.url("/v1/chat"), "m1", "VIDCOMP_TEST_KEY"});
  CHECK(client.complete("hello") == "rewritten");
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_body["model"] == "m1");
  CHECK(seen_body["messages"][0]["role"] == "user");
  CHECK(seen_body["messages"][0]["content"] == "hello");

  HttpLlmClient anonymous({mock.url("/v1/chat"), "m1", "VIDCOMP_TEST_UNSET_KEY"});
  anonymous.complete("x");
  CHECK(seen_auth.empty());

  for (const auto& path : {"/broken", "/down"}) {
    HttpLlmClient c({mock.url(path), "m", "VIDCOMP_TEST_KEY"});
    try {
      c.complete("x");
      FAIL("expected LLMUnavailable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::LLMUnavailable);
    }
  }

  HttpLlmConfig closed{"http://127.0.0.1:1/x", "m", "VIDCOMP_TEST_KEY", std::chrono::seconds(2)};
  HttpLlmClient refused(closed);
  try {
    refused.complete("x");
    FAIL("expected LLMUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LLMUnavailable);
  }
}

TEST_CASE("choice endpoint scorer") {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server().Post("/choose", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = Json::parse(req.body);
    CHECK(body["prompt"].get<std::string>().find(body["candidate_2"].get<std::string>()) != std::string::npos);
    const bool first_is_pos = body["candidate_1"].get<std::string>().rfind("pos", 0) == 0;
    res.set_content(first_is_pos ? "1\n" : " 2", "text/plain");
  });

  std::vector<CompSample> samples;
  for (int i = 0; i < 20; ++i) {
    NegativeSample n;
    n.text = "neg " + std::to_string(i);
    samples.push_back({"v" + std::to_string(i), TimeInterval(0, 5), "pos " + std::to_string(i), {n}, Split::Val});
  }
  eval::HttpChoiceScorer scorer(mock.url("/choose"));
  const auto t = eval::binary_choice_eval(samples, scorer, 1, 4);
  const auto& tally = t.by_type.at(Disruption::atomic(DisruptionKind::TempReorder));
  CHECK(tally.total == 20);
  CHECK(tally.correct == 20);
  CHECK(calls == 20);

  eval::HttpChoiceScorer dead("http://127.0.0.1:1/choose", std::chrono::seconds(2));
  try {
    eval::binary_choice_eval(samples, dead, 1, 2);
    FAIL("expected EmptyEvaluation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyEvaluation);
  }
}
