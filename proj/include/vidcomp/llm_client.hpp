#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace vidcomp {

enum class PromptKind { Reorder, Structure, ActionReplace };

/// Template text with "{paragraph}" substituted. Reorder is the benchmark's
/// published reorder instruction; the other two follow the same pattern.
std::string render_prompt(PromptKind kind, std::string_view paragraph);

/// Binary-choice prompt for generative scorers.
std::string render_choice_prompt(std::string_view candidate_1, std::string_view candidate_2);

std::string_view prompt_template(PromptKind kind);
std::string_view choice_prompt_template();

/// Text-completion backend. Implementations throw Error(LLMUnavailable) on
/// transport failure or an unusable response.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpLlmConfig {
  std::string url;  // e.g. http://localhost:8080/v1/chat/completions
  std::string model;
  std::string api_key_env = "VIDCOMP_LLM_API_KEY";
  std::chrono::seconds timeout{60};
};

/// Chat-completion over JSON/HTTP: POSTs {"model", "messages": [{"role":
/// "user", "content": prompt}]} and reads choices[0].message.content.
/// One request at a time per client.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig config);
  std::string complete(const std::string& prompt) override;

 private:
  HttpLlmConfig config_;
};

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

/// Splits an http URL; throws Error(InvalidInput) for anything else.
UrlParts split_url(std::string_view url);

}  // namespace vidcomp
