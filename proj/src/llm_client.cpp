#include "vidcomp/llm_client.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "vidcomp/error.hpp"
#include "vidcomp_assets.hpp"

namespace vidcomp {

namespace {

std::string substitute(std::string_view tmpl, std::string_view key, std::string_view value) {
  std::string out(tmpl);
  const std::string needle = fmt::format("{{{}}}", key);
  for (auto pos = out.find(needle); pos != std::string::npos;
       pos = out.find(needle, pos + value.size())) {
    out.replace(pos, needle.size(), value);
  }
  return out;
}

}  // namespace

std::string_view prompt_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::Reorder: return assets::kPromptReorder;
    case PromptKind::Structure: return assets::kPromptStructure;
    case PromptKind::ActionReplace: return assets::kPromptActionReplace;
  }
  return {};
}

std::string_view choice_prompt_template() { return assets::kPromptChoice; }

std::string render_prompt(PromptKind kind, std::string_view paragraph) {
  return substitute(prompt_template(kind), "paragraph", paragraph);
}

std::string render_choice_prompt(std::string_view candidate_1, std::string_view candidate_2) {
  // Substitute the second slot first so candidate text containing
  // "{paragraph_2}" is never expanded.
  auto out = substitute(choice_prompt_template(), "paragraph_2", candidate_2);
  return substitute(out, "paragraph_1", candidate_1);
}

UrlParts split_url(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (!url.starts_with(scheme)) {
    throw Error(ErrorKind::InvalidInput, fmt::format("unsupported endpoint URL '{}'", url));
  }
  const auto slash = url.find('/', scheme.size());
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

HttpLlmClient::HttpLlmClient(HttpLlmConfig config) : config_(std::move(config)) {
  split_url(config_.url);
}

std::string HttpLlmClient::complete(const std::string& prompt) {
  const auto parts = split_url(config_.url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", fmt::format("Bearer {}", key));
  }
  const nlohmann::json body{
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  auto res = client.Post(parts.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::LLMUnavailable,
                fmt::format("LLM request failed: {}", httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::LLMUnavailable, fmt::format("LLM endpoint returned HTTP {}", res->status));
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::LLMUnavailable, fmt::format("malformed LLM response: {}", e.what()));
  }
}

}  // namespace vidcomp
