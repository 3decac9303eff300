#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "sdmia/backends/http.hpp"

#include <cstdlib>
#include <regex>

#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"

namespace sdmia::backends {

namespace {

struct Response {
  int status = 0;
  std::string body;
};

httplib::Headers AuthHeaders(const HttpConfig& c) {
  httplib::Headers h;
  if (!c.auth_env.empty()) {
    const char* token = std::getenv(c.auth_env.c_str());
    if (!token || !*token) {
      throw Error(ErrorCode::kValidation,
                  c.name + ": environment variable " + c.auth_env + " is not set");
    }
    h.emplace("Authorization", std::string("Bearer ") + token);
  }
  return h;
}

std::unique_ptr<httplib::Client> MakeClient(const HttpConfig& c, const std::string& base) {
  auto cli = std::make_unique<httplib::Client>(base);
  const auto secs = static_cast<time_t>(c.timeout_s);
  const auto usecs = static_cast<time_t>((c.timeout_s - static_cast<double>(secs)) * 1e6);
  cli->set_connection_timeout(secs, usecs);
  cli->set_read_timeout(secs, usecs);
  cli->set_write_timeout(secs, usecs);
  cli->set_follow_location(true);
  return cli;
}

std::optional<double> RetryAfter(const httplib::Response& r) {
  if (!r.has_header("Retry-After")) return std::nullopt;
  const std::string v = r.get_header_value("Retry-After");
  char* end = nullptr;
  const double secs = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || secs < 0) return std::nullopt;  // HTTP-date form not supported
  return secs;
}

void Trace(const HttpConfig& c, const std::string& dir, const std::string& text) {
  if (!c.tracer) return;
  constexpr std::size_t kMax = 4096;
  c.tracer->Log(c.name, dir,
                text.size() > kMax ? text.substr(0, kMax) + "...(" + std::to_string(text.size()) +
                                         " bytes)"
                                   : text);
}

// Sends the request and maps statuses onto the retry taxonomy. Non-2xx
// responses other than 429/5xx are returned to the caller to classify.
Response Send(const HttpConfig& c, const std::string& url, const std::string* json_body) {
  const ParsedUrl u = ParseUrl(url);
  auto cli = MakeClient(c, u.scheme_host_port);
  httplib::Headers headers = AuthHeaders(c);
  if (c.tracer) {
    std::string head = (json_body ? "POST " : "GET ") + url;
    for (const auto& [k, v] : headers) head += "\n" + k + ": " + v;
    Trace(c, ">>", head + (json_body ? "\n" + *json_body : ""));
  }
  httplib::Result res = json_body ? cli->Post(u.path, headers, *json_body, "application/json")
                                  : cli->Get(u.path, headers);
  if (!res) {
    const std::string why = httplib::to_string(res.error());
    Trace(c, "!!", why);
    throw TransientError(c.name + ": transport error: " + why);
  }
  Trace(c, "<<", std::to_string(res->status) + " " + res->body);
  if (res->status == 429) {
    throw TransientError(c.name + ": rate limited (429)", 429, RetryAfter(*res));
  }
  if (res->status >= 500) {
    throw TransientError(c.name + ": server error " + std::to_string(res->status), res->status,
                         RetryAfter(*res));
  }
  return {res->status, res->body};
}

nlohmann::json PostJson(const HttpConfig& c, const nlohmann::ordered_json& body) {
  const std::string payload = body.dump();
  Response r = Send(c, c.endpoint, &payload);
  if (r.status < 200 || r.status >= 300) {
    throw Error(ErrorCode::kBackend,
                c.name + ": HTTP " + std::to_string(r.status) + ": " + r.body.substr(0, 200));
  }
  try {
    return nlohmann::json::parse(r.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackend, c.name + ": response is not JSON: " + e.what());
  }
}

Vec FirstVector(const HttpConfig& c, const nlohmann::json& j) {
  try {
    if (j.contains("vectors")) return j.at("vectors").at(0).get<Vec>();
    if (j.contains("data")) return j.at("data").at(0).at("embedding").get<Vec>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackend, c.name + ": malformed embedding response: " + e.what());
  }
  throw Error(ErrorCode::kBackend, c.name + ": embedding response has no vectors");
}

bool LooksLikeRefusal(const std::string& body) {
  static const std::regex kPattern("content[_ ]policy|moderation|refus|safety|nsfw",
                                   std::regex::icase);
  return std::regex_search(body, kPattern);
}

}  // namespace

ParsedUrl ParseUrl(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[A-Za-z0-9.\-\[\]:]+?)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw Error(ErrorCode::kValidation, "malformed endpoint URL \"" + url + "\"");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string FetchUrl(const std::string& url, double timeout_s) {
  HttpConfig c;
  c.name = "fetch";
  c.timeout_s = timeout_s;
  Response r = Send(c, url, nullptr);
  if (r.status < 200 || r.status >= 300) {
    throw Error(ErrorCode::kBackend, "GET " + url + " returned HTTP " + std::to_string(r.status));
  }
  return std::move(r.body);
}

ImageResult HttpGenerator::Generate(const std::string& prompt, std::uint64_t seed,
                                    const GenerationParams& params) {
  nlohmann::ordered_json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["prompt"] = prompt;
  body["seed"] = seed;
  body["size"] = std::to_string(params.width) + "x" + std::to_string(params.height);
  body["n"] = 1;
  body["guidance"] = params.guidance;
  body["steps"] = params.steps;
  const std::string payload = body.dump();
  Response r = Send(config_, config_.endpoint, &payload);
  if (r.status == 451 || ((r.status == 400 || r.status == 403) && LooksLikeRefusal(r.body))) {
    return {true, {}, r.body.substr(0, 200)};
  }
  if (r.status < 200 || r.status >= 300) {
    throw Error(ErrorCode::kBackend, config_.name + ": HTTP " + std::to_string(r.status) + ": " +
                                         r.body.substr(0, 200));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(r.body);
    const auto& item = j.at("data").at(0);
    if (item.contains("b64_json")) {
      return {false, Base64Decode(item.at("b64_json").get<std::string>()), {}};
    }
    const std::string url = item.at("url").get<std::string>();
    Response img = Send(config_, url, nullptr);
    if (img.status < 200 || img.status >= 300) {
      throw Error(ErrorCode::kBackend,
                  config_.name + ": image download failed with HTTP " + std::to_string(img.status));
    }
    return {false, std::move(img.body), {}};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackend, config_.name + ": malformed generation response: " + e.what());
  }
}

Vec HttpTextEmbedder::EmbedText(const std::string& text) {
  nlohmann::ordered_json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["input"] = nlohmann::ordered_json::array({text});
  return FirstVector(config_, PostJson(config_, body));
}

Vec HttpImageEmbedder::EmbedImage(std::string_view image_bytes) {
  nlohmann::ordered_json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["input"] = nlohmann::ordered_json::array({Base64Encode(image_bytes)});
  return FirstVector(config_, PostJson(config_, body));
}

std::string HttpCaptioner::Caption(std::string_view image_bytes) {
  nlohmann::ordered_json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["image"] = Base64Encode(image_bytes);
  const nlohmann::json j = PostJson(config_, body);
  try {
    return j.at("caption").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackend, config_.name + ": malformed caption response: " + e.what());
  }
}

std::string HttpRewriter::Rewrite(const std::string& instruction, std::uint64_t seed) {
  nlohmann::ordered_json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["seed"] = seed;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", instruction}}});
  const nlohmann::json j = PostJson(config_, body);
  try {
    return Trim(j.at("choices").at(0).at("message").at("content").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackend, config_.name + ": malformed chat response: " + e.what());
  }
}

}  // namespace sdmia::backends
