#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sdmia/backends/cache.hpp"
#include "sdmia/backends/client.hpp"
#include "sdmia/backends/http.hpp"
#include "sdmia/backends/stub.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/image.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/common/vec.hpp"

using namespace sdmia;
using namespace sdmia::backends;
namespace fs = std::filesystem;

namespace {

// An httplib server on an ephemeral port, stopped on destruction.
class TestServer {
 public:
  TestServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string Url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

struct Recorded {
  std::vector<double> sleeps;
  ClientOptions Options(int attempts = 4) {
    ClientOptions o;
    o.retry.max_attempts = attempts;
    o.retry.base_delay_ms = 10;
    o.sleep = [this](double ms) { sleeps.push_back(ms); };
    return o;
  }
};

BackendId Id(const std::string& name, BackendKind kind, const std::string& tag = "v1") {
  return {name, kind, "", tag};
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sdmia_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

HttpConfig Http(const std::string& name, const std::string& url) {
  HttpConfig c;
  c.name = name;
  c.endpoint = url;
  c.timeout_s = 5;
  return c;
}

class CountingCaptioner : public Captioner {
 public:
  std::string Caption(std::string_view) override {
    ++calls;
    return "a counted caption";
  }
  std::atomic<int> calls{0};
};

class WrongDimEmbedder : public TextEmbedder {
 public:
  std::size_t dim() const override { return 4; }
  Vec EmbedText(const std::string&) override { return Vec{1.0, 0.0, 0.0}; }
};

class SlowEmbedder : public TextEmbedder {
 public:
  std::size_t dim() const override { return 2; }
  Vec EmbedText(const std::string&) override {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return Vec{1.0, 1.0};
  }
  std::atomic<int> active{0}, peak{0};
};

}  // namespace

TEST_SUITE("stub backends") {
  TEST_CASE("deterministic, unit-norm and content sensitive") {
    StubTextEmbedder t(1, 32);
    CHECK(t.EmbedText("a dog") == t.EmbedText("a dog"));
    CHECK(Norm(t.EmbedText("a dog")) == doctest::Approx(1.0));
    CHECK(Cosine(t.EmbedText("a"), t.EmbedText("b")) < 1.0);
    StubImageEmbedder i(1, 32);
    CHECK(i.EmbedImage("bytes") == i.EmbedImage("bytes"));
    StubGenerator g;
    CHECK(g.Generate("p", 1, {}).bytes == g.Generate("p", 1, {}).bytes);
    CHECK(g.Generate("p", 1, {}).bytes != g.Generate("p", 2, {}).bytes);
    CHECK(LooksLikePnm(g.Generate("p", 1, {}).bytes));
    StubGenerator refusing("forbidden");
    CHECK(refusing.Generate("a forbidden thing", 1, {}).refused);
    StubCaptioner c;
    CHECK(c.Caption("x") == c.Caption("x"));
  }
}

TEST_SUITE("clients and cache") {
  TEST_CASE("a repeated request is served from the cache") {
    auto cache = std::make_shared<BlobCache>();
    auto ledger = std::make_shared<Ledger>();
    auto impl = std::make_shared<CountingCaptioner>();
    CaptionClient client(Id("cap", BackendKind::kCaption), impl, cache, ledger);
    CHECK(client.Caption("img") == "a counted caption");
    CHECK(client.Caption("img") == "a counted caption");
    CHECK(impl->calls == 1);
    const auto c = ledger->Get("cap");
    CHECK(c.requests == 2);
    CHECK(c.calls == 1);
    CHECK(c.cache_hits == 1);
  }

  TEST_CASE("embedding clients normalize and check the dimension") {
    auto cache = std::make_shared<BlobCache>();
    auto ledger = std::make_shared<Ledger>();
    TextEmbedClient ok(Id("t", BackendKind::kTextEmbed), std::make_shared<StubTextEmbedder>(3, 16), cache,
                       ledger);
    CHECK(Norm(ok.Embed("hello")) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ok.Embed("hello") == ok.Embed("hello"));
    TextEmbedClient bad(Id("w", BackendKind::kTextEmbed), std::make_shared<WrongDimEmbedder>(), cache, ledger);
    try {
      bad.Embed("x");
      FAIL("expected a dimension mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
    CHECK(ledger->Get("w").failures == 1);
  }

  TEST_CASE("disk cache persists across instances and changes with the version tag") {
    const fs::path root = TempDir("cache");
    auto ledger = std::make_shared<Ledger>();
    auto impl = std::make_shared<CountingCaptioner>();
    {
      CaptionClient c(Id("cap", BackendKind::kCaption), impl, std::make_shared<BlobCache>(root), ledger);
      c.Caption("img-a");
    }
    CHECK(fs::exists(root / "cap" / "index.jsonl"));
    {
      CaptionClient c(Id("cap", BackendKind::kCaption), impl, std::make_shared<BlobCache>(root), ledger);
      c.Caption("img-a");
      CHECK(impl->calls == 1);
      CaptionClient v2(Id("cap", BackendKind::kCaption, "v2"), impl, std::make_shared<BlobCache>(root),
                       ledger);
      v2.Caption("img-a");
      CHECK(impl->calls == 2);
    }
    CHECK(BlobCache::Key("v1", "req") != BlobCache::Key("v2", "req"));
    fs::remove_all(root);
  }

  TEST_CASE("a torn trailing index line is ignored") {
    const fs::path root = TempDir("torn");
    BlobCache a(root);
    a.Put("ns", "k1", {false, "one"});
    a.Put("ns", "k2", {true, ""});
    {
      std::ofstream idx(root / "ns" / "index.jsonl", std::ios::app);
      idx << "{\"key\": \"k3\", \"sta";
    }
    BlobCache b(root);
    REQUIRE(b.Get("ns", "k1"));
    CHECK(b.Get("ns", "k1")->bytes == "one");
    CHECK(b.Get("ns", "k2")->refused);
    CHECK_FALSE(b.Get("ns", "k3"));
    CHECK(b.Size("ns") == 2);
    fs::remove_all(root);
  }

  TEST_CASE("cache-only mode turns a miss into an error without calling out") {
    auto cache = std::make_shared<BlobCache>();
    auto ledger = std::make_shared<Ledger>();
    auto impl = std::make_shared<CountingCaptioner>();
    ClientOptions o;
    o.cache_only = true;
    CaptionClient c(Id("cap", BackendKind::kCaption), impl, cache, ledger, o);
    try {
      c.Caption("img");
      FAIL("expected a cache miss");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCacheMiss);
    }
    CHECK(impl->calls == 0);
  }

  TEST_CASE("in-flight limit caps concurrency") {
    auto impl = std::make_shared<SlowEmbedder>();
    ClientOptions o;
    o.max_in_flight = 2;
    TextEmbedClient c(Id("slow", BackendKind::kTextEmbed), impl, std::make_shared<BlobCache>(),
                      std::make_shared<Ledger>(), o);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 4; ++i) c.Embed("text " + std::to_string(t) + " " + std::to_string(i));
      });
    }
    for (auto& th : threads) th.join();
    CHECK(impl->peak <= 2);
    CHECK(impl->peak >= 1);
  }

  TEST_CASE("ledger JSON round trip") {
    Ledger l;
    LedgerCounters d;
    d.requests = 3;
    d.calls = 2;
    d.cache_hits = 1;
    l.Add("gen", d);
    l.Add("gen", d);
    const auto back = Ledger::FromJson(nlohmann::json::parse(l.ToJson().dump()));
    CHECK(back.at("gen").requests == 6);
    CHECK(back.at("gen").calls == 4);
  }
}

TEST_SUITE("http adapters") {
  TEST_CASE("two 429s then success takes three attempts and honors Retry-After") {
    TestServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/cap", [&](const httplib::Request&, httplib::Response& res) {
      if (++hits <= 2) {
        res.status = 429;
        res.set_header("Retry-After", "2");
        return;
      }
      res.set_content(R"({"caption": "served caption"})", "application/json");
    });
    Recorded rec;
    auto ledger = std::make_shared<Ledger>();
    CaptionClient c(Id("hcap", BackendKind::kCaption),
                    std::make_shared<HttpCaptioner>(Http("hcap", srv.Url("/cap"))),
                    std::make_shared<BlobCache>(), ledger, rec.Options());
    CHECK(c.Caption("img") == "served caption");
    CHECK(hits == 3);
    CHECK(ledger->Get("hcap").attempts == 3);
    CHECK(ledger->Get("hcap").calls == 1);
    CHECK(rec.sleeps == std::vector<double>{2000.0, 2000.0});
  }

  TEST_CASE("persistent 5xx exhausts the retry budget with exponential backoff") {
    TestServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/cap", [&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 503;
    });
    Recorded rec;
    auto ledger = std::make_shared<Ledger>();
    CaptionClient c(Id("hcap", BackendKind::kCaption),
                    std::make_shared<HttpCaptioner>(Http("hcap", srv.Url("/cap"))),
                    std::make_shared<BlobCache>(), ledger, rec.Options(3));
    try {
      c.Caption("img");
      FAIL("expected a backend error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBackend);
    }
    CHECK(hits == 3);
    CHECK(rec.sleeps == std::vector<double>{10.0, 20.0});
    CHECK(ledger->Get("hcap").failures == 1);
  }

  TEST_CASE("a permanent 4xx is not retried") {
    TestServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/cap", [&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 404;
    });
    Recorded rec;
    CaptionClient c(Id("hcap", BackendKind::kCaption),
                    std::make_shared<HttpCaptioner>(Http("hcap", srv.Url("/cap"))),
                    std::make_shared<BlobCache>(), std::make_shared<Ledger>(), rec.Options());
    CHECK_THROWS_AS(c.Caption("img"), Error);
    CHECK(hits == 1);
  }

  TEST_CASE("451 is a refusal, cached as such") {
    TestServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/gen", [&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 451;
      res.set_content(R"({"error": "blocked"})", "application/json");
    });
    auto ledger = std::make_shared<Ledger>();
    GenerationClient c(Id("hgen", BackendKind::kGeneration),
                       std::make_shared<HttpGenerator>(Http("hgen", srv.Url("/gen"))),
                       std::make_shared<BlobCache>(), ledger);
    CHECK(c.Generate("p", 1, {}).refused);
    CHECK(c.Generate("p", 1, {}).refused);
    CHECK(hits == 1);
    CHECK(ledger->Get("hgen").refusals == 2);
    CHECK(ledger->Get("hgen").requests == 2);
  }

  TEST_CASE("generation reads base64 payloads and downloads URLs") {
    TestServer srv;
    nlohmann::json seen;
    srv.server().Post("/b64", [&](const httplib::Request& req, httplib::Response& res) {
      seen = nlohmann::json::parse(req.body);
      res.set_content(nlohmann::json{{"data", {{{"b64_json", Base64Encode("PIXELS")}}}}}.dump(),
                      "application/json");
    });
    srv.server().Post("/url", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json{{"data", {{{"url", srv.Url("/blob")}}}}}.dump(), "application/json");
    });
    srv.server().Get("/blob", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("DOWNLOADED", "application/octet-stream");
    });
    HttpGenerator b64(Http("g", srv.Url("/b64")));
    GenerationParams params;
    params.width = 256;
    params.height = 128;
    CHECK(b64.Generate("a prompt", 42, params).bytes == "PIXELS");
    CHECK(seen.at("prompt") == "a prompt");
    CHECK(seen.at("seed") == 42);
    CHECK(seen.at("size") == "256x128");
    HttpGenerator url(Http("g", srv.Url("/url")));
    CHECK(url.Generate("a prompt", 1, {}).bytes == "DOWNLOADED");
  }

  TEST_CASE("embedding and rewrite adapters speak their JSON shapes") {
    TestServer srv;
    std::string auth;
    srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
      auth = req.get_header_value("Authorization");
      const auto j = nlohmann::json::parse(req.body);
      CHECK(j.at("input").size() == 1);
      res.set_content(R"({"vectors": [[3.0, 4.0]]})", "application/json");
    });
    srv.server().Post("/oai", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data": [{"embedding": [0.0, 2.0]}]})", "application/json");
    });
    srv.server().Post("/chat", [](const httplib::Request& req, httplib::Response& res) {
      const auto j = nlohmann::json::parse(req.body);
      const std::string content = j.at("messages")[0].at("content");
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", "re: " + content}}}}}}}.dump(),
                      "application/json");
    });
    ::setenv("SDMIA_TEST_TOKEN", "sekrit", 1);
    HttpConfig cfg = Http("e", srv.Url("/embed"));
    cfg.auth_env = "SDMIA_TEST_TOKEN";
    HttpTextEmbedder t(cfg, 2);
    CHECK(t.EmbedText("x") == Vec{3.0, 4.0});
    CHECK(auth == "Bearer sekrit");
    HttpImageEmbedder i(Http("i", srv.Url("/embed")), 2);
    CHECK(i.EmbedImage("bytes") == Vec{3.0, 4.0});
    HttpTextEmbedder oai(Http("o", srv.Url("/oai")), 2);
    CHECK(oai.EmbedText("x") == Vec{0.0, 2.0});
    HttpRewriter rw(Http("r", srv.Url("/chat")));
    CHECK(rw.Rewrite("hello", 3) == "re: hello");
  }

  TEST_CASE("unreachable endpoint is a transient failure") {
    Recorded rec;
    CaptionClient c(Id("dead", BackendKind::kCaption),
                    std::make_shared<HttpCaptioner>(Http("dead", "http://127.0.0.1:1/cap")),
                    std::make_shared<BlobCache>(), std::make_shared<Ledger>(), rec.Options(2));
    CHECK_THROWS_AS(c.Caption("img"), Error);
    CHECK(rec.sleeps.size() == 1);
  }

  TEST_CASE("URL parsing") {
    CHECK(ParseUrl("http://h:8080/v1/x").scheme_host_port == "http://h:8080");
    CHECK(ParseUrl("http://h:8080/v1/x").path == "/v1/x");
    CHECK(ParseUrl("https://h").path == "/");
    CHECK_THROWS_AS(ParseUrl("ftp://h/x"), Error);
  }
}

TEST_SUITE("trace") {
  TEST_CASE("authorization values never reach the log") {
    CHECK(Tracer::Redact("Authorization: Bearer abc123") == "Authorization: Bearer ***");
    CHECK(Tracer::Redact(R"({"api_key": "zzz"})").find("zzz") == std::string::npos);

    TestServer srv;
    srv.server().Post("/cap", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"caption": "ok"})", "application/json");
    });
    std::ostringstream log;
    ::setenv("SDMIA_TEST_TOKEN", "topsecretvalue", 1);
    HttpConfig cfg = Http("cap", srv.Url("/cap"));
    cfg.auth_env = "SDMIA_TEST_TOKEN";
    cfg.tracer = std::make_shared<Tracer>(log);
    HttpCaptioner c(cfg);
    CHECK(c.Caption("img") == "ok");
    CHECK(log.str().find("Authorization") != std::string::npos);
    CHECK(log.str().find("topsecretvalue") == std::string::npos);
  }
}
