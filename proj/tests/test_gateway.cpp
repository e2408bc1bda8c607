#include <doctest.h>
#include "catalog/text.hpp"

#include <httplib.h>

#include "catalog/error.hpp"
#include "catalog/gateway.hpp"
#include "catalog/title_classifier.hpp"

#include <cmath>
#include <thread>

using namespace catalog;

namespace {

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s / (norm(a) * norm(b));
}

// Fails with a transient error `failures` times, then defers to a mock.
class FlakyProvider final : public Provider {
public:
    explicit FlakyProvider(int failures) : failures_(failures), inner_(std::vector<MockRule>{{{""}, "ok then"}}) {}
    std::string id() const override { return "flaky"; }
    std::string model() const override { return "flaky-1"; }
    std::size_t embedding_dimension() const override { return 64; }
    CompletionResponse complete(const CompletionRequest& r) override {
        ++calls;
        if (calls <= failures_) throw TransientProviderError("simulated 503");
        return inner_.complete(r);
    }
    std::vector<double> embed(std::string_view text) override {
        ++calls;
        if (calls <= failures_) throw TransientProviderError("simulated 503");
        return inner_.embed(text);
    }
    int calls = 0;

private:
    int failures_;
    MockProvider inner_;
};

GatewayLimits unpaced() {
    GatewayLimits l;
    l.requests_per_minute = 0;
    return l;
}

std::shared_ptr<MockProvider> yes_no_mock() {
    return std::make_shared<MockProvider>(std::vector<MockRule>{
        {{"Answer Yes or No.", "simulator sickness"}, "Yes"},
        {{"Answer Yes or No."}, "No"},
        {{"consequence"}, "It can make people feel ill after long sessions. Stop here. More text follows later on"},
    });
}

}  // namespace

TEST_CASE("CompletionRequest validation") {
    CHECK_THROWS_AS((CompletionRequest{"", 5}.validate()), InvalidValue);
    CHECK_THROWS_AS((CompletionRequest{"p", 0}.validate()), InvalidValue);
    CHECK_THROWS_AS((CompletionRequest{"p", 1, 2.5}.validate()), InvalidValue);
    CHECK_NOTHROW((CompletionRequest{"p", 1, 2.0}.validate()));
}

TEST_CASE("mock provider rule table") {
    FakeClock clock;
    Gateway gw(yes_no_mock(), clock, {}, unpaced());
    const auto yes = gw.complete({"Headsets and simulator sickness.\n\nAnswer Yes or No.", 3, 0.0, {}, "content"});
    CHECK(yes.text == "Yes");
    CHECK(yes.provider == "mock");
    CHECK(yes.model == "mock-rules-v1");
    CHECK(yes.attempts == 1);
    CHECK(gw.complete({"Nothing relevant. Answer Yes or No.", 3}).text == "No");
    CHECK(gw.complete({"unmatched prompt", 3}).text.empty());

    // max_tokens truncation and stop strings
    CHECK(gw.complete({"the consequence", 4}).text == "It can make people");
    CHECK(gw.complete({"the consequence", 100, 0.0, {" Stop here."}}).text ==
          "It can make people feel ill after long sessions.");
}

TEST_CASE("mock provider loads a rule file") {
    const auto mock = MockProvider::from_json(Json::parse(R"({
        "seed": 11, "fallback": "fallback text", "dimension": 16,
        "rules": [{"match": ["a", "b"], "response": "both"}, {"match": ["a"], "response": "only a"}]})"));
    CHECK(mock->complete({"b then a", 5}).text == "both");
    CHECK(mock->complete({"a", 5}).text == "only a");
    CHECK(mock->complete({"zzz", 5}).text == "fallback text");
    CHECK(mock->embed("x").size() == 16);
    const auto bare = MockProvider::from_json(Json::parse(R"([{"match": ["q"], "response": "r"}])"));
    CHECK(bare->complete({"q", 5}).text == "r");
    CHECK_THROWS_AS(MockProvider::load("/nonexistent/rules.json"), InvalidValue);
}

TEST_CASE("retries with exponential backoff on the fake clock") {
    FakeClock clock;
    auto flaky = std::make_shared<FlakyProvider>(2);
    Gateway gw(flaky, clock, {}, unpaced());
    const auto start = clock.now();
    const auto r = gw.complete({"hello", 5});
    CHECK(r.text == "ok then");
    CHECK(r.attempts == 3);
    CHECK(flaky->calls == 3);
    CHECK(clock.sleeps() == std::vector<Millis>{Millis{1000}, Millis{2000}});
    CHECK(clock.now() - start == Millis{3000});
    CHECK(r.latency == Millis{3000});
}

TEST_CASE("retries exhausted raise ProviderUnavailable") {
    FakeClock clock;
    auto flaky = std::make_shared<FlakyProvider>(5);
    Gateway gw(flaky, clock, {}, unpaced());
    CHECK_THROWS_AS(gw.complete({"hello", 5}), ProviderUnavailable);
    CHECK(flaky->calls == 3);
    CHECK(clock.sleeps() == std::vector<Millis>{Millis{1000}, Millis{2000}});
    CHECK(gw.total_usage().requests == 0);
}

TEST_CASE("token cap refuses requests that could cross it") {
    FakeClock clock;
    GatewayLimits limits = unpaced();
    limits.token_cap = 10;
    Gateway gw(yes_no_mock(), clock, {}, limits);
    CHECK_THROWS_AS(gw.complete({"one two three four five six seven eight", 5}), BudgetExceeded);
    CHECK(gw.total_usage().requests == 0);
    const auto r = gw.complete({"Answer Yes or No.", 3});
    CHECK(r.text == "No");
    CHECK(gw.total_usage().total_tokens() == 5);
    // 5 used, worst case 4 + 3 = 7 more would make 12
    CHECK_THROWS_AS(gw.complete({"Answer Yes or No.", 3, 0.0, {}, "x"}), BudgetExceeded);
    CHECK_NOTHROW(gw.complete({"Answer", 3}));
}

TEST_CASE("spend cap") {
    FakeClock clock;
    GatewayLimits limits = unpaced();
    limits.spend_cap_usd = 0.01;
    limits.usd_per_1k_tokens = 2.0;  // 4 prompt + 1 completion tokens = $0.01
    Gateway gw(yes_no_mock(), clock, {}, limits);
    CHECK_NOTHROW(gw.complete({"Answer Yes or No.", 1}));
    CHECK(gw.spend_usd() == doctest::Approx(0.01));
    CHECK_THROWS_AS(gw.complete({"Answer Yes or No.", 1}), BudgetExceeded);
}

TEST_CASE("usage counters by tag sum to provider totals") {
    FakeClock clock;
    Gateway gw(yes_no_mock(), clock, {}, unpaced());
    std::size_t reported = 0;
    for (int i = 0; i < 5; ++i) {
        const auto r = gw.complete({"item " + std::to_string(i) + " Answer Yes or No.", 3, 0.0, {}, "content"});
        reported += r.prompt_tokens + r.completion_tokens;
    }
    for (int i = 0; i < 3; ++i) {
        const auto r = gw.complete({"a consequence", 20, 0.0, {}, "summary"});
        reported += r.prompt_tokens + r.completion_tokens;
    }
    const auto by_tag = gw.usage_by_tag();
    CHECK(by_tag.at("content").requests == 5);
    CHECK(by_tag.at("summary").requests == 3);
    std::size_t sum = 0;
    for (const auto& [tag, u] : by_tag) sum += u.total_tokens();
    CHECK(sum == reported);
    CHECK(gw.total_usage().total_tokens() == reported);
}

TEST_CASE("gateway paces requests under the per-minute budget") {
    FakeClock clock;
    GatewayLimits limits;
    limits.requests_per_minute = 120;
    Gateway gw(yes_no_mock(), clock, {}, limits);
    const auto start = clock.now();
    for (int i = 0; i < 5; ++i) gw.complete({"p", 1});
    CHECK(clock.now() - start == Millis{2000});
}

TEST_CASE("gateway is usable from several threads") {
    SystemClock clock;
    GatewayLimits limits = unpaced();
    Gateway gw(yes_no_mock(), clock, {}, limits);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 50; ++i) gw.complete({"Answer Yes or No.", 3, 0.0, {}, "content"});
        });
    }
    for (auto& t : threads) t.join();
    CHECK(gw.usage_by_tag().at("content").requests == 200);
}

TEST_CASE("embeddings: determinism, normalization, similarity") {
    FakeClock clock;
    Gateway gw(yes_no_mock(), clock, {}, unpaced());
    CHECK(gw.dimension() == 64);
    const auto a1 = gw.embed("abc");
    const auto a2 = gw.embed("abc");
    CHECK(a1 == a2);
    for (const auto* s : {"abc", "solar power", "a much longer sentence about privacy and data leaks", "!!!", "x x x"}) {
        const auto v = gw.embed(s);
        CHECK(v.size() == 64);
        CHECK(std::abs(norm(v) - 1.0) <= 1e-6);
    }
    CHECK(cosine(gw.embed("solar power"), gw.embed("solar energy")) >
          cosine(gw.embed("solar power"), gw.embed("privacy leak")));
    CHECK_THROWS_AS(gw.embed("   "), InvalidValue);
    CHECK(gw.usage_by_tag().at("embed").requests > 0);

    // a different seed gives a different embedding
    MockProvider other({}, 8);
    CHECK(other.embed("abc") != MockProvider({}, 7).embed("abc"));
}

TEST_CASE("embedding hashing scheme reference values") {
    // independent re-derivation of the signed feature hash for a single token
    const auto v = hashing_embedding("Solar", 7, 64);
    const std::uint64_t key = text::mix64(7);
    const std::uint64_t h = text::mix64(text::fnv1a64("solar") ^ key);
    std::vector<double> expected(64, 0.0);
    expected[h % 64] = (h >> 63) ? -1.0 : 1.0;
    CHECK(v == expected);
}

TEST_CASE("http provider wire contract") {
    httplib::Server server;
    int hits = 0;
    std::string auth;
    Json last_body;
    server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        auth = req.get_header_value("Authorization");
        last_body = Json::parse(req.body);
        if (hits == 1) {
            res.status = 429;
            return;
        }
        res.set_content(R"({"text": "Yes", "prompt_tokens": 12, "completion_tokens": 1})", "application/json");
    });
    server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"embedding": [3.0, 4.0]})", "application/json");
    });
    server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    FakeClock clock;
    HttpProviderConfig cfg;
    cfg.completion_url = base + "/complete";
    cfg.embedding_url = base + "/embed";
    cfg.model = "m1";
    cfg.api_key = "secret";
    cfg.embedding_dimension = 2;
    Gateway gw(std::make_shared<HttpProvider>(cfg), clock, {}, unpaced());
    const auto r = gw.complete({"Is it? Answer Yes or No.", 3, 0.0, {"\n"}, "content"});
    CHECK(r.text == "Yes");
    CHECK(r.attempts == 2);
    CHECK(r.prompt_tokens == 12);
    CHECK(r.model == "m1");
    CHECK(auth == "Bearer secret");
    CHECK(last_body == Json{{"model", "m1"},
                            {"prompt", "Is it? Answer Yes or No."},
                            {"max_tokens", 3},
                            {"temperature", 0.0},
                            {"stop", {"\n"}}});
    const auto e = gw.embed("text");
    CHECK(e[0] == doctest::Approx(0.6));
    CHECK(e[1] == doctest::Approx(0.8));

    cfg.completion_url = base + "/bad";
    Gateway bad(std::make_shared<HttpProvider>(cfg), clock, {}, unpaced());
    CHECK_THROWS_AS(bad.complete({"p", 1}), ProviderUnavailable);
    CHECK(clock.sleeps().size() == 1);  // only the 429 above was retried

    server.stop();
    th.join();
}

TEST_CASE("baseline title classifier on the separable toy set") {
    std::vector<LabeledTitle> toy;
    for (int i = 0; i < 5; ++i) toy.push_back({"harms of X", true});
    for (int i = 0; i < 5; ++i) toy.push_back({"launch of Y", false});

    const auto m = train_title_baseline(toy, 42);
    CHECK(m.weights.size() == m.vocabulary.size() + 1);
    CHECK(m.vocabulary.size() == 5);
    for (const auto& t : toy) {
        const double s = predict_title(m, t.title);
        CHECK((s >= 0.5) == t.relevant);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    // non-increasing training objective
    REQUIRE(m.loss_history.size() == 50);
    for (std::size_t i = 1; i < m.loss_history.size(); ++i) CHECK(m.loss_history[i] <= m.loss_history[i - 1]);

    // determinism
    CHECK(train_title_baseline(toy, 42) == m);

    // unknown tokens contribute nothing
    CHECK(predict_title(m, "zebra quantum") == doctest::Approx(1.0 / (1.0 + std::exp(-m.bias()))).epsilon(1e-15));

    // model JSON round trip
    const Json j = m;
    CHECK(j.get<TitleClassifierModel>() == m);
    BaselineTitleClassifier clf(m);
    CHECK(clf.score("harms of X") > 0.5);
}

TEST_CASE("baseline title classifier oracle: one gradient step by hand") {
    // two titles, one epoch, lr 0.5, full batch: w_k = -lr * mean(err * x_k)
    // with err = sigmoid(0) - y = +-0.5 at the zero start
    const std::vector<LabeledTitle> data{{"a b", true}, {"a c", false}, {"b", true}, {"c", false}};
    TrainOptions opt;
    opt.epochs = 1;
    opt.learning_rate = 0.5;
    opt.l2 = 0.0;
    const auto m = train_title_baseline(data, 1, opt);
    // vocabulary sorted: a=0, b=1, c=2
    CHECK(m.vocabulary.at("a") == 0);
    CHECK(m.weights[0] == doctest::Approx(0.0));
    CHECK(m.weights[1] == doctest::Approx(-0.5 * (-0.5 - 0.5) / 4));
    CHECK(m.weights[2] == doctest::Approx(-0.5 * (0.5 + 0.5) / 4));
    CHECK(m.weights[3] == doctest::Approx(0.0));
}

TEST_CASE("baseline title classifier degenerate input") {
    std::vector<LabeledTitle> all_relevant{{"a", true}, {"b", true}, {"c", true}};
    CHECK_THROWS_AS(train_title_baseline(all_relevant, 1), DegenerateDataset);
    std::vector<LabeledTitle> one_negative{{"a", true}, {"b", true}, {"c", false}};
    CHECK_THROWS_AS(train_title_baseline(one_negative, 1), DegenerateDataset);
}

TEST_CASE("stub title classifier") {
    StubTitleClassifier stub({{"Yes title", true}, {"No title", false}}, 0.25);
    CHECK(stub.score(" Yes title ") == 1.0);
    CHECK(stub.score("No title") == 0.0);
    CHECK(stub.score("other") == 0.25);
}
