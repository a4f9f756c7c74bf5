#include <doctest.h>

#include <marg/backend.hpp>
#include <marg/errors.hpp>
#include <marg/scripted_backend.hpp>

#include "test_util.hpp"

using namespace marg;
using marg::test::exchange;
using marg::test::words;

namespace {

CompletionRequest request_of(const std::string& user_text) {
    CompletionRequest r;
    r.model_id = "test-model";
    r.messages = {{Role::system, "You are a test."}, {Role::user, user_text}};
    return r;
}

}  // namespace

TEST_CASE("scripted backend: first match wins and echoes the reply") {
    Script script;
    script.strict = true;
    script.exchanges = {exchange("", "Ready", "Ready"), exchange("", "", "fallback")};
    ScriptedBackend backend(script);
    const auto reply = backend.complete(request_of("Please write Ready now."), {"m", "p", "a"});
    CHECK(reply.role == Role::assistant);
    CHECK(reply.content == "Ready");
    CHECK(backend.complete(request_of("anything else"), {"m", "p", "a"}).content == "fallback");
}

TEST_CASE("scripted backend: agent and history matchers narrow the match") {
    Script script;
    script.strict = true;
    ScriptedExchange h = exchange("Agent 1", "last", "one");
    h.history_contains = "earlier context";
    script.exchanges = {h, exchange("", "", "other")};
    ScriptedBackend backend(script);

    CompletionRequest r;
    r.model_id = "m";
    r.messages = {{Role::system, "earlier context here"}, {Role::user, "the last message"}};
    CHECK(backend.complete(r, {"m", "p", "Agent 1"}).content == "one");
    CHECK(backend.complete(r, {"m", "p", "Agent 2"}).content == "other");

    CompletionRequest no_history;
    no_history.model_id = "m";
    no_history.messages = {{Role::system, "nothing"}, {Role::user, "the last message"}};
    CHECK(backend.complete(no_history, {"m", "p", "Agent 1"}).content == "other");
}

TEST_CASE("scripted backend: max_uses exhausts entries in order") {
    Script script;
    script.strict = true;
    script.exchanges = {exchange("", "", "first", 1), exchange("", "", "second", 1),
                        exchange("", "", "rest")};
    ScriptedBackend backend(script);
    CHECK(backend.complete(request_of("x"), {}).content == "first");
    CHECK(backend.complete(request_of("x"), {}).content == "second");
    CHECK(backend.complete(request_of("x"), {}).content == "rest");
    CHECK(backend.complete(request_of("x"), {}).content == "rest");
}

TEST_CASE("scripted backend: strict mode errors on unmatched requests") {
    Script script;
    script.strict = true;
    script.exchanges = {exchange("", "specific needle", "hit")};
    ScriptedBackend backend(script);
    CHECK_THROWS_AS(backend.complete(request_of("no match here"), {}), ScriptMatchError);
    CHECK(backend.ledger().size() == 0);  // failures record nothing
}

TEST_CASE("scripted backend: non-strict unmatched requests reply empty") {
    Script script;
    script.exchanges = {exchange("", "needle", "hit")};
    ScriptedBackend backend(script);
    CHECK(backend.complete(request_of("nothing"), {}).content == "");
    CHECK(backend.unmatched_count() == 1);
    CHECK(backend.ledger().size() == 1);
}

TEST_CASE("scripted backend: determinism across identical request sequences") {
    Script script;
    script.exchanges = {exchange("", "a", "ra", 1), exchange("", "", "rb")};
    const auto run = [&] {
        ScriptedBackend backend(script);
        std::vector<std::string> replies;
        replies.push_back(backend.complete(request_of("a first"), {"m", "p", ""}).content);
        replies.push_back(backend.complete(request_of("a second"), {"m", "p", ""}).content);
        replies.push_back(backend.complete(request_of("other"), {"m", "p", ""}).content);
        auto entries = backend.ledger().entries();
        return std::make_pair(replies, entries.size());
    };
    const auto first = run();
    const auto second = run();
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);
}

TEST_CASE("complete: request at the token limit passes, one over errors") {
    Script script;
    script.exchanges = {exchange("", "", "ok")};
    ScriptedBackend backend(script, /*input_token_limit=*/64);

    CompletionRequest at_limit;
    at_limit.model_id = "m";
    at_limit.messages = {{Role::system, words(4)}, {Role::user, words(60)}};
    REQUIRE(request_tokens(at_limit) == 64);
    CHECK_NOTHROW(backend.complete(at_limit, {}));

    CompletionRequest over;
    over.model_id = "m";
    over.messages = {{Role::system, words(4)}, {Role::user, words(61)}};
    REQUIRE(request_tokens(over) == 65);
    CHECK_THROWS_AS(backend.complete(over, {}), TokenLimitError);
    CHECK(backend.ledger().size() == 1);  // only the successful call recorded
}

TEST_CASE("complete: request must start with a system message") {
    Script script;
    script.exchanges = {exchange("", "", "ok")};
    ScriptedBackend backend(script);
    CompletionRequest bad;
    bad.model_id = "m";
    bad.messages = {{Role::user, "hi"}};
    CHECK_THROWS_AS(backend.complete(bad, {}), std::invalid_argument);
}

TEST_CASE("ledger: per-method totals sum over completed requests") {
    Script script;
    script.exchanges = {exchange("", "one", words(10), 1), exchange("", "two", words(5), 1),
                        exchange("", "three", words(5), 1)};
    ScriptedBackend backend(script);
    CallContext ctx{"SARG-B", "paper-1", ""};
    // The system message costs 5 tokens, so each request totals 100/50/25.
    backend.complete(request_of(words(94) + " one"), ctx);
    backend.complete(request_of(words(44) + " two"), ctx);
    backend.complete(request_of(words(19) + " three"), ctx);

    const auto rows = usage_report(backend.ledger().entries());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method_label == "SARG-B");
    CHECK(rows[0].input_tokens == 175);
    CHECK(rows[0].generated_tokens == 20);
    CHECK(rows[0].n_requests == 3);
}

TEST_CASE("usage_report: empty ledger gives an empty table") {
    CHECK(usage_report({}).empty());
}

TEST_CASE("usage_report: per-paper averages over tagged papers") {
    std::vector<UsageEntry> entries = {{"M", "p1", 100, 10}, {"M", "p2", 300, 30}};
    const auto rows = usage_report(entries);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_papers == 2);
    CHECK(rows[0].avg_input_per_paper == doctest::Approx(200.0));
    CHECK(rows[0].avg_generated_per_paper == doctest::Approx(20.0));
}

TEST_CASE("usage_report: mixed labels keep independent totals") {
    std::vector<UsageEntry> entries = {
        {"A", "p1", 10, 1}, {"B", "p1", 20, 2}, {"A", "p2", 30, 3}};
    const auto rows = usage_report(entries);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method_label == "A");
    CHECK(rows[0].input_tokens == 40);
    CHECK(rows[0].generated_tokens == 4);
    CHECK(rows[1].method_label == "B");
    CHECK(rows[1].input_tokens == 20);
}

TEST_CASE("script files: parse and validate") {
    const auto script = parse_script(R"({"schema_version": 1, "strict": true, "exchanges": [
        {"agent": "Agent 0", "contains": "x", "reply": "y", "max_uses": 2},
        {"reply": "fallback"}]})");
    CHECK(script.strict);
    REQUIRE(script.exchanges.size() == 2);
    CHECK(script.exchanges[0].agent == "Agent 0");
    CHECK(script.exchanges[0].max_uses == 2);
    CHECK_FALSE(script.exchanges[1].agent.has_value());

    CHECK_THROWS_AS(parse_script("[]"), SchemaError);
    CHECK_THROWS_AS(parse_script(R"({"exchanges": [{"agent": "a"}]})"), SchemaError);
}
