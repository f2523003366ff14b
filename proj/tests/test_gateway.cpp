#include <catch2/catch_amalgamated.hpp>

#include "ipdlab/gateway.hpp"

using namespace ipdlab;

TEST_CASE("parse_action: marker lines") {
    REQUIRE(parse_action("I will build trust.\nACTION: C") == Action::Cooperate);
    REQUIRE(parse_action("action: d") == Action::Defect);
    REQUIRE(parse_action("  Action :  C  ") == Action::Cooperate);
    // last marker wins
    REQUIRE(parse_action("ACTION: C\nOn reflection:\nACTION: D") == Action::Defect);
}

TEST_CASE("parse_action: whole-word fallback and ambiguity") {
    REQUIRE(parse_action("I choose to cooperate this round.") == Action::Cooperate);
    REQUIRE(parse_action("Time to defect.") == Action::Defect);
    REQUIRE_THROWS_AS(parse_action("I might cooperate or defect"), ParseError);
    REQUIRE_THROWS_AS(parse_action("no decision here"), ParseError);
    // "cooperated" is not the whole word "cooperate"
    REQUIRE_THROWS_AS(parse_action("they cooperated before"), ParseError);
}

TEST_CASE("parse_action round trips the canonical marker forms") {
    for (Action a : {Action::Cooperate, Action::Defect}) {
        const std::string rendered = std::string("ACTION: ") + action_char(a);
        REQUIRE(parse_action(rendered) == a);
    }
}

TEST_CASE("parse_network_actions: happy path") {
    auto actions = parse_network_actions("AGENT_3: C\nAGENT_7: D", {3, 7});
    REQUIRE(actions.size() == 2);
    REQUIRE(actions.at(3) == Action::Cooperate);
    REQUIRE(actions.at(7) == Action::Defect);

    // tolerant of case and surrounding prose lines
    auto tolerant = parse_network_actions("Here are my choices:\nagent_3: c\nAGENT 7: D\nGood luck!",
                                          {3, 7});
    REQUIRE(tolerant.at(3) == Action::Cooperate);
}

TEST_CASE("parse_network_actions: error cases name the offender") {
    REQUIRE_THROWS_WITH(parse_network_actions("AGENT_3: C", {3, 7}),
                        Catch::Matchers::ContainsSubstring("uncovered neighbor 7"));
    REQUIRE_THROWS_WITH(parse_network_actions("AGENT_3: C\nAGENT_3: D\nAGENT_7: C", {3, 7}),
                        Catch::Matchers::ContainsSubstring("duplicate id 3"));
    REQUIRE_THROWS_WITH(parse_network_actions("AGENT_9: C\nAGENT_3: C\nAGENT_7: C", {3, 7}),
                        Catch::Matchers::ContainsSubstring("unknown id 9"));
    REQUIRE_THROWS_WITH(parse_network_actions("AGENT_3: X\nAGENT_7: C", {3, 7}),
                        Catch::Matchers::ContainsSubstring("malformed line"));
    REQUIRE_THROWS_AS(parse_network_actions("AGENT_3: C", {}), std::invalid_argument);
}

TEST_CASE("parse_network_actions succeeds iff lines are a bijection onto neighbors") {
    const std::vector<int> neighbors = {1, 2, 3};
    REQUIRE_NOTHROW(parse_network_actions("AGENT_1: C\nAGENT_2: C\nAGENT_3: D", neighbors));
    REQUIRE_THROWS_AS(parse_network_actions("AGENT_1: C\nAGENT_2: C", neighbors), ParseError);
    REQUIRE_THROWS_AS(parse_network_actions("AGENT_1: C\nAGENT_2: C\nAGENT_2: C\nAGENT_3: D", neighbors),
                      ParseError);
}

TEST_CASE("parse_message: truncation and token rules") {
    REQUIRE(parse_message("Let's both stay loyal. Trust me forever.", Treatment::FullMessage) ==
            "Let's both stay loyal.");
    REQUIRE(parse_message("cooperate!!", Treatment::OneWord) == "cooperate");
    REQUIRE(parse_message("  trust me  ", Treatment::OneWord) == "trust");
    REQUIRE(parse_message("no terminator here", Treatment::FullMessage) == "no terminator here");
    REQUIRE_THROWS_AS(parse_message("", Treatment::FullMessage), ParseError);
    REQUIRE_THROWS_AS(parse_message("   ", Treatment::OneWord), ParseError);
    REQUIRE_THROWS_AS(parse_message("!!!", Treatment::OneWord), ParseError);
    REQUIRE_THROWS_AS(parse_message("hi", Treatment::NoMessaging), std::invalid_argument);
}

TEST_CASE("mock server echoes through the gateway") {
    MockServer mock([](const json&) { return std::string("ACTION: C"); });
    Gateway gateway;
    ModelConfig config;
    config.model = "test-model";
    config.base_url = mock.base_url();
    auto result = gateway.complete(config, {{"system", "sys"}, {"user", "hello"}});
    REQUIRE(result.text == "ACTION: C");
    REQUIRE(result.latency_ms >= 0);
}

TEST_CASE("gateway transmits prompts byte-identically") {
    MockServer mock([](const json&) { return std::string("ok"); });
    Gateway gateway;
    ModelConfig config;
    config.model = "test-model";
    config.base_url = mock.base_url();
    const std::string prompt = "line one\nline two with \"quotes\" and unicode: †";
    gateway.complete(config, {{"system", "sys prompt"}, {"user", prompt}});
    auto requests = mock.requests();
    REQUIRE(requests.size() == 1);
    REQUIRE(requests[0]["messages"][0]["role"] == "system");
    REQUIRE(requests[0]["messages"][0]["content"] == "sys prompt");
    REQUIRE(requests[0]["messages"][1]["content"] == prompt);
    REQUIRE(requests[0]["model"] == "test-model");
}

TEST_CASE("identical turns at temperature 0 produce identical request bodies") {
    MockServer mock([](const json& req) {
        // deterministic mock: reply is a function of the request body
        return std::to_string(std::hash<std::string>{}(req.dump()));
    });
    Gateway gateway;
    ModelConfig config;
    config.model = "test-model";
    config.base_url = mock.base_url();
    config.temperature = 0.0;
    const std::vector<ChatTurn> turns = {{"system", "s"}, {"user", "u"}};
    auto a = gateway.complete(config, turns);
    auto b = gateway.complete(config, turns);
    REQUIRE(a.text == b.text);
    auto requests = mock.requests();
    REQUIRE(requests.size() == 2);
    REQUIRE(requests[0].dump() == requests[1].dump());
}

TEST_CASE("transport failure raises after the retry budget") {
    Gateway gateway;
    ModelConfig config;
    config.model = "m";
    config.base_url = "http://127.0.0.1:1";  // nothing listens here
    config.retries = 2;
    config.backoff_initial_ms = 1;
    config.timeout_s = 1;
    REQUIRE_THROWS_AS(gateway.complete(config, {{"system", "s"}}), TransportError);
}

TEST_CASE("temperature range helper matches the studied settings") {
    REQUIRE(temperature_in_studied_range(0.0));
    REQUIRE(temperature_in_studied_range(0.8));
    REQUIRE(temperature_in_studied_range(0.7));
    REQUIRE_FALSE(temperature_in_studied_range(0.3));
    REQUIRE_FALSE(temperature_in_studied_range(1.5));
}
