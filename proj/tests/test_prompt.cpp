#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "ipdlab/gateway.hpp"
#include "ipdlab/prompt.hpp"

using namespace ipdlab;

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool reveals_horizon(const std::string& text) {
    const std::string lowered = lower(text);
    if (lowered.find("10 round") != std::string::npos) return true;
    if (lowered.find("ten round") != std::string::npos) return true;
    if (lowered.find("10 more") != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("system prompts never name the game or the horizon") {
    PayoffMatrix m;
    for (auto frame : kAllFrames)
        for (auto regime : kAllRegimes)
            for (auto treatment : kAllTreatments)
                for (auto mode : {GameMode::Dyadic, GameMode::Network}) {
                    const std::string text = build_system_prompt(frame, regime, m, treatment, mode);
                    const std::string lowered = lower(text);
                    REQUIRE(lowered.find("prisoner") == std::string::npos);
                    REQUIRE(lowered.find("dilemma") == std::string::npos);
                    REQUIRE_FALSE(reveals_horizon(text));
                    REQUIRE_FALSE(text.empty());
                }
}

TEST_CASE("system prompts are unique per cell and deterministic") {
    PayoffMatrix m;
    std::set<std::string> seen;
    for (auto frame : kAllFrames)
        for (auto regime : kAllRegimes)
            for (auto treatment : kAllTreatments)
                for (auto mode : {GameMode::Dyadic, GameMode::Network}) {
                    const std::string text = build_system_prompt(frame, regime, m, treatment, mode);
                    REQUIRE(seen.insert(text).second);
                    REQUIRE(text == build_system_prompt(frame, regime, m, treatment, mode));
                }
    REQUIRE(seen.size() == 6u * 3u * 3u * 2u);
}

TEST_CASE("control prompts carry no messaging instructions") {
    PayoffMatrix m;
    const std::string text = build_system_prompt(ContextFrame::Neutral, PromptRegime::Standard, m,
                                                 Treatment::NoMessaging, GameMode::Dyadic);
    REQUIRE(lower(text).find("message") == std::string::npos);
}

TEST_CASE("messaging prompts include the non-binding caution") {
    PayoffMatrix m;
    for (auto regime : kAllRegimes)
        for (auto treatment : {Treatment::FullMessage, Treatment::OneWord}) {
            const std::string text = build_system_prompt(ContextFrame::Biz, regime, m, treatment,
                                                         GameMode::Dyadic);
            const std::string lowered = lower(text);
            REQUIRE(lowered.find("non-binding") != std::string::npos);
            REQUIRE(lowered.find("cautio") != std::string::npos);
        }
}

TEST_CASE("payoffs are rendered numerically") {
    PayoffMatrix m{9, 5, 2, 1};
    const std::string text = build_system_prompt(ContextFrame::Neutral, PromptRegime::Standard, m,
                                                 Treatment::NoMessaging, GameMode::Dyadic);
    for (const char* num : {"9", "5", "2", "1"}) REQUIRE(text.find(num) != std::string::npos);
}

TEST_CASE("round 1 prompt has no past-performance block") {
    AgentState s;
    s.agent_id = 0;
    const std::string text = build_round_prompt(s, PromptPhase::ActionPhase, {},
                                                Treatment::NoMessaging, GameMode::Dyadic, {1});
    REQUIRE(text.find("Last round") == std::string::npos);
    REQUIRE(text.find("ACTION: C") != std::string::npos);
}

TEST_CASE("round 2 prompt reports the previous outcome") {
    AgentState s;
    s.agent_id = 0;
    s.history[1].push_back({Action::Cooperate, Action::Defect, 0, 5, 1});
    s.score = 0;
    const std::string text = build_round_prompt(s, PromptPhase::ActionPhase, {},
                                                Treatment::NoMessaging, GameMode::Dyadic, {1});
    REQUIRE(text.find("you chose C") != std::string::npos);
    REQUIRE(text.find("your counterpart chose D") != std::string::npos);
    REQUIRE(text.find("You earned 0") != std::string::npos);
}

TEST_CASE("action prompt embeds incoming messages verbatim") {
    AgentState s;
    s.agent_id = 0;
    const std::vector<Message> incoming = {{1, 1, "Let's both stay loyal."}};
    const std::string text = build_round_prompt(s, PromptPhase::ActionPhase, incoming,
                                                Treatment::FullMessage, GameMode::Dyadic, {1});
    REQUIRE(text.find("Let's both stay loyal.") != std::string::npos);
}

TEST_CASE("network action prompt enumerates neighbors in the parsable format") {
    AgentState s;
    s.agent_id = 0;
    const std::vector<int> neighbors = {3, 7, 9};
    const std::string text = build_round_prompt(s, PromptPhase::ActionPhase, {},
                                                Treatment::NoMessaging, GameMode::Network, neighbors);
    for (const char* tag : {"AGENT_3", "AGENT_7", "AGENT_9"})
        REQUIRE(text.find(tag) != std::string::npos);

    // round trip: a reply in the requested format parses cleanly
    auto actions = parse_network_actions("AGENT_3: C\nAGENT_7: D\nAGENT_9: C", neighbors);
    REQUIRE(actions.size() == 3);
    REQUIRE(actions.at(7) == Action::Defect);
}

TEST_CASE("network message prompt requests one broadcast for the neighborhood") {
    AgentState s;
    s.agent_id = 0;
    const std::string text = build_round_prompt(s, PromptPhase::MessagePhase, {},
                                                Treatment::FullMessage, GameMode::Network, {1, 2});
    REQUIRE(text.find("entire neighborhood") != std::string::npos);
}

TEST_CASE("one-word message prompt asks for a single word") {
    AgentState s;
    s.agent_id = 0;
    const std::string text = build_round_prompt(s, PromptPhase::MessagePhase, {},
                                                Treatment::OneWord, GameMode::Dyadic, {1});
    REQUIRE(text.find("a single word") != std::string::npos);
}

TEST_CASE("message phase under no_messaging is a usage error") {
    AgentState s;
    REQUIRE_THROWS_AS(build_round_prompt(s, PromptPhase::MessagePhase, {}, Treatment::NoMessaging,
                                         GameMode::Dyadic, {1}),
                      std::invalid_argument);
}

TEST_CASE("template files round trip through disk") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ipdlab_templates_test";
    fs::remove_all(dir);
    TemplateLibrary builtin = TemplateLibrary::builtin();
    builtin.save(dir);
    REQUIRE(fs::exists(dir / "system_standard_neutral.txt"));
    TemplateLibrary loaded = TemplateLibrary::load(dir);
    PayoffMatrix m;
    for (auto frame : kAllFrames)
        for (auto regime : kAllRegimes)
            REQUIRE(build_system_prompt(loaded, frame, regime, m, Treatment::FullMessage,
                                        GameMode::Dyadic) ==
                    build_system_prompt(builtin, frame, regime, m, Treatment::FullMessage,
                                        GameMode::Dyadic));
    fs::remove_all(dir);
}
