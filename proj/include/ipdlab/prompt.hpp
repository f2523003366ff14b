#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipdlab/agent.hpp"
#include "ipdlab/condition.hpp"
#include "ipdlab/game.hpp"

namespace ipdlab {

enum class PromptPhase { MessagePhase, ActionPhase };

namespace prompt_detail {

// Framing paragraphs per (regime, frame). Variant changes a handful of words
// relative to standard; robust rewrites the surface wording while keeping the
// same scenario.
inline std::string framing_text(PromptRegime regime, ContextFrame frame) {
    switch (regime) {
        case PromptRegime::Standard:
            switch (frame) {
                case ContextFrame::Neutral:
                    return "You are taking part in a repeated decision exercise with the same "
                           "counterpart each time.";
                case ContextFrame::Biz:
                    return "You run a company competing in the same market as a rival firm. In "
                           "each period, both firms decide how aggressively to act toward one "
                           "another.";
                case ContextFrame::Environment:
                    return "You lead a community that shares a natural resource with a "
                           "neighboring community. Each season, both communities decide how "
                           "much restraint to show in using the resource.";
                case ContextFrame::Social:
                    return "You regularly run into an acquaintance, and at each encounter you "
                           "choose how considerately to treat them.";
                case ContextFrame::Team:
                    return "You are part of a team, working alongside a colleague on shared "
                           "deliverables. Each sprint, you both decide how much effort to put "
                           "into the joint work.";
                case ContextFrame::IR:
                    return "You represent a nation engaged with another nation on a recurring "
                           "policy issue. In each session, both governments choose between an "
                           "accommodating and a hardline stance.";
            }
            break;
        case PromptRegime::Variant:
            switch (frame) {
                case ContextFrame::Neutral:
                    return "You are participating in a repeated decision task with the same "
                           "partner each time.";
                case ContextFrame::Biz:
                    return "You manage a company competing in the same market as a rival firm. "
                           "In every period, both firms choose how aggressively to behave "
                           "toward one another.";
                case ContextFrame::Environment:
                    return "You lead a community that shares a natural resource with a nearby "
                           "community. Each season, both communities choose how much restraint "
                           "to exercise in using the resource.";
                case ContextFrame::Social:
                    return "You often run into an acquaintance, and at every encounter you "
                           "decide how considerately to treat them.";
                case ContextFrame::Team:
                    return "You belong to a team, working alongside a colleague on shared "
                           "deliverables. Each sprint, you both choose how much effort to "
                           "invest in the joint work.";
                case ContextFrame::IR:
                    return "You represent a nation dealing with another nation on a recurring "
                           "policy issue. In every session, both governments pick between an "
                           "accommodating and a hardline stance.";
            }
            break;
        case PromptRegime::Robust:
            switch (frame) {
                case ContextFrame::Neutral:
                    return "This is an ongoing exercise in which you and one other participant "
                           "repeatedly make choices that affect each other.";
                case ContextFrame::Biz:
                    return "Your firm and a competitor operate in the same market. Period after "
                           "period, each side settles on a commercial posture toward the "
                           "other, from cooperative to cut-throat.";
                case ContextFrame::Environment:
                    return "Two neighboring communities, yours among them, draw on one common "
                           "natural resource. Season after season, each side settles on how "
                           "carefully it will use what is shared.";
                case ContextFrame::Social:
                    return "There is an acquaintance you keep crossing paths with. Every time "
                           "you meet, you settle on how warmly to behave toward them.";
                case ContextFrame::Team:
                    return "You and a colleague sit on the same team and answer for joint "
                           "deliverables. Sprint after sprint, each of you settles on how much "
                           "to contribute to the shared work.";
                case ContextFrame::IR:
                    return "Your government and a foreign government keep meeting over one "
                           "unresolved policy matter. At every session, each side settles on "
                           "either a conciliatory or an unyielding position.";
            }
            break;
    }
    return "";
}

inline std::string payoff_block(PromptRegime regime, const PayoffMatrix& m, GameMode mode) {
    const std::string other = mode == GameMode::Network ? "each neighbor" : "your counterpart";
    std::ostringstream out;
    switch (regime) {
        case PromptRegime::Standard:
        case PromptRegime::Variant:
            out << "In every round, you and " << other
                << " each privately choose one of two options: C or D. Points are awarded as "
                   "follows.\n"
                << "- If you both choose C, you each receive " << m.reward << " points.\n"
                << "- If you choose C and the other chooses D, you receive " << m.sucker
                << " points and they receive " << m.temptation << ".\n"
                << "- If you choose D and the other chooses C, you receive " << m.temptation
                << " points and they receive " << m.sucker << ".\n"
                << "- If you both choose D, you each receive " << m.punishment << " points.\n"
                << "You will play repeatedly against the same "
                << (mode == GameMode::Network ? "neighbors" : "counterpart")
                << ", and after every round you will learn what happened. Your goal is to earn "
                   "as many points as you can.";
            break;
        case PromptRegime::Robust:
            out << "Every round works the same way: you and " << other
                << " pick, in private, either option C or option D. The scoring rule is:\n"
                << "- both pick C: " << m.reward << " points each.\n"
                << "- you pick C, the other picks D: " << m.sucker << " points for you, "
                << m.temptation << " for them.\n"
                << "- you pick D, the other picks C: " << m.temptation << " points for you, "
                << m.sucker << " for them.\n"
                << "- both pick D: " << m.punishment << " points each.\n"
                << "The same pairing repeats round after round, with the results of each round "
                   "reported back to you. Accumulate as many points as possible.";
            break;
    }
    return out.str();
}

inline std::string messaging_block(PromptRegime regime, Treatment treatment, GameMode mode) {
    if (!is_messaging(treatment)) return "";
    const bool one_word = treatment == Treatment::OneWord;
    const std::string unit = one_word ? "a single word (with no spaces)" : "one short sentence";
    std::ostringstream out;
    switch (regime) {
        case PromptRegime::Standard:
        case PromptRegime::Variant:
            out << "Before choosing each round, you may send "
                << (mode == GameMode::Network ? "one message that will be shown to your entire "
                                                "neighborhood"
                                              : "your counterpart one message")
                << ", consisting of " << unit
                << ". Messages are non-binding and cost nothing: what the other side says may "
                   "or may not reflect what they will actually do, so interpret their "
                   "statements cautiously.";
            break;
        case PromptRegime::Robust:
            out << "Each round, prior to deciding, you have the option of sending "
                << (mode == GameMode::Network
                        ? "a single message that every neighbor of yours will see"
                        : "a message to the other side")
                << "; it must be " << unit
                << ". Such messages are non-binding and carry no cost. Treat "
                   "whatever the other side tells you with caution, since their words need "
                   "not match their actions.";
            break;
    }
    return out.str();
}

inline std::string format_block(PromptRegime regime, GameMode mode) {
    std::ostringstream out;
    if (mode == GameMode::Dyadic) {
        if (regime == PromptRegime::Robust)
            out << "Whenever you are asked for your choice, answer with exactly one line "
                   "reading ACTION: C or ACTION: D.";
        else
            out << "When asked for your action, reply with a single line of the form "
                   "ACTION: C or ACTION: D.";
    } else {
        if (regime == PromptRegime::Robust)
            out << "Whenever you are asked for your choices, answer with exactly one line per "
                   "neighbor, each reading AGENT_<id>: C or AGENT_<id>: D, so that every "
                   "neighbor is covered exactly once.";
        else
            out << "When asked for your actions, reply with one line per neighbor of the form "
                   "AGENT_<id>: C or AGENT_<id>: D, covering every neighbor exactly once.";
    }
    return out.str();
}

inline std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

}  // namespace prompt_detail

// System prompt templates, one per (regime, frame), with placeholder blocks
// {PAYOFFS}, {MESSAGING_RULES} and {FORMAT_RULES}. The on-disk copies are
// editable so the wording can be swapped without recompiling; the block order
// within a file is likewise free.
class TemplateLibrary {
public:
    static TemplateLibrary builtin() {
        TemplateLibrary lib;
        for (auto regime : kAllRegimes)
            for (auto frame : kAllFrames)
                lib.templates_[{regime, frame}] =
                    prompt_detail::framing_text(regime, frame) +
                    "\n\n{PAYOFFS}\n\n{MESSAGING_RULES}\n\n{FORMAT_RULES}\n";
        return lib;
    }

    // Reads system_<regime>_<frame>.txt files; missing files keep the built-in
    // wording.
    static TemplateLibrary load(const std::filesystem::path& dir) {
        TemplateLibrary lib = builtin();
        for (auto regime : kAllRegimes)
            for (auto frame : kAllFrames) {
                auto path = dir / file_name(regime, frame);
                std::ifstream in(path);
                if (!in) continue;
                std::ostringstream buf;
                buf << in.rdbuf();
                lib.templates_[{regime, frame}] = buf.str();
            }
        return lib;
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& [key, text] : templates_) {
            std::ofstream out(dir / file_name(key.first, key.second));
            if (!out) throw std::runtime_error("cannot write template file in " + dir.string());
            out << text;
        }
    }

    static std::string file_name(PromptRegime regime, ContextFrame frame) {
        return "system_" + regime_name(regime) + "_" + frame_name(frame) + ".txt";
    }

    const std::string& raw(PromptRegime regime, ContextFrame frame) const {
        return templates_.at({regime, frame});
    }

private:
    std::map<std::pair<PromptRegime, ContextFrame>, std::string> templates_;
};

inline std::string build_system_prompt(const TemplateLibrary& lib, ContextFrame frame,
                                       PromptRegime regime, const PayoffMatrix& matrix,
                                       Treatment treatment, GameMode mode) {
    using prompt_detail::replace_all;
    std::string text = lib.raw(regime, frame);
    text = replace_all(text, "{PAYOFFS}", prompt_detail::payoff_block(regime, matrix, mode));
    text = replace_all(text, "{MESSAGING_RULES}",
                       prompt_detail::messaging_block(regime, treatment, mode));
    text = replace_all(text, "{FORMAT_RULES}", prompt_detail::format_block(regime, mode));
    // collapse the gap left by an empty messaging block
    text = replace_all(text, "\n\n\n\n", "\n\n");
    text = replace_all(text, "\n\n\n", "\n\n");
    return text;
}

inline std::string build_system_prompt(ContextFrame frame, PromptRegime regime,
                                       const PayoffMatrix& matrix, Treatment treatment,
                                       GameMode mode) {
    static const TemplateLibrary lib = TemplateLibrary::builtin();
    return build_system_prompt(lib, frame, regime, matrix, treatment, mode);
}

// Round-level user prompt. `neighbors` lists the opponents this round (one
// entry in dyadic mode); `incoming` carries this round's received messages.
inline std::string build_round_prompt(const AgentState& state, PromptPhase phase,
                                      const std::vector<Message>& incoming, Treatment treatment,
                                      GameMode mode, const std::vector<int>& neighbors) {
    if (phase == PromptPhase::MessagePhase && !is_messaging(treatment))
        throw std::invalid_argument("message phase requested under the no-messaging treatment");

    std::ostringstream out;

    bool any_history = false;
    for (int nbr : neighbors)
        if (state.last_outcome(nbr)) any_history = true;
    if (any_history) {
        if (mode == GameMode::Dyadic) {
            const RoundOutcome* last = state.last_outcome(neighbors.front());
            out << "Last round you chose " << action_char(last->action_self)
                << " and your counterpart chose " << action_char(last->action_other)
                << ". You earned " << last->payoff_self << " points; they earned "
                << last->payoff_other << ". Your total so far is " << state.score << " points.\n\n";
        } else {
            out << "Last round, per neighbor:\n";
            for (int nbr : neighbors) {
                const RoundOutcome* last = state.last_outcome(nbr);
                if (!last) continue;
                out << "- AGENT_" << nbr << ": you chose " << action_char(last->action_self)
                    << ", they chose " << action_char(last->action_other) << ", you earned "
                    << last->payoff_self << " points.\n";
            }
            out << "Your total so far is " << state.score << " points.\n\n";
        }
    }

    if (phase == PromptPhase::MessagePhase) {
        if (mode == GameMode::Dyadic)
            out << "You may now send your counterpart a message. ";
        else
            out << "You may now send one message to your entire neighborhood; every neighbor "
                   "will see the same text. ";
        if (treatment == Treatment::OneWord)
            out << "Reply with only the message: a single word, no spaces.";
        else
            out << "Reply with only the message: a single short sentence.";
        return out.str();
    }

    for (const Message& msg : incoming) {
        if (mode == GameMode::Dyadic)
            out << "Your counterpart says: \"" << msg.text << "\"\n";
        else
            out << "AGENT_" << msg.sender << " says: \"" << msg.text << "\"\n";
    }
    if (!incoming.empty()) out << "\n";

    if (mode == GameMode::Dyadic) {
        out << "Now choose your action. Reply with a single line: ACTION: C or ACTION: D.";
    } else {
        out << "Your neighbors this round: ";
        for (std::size_t i = 0; i < neighbors.size(); ++i)
            out << (i ? ", " : "") << "AGENT_" << neighbors[i];
        out << ".\nReply with exactly one line per neighbor, in the form AGENT_<id>: C or "
               "AGENT_<id>: D.";
    }
    return out.str();
}

}  // namespace ipdlab
