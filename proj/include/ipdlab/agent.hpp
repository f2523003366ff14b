#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipdlab/condition.hpp"
#include "ipdlab/game.hpp"
#include "ipdlab/rng.hpp"

namespace ipdlab {

struct Message {
    int sender = 0;
    int round = 1;
    std::string text;
};

struct AgentState {
    int agent_id = 0;
    std::map<int, std::vector<RoundOutcome>> history;  // opponent id -> outcomes
    std::vector<Message> inbox;                        // messages received this round
    long score = 0;

    int completed_rounds(int opponent) const {
        auto it = history.find(opponent);
        return it == history.end() ? 0 : static_cast<int>(it->second.size());
    }

    const RoundOutcome* last_outcome(int opponent) const {
        auto it = history.find(opponent);
        if (it == history.end() || it->second.empty()) return nullptr;
        return &it->second.back();
    }
};

enum class PolicyKind { AlwaysCooperate, AlwaysDefect, TitForTat, Bernoulli, NoisyTrend, ModelBacked };

struct Policy {
    PolicyKind kind = PolicyKind::AlwaysCooperate;
    double p_coop = 0.5;                 // Bernoulli
    std::vector<double> curve;           // NoisyTrend: per-round base cooperation rate
    double epsilon = 0.0;                // NoisyTrend noise amplitude
    std::uint64_t noise_seed = 0;        // NoisyTrend shock stream; shared => population-level shocks
    std::string model;                   // ModelBacked model name

    static Policy always_cooperate() { return {PolicyKind::AlwaysCooperate}; }
    static Policy always_defect() { return {PolicyKind::AlwaysDefect}; }
    static Policy tit_for_tat() { return {PolicyKind::TitForTat}; }
    static Policy bernoulli(double p) {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli p outside [0,1]");
        Policy pol;
        pol.kind = PolicyKind::Bernoulli;
        pol.p_coop = p;
        return pol;
    }
    static Policy noisy_trend(std::vector<double> base_curve, double eps, std::uint64_t noise_seed) {
        for (double v : base_curve)
            if (v < 0.0 || v > 1.0) throw std::invalid_argument("noisy trend curve value outside [0,1]");
        Policy pol;
        pol.kind = PolicyKind::NoisyTrend;
        pol.curve = std::move(base_curve);
        pol.epsilon = eps;
        pol.noise_seed = noise_seed;
        return pol;
    }
    static Policy model_backed(std::string model_name) {
        Policy pol;
        pol.kind = PolicyKind::ModelBacked;
        pol.model = std::move(model_name);
        return pol;
    }
};

// NoisyTrend round shocks are keyed by (noise_seed, round) only, so every agent
// sharing a noise_seed sees the same per-round perturbation. The population's
// round mean then wobbles by the full shock amplitude, which is what makes the
// trajectory's noise level a controllable, known quantity.
inline double noisy_trend_rate(const Policy& p, int round) {
    const int idx = std::min<int>(round - 1, static_cast<int>(p.curve.size()) - 1);
    double base = p.curve.empty() ? 0.5 : p.curve[std::max(idx, 0)];
    Rng shock_rng(derive_seed(p.noise_seed, 0x6e6f697365ULL, static_cast<std::uint64_t>(round)));
    double rate = base + shock_rng.uniform(-p.epsilon, p.epsilon);
    return std::clamp(rate, 0.0, 1.0);
}

inline Action decide(const Policy& policy, const AgentState& state, int opponent, Rng& rng) {
    switch (policy.kind) {
        case PolicyKind::AlwaysCooperate:
            return Action::Cooperate;
        case PolicyKind::AlwaysDefect:
            return Action::Defect;
        case PolicyKind::TitForTat: {
            const RoundOutcome* last = state.last_outcome(opponent);
            return last ? last->action_other : Action::Cooperate;
        }
        case PolicyKind::Bernoulli:
            return rng.bernoulli(policy.p_coop) ? Action::Cooperate : Action::Defect;
        case PolicyKind::NoisyTrend: {
            const int round = state.completed_rounds(opponent) + 1;
            return rng.bernoulli(noisy_trend_rate(policy, round)) ? Action::Cooperate : Action::Defect;
        }
        case PolicyKind::ModelBacked:
            throw std::logic_error("model-backed decisions are issued by the simulation engine");
    }
    return Action::Defect;
}

// Scripted message templates; the engine substitutes gateway output for
// model-backed agents.
inline std::optional<std::string> scripted_message_text(const Policy& policy, Treatment treatment) {
    if (!is_messaging(treatment)) return std::nullopt;
    const bool one_word = treatment == Treatment::OneWord;
    switch (policy.kind) {
        case PolicyKind::AlwaysCooperate:
            return one_word ? "together" : std::string("Let's keep helping each other every time.");
        case PolicyKind::AlwaysDefect:
            return one_word ? "myself" : std::string("I intend to look out for my own result.");
        case PolicyKind::TitForTat:
            return one_word ? "mirror" : std::string("I will treat you the way you treated me.");
        case PolicyKind::Bernoulli:
        case PolicyKind::NoisyTrend:
            return one_word ? "maybe" : std::string("Let's see how this goes.");
        case PolicyKind::ModelBacked:
            throw std::logic_error("model-backed messages are issued by the simulation engine");
    }
    return std::nullopt;
}

inline std::optional<Message> compose_message(const Policy& policy, const AgentState& state,
                                              Treatment treatment, int round) {
    auto text = scripted_message_text(policy, treatment);
    if (!text) return std::nullopt;
    return Message{state.agent_id, round, *text};
}

}  // namespace ipdlab
