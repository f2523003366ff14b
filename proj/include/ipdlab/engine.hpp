#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipdlab/agent.hpp"
#include "ipdlab/condition.hpp"
#include "ipdlab/game.hpp"
#include "ipdlab/gateway.hpp"
#include "ipdlab/graph.hpp"
#include "ipdlab/prompt.hpp"
#include "ipdlab/rng.hpp"

namespace ipdlab {

inline constexpr const char* kEngineVersion = "ipdlab 0.1.0";

// Identifies one analysis cell of the experiment grid. `mode` is "dyadic" or a
// topology kind name for networked runs.
struct ConditionKey {
    std::string model;
    ContextFrame frame = ContextFrame::Neutral;
    PromptRegime regime = PromptRegime::Standard;
    Treatment treatment = Treatment::NoMessaging;
    double temperature = 0.8;
    std::string mode = "dyadic";

    bool dyadic() const { return mode == "dyadic"; }

    std::string cell_id() const {
        std::ostringstream out;
        std::string model_slug = model;
        for (char& c : model_slug)
            if (c == '/' || c == ':' || c == ' ') c = '-';
        out << model_slug << "__" << frame_name(frame) << "__" << regime_name(regime) << "__"
            << treatment_name(treatment) << "__t" << temperature << "__" << mode;
        return out.str();
    }

    std::string cell_hash() const {
        const std::string id = cell_id();
        std::uint64_t h = fnv1a(id.data(), id.size());
        std::ostringstream out;
        out << std::hex << h;
        return out.str();
    }

    bool operator==(const ConditionKey& o) const {
        return model == o.model && frame == o.frame && regime == o.regime &&
               treatment == o.treatment && temperature == o.temperature && mode == o.mode;
    }
};

struct SimulationConfig {
    ConditionKey condition;
    int rounds = 10;
    int n_simulations = 100;  // 10 is the networked default
    int n_agents = 50;        // networked mode only
    PayoffMatrix matrix;
    std::uint64_t master_seed = 0;
    bool record_prompts = false;
    int workers = 1;
};

struct AgentRoundRecord {
    int agent_id = 0;
    std::string message_sent;                // empty when none was sent
    std::vector<Message> messages_received;  // delivered this round
    std::map<int, Action> actions;           // opponent -> own action
    std::map<int, int> payoffs;              // opponent -> own payoff
    std::string message_prompt;              // recorded when requested / model-backed
    std::string action_prompt;
};

struct RoundRecord {
    int round = 1;
    std::vector<AgentRoundRecord> agents;
};

struct Transcript {
    ConditionKey condition;
    int sim_index = 0;
    std::uint64_t seed = 0;
    std::string graph_ref;  // edge-list reference for networked runs
    bool aborted = false;
    std::string abort_reason;
    std::vector<RoundRecord> rounds;
};

// ---- json serialization -------------------------------------------------

inline void to_json(json& j, const ConditionKey& c) {
    j = json{{"model", c.model},
             {"frame", frame_name(c.frame)},
             {"regime", regime_name(c.regime)},
             {"treatment", treatment_name(c.treatment)},
             {"temperature", c.temperature},
             {"mode", c.mode}};
}

inline void from_json(const json& j, ConditionKey& c) {
    c.model = j.at("model").get<std::string>();
    c.frame = frame_from(j.at("frame").get<std::string>());
    c.regime = regime_from(j.at("regime").get<std::string>());
    c.treatment = treatment_from(j.at("treatment").get<std::string>());
    c.temperature = j.at("temperature").get<double>();
    c.mode = j.at("mode").get<std::string>();
}

inline void to_json(json& j, const Message& m) {
    j = json{{"sender", m.sender}, {"round", m.round}, {"text", m.text}};
}

inline void from_json(const json& j, Message& m) {
    m.sender = j.at("sender").get<int>();
    m.round = j.at("round").get<int>();
    m.text = j.at("text").get<std::string>();
}

inline void to_json(json& j, const AgentRoundRecord& a) {
    json actions = json::object(), payoffs = json::object();
    for (auto [opp, act] : a.actions) actions[std::to_string(opp)] = std::string(1, action_char(act));
    for (auto [opp, pay] : a.payoffs) payoffs[std::to_string(opp)] = pay;
    j = json{{"agent", a.agent_id},
             {"message_sent", a.message_sent},
             {"messages_received", a.messages_received},
             {"actions", actions},
             {"payoffs", payoffs}};
    if (!a.message_prompt.empty()) j["message_prompt"] = a.message_prompt;
    if (!a.action_prompt.empty()) j["action_prompt"] = a.action_prompt;
}

inline void from_json(const json& j, AgentRoundRecord& a) {
    a.agent_id = j.at("agent").get<int>();
    a.message_sent = j.at("message_sent").get<std::string>();
    a.messages_received = j.at("messages_received").get<std::vector<Message>>();
    for (auto& [key, val] : j.at("actions").items())
        a.actions[std::stoi(key)] = action_from_char(val.get<std::string>()[0]);
    for (auto& [key, val] : j.at("payoffs").items()) a.payoffs[std::stoi(key)] = val.get<int>();
    if (j.contains("message_prompt")) a.message_prompt = j["message_prompt"].get<std::string>();
    if (j.contains("action_prompt")) a.action_prompt = j["action_prompt"].get<std::string>();
}

inline void to_json(json& j, const RoundRecord& r) {
    j = json{{"round", r.round}, {"agents", r.agents}};
}

inline void from_json(const json& j, RoundRecord& r) {
    r.round = j.at("round").get<int>();
    r.agents = j.at("agents").get<std::vector<AgentRoundRecord>>();
}

inline void to_json(json& j, const Transcript& t) {
    j = json{{"condition", t.condition}, {"sim", t.sim_index},       {"seed", t.seed},
             {"graph_ref", t.graph_ref}, {"aborted", t.aborted},     {"abort_reason", t.abort_reason},
             {"rounds", t.rounds}};
}

inline void from_json(const json& j, Transcript& t) {
    t.condition = j.at("condition").get<ConditionKey>();
    t.sim_index = j.at("sim").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.graph_ref = j.at("graph_ref").get<std::string>();
    t.aborted = j.at("aborted").get<bool>();
    t.abort_reason = j.at("abort_reason").get<std::string>();
    t.rounds = j.at("rounds").get<std::vector<RoundRecord>>();
}

// ---- engine internals ---------------------------------------------------

struct EngineHooks {
    Gateway* gateway = nullptr;
    const TemplateLibrary* templates = nullptr;
    ModelConfig model_base;  // endpoint/timeout/retry defaults for model-backed agents
};

struct SimulationAborted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace engine_detail {

inline constexpr std::uint64_t kSimTag = 0x73696dULL;
inline constexpr std::uint64_t kDecideTag = 0xdec1deULL;

inline Rng decision_rng(std::uint64_t sim_seed, int round, int agent, int opponent) {
    return Rng(derive_seed(sim_seed, {kDecideTag, static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(agent) * 1000003ULL +
                                          static_cast<std::uint64_t>(opponent)}));
}

// Conversation state for one model-backed agent.
struct ModelSession {
    std::vector<ChatTurn> turns;
    ModelConfig config;
};

inline std::string model_complete(const EngineHooks& hooks, ModelSession& session,
                                  const std::string& user_prompt) {
    if (!hooks.gateway) throw TransportError("no gateway configured for model-backed policy");
    session.turns.push_back({"user", user_prompt});
    CompletionResult res = hooks.gateway->complete(session.config, session.turns);
    session.turns.push_back({"assistant", res.text});
    return res.text;
}

// One corrective retry on malformed output, then the simulation aborts.
template <typename Parse>
auto parse_with_retry(const EngineHooks& hooks, ModelSession& session, const std::string& text,
                      Parse parse, const std::string& reminder) {
    try {
        return parse(text);
    } catch (const ParseError&) {
        const std::string retry_text = model_complete(hooks, session, reminder);
        return parse(retry_text);  // second failure propagates
    }
}

inline const TemplateLibrary& templates_or_builtin(const EngineHooks& hooks) {
    static const TemplateLibrary builtin = TemplateLibrary::builtin();
    return hooks.templates ? *hooks.templates : builtin;
}

inline ModelConfig session_config(const EngineHooks& hooks, const Policy& policy,
                                  const ConditionKey& condition) {
    ModelConfig cfg = hooks.model_base;
    cfg.model = policy.model.empty() ? condition.model : policy.model;
    cfg.temperature = condition.temperature;
    return cfg;
}

}  // namespace engine_detail

// Runs `count` independent jobs on `workers` threads; results keyed by index so
// scheduling cannot change the output.
template <typename Fn>
std::vector<Transcript> run_batch(int count, int workers, Fn&& job) {
    std::vector<Transcript> results(count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) results[i] = job(i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    results[i] = job(i);
                } catch (...) {
                    std::lock_guard lk(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

inline Transcript run_one_dyadic(const SimulationConfig& config,
                                 const std::pair<Policy, Policy>& policies,
                                 const EngineHooks& hooks, int sim_index) {
    namespace ed = engine_detail;
    const std::uint64_t sim_seed =
        derive_seed(config.master_seed, ed::kSimTag, static_cast<std::uint64_t>(sim_index));
    const Treatment treatment = config.condition.treatment;
    const auto& templates = ed::templates_or_builtin(hooks);

    Transcript t;
    t.condition = config.condition;
    t.sim_index = sim_index;
    t.seed = sim_seed;

    std::array<Policy, 2> policy = {policies.first, policies.second};
    std::array<AgentState, 2> state;
    std::array<ed::ModelSession, 2> session;
    for (int a = 0; a < 2; ++a) {
        state[a].agent_id = a;
        if (policy[a].kind == PolicyKind::ModelBacked) {
            session[a].config = ed::session_config(hooks, policy[a], config.condition);
            session[a].turns.push_back(
                {"system", build_system_prompt(templates, config.condition.frame,
                                               config.condition.regime, config.matrix, treatment,
                                               GameMode::Dyadic)});
        }
    }
    const bool want_prompts = config.record_prompts;

    try {
        for (int round = 1; round <= config.rounds; ++round) {
            RoundRecord rec;
            rec.round = round;
            rec.agents.resize(2);
            std::array<std::optional<Message>, 2> outgoing;

            if (is_messaging(treatment)) {
                for (int a = 0; a < 2; ++a) {
                    const int opp = 1 - a;
                    const bool model = policy[a].kind == PolicyKind::ModelBacked;
                    std::string prompt;
                    if (model || want_prompts)
                        prompt = build_round_prompt(state[a], PromptPhase::MessagePhase, {},
                                                    treatment, GameMode::Dyadic, {opp});
                    std::string text;
                    if (model) {
                        const std::string raw = ed::model_complete(hooks, session[a], prompt);
                        text = ed::parse_with_retry(
                            hooks, session[a], raw,
                            [&](const std::string& s) { return parse_message(s, treatment); },
                            treatment == Treatment::OneWord
                                ? "Reply with only the message: a single word, no spaces."
                                : "Reply with only the message: a single short sentence.");
                    } else {
                        text = scripted_message_text(policy[a], treatment).value();
                    }
                    outgoing[a] = Message{a, round, text};
                    rec.agents[a].message_sent = text;
                    if (want_prompts) rec.agents[a].message_prompt = prompt;
                }
                // simultaneous delivery after both have committed
                for (int a = 0; a < 2; ++a) {
                    state[a].inbox = {*outgoing[1 - a]};
                    rec.agents[a].messages_received = state[a].inbox;
                }
            } else {
                for (int a = 0; a < 2; ++a) state[a].inbox.clear();
            }

            // both action prompts are built before either agent acts
            std::array<std::string, 2> action_prompt;
            for (int a = 0; a < 2; ++a) {
                const int opp = 1 - a;
                if (policy[a].kind == PolicyKind::ModelBacked || want_prompts)
                    action_prompt[a] = build_round_prompt(state[a], PromptPhase::ActionPhase,
                                                          state[a].inbox, treatment,
                                                          GameMode::Dyadic, {opp});
            }
            std::array<Action, 2> action;
            for (int a = 0; a < 2; ++a) {
                const int opp = 1 - a;
                if (policy[a].kind == PolicyKind::ModelBacked) {
                    const std::string raw = ed::model_complete(hooks, session[a], action_prompt[a]);
                    action[a] = ed::parse_with_retry(
                        hooks, session[a], raw, [](const std::string& s) { return parse_action(s); },
                        "Reply with a single line: ACTION: C or ACTION: D.");
                } else {
                    Rng rng = ed::decision_rng(sim_seed, round, a, opp);
                    action[a] = decide(policy[a], state[a], opp, rng);
                }
            }

            auto [p0, p1] = resolve_round(action[0], action[1], config.matrix);
            const std::array<int, 2> payoff = {p0, p1};
            for (int a = 0; a < 2; ++a) {
                const int opp = 1 - a;
                state[a].history[opp].push_back(
                    {action[a], action[opp], payoff[a], payoff[opp], round});
                state[a].score += payoff[a];
                rec.agents[a].agent_id = a;
                rec.agents[a].actions[opp] = action[a];
                rec.agents[a].payoffs[opp] = payoff[a];
                if (want_prompts) rec.agents[a].action_prompt = action_prompt[a];
            }
            t.rounds.push_back(std::move(rec));
        }
    } catch (const GatewayError& e) {
        t.aborted = true;
        t.abort_reason = e.what();
    }
    return t;
}

inline std::vector<Transcript> run_dyadic(const SimulationConfig& config,
                                          const std::pair<Policy, Policy>& policies,
                                          const EngineHooks& hooks = {}) {
    if (config.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (!matrix_valid(config.matrix)) throw std::invalid_argument("invalid payoff matrix");
    return run_batch(config.n_simulations, config.workers, [&](int i) {
        return run_one_dyadic(config, policies, hooks, i);
    });
}

inline Transcript run_one_network(const SimulationConfig& config, const Graph& graph,
                                  const std::vector<Policy>& assignment, const EngineHooks& hooks,
                                  int sim_index) {
    namespace ed = engine_detail;
    const int n = graph.node_count;
    const std::uint64_t sim_seed =
        derive_seed(config.master_seed, ed::kSimTag, static_cast<std::uint64_t>(sim_index));
    const Treatment treatment = config.condition.treatment;
    const auto& templates = ed::templates_or_builtin(hooks);
    const auto adjacency = graph.adjacency();

    Transcript t;
    t.condition = config.condition;
    t.sim_index = sim_index;
    t.seed = sim_seed;

    std::vector<AgentState> state(n);
    std::vector<ed::ModelSession> session(n);
    std::vector<std::vector<int>> neighbors(n);
    for (int a = 0; a < n; ++a) {
        state[a].agent_id = a;
        neighbors[a] = adjacency[a];
        std::sort(neighbors[a].begin(), neighbors[a].end());
        if (assignment[a].kind == PolicyKind::ModelBacked) {
            session[a].config = ed::session_config(hooks, assignment[a], config.condition);
            session[a].turns.push_back(
                {"system", build_system_prompt(templates, config.condition.frame,
                                               config.condition.regime, config.matrix, treatment,
                                               GameMode::Network)});
        }
    }
    const bool want_prompts = config.record_prompts;

    try {
        for (int round = 1; round <= config.rounds; ++round) {
            RoundRecord rec;
            rec.round = round;
            rec.agents.resize(n);
            std::vector<std::optional<Message>> broadcast(n);

            if (is_messaging(treatment)) {
                for (int a = 0; a < n; ++a) {
                    if (neighbors[a].empty()) continue;
                    const bool model = assignment[a].kind == PolicyKind::ModelBacked;
                    std::string prompt;
                    if (model || want_prompts)
                        prompt = build_round_prompt(state[a], PromptPhase::MessagePhase, {},
                                                    treatment, GameMode::Network, neighbors[a]);
                    std::string text;
                    if (model) {
                        const std::string raw = ed::model_complete(hooks, session[a], prompt);
                        text = ed::parse_with_retry(
                            hooks, session[a], raw,
                            [&](const std::string& s) { return parse_message(s, treatment); },
                            treatment == Treatment::OneWord
                                ? "Reply with only the message: a single word, no spaces."
                                : "Reply with only the message: a single short sentence.");
                    } else {
                        text = scripted_message_text(assignment[a], treatment).value();
                    }
                    broadcast[a] = Message{a, round, text};
                    rec.agents[a].message_sent = text;
                    if (want_prompts) rec.agents[a].message_prompt = prompt;
                }
                for (int a = 0; a < n; ++a) {
                    state[a].inbox.clear();
                    for (int nbr : neighbors[a])
                        if (broadcast[nbr]) state[a].inbox.push_back(*broadcast[nbr]);
                    rec.agents[a].messages_received = state[a].inbox;
                }
            } else {
                for (int a = 0; a < n; ++a) state[a].inbox.clear();
            }

            std::vector<std::map<int, Action>> chosen(n);
            for (int a = 0; a < n; ++a) {
                if (neighbors[a].empty()) continue;
                std::string prompt;
                if (assignment[a].kind == PolicyKind::ModelBacked || want_prompts)
                    prompt = build_round_prompt(state[a], PromptPhase::ActionPhase, state[a].inbox,
                                                treatment, GameMode::Network, neighbors[a]);
                if (assignment[a].kind == PolicyKind::ModelBacked) {
                    const std::string raw = ed::model_complete(hooks, session[a], prompt);
                    chosen[a] = ed::parse_with_retry(
                        hooks, session[a], raw,
                        [&](const std::string& s) { return parse_network_actions(s, neighbors[a]); },
                        "Reply with exactly one line per neighbor, in the form AGENT_<id>: C "
                        "or AGENT_<id>: D.");
                } else {
                    for (int nbr : neighbors[a]) {
                        Rng rng = ed::decision_rng(sim_seed, round, a, nbr);
                        chosen[a][nbr] = decide(assignment[a], state[a], nbr, rng);
                    }
                }
                if (want_prompts) rec.agents[a].action_prompt = prompt;
            }

            for (auto [u, v] : graph.edges) {
                const Action au = chosen[u].at(v), av = chosen[v].at(u);
                auto [pu, pv] = resolve_round(au, av, config.matrix);
                state[u].history[v].push_back({au, av, pu, pv, round});
                state[v].history[u].push_back({av, au, pv, pu, round});
                state[u].score += pu;
                state[v].score += pv;
                rec.agents[u].actions[v] = au;
                rec.agents[u].payoffs[v] = pu;
                rec.agents[v].actions[u] = av;
                rec.agents[v].payoffs[u] = pv;
            }
            for (int a = 0; a < n; ++a) rec.agents[a].agent_id = a;
            t.rounds.push_back(std::move(rec));
        }
    } catch (const GatewayError& e) {
        // an abort voids the whole networked simulation
        t.aborted = true;
        t.abort_reason = e.what();
        t.rounds.clear();
    }
    return t;
}

inline std::vector<Transcript> run_network(const SimulationConfig& config, const Graph& graph,
                                           const std::vector<Policy>& assignment,
                                           const EngineHooks& hooks = {},
                                           const std::string& graph_ref = "") {
    if (graph.node_count != config.n_agents)
        throw std::invalid_argument("graph node count does not match configured agent count");
    if (static_cast<int>(assignment.size()) != graph.node_count)
        throw std::invalid_argument("policy assignment size does not match graph");
    if (!matrix_valid(config.matrix)) throw std::invalid_argument("invalid payoff matrix");
    auto out = run_batch(config.n_simulations, config.workers, [&](int i) {
        return run_one_network(config, graph, assignment, hooks, i);
    });
    for (auto& t : out) t.graph_ref = graph_ref;
    return out;
}

// ---- transcript store ---------------------------------------------------

struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void persist(const std::vector<Transcript>& transcripts, std::ostream& out,
                    const ConditionKey* condition = nullptr, std::uint64_t master_seed = 0) {
    json header;
    header["format"] = "ipdlab-transcripts-v1";
    header["engine_version"] = kEngineVersion;
    header["count"] = transcripts.size();
    header["master_seed"] = master_seed;
    if (condition)
        header["condition"] = *condition;
    else if (!transcripts.empty())
        header["condition"] = transcripts.front().condition;
    out << header.dump() << "\n";
    for (const auto& t : transcripts) out << json(t).dump() << "\n";
}

inline void persist(const std::vector<Transcript>& transcripts, const std::string& path,
                    const ConditionKey* condition = nullptr, std::uint64_t master_seed = 0) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    persist(transcripts, out, condition, master_seed);
}

inline std::vector<Transcript> load_transcripts(std::istream& in) {
    std::vector<Transcript> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            if (line_no == 1 && j.contains("format")) continue;  // header
            out.push_back(j.get<Transcript>());
        } catch (const json::exception& e) {
            throw LoadError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<Transcript> load_transcripts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path);
    return load_transcripts(in);
}

inline int count_aborted(const std::vector<Transcript>& ts) {
    int n = 0;
    for (const auto& t : ts)
        if (t.aborted) ++n;
    return n;
}

}  // namespace ipdlab
