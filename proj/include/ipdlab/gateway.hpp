#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ipdlab/agent.hpp"
#include "ipdlab/condition.hpp"
#include "ipdlab/game.hpp"

namespace ipdlab {

using nlohmann::json;

struct GatewayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TransportError : GatewayError {
    using GatewayError::GatewayError;
};
struct ProtocolError : GatewayError {
    using GatewayError::GatewayError;
};
struct ParseError : GatewayError {
    using GatewayError::GatewayError;
};

struct ModelConfig {
    std::string model;
    std::string base_url = "http://127.0.0.1:11434";
    double temperature = 0.8;
    std::optional<std::uint64_t> sampler_seed;
    int timeout_s = 120;
    int retries = 3;
    int backoff_initial_ms = 250;
};

// The paper's studied settings are 0.8 (main runs) and 0 (robustness check);
// anything else outside [0.7, 0.9] is accepted with a warning.
inline bool temperature_in_studied_range(double t) {
    return t == 0.0 || (t >= 0.7 && t <= 0.9);
}

struct ChatTurn {
    std::string role;  // system | user | assistant
    std::string content;
};

struct CompletionResult {
    std::string text;
    long latency_ms = 0;
    long prompt_tokens = -1;      // -1 when the server did not report a count
    long completion_tokens = -1;
};

namespace gateway_detail {

inline std::pair<std::string, std::string> split_url(const std::string& base_url) {
    // scheme://host:port[/prefix]
    auto scheme_end = base_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) return {base_url, ""};
    return {base_url.substr(0, path_start), base_url.substr(path_start)};
}

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        std::lock_guard lk(mu_);
        ++count_;
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int count_;
};

}  // namespace gateway_detail

// Chat-completion transport against an ollama-style local server. A single
// Gateway instance caps the number of in-flight requests; per-simulation call
// order is the caller's responsibility.
class Gateway {
public:
    explicit Gateway(int max_in_flight = 4) : slots_(max_in_flight) {}

    CompletionResult complete(const ModelConfig& config, const std::vector<ChatTurn>& turns) {
        warn_temperature(config);
        slots_.acquire();
        struct Release {
            gateway_detail::Semaphore& s;
            ~Release() { s.release(); }
        } release{slots_};

        json body;
        body["model"] = config.model;
        body["stream"] = false;
        body["options"]["temperature"] = config.temperature;
        if (config.sampler_seed) body["options"]["seed"] = *config.sampler_seed;
        auto& messages = body["messages"];
        messages = json::array();
        for (const ChatTurn& turn : turns) messages.push_back({{"role", turn.role}, {"content", turn.content}});
        const std::string payload = body.dump();

        auto [host, prefix] = gateway_detail::split_url(config.base_url);
        std::string last_error;
        int backoff_ms = config.backoff_initial_ms;
        for (int attempt = 0; attempt <= config.retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
            httplib::Client client(host);
            client.set_connection_timeout(config.timeout_s, 0);
            client.set_read_timeout(config.timeout_s, 0);
            const auto start = std::chrono::steady_clock::now();
            auto res = client.Post(prefix + "/api/chat", payload, "application/json");
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - start)
                                     .count();
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw ProtocolError("gateway returned status " + std::to_string(res->status) +
                                    ": " + res->body.substr(0, 200));
            CompletionResult out;
            out.latency_ms = static_cast<long>(elapsed);
            try {
                json reply = json::parse(res->body);
                out.text = reply.at("message").at("content").get<std::string>();
                if (reply.contains("prompt_eval_count"))
                    out.prompt_tokens = reply["prompt_eval_count"].get<long>();
                if (reply.contains("eval_count"))
                    out.completion_tokens = reply["eval_count"].get<long>();
            } catch (const json::exception& e) {
                throw ProtocolError(std::string("malformed gateway response: ") + e.what());
            }
            return out;
        }
        throw TransportError("gateway unreachable after " + std::to_string(config.retries + 1) +
                             " attempts: " + last_error);
    }

    // Cheap reachability probe for preflight checks.
    static bool reachable(const std::string& base_url, int timeout_s = 5) {
        auto [host, prefix] = gateway_detail::split_url(base_url);
        httplib::Client client(host);
        client.set_connection_timeout(timeout_s, 0);
        client.set_read_timeout(timeout_s, 0);
        auto res = client.Get(prefix.empty() ? "/" : prefix);
        return static_cast<bool>(res);
    }

private:
    void warn_temperature(const ModelConfig& config) {
        if (temperature_in_studied_range(config.temperature)) return;
        std::lock_guard lk(warn_mu_);
        if (warned_.insert({config.model, config.temperature}).second == false) return;
        std::cerr << "warning: temperature " << config.temperature << " for model " << config.model
                  << " is outside the studied range {0} u [0.7, 0.9]\n";
    }

    gateway_detail::Semaphore slots_;
    std::mutex warn_mu_;
    std::set<std::pair<std::string, double>> warned_;
};

// ---- output parsing ----------------------------------------------------

namespace gateway_detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline bool contains_word(const std::string& haystack_lower, const std::string& word) {
    std::size_t pos = 0;
    while ((pos = haystack_lower.find(word, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(haystack_lower[pos - 1]));
        const std::size_t end = pos + word.size();
        const bool right_ok =
            end >= haystack_lower.size() || !std::isalpha(static_cast<unsigned char>(haystack_lower[end]));
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

}  // namespace gateway_detail

// Last "ACTION: C|D" marker line wins; falls back to a whole-word
// cooperate/defect scan when no marker is present.
inline Action parse_action(const std::string& text) {
    static const std::regex marker(R"(^\s*action\s*:\s*([cd])\b)", std::regex::icase);
    std::optional<Action> found;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::smatch m;
        if (std::regex_search(line, m, marker)) found = action_from_char(m[1].str()[0]);
    }
    if (found) return *found;
    const std::string lowered = gateway_detail::lower(text);
    const bool coop = gateway_detail::contains_word(lowered, "cooperate");
    const bool defect = gateway_detail::contains_word(lowered, "defect");
    if (coop == defect)
        throw ParseError(coop ? "ambiguous action in model output" : "no action found in model output");
    return coop ? Action::Cooperate : Action::Defect;
}

// Network replies must cover each neighbor exactly once with
// "AGENT_<id>: C|D" lines.
inline std::map<int, Action> parse_network_actions(const std::string& text,
                                                   const std::vector<int>& neighbor_ids) {
    if (neighbor_ids.empty()) throw std::invalid_argument("neighbor_ids must be non-empty");
    static const std::regex line_re(R"(^\s*agent[_ ]?(\d+)\s*:\s*([cd])\b\s*\.?\s*$)",
                                    std::regex::icase);
    static const std::regex looks_like(R"(agent[_ ]?\d+)", std::regex::icase);
    std::map<int, Action> actions;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::smatch m;
        if (std::regex_match(line, m, line_re)) {
            const int id = std::stoi(m[1].str());
            if (std::find(neighbor_ids.begin(), neighbor_ids.end(), id) == neighbor_ids.end())
                throw ParseError("unknown id " + std::to_string(id));
            if (actions.count(id)) throw ParseError("duplicate id " + std::to_string(id));
            actions[id] = action_from_char(m[2].str()[0]);
        } else if (std::regex_search(line, looks_like)) {
            throw ParseError("malformed line: " + line);
        }
    }
    for (int id : neighbor_ids)
        if (!actions.count(id)) throw ParseError("uncovered neighbor " + std::to_string(id));
    return actions;
}

inline std::string parse_message(const std::string& text, Treatment treatment) {
    if (!is_messaging(treatment)) throw std::invalid_argument("parse_message under no-messaging");
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        auto b = s.find_first_not_of(ws);
        if (b == std::string::npos) return std::string();
        auto e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    };
    std::string body = trim(text);
    if (body.empty()) throw ParseError("empty message output");
    if (treatment == Treatment::FullMessage) {
        auto cut = body.find_first_of(".!?");
        if (cut != std::string::npos) body = body.substr(0, cut + 1);
        return trim(body);
    }
    // one word: first whitespace-delimited token, punctuation stripped
    std::istringstream in(body);
    std::string token;
    in >> token;
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)); };
    while (!token.empty() && is_punct(token.front())) token.erase(token.begin());
    while (!token.empty() && is_punct(token.back())) token.pop_back();
    if (token.empty()) throw ParseError("empty message output");
    return token;
}

// ---- offline fixture server --------------------------------------------

// Replays canned completions for tests and offline runs. The handler receives
// the parsed request body and returns the assistant text.
class MockServer {
public:
    using Handler = std::function<std::string(const json& request)>;

    explicit MockServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) {
            json body = json::parse(req.body);
            {
                std::lock_guard lk(mu_);
                requests_.push_back(body);
            }
            json reply;
            reply["message"] = {{"role", "assistant"}, {"content", handler_(body)}};
            reply["prompt_eval_count"] = 0;
            reply["eval_count"] = 0;
            res.set_content(reply.dump(), "application/json");
        });
        server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::vector<json> requests() const {
        std::lock_guard lk(mu_);
        return requests_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::vector<json> requests_;
};

}  // namespace ipdlab
