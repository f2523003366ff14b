#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipdlab/agent.hpp"
#include "ipdlab/engine.hpp"
#include "ipdlab/graph.hpp"

namespace ipdlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Policy spec strings used in grid configs:
//   model | always_cooperate | always_defect | tit_for_tat
//   bernoulli:<p>
//   noisytrend:eps=<e>;seed=<s>;curve=<v1>,<v2>,...
inline Policy parse_policy(const std::string& spec) {
    auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    if (head == "model") return Policy::model_backed("");
    if (head == "always_cooperate") return Policy::always_cooperate();
    if (head == "always_defect") return Policy::always_defect();
    if (head == "tit_for_tat") return Policy::tit_for_tat();
    if (head == "bernoulli") {
        if (colon == std::string::npos) throw ConfigError("bernoulli policy needs a probability");
        return Policy::bernoulli(std::stod(spec.substr(colon + 1)));
    }
    if (head == "noisytrend") {
        if (colon == std::string::npos) throw ConfigError("noisytrend policy needs parameters");
        double eps = 0.0;
        std::uint64_t seed = 0;
        std::vector<double> curve;
        std::istringstream params(spec.substr(colon + 1));
        std::string kv;
        while (std::getline(params, kv, ';')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("noisytrend parameter missing '=': " + kv);
            const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            if (key == "eps") eps = std::stod(val);
            else if (key == "seed") seed = std::stoull(val);
            else if (key == "curve") {
                std::istringstream vs(val);
                std::string v;
                while (std::getline(vs, v, ',')) curve.push_back(std::stod(v));
            } else {
                throw ConfigError("unknown noisytrend parameter: " + key);
            }
        }
        if (curve.empty()) throw ConfigError("noisytrend policy needs a curve");
        return Policy::noisy_trend(curve, eps, seed);
    }
    throw ConfigError("unknown policy spec: " + spec);
}

struct CellConfig {
    ConditionKey condition;
    std::string policy = "model";
    int n_simulations = -1;  // -1: mode default (100 dyadic, 10 network)
    std::optional<std::uint64_t> seed_override;
};

struct GridConfig {
    std::string output_dir = "results";
    std::uint64_t master_seed = 0;
    int rounds = 10;
    PayoffMatrix matrix;
    std::string template_dir;
    int workers = 1;
    int n_simulations_dyadic = 100;
    int n_simulations_network = 10;
    int agents_per_network = 50;
    std::string gateway_url = "http://127.0.0.1:11434";
    int gateway_timeout_s = 120;
    int gateway_retries = 3;
    int max_in_flight = 4;
    NetworkSpec network;  // shared topology parameters for networked cells
    std::uint64_t graph_seed = 0;
    std::vector<CellConfig> cells;
};

namespace config_detail {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

inline NetworkSpec parse_network(const json& j, const std::string& path) {
    NetworkSpec spec;
    try {
        if (j.contains("kind")) spec.kind = network_kind_from(j.at("kind").get<std::string>());
        spec.n = get_or(j, "n", spec.n);
        spec.p = get_or(j, "p", spec.p);
        spec.m = get_or(j, "m", spec.m);
        spec.p_triangle = get_or(j, "p_triangle", spec.p_triangle);
        spec.core_fraction = get_or(j, "core_fraction", spec.core_fraction);
        spec.p_cc = get_or(j, "p_cc", spec.p_cc);
        spec.p_cp = get_or(j, "p_cp", spec.p_cp);
        spec.p_pp = get_or(j, "p_pp", spec.p_pp);
        spec.require_connected = get_or(j, "require_connected", spec.require_connected);
        validate_spec(spec);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return spec;
}

}  // namespace config_detail

inline GridConfig parse_grid(const json& j) {
    using config_detail::get_or;
    GridConfig grid;
    grid.output_dir = get_or<std::string>(j, "output_dir", grid.output_dir);
    grid.master_seed = get_or<std::uint64_t>(j, "master_seed", grid.master_seed);
    grid.rounds = get_or(j, "rounds", grid.rounds);
    if (grid.rounds < 1) throw ConfigError("rounds: must be >= 1");
    if (j.contains("matrix")) {
        const json& m = j["matrix"];
        grid.matrix.temptation = m.value("T", grid.matrix.temptation);
        grid.matrix.reward = m.value("R", grid.matrix.reward);
        grid.matrix.punishment = m.value("P", grid.matrix.punishment);
        grid.matrix.sucker = m.value("S", grid.matrix.sucker);
        auto violations = validate_matrix(grid.matrix);
        if (!violations.empty()) {
            std::string msg = "matrix:";
            for (const auto& v : violations) msg += " " + v + ";";
            throw ConfigError(msg);
        }
    }
    grid.template_dir = get_or<std::string>(j, "template_dir", grid.template_dir);
    grid.workers = get_or(j, "workers", grid.workers);
    if (j.contains("defaults")) {
        const json& d = j["defaults"];
        grid.n_simulations_dyadic = d.value("n_simulations_dyadic", grid.n_simulations_dyadic);
        grid.n_simulations_network = d.value("n_simulations_network", grid.n_simulations_network);
        grid.agents_per_network = d.value("agents_per_network", grid.agents_per_network);
    }
    if (j.contains("gateway")) {
        const json& g = j["gateway"];
        grid.gateway_url = g.value("base_url", grid.gateway_url);
        grid.gateway_timeout_s = g.value("timeout_s", grid.gateway_timeout_s);
        grid.gateway_retries = g.value("retries", grid.gateway_retries);
        grid.max_in_flight = g.value("max_in_flight", grid.max_in_flight);
    }
    if (j.contains("network")) grid.network = config_detail::parse_network(j["network"], "network");
    grid.graph_seed = get_or<std::uint64_t>(j, "graph_seed", grid.graph_seed);

    if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty())
        throw ConfigError("cells: at least one cell is required");
    std::set<std::string> seen_ids;
    int idx = 0;
    for (const json& c : j["cells"]) {
        const std::string path = "cells[" + std::to_string(idx) + "]";
        CellConfig cell;
        try {
            cell.condition.model = c.value("model", std::string("scripted"));
            if (c.contains("frame")) cell.condition.frame = frame_from(c["frame"].get<std::string>());
            if (c.contains("regime"))
                cell.condition.regime = regime_from(c["regime"].get<std::string>());
            if (c.contains("treatment"))
                cell.condition.treatment = treatment_from(c["treatment"].get<std::string>());
            cell.condition.temperature = c.value("temperature", 0.8);
            cell.condition.mode = c.value("mode", std::string("dyadic"));
            if (cell.condition.mode != "dyadic") network_kind_from(cell.condition.mode);
            cell.policy = c.value("policy", std::string("model"));
            parse_policy(cell.policy);  // validate eagerly
            cell.n_simulations = c.value("n_simulations", -1);
            if (c.contains("seed")) cell.seed_override = c["seed"].get<std::uint64_t>();
        } catch (const ConfigError& e) {
            throw ConfigError(path + "." + e.what());
        } catch (const std::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
        if (!seen_ids.insert(cell.condition.cell_id()).second)
            throw ConfigError(path + ": duplicate condition " + cell.condition.cell_id());
        grid.cells.push_back(std::move(cell));
        ++idx;
    }
    return grid;
}

inline GridConfig load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_grid(j);
}

inline int cell_simulation_count(const GridConfig& grid, const CellConfig& cell) {
    if (cell.n_simulations > 0) return cell.n_simulations;
    return cell.condition.dyadic() ? grid.n_simulations_dyadic : grid.n_simulations_network;
}

// ---- pairing spec for analyze -------------------------------------------

struct PairSpec {
    std::string no_messaging_cell;
    std::string messaging_cell;
};

inline std::vector<PairSpec> load_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pairing spec " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.contains("pairs") || !j["pairs"].is_array())
        throw ConfigError(path + ": pairs: array required");
    std::vector<PairSpec> out;
    int idx = 0;
    for (const json& p : j["pairs"]) {
        const std::string field = "pairs[" + std::to_string(idx) + "]";
        if (!p.contains("no_messaging") || !p.contains("messaging"))
            throw ConfigError(field + ": needs no_messaging and messaging cell ids");
        out.push_back({p["no_messaging"].get<std::string>(), p["messaging"].get<std::string>()});
        ++idx;
    }
    return out;
}

// Pairs must compare the same model, context, regime and mode; the first cell
// must be the control, the second a messaging treatment.
inline void validate_pair(const ConditionKey& no_msg, const ConditionKey& msg) {
    if (no_msg.treatment != Treatment::NoMessaging)
        throw ConfigError("pair control cell is not a no_messaging condition: " + no_msg.cell_id());
    if (!is_messaging(msg.treatment))
        throw ConfigError("pair treatment cell is not a messaging condition: " + msg.cell_id());
    if (no_msg.model != msg.model || no_msg.frame != msg.frame || no_msg.regime != msg.regime ||
        no_msg.mode != msg.mode)
        throw ConfigError("pair cells do not share model+context+regime+mode: " +
                          no_msg.cell_id() + " vs " + msg.cell_id());
}

// ---- run manifest --------------------------------------------------------

struct ManifestEntry {
    std::string cell_id;
    std::string cell_hash;
    std::uint64_t master_seed = 0;
    int n_simulations = 0;
    int aborted = 0;
    bool completed = false;
    std::string transcript_path;
};

inline void to_json(json& j, const ManifestEntry& e) {
    j = json{{"cell_id", e.cell_id},         {"cell_hash", e.cell_hash},
             {"master_seed", e.master_seed}, {"n_simulations", e.n_simulations},
             {"aborted", e.aborted},         {"completed", e.completed},
             {"transcript_path", e.transcript_path}};
}

inline void from_json(const json& j, ManifestEntry& e) {
    e.cell_id = j.at("cell_id").get<std::string>();
    e.cell_hash = j.at("cell_hash").get<std::string>();
    e.master_seed = j.at("master_seed").get<std::uint64_t>();
    e.n_simulations = j.at("n_simulations").get<int>();
    e.aborted = j.at("aborted").get<int>();
    e.completed = j.at("completed").get<bool>();
    e.transcript_path = j.at("transcript_path").get<std::string>();
}

class Manifest {
public:
    static Manifest load_or_empty(const std::filesystem::path& path) {
        Manifest m;
        m.path_ = path;
        std::ifstream in(path);
        if (!in) return m;
        json j;
        try {
            in >> j;
            m.engine_version_ = j.value("engine_version", std::string());
            for (const json& e : j.value("cells", json::array()))
                m.entries_.push_back(e.get<ManifestEntry>());
        } catch (const json::exception&) {
            m.entries_.clear();  // unreadable manifest: start fresh
        }
        return m;
    }

    const ManifestEntry* find_completed(const std::string& cell_id) const {
        for (const auto& e : entries_)
            if (e.cell_id == cell_id && e.completed) return &e;
        return nullptr;
    }

    void upsert(ManifestEntry entry) {
        for (auto& e : entries_)
            if (e.cell_id == entry.cell_id) {
                e = std::move(entry);
                save();
                return;
            }
        entries_.push_back(std::move(entry));
        save();
    }

    void save() const {
        json j;
        j["engine_version"] = kEngineVersion;
        j["cells"] = entries_;
        std::ofstream out(path_);
        if (!out) throw std::runtime_error("cannot write manifest " + path_.string());
        out << j.dump(2) << "\n";
    }

private:
    std::filesystem::path path_;
    std::string engine_version_;
    std::vector<ManifestEntry> entries_;
};

}  // namespace ipdlab
