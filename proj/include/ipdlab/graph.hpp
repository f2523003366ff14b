#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipdlab/rng.hpp"

namespace ipdlab {

struct Graph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;  // each pair ordered u < v, list sorted

    bool has_edge(int u, int v) const {
        if (u > v) std::swap(u, v);
        return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
    }

    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(node_count);
        for (auto [u, v] : edges) {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
        return adj;
    }

    std::vector<int> degrees() const {
        std::vector<int> deg(node_count, 0);
        for (auto [u, v] : edges) {
            ++deg[u];
            ++deg[v];
        }
        return deg;
    }

    bool connected() const {
        if (node_count == 0) return true;
        auto adj = adjacency();
        std::vector<char> seen(node_count, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int reached = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++reached;
                    q.push(v);
                }
            }
        }
        return reached == node_count;
    }
};

enum class NetworkKind { ErdosRenyi, PowerLaw, CorePeriphery };

inline std::string network_kind_name(NetworkKind k) {
    switch (k) {
        case NetworkKind::ErdosRenyi: return "er";
        case NetworkKind::PowerLaw: return "powerlaw";
        case NetworkKind::CorePeriphery: return "coreperiphery";
    }
    return "er";
}

inline NetworkKind network_kind_from(const std::string& s) {
    if (s == "er") return NetworkKind::ErdosRenyi;
    if (s == "powerlaw") return NetworkKind::PowerLaw;
    if (s == "coreperiphery") return NetworkKind::CorePeriphery;
    throw std::invalid_argument("unknown network kind: " + s);
}

struct NetworkSpec {
    NetworkKind kind = NetworkKind::ErdosRenyi;
    int n = 50;
    // Erdos-Renyi
    double p = 0.1;
    // Holme-Kim power law
    int m = 4;
    double p_triangle = 0.1;
    // core-periphery SBM
    double core_fraction = 0.2;
    double p_cc = 0.56;
    double p_cp = 0.10;
    double p_pp = 0.06;
    bool require_connected = false;

    int core_size() const { return static_cast<int>(std::ceil(core_fraction * n)); }
    bool is_core(int node) const { return node < core_size(); }
};

struct GenerationError : std::runtime_error {
    int attempts;
    explicit GenerationError(int n_attempts)
        : std::runtime_error("could not generate a connected graph after " +
                             std::to_string(n_attempts) + " attempts"),
          attempts(n_attempts) {}
};

namespace detail {

inline void finish_edges(Graph& g, std::set<std::pair<int, int>>& edge_set) {
    g.edges.assign(edge_set.begin(), edge_set.end());
}

inline void add_edge(std::set<std::pair<int, int>>& edges, int u, int v) {
    if (u > v) std::swap(u, v);
    edges.insert({u, v});
}

inline Graph gen_erdos_renyi(const NetworkSpec& spec, Rng& rng) {
    Graph g;
    g.node_count = spec.n;
    std::set<std::pair<int, int>> edges;
    for (int u = 0; u < spec.n; ++u)
        for (int v = u + 1; v < spec.n; ++v)
            if (rng.bernoulli(spec.p)) edges.insert({u, v});
    finish_edges(g, edges);
    return g;
}

// Holme-Kim growth: seed clique on m nodes, then each arriving node adds
// exactly m edges. The first is degree-preferential; each subsequent edge is a
// triad-formation step (random neighbor of the last preferential target) with
// probability p_triangle, falling back to preferential attachment. Every node
// therefore ends with degree >= m, and the last arrival with degree exactly m.
inline Graph gen_holme_kim(const NetworkSpec& spec, Rng& rng) {
    if (spec.m < 1 || spec.n <= spec.m)
        throw std::invalid_argument("holme-kim requires 1 <= m < n");
    Graph g;
    g.node_count = spec.n;
    std::set<std::pair<int, int>> edges;
    std::vector<int> repeated;  // node id repeated once per incident edge
    for (int u = 0; u < spec.m; ++u)
        for (int v = u + 1; v < spec.m; ++v) {
            edges.insert({u, v});
            repeated.push_back(u);
            repeated.push_back(v);
        }
    auto linked = [&](int u, int v) {
        if (u > v) std::swap(u, v);
        return edges.count({u, v}) > 0;
    };
    auto preferential_target = [&](int source) {
        for (int tries = 0; tries < 1000; ++tries) {
            int cand = repeated[rng.below(repeated.size())];
            if (cand != source && !linked(source, cand)) return cand;
        }
        // fall back to a uniform scan over eligible nodes
        for (int cand = 0; cand < source; ++cand)
            if (!linked(source, cand)) return cand;
        return -1;
    };
    for (int source = spec.m; source < spec.n; ++source) {
        int last_target = preferential_target(source);
        add_edge(edges, source, last_target);
        repeated.push_back(last_target);
        int count = 1;
        while (count < spec.m) {
            if (rng.bernoulli(spec.p_triangle)) {
                std::vector<int> candidates;
                for (auto [u, v] : edges) {
                    int nbr = -1;
                    if (u == last_target) nbr = v;
                    else if (v == last_target) nbr = u;
                    if (nbr >= 0 && nbr != source && !linked(source, nbr)) candidates.push_back(nbr);
                }
                if (!candidates.empty()) {
                    int nbr = candidates[rng.below(candidates.size())];
                    add_edge(edges, source, nbr);
                    repeated.push_back(nbr);
                    ++count;
                    continue;
                }
            }
            last_target = preferential_target(source);
            add_edge(edges, source, last_target);
            repeated.push_back(last_target);
            ++count;
        }
        for (int k = 0; k < spec.m; ++k) repeated.push_back(source);
    }
    finish_edges(g, edges);
    return g;
}

inline Graph gen_core_periphery(const NetworkSpec& spec, Rng& rng) {
    Graph g;
    g.node_count = spec.n;
    const int core = spec.core_size();
    std::set<std::pair<int, int>> edges;
    for (int u = 0; u < spec.n; ++u)
        for (int v = u + 1; v < spec.n; ++v) {
            double prob = (u < core && v < core)   ? spec.p_cc
                          : (u >= core && v >= core) ? spec.p_pp
                                                     : spec.p_cp;
            if (rng.bernoulli(prob)) edges.insert({u, v});
        }
    finish_edges(g, edges);
    return g;
}

}  // namespace detail

inline void validate_spec(const NetworkSpec& spec) {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (spec.n < 1) throw std::invalid_argument("network spec: n must be >= 1");
    switch (spec.kind) {
        case NetworkKind::ErdosRenyi:
            if (!prob_ok(spec.p)) throw std::invalid_argument("network spec: p outside [0,1]");
            break;
        case NetworkKind::PowerLaw:
            if (spec.m < 1) throw std::invalid_argument("network spec: m must be >= 1");
            if (!prob_ok(spec.p_triangle))
                throw std::invalid_argument("network spec: p_triangle outside [0,1]");
            break;
        case NetworkKind::CorePeriphery:
            if (!(spec.core_fraction > 0.0 && spec.core_fraction < 1.0))
                throw std::invalid_argument("network spec: core_fraction outside (0,1)");
            if (!prob_ok(spec.p_cc) || !prob_ok(spec.p_cp) || !prob_ok(spec.p_pp))
                throw std::invalid_argument("network spec: block probability outside [0,1]");
            break;
    }
}

inline Graph gen_graph(const NetworkSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(seed, 0x6772617068ULL, static_cast<std::uint64_t>(attempt)));
        Graph g;
        switch (spec.kind) {
            case NetworkKind::ErdosRenyi: g = detail::gen_erdos_renyi(spec, rng); break;
            case NetworkKind::PowerLaw: g = detail::gen_holme_kim(spec, rng); break;
            case NetworkKind::CorePeriphery: g = detail::gen_core_periphery(spec, rng); break;
        }
        if (!spec.require_connected || g.connected()) return g;
    }
    throw GenerationError(kMaxAttempts);
}

struct GraphStats {
    double density = 0.0;
    double density_cc = 0.0;  // SBM only
    double density_cp = 0.0;
    double density_pp = 0.0;
    int degree_min = 0;
    int degree_max = 0;
    double degree_mean = 0.0;
    bool connected = false;
    long triangle_count = 0;
};

inline long count_triangles(const Graph& g) {
    auto adj = g.adjacency();
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    long triangles = 0;
    for (auto [u, v] : g.edges) {
        std::vector<int> common;
        std::set_intersection(adj[u].begin(), adj[u].end(), adj[v].begin(), adj[v].end(),
                              std::back_inserter(common));
        triangles += static_cast<long>(common.size());
    }
    return triangles / 3;
}

inline GraphStats graph_stats(const Graph& g, const NetworkSpec& spec) {
    GraphStats s;
    const long pairs = static_cast<long>(g.node_count) * (g.node_count - 1) / 2;
    s.density = pairs > 0 ? static_cast<double>(g.edges.size()) / static_cast<double>(pairs) : 0.0;
    auto deg = g.degrees();
    if (!deg.empty()) {
        s.degree_min = *std::min_element(deg.begin(), deg.end());
        s.degree_max = *std::max_element(deg.begin(), deg.end());
        s.degree_mean = 2.0 * static_cast<double>(g.edges.size()) / g.node_count;
    }
    s.connected = g.connected();
    s.triangle_count = count_triangles(g);
    if (spec.kind == NetworkKind::CorePeriphery) {
        const long core = spec.core_size();
        const long peri = g.node_count - core;
        long cc = 0, cp = 0, pp = 0;
        for (auto [u, v] : g.edges) {
            const bool uc = u < core, vc = v < core;
            if (uc && vc) ++cc;
            else if (!uc && !vc) ++pp;
            else ++cp;
        }
        const long cc_pairs = core * (core - 1) / 2;
        const long pp_pairs = peri * (peri - 1) / 2;
        const long cp_pairs = core * peri;
        s.density_cc = cc_pairs > 0 ? static_cast<double>(cc) / cc_pairs : 0.0;
        s.density_cp = cp_pairs > 0 ? static_cast<double>(cp) / cp_pairs : 0.0;
        s.density_pp = pp_pairs > 0 ? static_cast<double>(pp) / pp_pairs : 0.0;
    }
    return s;
}

// Edge-list persistence: '#'-prefixed header lines carrying the spec and seed,
// then one "u v" pair per line.
inline void save_edge_list(const Graph& g, const NetworkSpec& spec, std::uint64_t seed,
                           std::ostream& out) {
    out << "# kind=" << network_kind_name(spec.kind) << " n=" << spec.n << " seed=" << seed << "\n";
    switch (spec.kind) {
        case NetworkKind::ErdosRenyi: out << "# p=" << spec.p << "\n"; break;
        case NetworkKind::PowerLaw:
            out << "# m=" << spec.m << " p_triangle=" << spec.p_triangle << "\n";
            break;
        case NetworkKind::CorePeriphery: {
            out << "# core_fraction=" << spec.core_fraction << " p_cc=" << spec.p_cc
                << " p_cp=" << spec.p_cp << " p_pp=" << spec.p_pp << "\n";
            out << "# core=";
            for (int i = 0; i < spec.core_size(); ++i) out << (i ? " " : "") << i;
            out << "\n";
            break;
        }
    }
    for (auto [u, v] : g.edges) out << u << " " << v << "\n";
}

inline void save_edge_list(const Graph& g, const NetworkSpec& spec, std::uint64_t seed,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_edge_list(g, spec, seed, out);
}

inline Graph load_edge_list(std::istream& in) {
    Graph g;
    std::string line;
    int max_node = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            auto pos = line.find("n=");
            if (pos != std::string::npos) g.node_count = std::stoi(line.substr(pos + 2));
            continue;
        }
        std::istringstream ls(line);
        int u, v;
        if (!(ls >> u >> v)) throw std::runtime_error("malformed edge line: " + line);
        if (u > v) std::swap(u, v);
        g.edges.push_back({u, v});
        max_node = std::max({max_node, u, v});
    }
    if (g.node_count == 0) g.node_count = max_node + 1;
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

inline Graph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_edge_list(in);
}

}  // namespace ipdlab
