#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipdlab/config.hpp"
#include "ipdlab/engine.hpp"
#include "ipdlab/gateway.hpp"
#include "ipdlab/graph.hpp"
#include "ipdlab/prompt.hpp"
#include "ipdlab/report.hpp"
#include "ipdlab/stats.hpp"

namespace fs = std::filesystem;
using namespace ipdlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string effective_gateway_url(const GridConfig& grid) {
    if (const char* env = std::getenv("IPDLAB_GATEWAY_URL"); env && *env) return env;
    return grid.gateway_url;
}

NetworkSpec cell_network_spec(const GridConfig& grid, const CellConfig& cell) {
    NetworkSpec spec = grid.network;
    spec.kind = network_kind_from(cell.condition.mode);
    spec.n = grid.agents_per_network;
    return spec;
}

int cmd_simulate(const std::string& config_path, std::optional<std::string> out_override,
                 std::optional<int> workers_override, std::optional<std::uint64_t> seed_override) {
    GridConfig grid = load_grid(config_path);
    if (out_override) grid.output_dir = *out_override;
    if (workers_override) grid.workers = *workers_override;
    if (seed_override) grid.master_seed = *seed_override;

    bool any_model = false;
    for (const auto& cell : grid.cells)
        if (cell.policy == "model") any_model = true;

    const std::string gateway_url = effective_gateway_url(grid);
    Gateway gateway(grid.max_in_flight);
    if (any_model && !Gateway::reachable(gateway_url)) {
        std::cerr << "error: model gateway unreachable at " << gateway_url << "\n";
        return kExitRuntime;
    }

    TemplateLibrary templates = grid.template_dir.empty() ? TemplateLibrary::builtin()
                                                          : TemplateLibrary::load(grid.template_dir);
    EngineHooks hooks;
    hooks.gateway = &gateway;
    hooks.templates = &templates;
    hooks.model_base.base_url = gateway_url;
    hooks.model_base.timeout_s = grid.gateway_timeout_s;
    hooks.model_base.retries = grid.gateway_retries;

    fs::create_directories(grid.output_dir);
    Manifest manifest = Manifest::load_or_empty(fs::path(grid.output_dir) / "manifest.json");

    for (const auto& cell : grid.cells) {
        const std::string cell_id = cell.condition.cell_id();
        if (manifest.find_completed(cell_id)) {
            std::cout << "skip " << cell_id << " (already completed)\n";
            continue;
        }
        SimulationConfig sim;
        sim.condition = cell.condition;
        sim.rounds = grid.rounds;
        sim.matrix = grid.matrix;
        sim.n_simulations = cell_simulation_count(grid, cell);
        sim.workers = grid.workers;
        sim.master_seed = cell.seed_override
                              ? *cell.seed_override
                              : derive_seed(grid.master_seed, fnv1a(cell_id.data(), cell_id.size()));
        sim.record_prompts = cell.policy == "model";

        Policy policy = parse_policy(cell.policy);
        const fs::path cell_dir = fs::path(grid.output_dir) / cell.condition.cell_hash();
        fs::create_directories(cell_dir);

        std::cout << "simulate " << cell_id << " (" << sim.n_simulations << " sims)..."
                  << std::flush;
        std::vector<Transcript> transcripts;
        std::string graph_ref;
        if (cell.condition.dyadic()) {
            transcripts = run_dyadic(sim, {policy, policy}, hooks);
        } else {
            NetworkSpec spec = cell_network_spec(grid, cell);
            spec.require_connected = true;
            sim.n_agents = spec.n;
            const std::uint64_t graph_seed =
                derive_seed(grid.graph_seed, fnv1a(cell_id.data(), cell_id.size()));
            Graph graph = gen_graph(spec, graph_seed);
            graph_ref = (cell_dir / "graph.edgelist").string();
            save_edge_list(graph, spec, graph_seed, graph_ref);
            transcripts = run_network(sim, graph, std::vector<Policy>(spec.n, policy), hooks,
                                      graph_ref);
        }
        const std::string transcript_path = (cell_dir / "transcripts.jsonl").string();
        persist(transcripts, transcript_path, &cell.condition, sim.master_seed);
        {
            std::ofstream traj(cell_dir / "trajectory.csv");
            if (count_aborted(transcripts) < static_cast<int>(transcripts.size()))
                traj << render_trajectory_csv(cooperation_trajectory(transcripts));
        }
        ManifestEntry entry;
        entry.cell_id = cell_id;
        entry.cell_hash = cell.condition.cell_hash();
        entry.master_seed = sim.master_seed;
        entry.n_simulations = sim.n_simulations;
        entry.aborted = count_aborted(transcripts);
        entry.completed = true;
        entry.transcript_path = transcript_path;
        manifest.upsert(entry);
        std::cout << " done (" << entry.aborted << " aborted)\n";
    }
    return kExitOk;
}

struct CellFiles {
    ConditionKey condition;
    std::string path;
};

std::map<std::string, CellFiles> scan_results(const std::string& results_dir) {
    std::map<std::string, CellFiles> cells;
    for (const auto& entry : fs::directory_iterator(results_dir)) {
        if (!entry.is_directory()) continue;
        const fs::path transcript = entry.path() / "transcripts.jsonl";
        if (!fs::exists(transcript)) continue;
        std::ifstream in(transcript);
        std::string first_line;
        if (!std::getline(in, first_line)) continue;
        try {
            json header = json::parse(first_line);
            if (!header.contains("condition")) continue;
            ConditionKey key = header["condition"].get<ConditionKey>();
            cells[key.cell_id()] = {key, transcript.string()};
        } catch (const json::exception&) {
            continue;
        }
    }
    return cells;
}

int cmd_analyze(const std::string& results_dir, const std::string& pairs_path,
                std::optional<int> bootstrap_override, std::uint64_t seed,
                const std::string& out_path) {
    auto cells = scan_results(results_dir);
    auto pairs = load_pairs(pairs_path);
    if (pairs.empty()) throw ConfigError(pairs_path + ": no pairs listed");

    std::vector<AnalysisRecord> records;
    for (const auto& pair : pairs) {
        auto no_it = cells.find(pair.no_messaging_cell);
        auto msg_it = cells.find(pair.messaging_cell);
        if (no_it == cells.end())
            throw ConfigError("no transcripts found for condition " + pair.no_messaging_cell);
        if (msg_it == cells.end())
            throw ConfigError("no transcripts found for condition " + pair.messaging_cell);
        validate_pair(no_it->second.condition, msg_it->second.condition);

        const ConditionKey& key = no_it->second.condition;
        const ResampleUnit unit = key.dyadic() ? ResampleUnit::Simulation : ResampleUnit::Network;
        const int iterations =
            bootstrap_override ? *bootstrap_override : default_bootstrap_iterations(unit);

        auto no_msg = load_transcripts(no_it->second.path);
        auto msg = load_transcripts(msg_it->second.path);
        std::cout << "analyze " << pair.no_messaging_cell << " vs " << pair.messaging_cell << " (B="
                  << iterations << ")...\n";
        AnalysisRecord rec;
        rec.model = key.model;
        rec.context = frame_name(key.frame);
        rec.regime = regime_name(key.regime);
        rec.mode = key.mode;
        rec.messaging_treatment = treatment_name(msg_it->second.condition.treatment);
        rec.no_messaging_cell = pair.no_messaging_cell;
        rec.messaging_cell = pair.messaging_cell;
        rec.outcome = bootstrap_diff(no_msg, msg, iterations, LowessParams{}, seed, unit);
        records.push_back(std::move(rec));
    }

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
    for (const auto& rec : records) out << json{{"record", rec}}.dump() << "\n";
    if (records.size() > 1) {
        std::vector<BootstrapOutcome> outcomes;
        for (const auto& r : records) outcomes.push_back(r.outcome);
        out << json{{"omnibus", json{{"n", records.size()},
                                     {"result", render_omnibus_footer(omnibus(outcomes))}}}}
                   .dump()
            << "\n";
    }
    std::cout << "wrote " << records.size() << " analysis records to " << out_path << "\n";
    return kExitOk;
}

int cmd_report(const std::string& analysis_path, const std::string& text_out,
               const std::string& csv_out) {
    std::ifstream in(analysis_path);
    if (!in) throw ConfigError("cannot open analysis file " + analysis_path);
    std::vector<AnalysisRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("record")) records.push_back(j["record"].get<AnalysisRecord>());
    }
    if (records.empty()) throw ConfigError(analysis_path + ": no analysis records");

    std::optional<OmnibusResult> omni;
    if (records.size() > 1) {
        std::vector<BootstrapOutcome> outcomes;
        for (const auto& r : records) outcomes.push_back(r.outcome);
        omni = omnibus(outcomes);
    }
    const std::string table = render_text_table(records, omni);
    std::cout << table;
    if (!text_out.empty()) {
        std::ofstream out(text_out);
        out << table;
    }
    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        out << render_csv(records);
    }
    return kExitOk;
}

int cmd_graph_gen(const NetworkSpec& spec, std::uint64_t seed, const std::string& out_path) {
    Graph g = gen_graph(spec, seed);
    save_edge_list(g, spec, seed, out_path);
    GraphStats stats = graph_stats(g, spec);
    std::cout << "wrote " << out_path << ": " << g.node_count << " nodes, " << g.edges.size()
              << " edges, density " << stats.density << ", degree min/max " << stats.degree_min
              << "/" << stats.degree_max << (stats.connected ? ", connected" : ", disconnected")
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repeated-game communication-stability laboratory"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run every cell of an experiment grid");
    std::string sim_config;
    std::optional<std::string> sim_out;
    std::optional<int> sim_workers;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--config", sim_config, "grid config file (JSON)")->required();
    simulate->add_option("--out", sim_out, "output directory override");
    simulate->add_option("--workers", sim_workers, "worker thread count override");
    simulate->add_option("--seed", sim_seed, "master seed override");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "bootstrap RMSE differences for condition pairs");
    std::string an_results, an_pairs, an_out = "analysis.jsonl";
    std::optional<int> an_bootstrap;
    std::uint64_t an_seed = 0;
    analyze->add_option("--results", an_results, "results directory")->required();
    analyze->add_option("--pairs", an_pairs, "pairing spec file (JSON)")->required();
    analyze->add_option("--bootstrap", an_bootstrap, "bootstrap iteration override");
    analyze->add_option("--seed", an_seed, "analysis seed");
    analyze->add_option("--out", an_out, "analysis records output path");

    // report
    auto* report = app.add_subcommand("report", "render analysis records as table and CSV");
    std::string rep_analysis, rep_text, rep_csv;
    report->add_option("--analysis", rep_analysis, "analysis records file")->required();
    report->add_option("--text", rep_text, "write plain-text table here");
    report->add_option("--csv", rep_csv, "write CSV here");

    // graph-gen
    auto* graph_gen = app.add_subcommand("graph-gen", "generate a network topology edge list");
    std::string gg_kind = "er", gg_out = "graph.edgelist";
    NetworkSpec gg_spec;
    std::uint64_t gg_seed = 0;
    graph_gen->add_option("--kind", gg_kind, "er | powerlaw | coreperiphery");
    graph_gen->add_option("--n", gg_spec.n, "node count");
    graph_gen->add_option("--p", gg_spec.p, "edge probability (er)");
    graph_gen->add_option("--m", gg_spec.m, "attachment parameter (powerlaw)");
    graph_gen->add_option("--p-triangle", gg_spec.p_triangle, "triad probability (powerlaw)");
    graph_gen->add_option("--core-fraction", gg_spec.core_fraction, "core share (coreperiphery)");
    graph_gen->add_option("--p-cc", gg_spec.p_cc, "within-core probability");
    graph_gen->add_option("--p-cp", gg_spec.p_cp, "core-periphery probability");
    graph_gen->add_option("--p-pp", gg_spec.p_pp, "within-periphery probability");
    graph_gen->add_flag("--require-connected", gg_spec.require_connected,
                        "resample until connected");
    graph_gen->add_option("--seed", gg_seed, "generation seed");
    graph_gen->add_option("--out", gg_out, "output edge-list path");

    // templates
    auto* templates = app.add_subcommand("templates", "write the built-in prompt templates");
    std::string tpl_out = "templates";
    templates->add_option("--out", tpl_out, "template directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim_config, sim_out, sim_workers, sim_seed);
        if (*analyze) return cmd_analyze(an_results, an_pairs, an_bootstrap, an_seed, an_out);
        if (*report) return cmd_report(rep_analysis, rep_text, rep_csv);
        if (*graph_gen) {
            gg_spec.kind = network_kind_from(gg_kind);
            return cmd_graph_gen(gg_spec, gg_seed, gg_out);
        }
        if (*templates) {
            TemplateLibrary::builtin().save(tpl_out);
            std::cout << "wrote templates to " << tpl_out << "\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
