#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipdlab/stats.hpp"

namespace ipdlab {

// One analyzed condition pair (no-messaging vs messaging), as persisted by
// `analyze` and consumed by `report`.
struct AnalysisRecord {
    std::string model;
    std::string context;
    std::string regime;
    std::string mode;
    std::string messaging_treatment;  // full_message | one_word
    std::string no_messaging_cell;
    std::string messaging_cell;
    BootstrapOutcome outcome;
};

inline void to_json(json& j, const BootstrapOutcome& o) {
    j = json{{"rmse_no_messaging", o.rmse_no_messaging},
             {"rmse_messaging", o.rmse_messaging},
             {"difference", o.difference},
             {"ci_lower", o.ci_lower},
             {"ci_upper", o.ci_upper},
             {"significant", o.significant},
             {"iterations", o.iterations},
             {"unit", o.unit == ResampleUnit::Network ? "network" : "simulation"}};
}

inline void from_json(const json& j, BootstrapOutcome& o) {
    o.rmse_no_messaging = j.at("rmse_no_messaging").get<double>();
    o.rmse_messaging = j.at("rmse_messaging").get<double>();
    o.difference = j.at("difference").get<double>();
    o.ci_lower = j.at("ci_lower").get<double>();
    o.ci_upper = j.at("ci_upper").get<double>();
    o.significant = j.at("significant").get<bool>();
    o.iterations = j.at("iterations").get<int>();
    o.unit = j.at("unit").get<std::string>() == "network" ? ResampleUnit::Network
                                                          : ResampleUnit::Simulation;
}

inline void to_json(json& j, const AnalysisRecord& r) {
    j = json{{"model", r.model},
             {"context", r.context},
             {"regime", r.regime},
             {"mode", r.mode},
             {"messaging_treatment", r.messaging_treatment},
             {"no_messaging_cell", r.no_messaging_cell},
             {"messaging_cell", r.messaging_cell},
             {"outcome", r.outcome}};
}

inline void from_json(const json& j, AnalysisRecord& r) {
    r.model = j.at("model").get<std::string>();
    r.context = j.at("context").get<std::string>();
    r.regime = j.at("regime").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.messaging_treatment = j.at("messaging_treatment").get<std::string>();
    r.no_messaging_cell = j.at("no_messaging_cell").get<std::string>();
    r.messaging_cell = j.at("messaging_cell").get<std::string>();
    r.outcome = j.at("outcome").get<BootstrapOutcome>();
}

namespace report_detail {

inline std::string fixed4(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

inline std::string fixed1(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v;
    return out.str();
}

inline std::string p_value_text(double p) {
    if (p < 0.001) return "p < 0.001";
    std::ostringstream out;
    out << "p = " << std::fixed << std::setprecision(3) << p;
    return out.str();
}

inline std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace report_detail

// Row format: four decimals everywhere, dagger on the difference of
// significant rows.
inline std::string render_row_values(const BootstrapOutcome& o) {
    using report_detail::fixed4;
    std::ostringstream out;
    out << fixed4(o.rmse_no_messaging) << "  " << fixed4(o.rmse_messaging) << "  "
        << fixed4(o.difference) << (o.significant ? "†" : "") << "  " << fixed4(o.ci_lower)
        << "  " << fixed4(o.ci_upper);
    return out.str();
}

inline std::string render_omnibus_footer(const OmnibusResult& o) {
    using report_detail::fixed1;
    using report_detail::p_value_text;
    std::ostringstream out;
    out << "Excess significant results: " << o.significant_count << "/" << o.n_comparisons
        << " significant (expected " << fixed1(o.expected_by_chance) << ")   "
        << p_value_text(o.p_excess) << "\n";
    const double pct = 100.0 * o.positive_count / o.n_comparisons;
    out << "Directional consistency: " << o.positive_count << "/" << o.n_comparisons
        << " positive (" << fixed1(pct) << "%)   " << p_value_text(o.p_direction) << "\n";
    return out.str();
}

inline std::string render_text_table(const std::vector<AnalysisRecord>& records,
                                     const std::optional<OmnibusResult>& omni) {
    using report_detail::pad;
    std::size_t model_w = 5, ctx_w = 7;
    for (const auto& r : records) {
        model_w = std::max(model_w, r.model.size());
        ctx_w = std::max(ctx_w, r.context.size());
    }
    std::ostringstream out;
    out << pad("Model", model_w + 2) << pad("Context", ctx_w + 2)
        << "RMSE(NoMsg)  RMSE(Msg)  Difference  CI Lower  CI Upper\n";
    for (const auto& r : records)
        out << pad(r.model, model_w + 2) << pad(r.context, ctx_w + 2) << render_row_values(r.outcome)
            << "\n";
    out << "\n";
    if (omni)
        out << render_omnibus_footer(*omni);
    else
        out << "Omnibus tests: n/a (single comparison)\n";
    return out.str();
}

inline std::string render_csv(const std::vector<AnalysisRecord>& records) {
    using report_detail::fixed4;
    std::ostringstream out;
    out << "model,context,regime,mode,messaging_treatment,rmse_no_messaging,rmse_messaging,"
           "difference,ci_lower,ci_upper,significant\n";
    for (const auto& r : records) {
        const auto& o = r.outcome;
        out << r.model << "," << r.context << "," << r.regime << "," << r.mode << ","
            << r.messaging_treatment << "," << fixed4(o.rmse_no_messaging) << ","
            << fixed4(o.rmse_messaging) << "," << fixed4(o.difference) << "," << fixed4(o.ci_lower)
            << "," << fixed4(o.ci_upper) << "," << (o.significant ? "1" : "0") << "\n";
    }
    return out.str();
}

// Trajectory CSV (round, rate, n) for external plotting.
inline std::string render_trajectory_csv(const TrajectorySeries& series) {
    std::ostringstream out;
    out << "round,rate,n\n";
    for (std::size_t r = 0; r < series.rates.size(); ++r)
        out << (r + 1) << "," << series.rates[r] << "," << series.counts[r] << "\n";
    return out.str();
}

}  // namespace ipdlab
