#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipdlab/engine.hpp"
#include "ipdlab/rng.hpp"

namespace ipdlab {

// 10-point population cooperation-rate time series for one condition.
struct TrajectorySeries {
    std::vector<double> rates;  // per round, cooperations / decisions
    std::vector<long> counts;   // contributing decisions per round
};

// Per-resample-unit cooperation tallies (one unit = one simulation, or one
// whole network in networked mode).
struct UnitCounts {
    std::vector<long> coop;
    std::vector<long> total;
};

inline std::vector<UnitCounts> condition_units(const std::vector<Transcript>& transcripts) {
    std::vector<UnitCounts> units;
    for (const auto& t : transcripts) {
        if (t.aborted) continue;
        UnitCounts u;
        u.coop.assign(t.rounds.size(), 0);
        u.total.assign(t.rounds.size(), 0);
        for (std::size_t r = 0; r < t.rounds.size(); ++r)
            for (const auto& agent : t.rounds[r].agents)
                for (auto [opp, action] : agent.actions) {
                    ++u.total[r];
                    if (action == Action::Cooperate) ++u.coop[r];
                }
        units.push_back(std::move(u));
    }
    return units;
}

inline TrajectorySeries trajectory_from_units(const std::vector<UnitCounts>& units) {
    if (units.empty()) throw std::invalid_argument("no completed transcripts to aggregate");
    const std::size_t rounds = units.front().coop.size();
    TrajectorySeries series;
    series.rates.assign(rounds, 0.0);
    series.counts.assign(rounds, 0);
    std::vector<long> coop(rounds, 0);
    for (const auto& u : units) {
        if (u.coop.size() != rounds)
            throw std::invalid_argument("inconsistent horizon across transcripts");
        for (std::size_t r = 0; r < rounds; ++r) {
            coop[r] += u.coop[r];
            series.counts[r] += u.total[r];
        }
    }
    for (std::size_t r = 0; r < rounds; ++r)
        series.rates[r] = series.counts[r] > 0
                              ? static_cast<double>(coop[r]) / static_cast<double>(series.counts[r])
                              : 0.0;
    return series;
}

inline TrajectorySeries cooperation_trajectory(const std::vector<Transcript>& transcripts) {
    return trajectory_from_units(condition_units(transcripts));
}

// ---- LOWESS -------------------------------------------------------------

struct LowessParams {
    double bandwidth = 0.4;   // fraction of points per local window
    int robust_passes = 3;    // Cleveland's bisquare robustifying iterations
};

namespace stats_detail {

inline double median_abs(std::vector<double> values) {
    for (double& v : values) v = std::fabs(v);
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace stats_detail

// Local linear fit at each x_i over the ceil(f*n) nearest points (ties broken
// toward smaller x), tricube distance weights, optional bisquare robustifying
// passes. Degenerate windows fall back to the weighted mean.
inline std::vector<double> lowess_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const LowessParams& params = {}) {
    const std::size_t n = xs.size();
    if (n != ys.size()) throw std::invalid_argument("lowess: xs and ys differ in length");
    if (n < 3) throw std::invalid_argument("lowess: need at least 3 points");
    if (!(params.bandwidth > 0.0 && params.bandwidth <= 1.0))
        throw std::invalid_argument("lowess: bandwidth outside (0,1]");
    if (params.robust_passes < 0) throw std::invalid_argument("lowess: negative robust passes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("lowess: xs must be strictly increasing");
    const std::size_t k = static_cast<std::size_t>(std::ceil(params.bandwidth * static_cast<double>(n)));
    if (k < 2) throw std::invalid_argument("lowess: window smaller than 2 points");

    std::vector<double> robustness(n, 1.0);
    std::vector<double> fitted(n, 0.0);
    std::vector<std::size_t> order(n);

    for (int pass = 0; pass <= params.robust_passes; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double da = std::fabs(xs[a] - xs[i]), db = std::fabs(xs[b] - xs[i]);
                if (da != db) return da < db;
                return xs[a] < xs[b];
            });
            double d_max = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                d_max = std::max(d_max, std::fabs(xs[order[j]] - xs[i]));

            double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t idx = order[j];
                double w = robustness[idx];
                if (d_max > 0.0) {
                    const double u = std::fabs(xs[idx] - xs[i]) / d_max;
                    const double tri = 1.0 - u * u * u;
                    w *= tri * tri * tri;
                }
                sw += w;
                swx += w * xs[idx];
                swy += w * ys[idx];
                swxx += w * xs[idx] * xs[idx];
                swxy += w * xs[idx] * ys[idx];
            }
            const double denom = sw * swxx - swx * swx;
            if (sw <= 0.0) {
                fitted[i] = ys[i];  // every weight vanished; keep the observation
            } else if (d_max == 0.0 || std::fabs(denom) < 1e-12 * sw * swxx) {
                fitted[i] = swy / sw;  // degenerate design: weighted mean
            } else {
                const double slope = (sw * swxy - swx * swy) / denom;
                const double intercept = (swy - slope * swx) / sw;
                fitted[i] = intercept + slope * xs[i];
            }
        }
        if (pass == params.robust_passes) break;
        std::vector<double> residuals(n);
        for (std::size_t i = 0; i < n; ++i) residuals[i] = ys[i] - fitted[i];
        const double med = stats_detail::median_abs(residuals);
        double y_scale = 0.0;
        for (double y : ys) y_scale = std::max(y_scale, std::fabs(y));
        // an (effectively) perfect fit makes further passes no-ops; the
        // relative cutoff keeps rounding-level residuals from collapsing the
        // bisquare scale
        if (med <= 1e-12 * y_scale) break;
        const double scale = 6.0 * med;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = residuals[i] / scale;
            const double b = 1.0 - u * u;
            robustness[i] = b > 0.0 ? b * b : 0.0;
        }
    }
    return fitted;
}

inline double rmse(const std::vector<double>& observed, const std::vector<double>& fitted) {
    if (observed.size() != fitted.size()) throw std::invalid_argument("rmse: length mismatch");
    if (observed.empty()) throw std::invalid_argument("rmse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double r = observed[i] - fitted[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(observed.size()));
}

// ---- inference ----------------------------------------------------------

// Empirical quantile with linear interpolation between closest ranks.
inline double quantile(std::vector<double> sorted_ascending, double q) {
    const std::size_t n = sorted_ascending.size();
    if (n == 0) throw std::invalid_argument("quantile: empty sample");
    if (n == 1) return sorted_ascending[0];
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted_ascending[lo] + frac * (sorted_ascending[hi] - sorted_ascending[lo]);
}

inline std::pair<double, double> percentile_ci(std::vector<double> samples, double level = 0.95) {
    if (samples.empty()) throw std::invalid_argument("percentile_ci: empty sample");
    std::sort(samples.begin(), samples.end());
    const double alpha = (1.0 - level) / 2.0;
    return {quantile(samples, alpha), quantile(samples, 1.0 - alpha)};
}

// One-sided upper-tail exact binomial P(X >= k | n, p0).
inline double binomial_tail(int k, int n, double p0) {
    if (k < 0 || n < 0 || k > n) throw std::invalid_argument("binomial_tail: need 0 <= k <= n");
    if (k <= 0) return 1.0;
    if (p0 <= 0.0) return 0.0;
    if (p0 >= 1.0) return 1.0;
    long double sum = 0.0L;
    const long double lp = std::log(static_cast<long double>(p0));
    const long double lq = std::log1p(static_cast<long double>(-p0));
    for (int j = k; j <= n; ++j) {
        const long double lc = std::lgammal(static_cast<long double>(n) + 1) -
                               std::lgammal(static_cast<long double>(j) + 1) -
                               std::lgammal(static_cast<long double>(n - j) + 1);
        sum += expl(lc + j * lp + (n - j) * lq);
    }
    return static_cast<double>(std::min(sum, 1.0L));
}

enum class ResampleUnit { Simulation, Network };

struct BootstrapOutcome {
    double rmse_no_messaging = 0.0;
    double rmse_messaging = 0.0;
    double difference = 0.0;  // no-messaging minus messaging, full-sample point estimate
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    bool significant = false;  // 95% CI excludes zero
    int iterations = 0;
    ResampleUnit unit = ResampleUnit::Simulation;
};

namespace stats_detail {

inline std::uint64_t content_hash(const std::vector<UnitCounts>& units) {
    std::uint64_t h = fnv1a_u64(units.size(), 0xcbf29ce484222325ULL);
    for (const auto& u : units) {
        for (long v : u.coop) h = fnv1a_u64(static_cast<std::uint64_t>(v), h);
        for (long v : u.total) h = fnv1a_u64(static_cast<std::uint64_t>(v), h);
    }
    return h;
}

inline double condition_rmse(const std::vector<UnitCounts>& units, const LowessParams& params) {
    TrajectorySeries series = trajectory_from_units(units);
    std::vector<double> xs(series.rates.size());
    std::iota(xs.begin(), xs.end(), 1.0);
    return rmse(series.rates, lowess_fit(xs, series.rates, params));
}

inline double resampled_rmse(const std::vector<UnitCounts>& units, const LowessParams& params,
                             std::uint64_t iter_seed) {
    Rng rng(iter_seed);
    std::vector<UnitCounts> sample;
    sample.reserve(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) sample.push_back(units[rng.below(units.size())]);
    return condition_rmse(sample, params);
}

}  // namespace stats_detail

// Simulation-level bootstrap of the RMSE difference between the two
// treatments. Units (whole simulations, or whole networks) are resampled with
// replacement to the original count, independently per condition; the CI is
// the empirical 95% percentile interval of the B differences. Resampling
// streams are keyed by the condition's content so results are invariant to
// argument order up to sign.
inline BootstrapOutcome bootstrap_diff(const std::vector<UnitCounts>& no_msg,
                                       const std::vector<UnitCounts>& msg, int iterations,
                                       const LowessParams& params, std::uint64_t seed,
                                       ResampleUnit unit = ResampleUnit::Simulation) {
    if (no_msg.empty() || msg.empty())
        throw std::invalid_argument("bootstrap_diff: both conditions must be non-empty");
    if (iterations < 1) throw std::invalid_argument("bootstrap_diff: iterations must be >= 1");

    BootstrapOutcome out;
    out.iterations = iterations;
    out.unit = unit;
    out.rmse_no_messaging = stats_detail::condition_rmse(no_msg, params);
    out.rmse_messaging = stats_detail::condition_rmse(msg, params);
    out.difference = out.rmse_no_messaging - out.rmse_messaging;

    const std::uint64_t hash_no = stats_detail::content_hash(no_msg);
    const std::uint64_t hash_msg = stats_detail::content_hash(msg);
    std::vector<double> diffs(iterations);
    for (int b = 0; b < iterations; ++b) {
        try {
            const double r_no = stats_detail::resampled_rmse(
                no_msg, params, derive_seed(seed, static_cast<std::uint64_t>(b) + 1, hash_no));
            const double r_msg = stats_detail::resampled_rmse(
                msg, params, derive_seed(seed, static_cast<std::uint64_t>(b) + 1, hash_msg));
            diffs[b] = r_no - r_msg;
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("bootstrap iteration " + std::to_string(b) + ": " + e.what());
        }
    }
    std::tie(out.ci_lower, out.ci_upper) = percentile_ci(diffs, 0.95);
    out.significant = out.ci_lower > 0.0 || out.ci_upper < 0.0;
    return out;
}

inline BootstrapOutcome bootstrap_diff(const std::vector<Transcript>& no_msg,
                                       const std::vector<Transcript>& msg, int iterations,
                                       const LowessParams& params, std::uint64_t seed,
                                       ResampleUnit unit = ResampleUnit::Simulation) {
    return bootstrap_diff(condition_units(no_msg), condition_units(msg), iterations, params, seed,
                          unit);
}

inline int default_bootstrap_iterations(ResampleUnit unit) {
    return unit == ResampleUnit::Network ? 1000 : 10000;
}

// Omnibus binomial tests over a family of comparisons: excess of significant
// results over n * alpha, and excess of positive differences over 50%.
struct OmnibusResult {
    int n_comparisons = 0;
    int significant_count = 0;
    double expected_by_chance = 0.0;  // n * 0.05
    int positive_count = 0;
    double p_excess = 1.0;
    double p_direction = 1.0;
};

inline OmnibusResult omnibus(const std::vector<BootstrapOutcome>& results) {
    if (results.empty()) throw std::invalid_argument("omnibus: empty result set");
    OmnibusResult o;
    o.n_comparisons = static_cast<int>(results.size());
    for (const auto& r : results) {
        if (r.significant) ++o.significant_count;
        if (r.difference > 0.0) ++o.positive_count;
    }
    o.expected_by_chance = 0.05 * o.n_comparisons;
    o.p_excess = binomial_tail(o.significant_count, o.n_comparisons, 0.05);
    o.p_direction = binomial_tail(o.positive_count, o.n_comparisons, 0.5);
    return o;
}

}  // namespace ipdlab
