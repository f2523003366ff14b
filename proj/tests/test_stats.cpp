#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "ipdlab/stats.hpp"

using namespace ipdlab;

namespace {

// Reference smoother written against the published algorithm, kept in long
// double and structured independently of the library version.
std::vector<double> lowess_oracle(const std::vector<double>& xs, const std::vector<double>& ys,
                                  double f, int passes) {
    const int n = static_cast<int>(xs.size());
    const int k = static_cast<int>(std::ceil(f * n));
    std::vector<long double> rob(n, 1.0L), fit(n, 0.0L);
    for (int pass = 0; pass <= passes; ++pass) {
        for (int i = 0; i < n; ++i) {
            std::vector<int> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
                const long double da = fabsl(xs[a] - xs[i]), db = fabsl(xs[b] - xs[i]);
                if (da != db) return da < db;
                return xs[a] < xs[b];
            });
            long double dmax = 0;
            for (int j = 0; j < k; ++j) dmax = std::max(dmax, fabsl(xs[idx[j]] - xs[i]));
            long double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
            for (int j = 0; j < k; ++j) {
                const int p = idx[j];
                long double w = rob[p];
                if (dmax > 0) {
                    const long double u = fabsl(xs[p] - xs[i]) / dmax;
                    const long double c = 1 - u * u * u;
                    w *= c * c * c;
                }
                s0 += w;
                s1 += w * xs[p];
                s2 += w * xs[p] * xs[p];
                t0 += w * ys[p];
                t1 += w * xs[p] * ys[p];
            }
            const long double det = s0 * s2 - s1 * s1;
            if (s0 <= 0) {
                fit[i] = ys[i];
            } else if (dmax == 0 || fabsl(det) < 1e-12L * s0 * s2) {
                fit[i] = t0 / s0;
            } else {
                const long double slope = (s0 * t1 - s1 * t0) / det;
                fit[i] = (t0 - slope * s1) / s0 + slope * xs[i];
            }
        }
        if (pass == passes) break;
        std::vector<long double> res(n), ares(n);
        for (int i = 0; i < n; ++i) ares[i] = fabsl(res[i] = ys[i] - fit[i]);
        std::sort(ares.begin(), ares.end());
        const long double med = n % 2 ? ares[n / 2] : (ares[n / 2 - 1] + ares[n / 2]) / 2;
        long double yscale = 0;
        for (double y : ys) yscale = std::max(yscale, static_cast<long double>(fabsl(y)));
        if (med <= 1e-12L * yscale) break;
        for (int i = 0; i < n; ++i) {
            const long double u = res[i] / (6 * med);
            const long double b = 1 - u * u;
            rob[i] = b > 0 ? b * b : 0;
        }
    }
    return std::vector<double>(fit.begin(), fit.end());
}

std::vector<UnitCounts> synthetic_units(int n_units, std::uint64_t seed, double wobble) {
    // population-level per-round shocks: the wobble must survive averaging
    // across units for its amplitude to show up in the pooled trajectory
    std::vector<double> shock(10);
    for (int r = 0; r < 10; ++r)
        shock[r] = Rng(derive_seed(seed, 0xabcd, r)).uniform(-wobble, wobble);
    std::vector<UnitCounts> units;
    Rng rng(seed);
    for (int u = 0; u < n_units; ++u) {
        UnitCounts c;
        for (int r = 0; r < 10; ++r) {
            const double base = 0.8 - 0.05 * r;
            const double p = std::clamp(base + shock[r], 0.0, 1.0);
            const long total = 50;
            long coop = 0;
            for (long d = 0; d < total; ++d)
                if (rng.bernoulli(p)) ++coop;
            c.coop.push_back(coop);
            c.total.push_back(total);
        }
        units.push_back(std::move(c));
    }
    return units;
}

Transcript toy_transcript(const std::vector<std::vector<Action>>& rounds) {
    Transcript t;
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        RoundRecord rec;
        rec.round = static_cast<int>(r) + 1;
        for (std::size_t a = 0; a < rounds[r].size(); ++a) {
            AgentRoundRecord agent;
            agent.agent_id = static_cast<int>(a);
            agent.actions[100 + static_cast<int>(a)] = rounds[r][a];
            agent.payoffs[100 + static_cast<int>(a)] = 0;
            rec.agents.push_back(std::move(agent));
        }
        t.rounds.push_back(std::move(rec));
    }
    return t;
}

}  // namespace

TEST_CASE("lowess matches the reference smoother on random series") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        Rng rng(seed);
        std::vector<double> xs(10), ys(10);
        std::iota(xs.begin(), xs.end(), 1.0);
        for (double& y : ys) y = rng.uniform(0.0, 1.0);
        for (double f : {0.4, 0.7, 1.0}) {
            LowessParams params;
            params.bandwidth = f;
            auto got = lowess_fit(xs, ys, params);
            auto want = lowess_oracle(xs, ys, f, params.robust_passes);
            for (std::size_t i = 0; i < xs.size(); ++i)
                REQUIRE(got[i] == Catch::Approx(want[i]).margin(1e-9));
        }
    }
}

TEST_CASE("lowess reproduces constants and straight lines exactly") {
    std::vector<double> xs(10);
    std::iota(xs.begin(), xs.end(), 1.0);

    auto flat = lowess_fit(xs, std::vector<double>(10, 0.42));
    for (double v : flat) REQUIRE(v == Catch::Approx(0.42).margin(1e-12));

    std::vector<double> line(10);
    for (std::size_t i = 0; i < 10; ++i) line[i] = 0.1 + 0.07 * xs[i];
    auto fitted = lowess_fit(xs, line);
    for (std::size_t i = 0; i < 10; ++i) REQUIRE(fitted[i] == Catch::Approx(line[i]).margin(1e-12));
}

TEST_CASE("lowess robust passes pull the fit off an outlier") {
    std::vector<double> xs(10);
    std::iota(xs.begin(), xs.end(), 1.0);
    // mild variation everywhere keeps the median residual nonzero, so the
    // bisquare passes actually engage
    std::vector<double> ys = {0.50, 0.53, 0.47, 0.52, 5.0, 0.49, 0.51, 0.48, 0.52, 0.50};
    LowessParams robust;
    LowessParams plain;
    plain.robust_passes = 0;
    auto with = lowess_fit(xs, ys, robust);
    auto without = lowess_fit(xs, ys, plain);
    // the outlier drags its neighbors' fits; robustness pulls them back
    for (int i : {3, 5}) {
        REQUIRE(std::fabs(without[i] - 0.5) > 0.2);
        REQUIRE(std::fabs(with[i] - 0.5) < std::fabs(without[i] - 0.5));
    }
}

TEST_CASE("lowess input validation") {
    std::vector<double> xs = {1, 2, 3, 4};
    REQUIRE_THROWS_AS(lowess_fit({1, 2}, {1, 2}), std::invalid_argument);
    REQUIRE_THROWS_AS(lowess_fit(xs, {1, 2, 3}), std::invalid_argument);
    REQUIRE_THROWS_AS(lowess_fit({1, 2, 2, 4}, {0, 0, 0, 0}), std::invalid_argument);
    LowessParams bad;
    bad.bandwidth = 0.0;
    REQUIRE_THROWS_AS(lowess_fit(xs, {0, 0, 0, 0}, bad), std::invalid_argument);
    bad.bandwidth = 1.5;
    REQUIRE_THROWS_AS(lowess_fit(xs, {0, 0, 0, 0}, bad), std::invalid_argument);
}

TEST_CASE("rmse worked example") {
    REQUIRE(rmse({0.3, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}) == Catch::Approx(0.15).margin(1e-12));
    REQUIRE(rmse({1, 2, 3}, {1, 2, 3}) == 0.0);
    REQUIRE_THROWS_AS(rmse({1.0}, {}), std::invalid_argument);
}

TEST_CASE("percentile interval worked examples") {
    auto single = percentile_ci({5.0});
    REQUIRE(single.first == 5.0);
    REQUIRE(single.second == 5.0);

    std::vector<double> ranks(100);
    std::iota(ranks.begin(), ranks.end(), 1.0);
    auto ci = percentile_ci(ranks);
    REQUIRE(ci.first == Catch::Approx(3.475).margin(1e-9));
    REQUIRE(ci.second == Catch::Approx(97.525).margin(1e-9));
}

TEST_CASE("binomial tail worked examples") {
    REQUIRE(binomial_tail(22, 24, 0.5) == Catch::Approx(0.000018).margin(2e-6));
    REQUIRE(binomial_tail(16, 24, 0.5) == Catch::Approx(0.076).margin(1e-3));
    REQUIRE(binomial_tail(19, 24, 0.5) == Catch::Approx(0.003).margin(5e-4));
    REQUIRE(binomial_tail(12, 24, 0.5) == Catch::Approx(0.5806).margin(1e-3));
    REQUIRE(binomial_tail(24, 24, 0.5) == Catch::Approx(std::pow(0.5, 24)).epsilon(1e-9));
    REQUIRE(binomial_tail(0, 10, 0.3) == 1.0);
    REQUIRE(binomial_tail(5, 10, 0.0) == 0.0);
}

TEST_CASE("binomial tail agrees with a Pascal-triangle summation") {
    std::vector<std::vector<double>> choose(31);
    for (int n = 0; n <= 30; ++n) {
        choose[n].assign(n + 1, 1.0);
        for (int j = 1; j < n; ++j) choose[n][j] = choose[n - 1][j - 1] + choose[n - 1][j];
    }
    Rng rng(404);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(30));
        const int k = static_cast<int>(rng.below(n + 1));
        const double p = rng.uniform(0.05, 0.95);
        double brute = 0.0;
        for (int j = k; j <= n; ++j)
            brute += choose[n][j] * std::pow(p, j) * std::pow(1 - p, n - j);
        REQUIRE(binomial_tail(k, n, p) == Catch::Approx(std::min(brute, 1.0)).margin(1e-12));
    }
}

TEST_CASE("cooperation trajectory pools decisions per round") {
    auto t = toy_transcript({{Action::Cooperate, Action::Cooperate, Action::Defect, Action::Cooperate},
                             {Action::Defect, Action::Defect, Action::Defect, Action::Defect}});
    auto series = cooperation_trajectory({t});
    REQUIRE(series.rates.size() == 2);
    REQUIRE(series.rates[0] == 0.75);
    REQUIRE(series.rates[1] == 0.0);
    REQUIRE(series.counts[0] == 4);
}

TEST_CASE("aborted simulations are excluded from the pooled trajectory") {
    auto good = toy_transcript({{Action::Cooperate}});
    auto bad = toy_transcript({{Action::Defect}});
    bad.aborted = true;
    REQUIRE(condition_units({good, bad}).size() == 1);
    REQUIRE(cooperation_trajectory({good, bad}).rates[0] == 1.0);
}

TEST_CASE("bootstrap of a condition against itself is exactly null") {
    auto units = synthetic_units(30, 11, 0.1);
    auto out = bootstrap_diff(units, units, 500, LowessParams{}, 42);
    REQUIRE(out.difference == 0.0);
    REQUIRE(out.ci_lower == 0.0);
    REQUIRE(out.ci_upper == 0.0);
    REQUIRE_FALSE(out.significant);
    REQUIRE(out.iterations == 500);
}

TEST_CASE("bootstrap is antisymmetric under argument swap") {
    auto a = synthetic_units(25, 21, 0.25);
    auto b = synthetic_units(25, 22, 0.02);
    auto fwd = bootstrap_diff(a, b, 400, LowessParams{}, 7);
    auto rev = bootstrap_diff(b, a, 400, LowessParams{}, 7);
    REQUIRE(fwd.difference == -rev.difference);
    // quantile interpolation reflects the CI up to floating-point rounding
    REQUIRE(fwd.ci_lower == Catch::Approx(-rev.ci_upper).margin(1e-12));
    REQUIRE(fwd.ci_upper == Catch::Approx(-rev.ci_lower).margin(1e-12));
    REQUIRE(fwd.significant == rev.significant);
}

TEST_CASE("bootstrap separates a wobbly condition from a smooth one") {
    auto wobbly = synthetic_units(100, 31, 0.3);
    auto smooth = synthetic_units(100, 32, 0.01);
    auto out = bootstrap_diff(wobbly, smooth, 2000, LowessParams{}, 99);
    REQUIRE(out.rmse_no_messaging > out.rmse_messaging);
    REQUIRE(out.difference > 0.0);
    REQUIRE(out.significant);
    REQUIRE(out.ci_lower > 0.0);
}

TEST_CASE("bootstrap rejects empty or trivial input") {
    auto units = synthetic_units(5, 1, 0.1);
    REQUIRE_THROWS_AS(bootstrap_diff(std::vector<UnitCounts>{}, units, 100, LowessParams{}, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(bootstrap_diff(units, units, 0, LowessParams{}, 1), std::invalid_argument);
}

TEST_CASE("omnibus summarizes a family of comparisons") {
    std::vector<BootstrapOutcome> family(24);
    for (int i = 0; i < 24; ++i) {
        family[i].difference = i < 20 ? 0.1 : -0.05;
        family[i].significant = i < 17;
    }
    auto o = omnibus(family);
    REQUIRE(o.n_comparisons == 24);
    REQUIRE(o.significant_count == 17);
    REQUIRE(o.positive_count == 20);
    REQUIRE(o.expected_by_chance == Catch::Approx(1.2));
    REQUIRE(o.p_excess < 0.001);
    REQUIRE(o.p_direction == Catch::Approx(binomial_tail(20, 24, 0.5)));

    for (int i = 0; i < 24; ++i) family[i].difference = i < 12 ? 0.1 : -0.05;
    REQUIRE(omnibus(family).p_direction == Catch::Approx(0.5806).margin(1e-3));
}
