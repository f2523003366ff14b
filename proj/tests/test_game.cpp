#include <catch2/catch_amalgamated.hpp>

#include "ipdlab/game.hpp"
#include "ipdlab/rng.hpp"

using namespace ipdlab;

TEST_CASE("default matrix is a valid dilemma") {
    PayoffMatrix m;
    REQUIRE(validate_matrix(m).empty());
}

TEST_CASE("validate_matrix lists each violated inequality") {
    REQUIRE(validate_matrix({5, 3, 1, 0}).empty());

    auto v1 = validate_matrix({5, 4, 1, 2});
    REQUIRE(v1.size() == 1);
    REQUIRE(v1[0] == "P > S fails");

    auto v2 = validate_matrix({7, 3, 1, 0});
    REQUIRE(v2.size() == 1);
    REQUIRE(v2[0] == "2R > T + S fails");
}

TEST_CASE("resolve_round matches the matrix lookup") {
    PayoffMatrix m;
    REQUIRE(resolve_round(Action::Cooperate, Action::Cooperate, m) == std::pair{3, 3});
    REQUIRE(resolve_round(Action::Cooperate, Action::Defect, m) == std::pair{0, 5});
    REQUIRE(resolve_round(Action::Defect, Action::Cooperate, m) == std::pair{5, 0});
    REQUIRE(resolve_round(Action::Defect, Action::Defect, m) == std::pair{1, 1});
}

TEST_CASE("resolve_round is symmetric under player swap") {
    Rng rng(20240817);
    const Action acts[2] = {Action::Cooperate, Action::Defect};
    for (int trial = 0; trial < 200; ++trial) {
        PayoffMatrix m{static_cast<int>(rng.below(21)) - 10, static_cast<int>(rng.below(21)) - 10,
                       static_cast<int>(rng.below(21)) - 10, static_cast<int>(rng.below(21)) - 10};
        for (Action a : acts)
            for (Action b : acts) {
                auto fwd = resolve_round(a, b, m);
                auto rev = resolve_round(b, a, m);
                REQUIRE(fwd.first == rev.second);
                REQUIRE(fwd.second == rev.first);
            }
    }
}

TEST_CASE("mutual cooperation maximizes total payoff among symmetric profiles") {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        PayoffMatrix m{static_cast<int>(rng.below(30)), static_cast<int>(rng.below(30)),
                       static_cast<int>(rng.below(30)), static_cast<int>(rng.below(30))};
        if (!matrix_valid(m)) continue;
        auto cc = resolve_round(Action::Cooperate, Action::Cooperate, m);
        auto dd = resolve_round(Action::Defect, Action::Defect, m);
        auto cd = resolve_round(Action::Cooperate, Action::Defect, m);
        REQUIRE(cc.first + cc.second > dd.first + dd.second);
        REQUIRE(cc.first + cc.second > cd.first + cd.second);
    }
}

TEST_CASE("validate_matrix agrees with a brute-force inequality check") {
    Rng rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        PayoffMatrix m{static_cast<int>(rng.below(12)), static_cast<int>(rng.below(12)),
                       static_cast<int>(rng.below(12)), static_cast<int>(rng.below(12))};
        const bool brute = m.temptation > m.reward && m.reward > m.punishment &&
                           m.punishment > m.sucker && 2 * m.reward > m.temptation + m.sucker;
        REQUIRE(matrix_valid(m) == brute);
    }
}
