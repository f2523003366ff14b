#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ipdlab {

enum class Action { Cooperate, Defect };

inline char action_char(Action a) { return a == Action::Cooperate ? 'C' : 'D'; }

inline Action action_from_char(char c) {
    return (c == 'C' || c == 'c') ? Action::Cooperate : Action::Defect;
}

// Per-round payoffs: temptation, reward, punishment, sucker.
struct PayoffMatrix {
    int temptation = 5;
    int reward = 3;
    int punishment = 1;
    int sucker = 0;
};

// Both orderings must hold for a valid dilemma: T > R > P > S and 2R > T + S.
inline std::vector<std::string> validate_matrix(const PayoffMatrix& m) {
    std::vector<std::string> violations;
    if (!(m.temptation > m.reward)) violations.push_back("T > R fails");
    if (!(m.reward > m.punishment)) violations.push_back("R > P fails");
    if (!(m.punishment > m.sucker)) violations.push_back("P > S fails");
    if (!(2 * m.reward > m.temptation + m.sucker)) violations.push_back("2R > T + S fails");
    return violations;
}

inline bool matrix_valid(const PayoffMatrix& m) { return validate_matrix(m).empty(); }

inline std::pair<int, int> resolve_round(Action a1, Action a2, const PayoffMatrix& m) {
    if (a1 == Action::Cooperate) {
        if (a2 == Action::Cooperate) return {m.reward, m.reward};
        return {m.sucker, m.temptation};
    }
    if (a2 == Action::Cooperate) return {m.temptation, m.sucker};
    return {m.punishment, m.punishment};
}

struct RoundOutcome {
    Action action_self = Action::Cooperate;
    Action action_other = Action::Cooperate;
    int payoff_self = 0;
    int payoff_other = 0;
    int round_index = 1;  // 1-based
};

}  // namespace ipdlab
