#include "divexp/gridworld.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace divexp::grid {

namespace {

constexpr std::array<Cell, kNumActions> kMoves = {{{1, 1}, {0, 1}, {1, 0}, {0, -1}, {-1, 0}}};

bool inside(Cell c) { return c.x >= 0 && c.x < kWidth && c.y >= 0 && c.y < kHeight; }

void check_state(int state) {
    if (state < 0 || state >= kNumStates) throw std::out_of_range("grid state " + std::to_string(state));
}

}  // namespace

GridStep gw_step(int state, int action) {
    check_state(state);
    if (action < 0 || action >= kNumActions) {
        throw std::invalid_argument("invalid grid action " + std::to_string(action));
    }
    if (state == kGoal) return {kGoal, -1.0, true};
    const Cell from = cell_of(state);
    const Cell to{from.x + kMoves[action].x, from.y + kMoves[action].y};
    const int next = inside(to) ? state_id(to) : state;
    return {next, -1.0, next == kGoal};
}

std::array<int, kNumStates> optimal_steps() {
    // Bellman relaxation on the deterministic step graph.
    constexpr int kInf = kNumStates + 1;
    std::array<int, kNumStates> dist;
    dist.fill(kInf);
    dist[kGoal] = 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (int s = 0; s < kNumStates; ++s) {
            if (s == kGoal) continue;
            for (int a = 0; a < kNumActions; ++a) {
                const int candidate = 1 + dist[gw_step(s, a).next_state];
                if (candidate < dist[s]) {
                    dist[s] = candidate;
                    changed = true;
                }
            }
        }
    }
    return dist;
}

std::array<std::vector<int>, kNumStates> optimal_actions() {
    const auto dist = optimal_steps();
    std::array<std::vector<int>, kNumStates> result;
    for (int s = 0; s < kNumStates; ++s) {
        if (s == kGoal) continue;
        for (int a = 0; a < kNumActions; ++a) {
            if (1 + dist[gw_step(s, a).next_state] == dist[s]) result[s].push_back(a);
        }
    }
    return result;
}

const std::array<int, kNumInterior>& interior_states() {
    static const std::array<int, kNumInterior> states = [] {
        std::array<int, kNumInterior> out{};
        int i = 0;
        for (int s = 0; s < kNumStates; ++s) {
            const Cell c = cell_of(s);
            if (c.x < kWidth - 1 && c.y < kHeight - 1) out[i++] = s;
        }
        return out;
    }();
    return states;
}

std::array<int, kNumStates> decode_policy(std::int64_t index) {
    if (index < 0 || index >= kFamilySize) throw std::out_of_range("family index " + std::to_string(index));
    std::array<int, kNumStates> actions{};
    for (int s = 0; s < kNumStates; ++s) {
        const Cell c = cell_of(s);
        actions[s] = (c.y == kHeight - 1 && c.x < kWidth - 1) ? kRight : kUp;
    }
    for (int s : interior_states()) {
        actions[s] = static_cast<int>(index % kNumActions);
        index /= kNumActions;
    }
    return actions;
}

std::int64_t encode_interior(const std::array<int, kNumInterior>& actions) {
    std::int64_t index = 0;
    for (int i = kNumInterior - 1; i >= 0; --i) {
        if (actions[i] < 0 || actions[i] >= kNumActions) throw std::out_of_range("interior action out of range");
        index = index * kNumActions + actions[i];
    }
    return index;
}

int steps_to_goal(const std::array<int, kNumStates>& actions, int state, int horizon) {
    check_state(state);
    // A deterministic walk that has not arrived after visiting every state is in a loop.
    const int limit = std::min(horizon, kNumStates);
    int steps = 0;
    while (state != kGoal) {
        if (steps >= limit) return kUnreachable;
        state = gw_step(state, actions[state]).next_state;
        ++steps;
    }
    return steps;
}

int policy_quality(std::int64_t index, int horizon) {
    static const auto best = optimal_steps();
    const auto actions = decode_policy(index);
    int extra = 0;
    for (int s = 0; s < kNumStates; ++s) {
        const int steps = steps_to_goal(actions, s, horizon);
        if (steps == kUnreachable) return kUnreachable;
        extra += steps - best[s];
    }
    return extra;
}

int pairwise_diversity(std::int64_t a, std::int64_t b) {
    if (a < 0 || a >= kFamilySize || b < 0 || b >= kFamilySize) throw std::out_of_range("family index");
    int differ = 0;
    for (int i = 0; i < kNumInterior; ++i) {
        differ += (a % kNumActions) != (b % kNumActions);
        a /= kNumActions;
        b /= kNumActions;
    }
    return differ;
}

std::vector<std::int64_t> optimal_family_indices() {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < kFamilySize; ++i) {
        if (policy_quality(i) == 0) out.push_back(i);
    }
    return out;
}

bool is_optimal_interior(std::span<const int> interior_actions) {
    static const auto opt = optimal_actions();
    if (interior_actions.size() != static_cast<std::size_t>(kNumInterior)) {
        throw std::invalid_argument("expected one action per interior state");
    }
    for (int i = 0; i < kNumInterior; ++i) {
        const auto& allowed = opt[interior_states()[i]];
        if (std::find(allowed.begin(), allowed.end(), interior_actions[i]) == allowed.end()) return false;
    }
    return true;
}

std::array<int, kNumStates> greedy_actions(const Policy& policy) {
    std::array<int, kNumStates> out{};
    std::vector<double> probs(kNumActions);
    for (int s = 0; s < kNumStates; ++s) {
        const double state = s;
        policy.distribution(std::span<const double>(&state, 1), probs);
        const auto best = std::max_element(probs.begin(), probs.end());
        out[s] = std::count(probs.begin(), probs.end(), *best) > 1 ? kNoGreedyAction
                                                                   : static_cast<int>(best - probs.begin());
    }
    return out;
}

MDPSpec default_spec() { return MDPSpec{1.0, kRolloutHorizon, -100.0, -3.0}; }

StepResult GridWorldPlus::step(std::span<const double> state, int action) const {
    if (state.size() != 1) throw std::invalid_argument("grid world state must have one component");
    const GridStep g = gw_step(static_cast<int>(state[0]), action);
    return {{static_cast<double>(g.next_state)}, g.reward, g.terminal};
}

double exact_value(const Policy& policy, const MDPSpec& spec) {
    std::array<std::vector<double>, kNumStates> probs;
    for (int s = 0; s < kNumStates; ++s) {
        const double state = s;
        probs[s] = policy.action_distribution(std::span<const double>(&state, 1));
    }
    // value[s] = expected discounted reward with h steps remaining.
    std::array<double, kNumStates> value{};
    for (int h = 1; h <= spec.horizon; ++h) {
        std::array<double, kNumStates> next{};
        for (int s = 0; s < kNumStates; ++s) {
            if (s == kGoal) continue;
            double v = 0.0;
            for (int a = 0; a < kNumActions; ++a) {
                const GridStep g = gw_step(s, a);
                const double cont = g.terminal ? 0.0 : value[g.next_state];
                v += probs[s][a] * (g.reward + spec.gamma * cont);
            }
            next[s] = v;
        }
        value = next;
    }
    return (value[kStart] - spec.return_lower) / (spec.return_upper - spec.return_lower);
}

}  // namespace divexp::grid
