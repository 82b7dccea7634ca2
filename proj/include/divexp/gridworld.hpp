#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "divexp/mdp.hpp"

namespace divexp::grid {

// 4x4 lattice, state id = y * 4 + x with (0, 0) at the bottom left.
inline constexpr int kWidth = 4;
inline constexpr int kHeight = 4;
inline constexpr int kNumStates = kWidth * kHeight;
inline constexpr int kNumActions = 5;
inline constexpr int kStart = 0;
inline constexpr int kGoal = kNumStates - 1;
inline constexpr int kNumInterior = 9;
inline constexpr std::int64_t kFamilySize = 1953125;  // 5^9
inline constexpr int kRolloutHorizon = 100;
/// Extra-steps value of a policy that fails to reach the goal from some state.
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

enum Action : int { kDiagUpRight = 0, kUp = 1, kRight = 2, kDown = 3, kLeft = 4 };

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

constexpr int state_id(Cell c) { return c.y * kWidth + c.x; }
constexpr Cell cell_of(int state) { return {state % kWidth, state / kWidth}; }

struct GridStep {
    int next_state = 0;
    double reward = -1.0;
    bool terminal = false;
};

/// One move. Moves leaving the lattice (including a diagonal with either
/// component blocked) keep the agent in place. Reward is always -1.
GridStep gw_step(int state, int action);

/// Minimal number of steps to the goal from every state.
std::array<int, kNumStates> optimal_steps();

/// Per state, the actions that achieve optimal_steps (empty for the goal).
std::array<std::vector<int>, kNumStates> optimal_actions();

/// State ids of the 3x3 block outside the top row and right column, ordered by id.
const std::array<int, kNumInterior>& interior_states();

/// Deterministic action map for a family index: base-5 digit i selects the
/// action at interior_states()[i]; the top row moves right and the right
/// column moves up. The goal entry is unused (set to kUp).
std::array<int, kNumStates> decode_policy(std::int64_t index);
std::int64_t encode_interior(const std::array<int, kNumInterior>& actions);

/// Steps to goal from `state` under a deterministic action map, or
/// kUnreachable if the goal is not reached within `horizon` steps.
int steps_to_goal(const std::array<int, kNumStates>& actions, int state, int horizon = kRolloutHorizon);

/// Total extra steps over all states relative to optimal; kUnreachable if any state loops.
int policy_quality(std::int64_t index, int horizon = kRolloutHorizon);

/// Number of interior states where the two family members act differently.
int pairwise_diversity(std::int64_t a, std::int64_t b);

/// All family indices with zero extra steps, ascending.
std::vector<std::int64_t> optimal_family_indices();

/// True if every interior action is in the optimal action set of its state.
bool is_optimal_interior(std::span<const int> interior_actions);

inline constexpr int kNoGreedyAction = -1;

/// Argmax action of a policy at each state, or kNoGreedyAction where the
/// maximum probability is shared by more than one action.
std::array<int, kNumStates> greedy_actions(const Policy& policy);

MDPSpec default_spec();

class GridWorldPlus final : public Environment {
public:
    int num_actions() const override { return kNumActions; }
    int state_dim() const override { return 1; }
    State reset(Rng&) const override { return {static_cast<double>(kStart)}; }
    StepResult step(std::span<const double> state, int action) const override;
};

/// Expected normalized return of `policy` from the start state under the
/// horizon cutoff, by backward induction over the remaining-steps horizon.
double exact_value(const Policy& policy, const MDPSpec& spec);

}  // namespace divexp::grid
