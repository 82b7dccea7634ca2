#pragma once

#include <array>
#include <numbers>

#include "divexp/mdp.hpp"

namespace divexp::control {

// Classic control constants (Sutton & Barto formulations), frozen for bit
// reproducibility.
namespace mountain_car {
inline constexpr double kMinPosition = -1.2;
inline constexpr double kMaxPosition = 0.6;
inline constexpr double kMaxSpeed = 0.07;
inline constexpr double kGoalPosition = 0.5;
inline constexpr double kForce = 0.001;
inline constexpr double kGravity = 0.0025;
inline constexpr double kStartLow = -0.6;
inline constexpr double kStartHigh = -0.4;
inline constexpr int kHorizon = 400;
}  // namespace mountain_car

namespace acrobot {
inline constexpr double kLinkLength1 = 1.0;
inline constexpr double kLinkMass1 = 1.0;
inline constexpr double kLinkMass2 = 1.0;
inline constexpr double kLinkCom1 = 0.5;
inline constexpr double kLinkCom2 = 0.5;
inline constexpr double kLinkMoi = 1.0;
inline constexpr double kGravity = 9.8;
inline constexpr double kDt = 0.2;
inline constexpr double kMaxVel1 = 4.0 * std::numbers::pi;
inline constexpr double kMaxVel2 = 9.0 * std::numbers::pi;
inline constexpr int kHorizon = 400;
}  // namespace acrobot

struct ControlStep {
    std::array<double, 4> next{};
    double reward = -1.0;
    bool terminal = false;
};

/// state = (position, velocity); actions {0: push left, 1: coast, 2: push right}.
ControlStep mc_step(std::span<const double> state, int action);

/// state = (theta1, theta2, dtheta1, dtheta2); actions are torques {-1, 0, +1}
/// on the second joint. One RK4 step of length kDt.
ControlStep acro_step(std::span<const double> state, int action);

/// Height of the acrobot tip above the pivot, in link lengths (goal: > 1).
double acrobot_tip_height(std::span<const double> state);

/// Lower / upper state bounds used for Fourier-feature normalization.
std::pair<std::vector<double>, std::vector<double>> mountain_car_bounds();
std::pair<std::vector<double>, std::vector<double>> acrobot_bounds();

MDPSpec mountain_car_spec();
MDPSpec acrobot_spec();

class MountainCar final : public Environment {
public:
    int num_actions() const override { return 3; }
    int state_dim() const override { return 2; }
    /// Uniform position in the valley, zero velocity.
    State reset(Rng& rng) const override;
    StepResult step(std::span<const double> state, int action) const override;
};

class Acrobot final : public Environment {
public:
    int num_actions() const override { return 3; }
    int state_dim() const override { return 4; }
    /// Hanging at rest.
    State reset(Rng&) const override { return {0.0, 0.0, 0.0, 0.0}; }
    StepResult step(std::span<const double> state, int action) const override;
};

}  // namespace divexp::control
