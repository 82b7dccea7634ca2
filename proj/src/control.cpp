#include "divexp/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace divexp::control {

namespace {

constexpr double kPi = std::numbers::pi;

void check_action(int action) {
    if (action < 0 || action > 2) throw std::invalid_argument("invalid control action " + std::to_string(action));
}

double wrap_angle(double x) {
    const double two_pi = 2.0 * kPi;
    while (x > kPi) x -= two_pi;
    while (x < -kPi) x += two_pi;
    return x;
}

using Vec4 = std::array<double, 4>;

// Acrobot equations of motion (book variant), state derivative for a given torque.
Vec4 acrobot_derivative(const Vec4& s, double torque) {
    using namespace acrobot;
    const double m1 = kLinkMass1, m2 = kLinkMass2, l1 = kLinkLength1;
    const double lc1 = kLinkCom1, lc2 = kLinkCom2, i1 = kLinkMoi, i2 = kLinkMoi, g = kGravity;
    const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];

    const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
    const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - kPi / 2.0);
    const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                        2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - kPi / 2.0) + phi2;
    const double ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
                            (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

Vec4 axpy(const Vec4& x, double a, const Vec4& y) {
    return {x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2], x[3] + a * y[3]};
}

}  // namespace

ControlStep mc_step(std::span<const double> state, int action) {
    using namespace mountain_car;
    check_action(action);
    if (state.size() != 2) throw std::invalid_argument("mountain car state must have 2 components");
    double position = state[0];
    double velocity = state[1];
    if (!(position >= kMinPosition && position <= kMaxPosition) || !(std::abs(velocity) <= kMaxSpeed)) {
        throw std::domain_error("mountain car state out of bounds");
    }
    velocity += (action - 1) * kForce - kGravity * std::cos(3.0 * position);
    velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
    position += velocity;
    position = std::clamp(position, kMinPosition, kMaxPosition);
    if (position == kMinPosition && velocity < 0.0) velocity = 0.0;
    ControlStep out;
    out.next = {position, velocity, 0.0, 0.0};
    out.terminal = position >= kGoalPosition;
    return out;
}

double acrobot_tip_height(std::span<const double> state) {
    return -std::cos(state[0]) - std::cos(state[1] + state[0]);
}

ControlStep acro_step(std::span<const double> state, int action) {
    using namespace acrobot;
    check_action(action);
    if (state.size() != 4) throw std::invalid_argument("acrobot state must have 4 components");
    for (double v : state) {
        if (!std::isfinite(v)) throw std::domain_error("acrobot state is not finite");
    }
    if (std::abs(state[0]) > kPi || std::abs(state[1]) > kPi || std::abs(state[2]) > kMaxVel1 ||
        std::abs(state[3]) > kMaxVel2) {
        throw std::domain_error("acrobot state out of bounds");
    }
    const double torque = static_cast<double>(action - 1);
    const Vec4 s0{state[0], state[1], state[2], state[3]};
    const Vec4 k1 = acrobot_derivative(s0, torque);
    const Vec4 k2 = acrobot_derivative(axpy(s0, kDt / 2.0, k1), torque);
    const Vec4 k3 = acrobot_derivative(axpy(s0, kDt / 2.0, k2), torque);
    const Vec4 k4 = acrobot_derivative(axpy(s0, kDt, k3), torque);
    Vec4 s1;
    for (int i = 0; i < 4; ++i) s1[i] = s0[i] + kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    s1[0] = wrap_angle(s1[0]);
    s1[1] = wrap_angle(s1[1]);
    s1[2] = std::clamp(s1[2], -kMaxVel1, kMaxVel1);
    s1[3] = std::clamp(s1[3], -kMaxVel2, kMaxVel2);
    ControlStep out;
    out.next = s1;
    out.terminal = acrobot_tip_height(s1) > 1.0;
    return out;
}

std::pair<std::vector<double>, std::vector<double>> mountain_car_bounds() {
    using namespace mountain_car;
    return {{kMinPosition, -kMaxSpeed}, {kMaxPosition, kMaxSpeed}};
}

std::pair<std::vector<double>, std::vector<double>> acrobot_bounds() {
    using namespace acrobot;
    return {{-kPi, -kPi, -kMaxVel1, -kMaxVel2}, {kPi, kPi, kMaxVel1, kMaxVel2}};
}

MDPSpec mountain_car_spec() { return MDPSpec{1.0, mountain_car::kHorizon, -mountain_car::kHorizon, 0.0}; }
MDPSpec acrobot_spec() { return MDPSpec{1.0, acrobot::kHorizon, -acrobot::kHorizon, 0.0}; }

State MountainCar::reset(Rng& rng) const {
    using namespace mountain_car;
    return {std::uniform_real_distribution<double>(kStartLow, kStartHigh)(rng), 0.0};
}

StepResult MountainCar::step(std::span<const double> state, int action) const {
    const ControlStep s = mc_step(state, action);
    return {{s.next[0], s.next[1]}, s.reward, s.terminal};
}

StepResult Acrobot::step(std::span<const double> state, int action) const {
    const ControlStep s = acro_step(state, action);
    return {{s.next.begin(), s.next.end()}, s.reward, s.terminal};
}

}  // namespace divexp::control
