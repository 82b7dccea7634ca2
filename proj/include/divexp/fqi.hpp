#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "divexp/mdp.hpp"

namespace divexp {

/// Full cosine Fourier basis cos(pi * c . x) over the state normalized to
/// [0, 1]^d, with every coefficient vector c in {0..order}^d.
class FourierBasis {
public:
    FourierBasis(int order, std::vector<double> lower, std::vector<double> upper);

    int order() const { return order_; }
    int state_dim() const { return static_cast<int>(lower_.size()); }
    /// (order + 1)^state_dim
    int size() const { return static_cast<int>(coefficients_.size()); }
    Eigen::VectorXd features(std::span<const double> state) const;

private:
    int order_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::vector<int>> coefficients_;
};

/// Linear action values Q(s, a) = w_a . phi(s).
class FourierQ {
public:
    FourierQ(FourierBasis basis, int num_actions);

    const FourierBasis& basis() const { return basis_; }
    int num_actions() const { return static_cast<int>(weights_.size()); }
    Eigen::VectorXd& weights(int action) { return weights_.at(static_cast<std::size_t>(action)); }
    const Eigen::VectorXd& weights(int action) const { return weights_.at(static_cast<std::size_t>(action)); }

    double value(std::span<const double> state, int action) const;
    std::vector<double> values(std::span<const double> state) const;

private:
    FourierBasis basis_;
    std::vector<Eigen::VectorXd> weights_;
};

struct FqiConfig {
    int iterations = 60;
    double gamma = 0.99;
    double ridge = 1e-6;

    friend bool operator==(const FqiConfig&, const FqiConfig&) = default;
};

/// Ridge least squares: argmin_w |X w - y|^2 + ridge |w|^2.
Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double ridge);

/// Fitted Q-iteration: `iterations` sweeps of per-action ridge regression onto
/// r + gamma * max_a' Q(s', a'); terminal transitions regress onto r alone.
/// Actions never seen in the data keep zero weights.
FourierQ fqi_learn(std::span<const Trajectory> data, const FourierBasis& basis, int num_actions,
                   const FqiConfig& config);

/// Softened greedy policy: the argmax action (lowest id on ties) gets
/// 1 - (|A| - 1) * floor and every other action gets floor.
class QGreedyPolicy final : public Policy {
public:
    QGreedyPolicy(std::string id, FourierQ q, double support_floor);

    int num_actions() const override { return q_.num_actions(); }
    void distribution(std::span<const double> state, std::span<double> out) const override;
    const FourierQ& q() const { return q_; }

private:
    FourierQ q_;
    double floor_;
};

std::shared_ptr<const QGreedyPolicy> policy_from_q(FourierQ q, double support_floor, std::string id);

}  // namespace divexp
