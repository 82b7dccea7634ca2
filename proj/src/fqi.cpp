#include "divexp/fqi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace divexp {

FourierBasis::FourierBasis(int order, std::vector<double> lower, std::vector<double> upper)
    : order_(order), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (order_ < 0) throw std::invalid_argument("Fourier order must be nonnegative");
    if (lower_.empty() || lower_.size() != upper_.size()) {
        throw std::invalid_argument("Fourier basis bounds must be nonempty and equal length");
    }
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!(upper_[i] > lower_[i])) throw std::invalid_argument("Fourier basis bound is empty");
    }
    std::vector<int> c(lower_.size(), 0);
    while (true) {
        coefficients_.push_back(c);
        std::size_t i = 0;
        while (i < c.size() && c[i] == order_) c[i++] = 0;
        if (i == c.size()) break;
        ++c[i];
    }
}

Eigen::VectorXd FourierBasis::features(std::span<const double> state) const {
    if (state.size() != lower_.size()) throw std::invalid_argument("state dimension does not match Fourier basis");
    std::vector<double> x(state.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp((state[i] - lower_[i]) / (upper_[i] - lower_[i]), 0.0, 1.0);
    }
    Eigen::VectorXd phi(size());
    for (int k = 0; k < size(); ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dot += coefficients_[k][i] * x[i];
        phi[k] = std::cos(std::numbers::pi * dot);
    }
    return phi;
}

FourierQ::FourierQ(FourierBasis basis, int num_actions) : basis_(std::move(basis)) {
    if (num_actions < 1) throw std::invalid_argument("FourierQ needs at least one action");
    weights_.assign(static_cast<std::size_t>(num_actions), Eigen::VectorXd::Zero(basis_.size()));
}

double FourierQ::value(std::span<const double> state, int action) const {
    return weights(action).dot(basis_.features(state));
}

std::vector<double> FourierQ::values(std::span<const double> state) const {
    const Eigen::VectorXd phi = basis_.features(state);
    std::vector<double> out;
    out.reserve(weights_.size());
    for (const auto& w : weights_) out.push_back(w.dot(phi));
    return out;
}

Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double ridge) {
    Eigen::MatrixXd gram = features.transpose() * features;
    gram.diagonal().array() += ridge;
    return gram.ldlt().solve(features.transpose() * targets);
}

FourierQ fqi_learn(std::span<const Trajectory> data, const FourierBasis& basis, int num_actions,
                   const FqiConfig& config) {
    if (data.empty()) throw std::invalid_argument("fqi_learn needs data");
    if (config.iterations < 0 || !(config.ridge > 0.0)) throw std::invalid_argument("invalid FQI configuration");

    struct ActionBatch {
        Eigen::MatrixXd phi;
        Eigen::MatrixXd next_phi;
        Eigen::VectorXd rewards;
        Eigen::VectorXd continuing;  // 0 for terminal transitions
        Eigen::LDLT<Eigen::MatrixXd> solver;
    };
    std::vector<std::vector<const Transition*>> by_action(static_cast<std::size_t>(num_actions));
    for (const auto& traj : data) {
        for (const auto& tr : traj.transitions) {
            if (tr.action < 0 || tr.action >= num_actions) throw std::out_of_range("logged action out of range");
            by_action[static_cast<std::size_t>(tr.action)].push_back(&tr);
        }
    }
    const int k = basis.size();
    std::vector<ActionBatch> batches(by_action.size());
    for (std::size_t a = 0; a < by_action.size(); ++a) {
        const auto& trs = by_action[a];
        auto& b = batches[a];
        const auto rows = static_cast<Eigen::Index>(trs.size());
        b.phi.resize(rows, k);
        b.next_phi.resize(rows, k);
        b.rewards.resize(rows);
        b.continuing.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            b.phi.row(i) = basis.features(trs[i]->state).transpose();
            b.next_phi.row(i) = basis.features(trs[i]->next_state).transpose();
            b.rewards[i] = trs[i]->reward;
            b.continuing[i] = trs[i]->terminal ? 0.0 : 1.0;
        }
        if (rows > 0) {
            Eigen::MatrixXd gram = b.phi.transpose() * b.phi;
            gram.diagonal().array() += config.ridge;
            b.solver.compute(gram);
        }
    }

    FourierQ q(basis, num_actions);
    for (int sweep = 0; sweep < config.iterations; ++sweep) {
        std::vector<Eigen::VectorXd> updated(by_action.size());
        for (std::size_t a = 0; a < batches.size(); ++a) {
            auto& b = batches[a];
            if (b.phi.rows() == 0) {
                updated[a] = q.weights(static_cast<int>(a));
                continue;
            }
            Eigen::VectorXd best_next = Eigen::VectorXd::Constant(b.phi.rows(), -std::numeric_limits<double>::infinity());
            for (int a2 = 0; a2 < num_actions; ++a2) best_next = best_next.cwiseMax(b.next_phi * q.weights(a2));
            const Eigen::VectorXd targets =
                b.rewards + config.gamma * b.continuing.cwiseProduct(best_next);
            updated[a] = b.solver.solve(b.phi.transpose() * targets);
        }
        for (std::size_t a = 0; a < updated.size(); ++a) q.weights(static_cast<int>(a)) = updated[a];
    }
    return q;
}

QGreedyPolicy::QGreedyPolicy(std::string id, FourierQ q, double support_floor)
    : Policy(std::move(id)), q_(std::move(q)), floor_(support_floor) {
    const int n = q_.num_actions();
    if (!(floor_ > 0.0 && floor_ < 1.0 / n)) throw std::invalid_argument("support floor must lie in (0, 1/|A|)");
}

void QGreedyPolicy::distribution(std::span<const double> state, std::span<double> out) const {
    const auto values = q_.values(state);
    const auto best = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    const double n = static_cast<double>(values.size());
    for (std::size_t a = 0; a < values.size(); ++a) out[a] = a == best ? 1.0 - (n - 1.0) * floor_ : floor_;
}

std::shared_ptr<const QGreedyPolicy> policy_from_q(FourierQ q, double support_floor, std::string id) {
    return std::make_shared<const QGreedyPolicy>(std::move(id), std::move(q), support_floor);
}

}  // namespace divexp
