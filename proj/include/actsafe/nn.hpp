#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace actsafe::nn {

enum class Pooling { mean, last };

struct LstmShape {
    int inputs = 1;
    int hidden = 8;
    int directions = 2;  // 1: forward only; 2: forward + backward
    Pooling pooling = Pooling::mean;
};

/// Sequence batch: column block t (B columns) of `x` holds step t for every
/// sequence, so x is inputs x (steps * batch).
struct SequenceBatch {
    Eigen::MatrixXd x;
    int steps = 0;
    int batch = 0;
};

/// One-layer (bi)directional LSTM, pooled over time (mean of all hidden
/// states, or each direction's final state), followed by an affine scalar head.
/// Gate order i, f, g, o. Parameters live in one flat vector:
///   per direction: W (4H x inputs), U (4H x H), b (4H);  then head w (D*H), bias.
class LstmRegressor {
public:
    LstmRegressor() = default;
    /// Uniform(-1/sqrt(H), 1/sqrt(H)) initialization, forget-gate bias 1.
    LstmRegressor(const LstmShape& shape, std::uint64_t seed);

    const LstmShape& shape() const { return shape_; }
    static std::size_t parameter_count(const LstmShape& shape);
    std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    /// Predictions, one per sequence.
    Eigen::VectorXd forward(const SequenceBatch& batch) const;

    /// Mean squared error over the batch; writes d(loss)/d(params) into `grad`.
    double loss_and_gradient(const SequenceBatch& batch, const Eigen::VectorXd& targets, Eigen::VectorXd& grad) const;

private:
    LstmShape shape_;
    Eigen::VectorXd params_;
};

/// Adam with bias correction.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

private:
    double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    Eigen::VectorXd m_, v_;
};

/// Scales `grad` down so that its L2 norm is at most `max_norm`; returns the original norm.
double clip_gradient(Eigen::VectorXd& grad, double max_norm);

}  // namespace actsafe::nn
