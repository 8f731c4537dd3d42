#include "actsafe/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace actsafe::nn {

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

struct Layout {
    Index in, h, dirs;
    Index per_dir() const { return 4 * h * in + 4 * h * h + 4 * h; }
    Index w(Index d) const { return d * per_dir(); }
    Index u(Index d) const { return w(d) + 4 * h * in; }
    Index b(Index d) const { return u(d) + 4 * h * h; }
    Index head() const { return dirs * per_dir(); }
    Index bias() const { return head() + dirs * h; }
    Index total() const { return bias() + 1; }
};

Layout layout_of(const LstmShape& s) { return {s.inputs, s.hidden, s.directions}; }

// Activations and states of one direction, stored per time index t (column
// block t of width B), whichever way the direction walks.
struct DirectionTrace {
    MatrixXd gates;  // 4H x (T*B): i, f, g, o after their nonlinearities
    MatrixXd c;      // H x (T*B)
    MatrixXd tc;     // tanh(c)
    MatrixXd h;      // H x (T*B)
};

// tanh(x) = 2 sigmoid(2x) - 1 keeps every nonlinearity on Eigen's vectorized exp.
template <typename Block>
void gate_nonlinearities(Block&& z, Index H) {
    z.middleRows(2 * H, H) *= 2.0;
    z = (1.0 + (-z.array()).exp()).inverse().matrix();
    z.middleRows(2 * H, H) = (2.0 * z.middleRows(2 * H, H).array() - 1.0).matrix();
}

inline Index time_at(Index d, Index s, Index steps) { return d == 0 ? s : steps - 1 - s; }

void run_direction(const Layout& L, const VectorXd& p, Index d, const SequenceBatch& batch, DirectionTrace& tr) {
    const Index H = L.h, B = batch.batch, T = batch.steps;
    CMap W(p.data() + L.w(d), 4 * H, L.in);
    CMap U(p.data() + L.u(d), 4 * H, H);
    Eigen::Map<const VectorXd> bias(p.data() + L.b(d), 4 * H);

    tr.gates.noalias() = W * batch.x;
    tr.gates.colwise() += bias;
    tr.c.resize(H, T * B);
    tr.tc.resize(H, T * B);
    tr.h.resize(H, T * B);

    for (Index s = 0; s < T; ++s) {
        const Index t = time_at(d, s, T);
        auto z = tr.gates.middleCols(t * B, B);
        auto c = tr.c.middleCols(t * B, B);
        auto tc = tr.tc.middleCols(t * B, B);
        auto h = tr.h.middleCols(t * B, B);
        if (s > 0) {
            const Index tp = time_at(d, s - 1, T);
            z.noalias() += U * tr.h.middleCols(tp * B, B);
            gate_nonlinearities(z, H);
            c = (z.middleRows(H, H).array() * tr.c.middleCols(tp * B, B).array() +
                 z.topRows(H).array() * z.middleRows(2 * H, H).array())
                    .matrix();
        } else {
            gate_nonlinearities(z, H);
            c = (z.topRows(H).array() * z.middleRows(2 * H, H).array()).matrix();
        }
        tc = (2.0 / (1.0 + (-2.0 * c.array()).exp()) - 1.0).matrix();
        h = (z.bottomRows(H).array() * tc.array()).matrix();
    }
}

// D*H x B pooled features.
MatrixXd pool(const LstmShape& shape, const std::vector<DirectionTrace>& traces, Index steps, Index B) {
    const Index H = shape.hidden;
    MatrixXd pooled(shape.directions * H, B);
    for (Index d = 0; d < shape.directions; ++d) {
        auto block = pooled.middleRows(d * H, H);
        if (shape.pooling == Pooling::mean) {
            block.setZero();
            for (Index t = 0; t < steps; ++t) block += traces[d].h.middleCols(t * B, B);
            block /= static_cast<double>(steps);
        } else {
            block = traces[d].h.middleCols(time_at(d, steps - 1, steps) * B, B);
        }
    }
    return pooled;
}

void check_batch(const LstmShape& shape, const SequenceBatch& batch) {
    if (batch.steps < 1 || batch.batch < 1 || batch.x.rows() != shape.inputs ||
        batch.x.cols() != static_cast<Index>(batch.steps) * batch.batch)
        throw std::invalid_argument("sequence batch shape does not match the network");
}

}  // namespace

std::size_t LstmRegressor::parameter_count(const LstmShape& shape) {
    return static_cast<std::size_t>(layout_of(shape).total());
}

LstmRegressor::LstmRegressor(const LstmShape& shape, std::uint64_t seed) : shape_(shape) {
    if (shape.inputs < 1 || shape.hidden < 1 || (shape.directions != 1 && shape.directions != 2))
        throw std::invalid_argument("invalid LSTM shape");
    const auto L = layout_of(shape);
    params_.resize(L.total());
    std::mt19937_64 rng(seed);
    const double r = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    std::uniform_real_distribution<double> u(-r, r);
    for (Index i = 0; i < params_.size(); ++i) params_[i] = u(rng);
    for (Index d = 0; d < shape.directions; ++d) params_.segment(L.b(d) + L.h, L.h).array() += 1.0;
}

VectorXd LstmRegressor::forward(const SequenceBatch& batch) const {
    check_batch(shape_, batch);
    const auto L = layout_of(shape_);
    std::vector<DirectionTrace> traces(shape_.directions);
    for (Index d = 0; d < shape_.directions; ++d) run_direction(L, params_, d, batch, traces[d]);
    MatrixXd pooled = pool(shape_, traces, batch.steps, batch.batch);
    Eigen::Map<const VectorXd> w(params_.data() + L.head(), shape_.directions * L.h);
    VectorXd y = pooled.transpose() * w;
    y.array() += params_[L.bias()];
    return y;
}

double LstmRegressor::loss_and_gradient(const SequenceBatch& batch, const VectorXd& targets, VectorXd& grad) const {
    check_batch(shape_, batch);
    if (targets.size() != batch.batch) throw std::invalid_argument("target count does not match the batch");
    const auto L = layout_of(shape_);
    const Index H = L.h, B = batch.batch, T = batch.steps;

    std::vector<DirectionTrace> traces(shape_.directions);
    for (Index d = 0; d < shape_.directions; ++d) run_direction(L, params_, d, batch, traces[d]);
    MatrixXd pooled = pool(shape_, traces, T, B);
    Eigen::Map<const VectorXd> w(params_.data() + L.head(), shape_.directions * H);
    VectorXd y = pooled.transpose() * w;
    y.array() += params_[L.bias()];

    VectorXd resid = y - targets;
    const double loss = resid.squaredNorm() / static_cast<double>(B);
    VectorXd dy = resid * (2.0 / static_cast<double>(B));

    grad.setZero(L.total());
    grad.segment(L.head(), shape_.directions * H) = pooled * dy;
    grad[L.bias()] = dy.sum();
    MatrixXd dpooled = w * dy.transpose();  // D*H x B

    for (Index d = 0; d < shape_.directions; ++d) {
        const auto& tr = traces[d];
        CMap U(params_.data() + L.u(d), 4 * H, H);
        MatrixXd dz(4 * H, T * B);
        ArrayXXd dh(H, B), dc(H, B);
        MatrixXd dh_next = MatrixXd::Zero(H, B);
        ArrayXXd dc_next = ArrayXXd::Zero(H, B);
        const ArrayXXd dpool_d = dpooled.middleRows(d * H, H).array();
        const ArrayXXd dpool_mean = dpool_d / static_cast<double>(T);
        Map dU(grad.data() + L.u(d), 4 * H, H);

        for (Index s = T - 1; s >= 0; --s) {
            const Index t = time_at(d, s, T);
            const auto z = tr.gates.middleCols(t * B, B);
            const auto i = z.topRows(H).array();
            const auto f = z.middleRows(H, H).array();
            const auto g = z.middleRows(2 * H, H).array();
            const auto o = z.bottomRows(H).array();
            const auto tc = tr.tc.middleCols(t * B, B).array();

            if (shape_.pooling == Pooling::mean)
                dh = dh_next.array() + dpool_mean;
            else if (s == T - 1)
                dh = dh_next.array() + dpool_d;
            else
                dh = dh_next.array();

            dc = dc_next + dh * o * (1.0 - tc.square());
            auto dzt = dz.middleCols(t * B, B);
            dzt.topRows(H) = (dc * g * i * (1.0 - i)).matrix();
            dzt.middleRows(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
            dzt.bottomRows(H) = (dh * tc * o * (1.0 - o)).matrix();
            if (s > 0) {
                const Index tp = time_at(d, s - 1, T);
                dzt.middleRows(H, H) = (dc * tr.c.middleCols(tp * B, B).array() * f * (1.0 - f)).matrix();
                dU.noalias() += dzt * tr.h.middleCols(tp * B, B).transpose();
            } else {
                dzt.middleRows(H, H).setZero();
            }
            dc_next = dc * f;
            dh_next.noalias() = U.transpose() * dzt;
        }

        Map dW(grad.data() + L.w(d), 4 * H, L.in);
        Eigen::Map<VectorXd> db(grad.data() + L.b(d), 4 * H);
        dW.noalias() = dz * batch.x.transpose();
        db = dz.rowwise().sum();
    }
    return loss;
}

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(eps), m_(VectorXd::Zero(static_cast<Index>(n))),
      v_(VectorXd::Zero(static_cast<Index>(n))) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double clip_gradient(VectorXd& grad, double max_norm) {
    const double norm = grad.norm();
    if (max_norm > 0 && norm > max_norm) grad *= max_norm / norm;
    return norm;
}

}  // namespace actsafe::nn
