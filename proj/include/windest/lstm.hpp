#pragma once

// Small stacked LSTM with a linear head, trained with Adam on an MSE loss.
// Parameters live in one flat vector; weight matrices are Map views into it.

#include "windest/airflow_sensor.hpp"
#include "windest/geom.hpp"
#include "windest/vehicle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace windest {

inline constexpr int kFeatureSize = 20;
inline constexpr int kSensorCount = 4;

using FeatureVector = Eigen::Matrix<double, kFeatureSize, 1>;

/// Feature order: theta_x, theta_y for sensors 0..3, body rate (3),
/// accelerometer (3), signed throttles 0..5.
struct FeatureLayout {
    static constexpr int kAngles = 0;
    static constexpr int kRate = 8;
    static constexpr int kAccel = 11;
    static constexpr int kThrottle = 14;
};

struct DecodedFeatures {
    std::array<DeflectionAngles, kSensorCount> theta{};
    Vec3 rate = Vec3::Zero();
    Vec3 accel = Vec3::Zero();
    std::array<double, kRotorCount> throttle{};  // signed
};

inline FeatureVector build_feature_vector(const std::vector<DeflectionAngles>& theta, const Vec3& rate_B,
                                          const Vec3& accel_raw, const std::vector<double>& throttles,
                                          const std::vector<SpinDirection>& spin)
{
    if (theta.size() != kSensorCount) {
        throw std::invalid_argument("build_feature_vector: expected 4 deflection readings");
    }
    if (throttles.size() != kRotorCount || spin.size() != kRotorCount) {
        throw std::invalid_argument("build_feature_vector: expected 6 throttles and spin directions");
    }
    FeatureVector f;
    for (int i = 0; i < kSensorCount; ++i) {
        f(FeatureLayout::kAngles + 2 * i) = theta[static_cast<std::size_t>(i)].theta_x;
        f(FeatureLayout::kAngles + 2 * i + 1) = theta[static_cast<std::size_t>(i)].theta_y;
    }
    f.segment<3>(FeatureLayout::kRate) = rate_B;
    f.segment<3>(FeatureLayout::kAccel) = accel_raw;
    for (int r = 0; r < kRotorCount; ++r) {
        const double u = throttles[static_cast<std::size_t>(r)];
        if (!(u >= 0.0 && u <= 1.0)) {
            throw std::invalid_argument("build_feature_vector: throttle outside [0, 1]");
        }
        f(FeatureLayout::kThrottle + r) = spin[static_cast<std::size_t>(r)] == SpinDirection::CounterClockwise ? -u : u;
    }
    return f;
}

inline DecodedFeatures decode_feature_vector(const FeatureVector& f)
{
    DecodedFeatures d;
    for (int i = 0; i < kSensorCount; ++i) {
        d.theta[static_cast<std::size_t>(i)] = {f(FeatureLayout::kAngles + 2 * i), f(FeatureLayout::kAngles + 2 * i + 1)};
    }
    d.rate = f.segment<3>(FeatureLayout::kRate);
    d.accel = f.segment<3>(FeatureLayout::kAccel);
    for (int r = 0; r < kRotorCount; ++r) {
        d.throttle[static_cast<std::size_t>(r)] = f(FeatureLayout::kThrottle + r);
    }
    return d;
}

struct LstmShape {
    int input = kFeatureSize;
    int hidden = 16;
    int layers = 2;
    int output = 3;

    int layer_input(int layer) const { return layer == 0 ? input : hidden; }

    Eigen::Index layer_size(int layer) const
    {
        const Eigen::Index g = 4 * hidden;
        return g * layer_input(layer) + g * hidden + g;
    }

    Eigen::Index layer_offset(int layer) const
    {
        Eigen::Index off = 0;
        for (int l = 0; l < layer; ++l) {
            off += layer_size(l);
        }
        return off;
    }

    Eigen::Index head_offset() const { return layer_offset(layers); }
    Eigen::Index parameter_count() const { return head_offset() + Eigen::Index(output) * hidden + output; }

    void validate() const
    {
        if (input < 1 || hidden < 1 || layers < 1 || output < 1) {
            throw std::invalid_argument("LstmShape: all sizes must be positive");
        }
    }

    bool operator==(const LstmShape&) const = default;
};

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

/// Flat parameter vector with per-layer views. Gate rows are ordered i, f, g, o.
class LstmParams {
public:
    LstmParams() : LstmParams(LstmShape{}) {}

    explicit LstmParams(const LstmShape& shape) : shape_(shape)
    {
        shape_.validate();
        flat_ = Eigen::VectorXd::Zero(shape_.parameter_count());
    }

    const LstmShape& shape() const { return shape_; }
    Eigen::VectorXd& flat() { return flat_; }
    const Eigen::VectorXd& flat() const { return flat_; }

    MatMap input_weights(int l) { return {ptr(l), 4 * shape_.hidden, shape_.layer_input(l)}; }
    ConstMatMap input_weights(int l) const { return {ptr(l), 4 * shape_.hidden, shape_.layer_input(l)}; }
    MatMap recurrent_weights(int l) { return {ptr(l) + rec_off(l), 4 * shape_.hidden, shape_.hidden}; }
    ConstMatMap recurrent_weights(int l) const { return {ptr(l) + rec_off(l), 4 * shape_.hidden, shape_.hidden}; }
    VecMap bias(int l) { return {ptr(l) + bias_off(l), 4 * shape_.hidden}; }
    ConstVecMap bias(int l) const { return {ptr(l) + bias_off(l), 4 * shape_.hidden}; }
    MatMap head_weights() { return {flat_.data() + shape_.head_offset(), shape_.output, shape_.hidden}; }
    ConstMatMap head_weights() const { return {flat_.data() + shape_.head_offset(), shape_.output, shape_.hidden}; }
    VecMap head_bias() { return {flat_.data() + head_bias_off(), shape_.output}; }
    ConstVecMap head_bias() const { return {flat_.data() + head_bias_off(), shape_.output}; }

    /// Uniform(-1/sqrt(hidden), 1/sqrt(hidden)) weights, forget-gate bias +1.
    static LstmParams initialized(const LstmShape& shape, std::uint64_t seed)
    {
        LstmParams p(shape);
        std::mt19937_64 rng(seed);
        const double k = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
        std::uniform_real_distribution<double> u(-k, k);
        for (Eigen::Index i = 0; i < p.flat_.size(); ++i) {
            p.flat_(i) = u(rng);
        }
        for (int l = 0; l < shape.layers; ++l) {
            p.bias(l).segment(shape.hidden, shape.hidden).array() += 1.0;
        }
        return p;
    }

private:
    double* ptr(int l) { return flat_.data() + shape_.layer_offset(l); }
    const double* ptr(int l) const { return flat_.data() + shape_.layer_offset(l); }
    Eigen::Index rec_off(int l) const { return Eigen::Index(4) * shape_.hidden * shape_.layer_input(l); }
    Eigen::Index bias_off(int l) const { return rec_off(l) + Eigen::Index(4) * shape_.hidden * shape_.hidden; }
    Eigen::Index head_bias_off() const { return shape_.head_offset() + Eigen::Index(shape_.output) * shape_.hidden; }

    LstmShape shape_;
    Eigen::VectorXd flat_;
};

/// Hidden and cell state per layer (columns).
struct LstmState {
    Eigen::MatrixXd hidden;
    Eigen::MatrixXd cell;

    static LstmState zeros(const LstmShape& s)
    {
        return {Eigen::MatrixXd::Zero(s.hidden, s.layers), Eigen::MatrixXd::Zero(s.hidden, s.layers)};
    }
};

/// Activations kept for backpropagation.
struct LstmTape {
    std::vector<Eigen::MatrixXd> inputs;  // per layer: in x T
    std::vector<Eigen::MatrixXd> gates;   // per layer: 4H x T, post-activation
    std::vector<Eigen::MatrixXd> cells;   // per layer: H x (T+1), column 0 is the initial cell
    std::vector<Eigen::MatrixXd> hiddens; // per layer: H x (T+1)
};

struct LstmResult {
    Eigen::MatrixXd outputs;  // output x T
    LstmState final_state;
    LstmTape tape;
};

namespace detail {

inline double sigmoid(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace detail

/// Runs the network over the columns of `sequence` (input x T).
inline LstmResult lstm_forward(const LstmParams& params, const Eigen::MatrixXd& sequence, const LstmState& initial)
{
    const LstmShape& s = params.shape();
    const Eigen::Index steps = sequence.cols();
    if (steps < 1) {
        throw std::invalid_argument("lstm_forward: empty sequence");
    }
    if (sequence.rows() != s.input) {
        throw std::invalid_argument("lstm_forward: input size mismatch");
    }
    if (!sequence.allFinite()) {
        throw std::invalid_argument("lstm_forward: non-finite input");
    }
    const int h = s.hidden;
    LstmResult r;
    r.tape.inputs.resize(static_cast<std::size_t>(s.layers));
    r.tape.gates.resize(static_cast<std::size_t>(s.layers));
    r.tape.cells.resize(static_cast<std::size_t>(s.layers));
    r.tape.hiddens.resize(static_cast<std::size_t>(s.layers));
    r.final_state = LstmState::zeros(s);

    Eigen::MatrixXd layer_in = sequence;
    for (int l = 0; l < s.layers; ++l) {
        const auto li = static_cast<std::size_t>(l);
        Eigen::MatrixXd& gates = r.tape.gates[li];
        Eigen::MatrixXd& cells = r.tape.cells[li];
        Eigen::MatrixXd& hiddens = r.tape.hiddens[li];
        gates.resize(4 * h, steps);
        cells.resize(h, steps + 1);
        hiddens.resize(h, steps + 1);
        cells.col(0) = initial.cell.col(l);
        hiddens.col(0) = initial.hidden.col(l);

        gates.noalias() = params.input_weights(l) * layer_in;
        gates.colwise() += params.bias(l);
        const auto w_hh = params.recurrent_weights(l);
        for (Eigen::Index t = 0; t < steps; ++t) {
            auto a = gates.col(t);
            a.noalias() += w_hh * hiddens.col(t);
            for (int k = 0; k < h; ++k) {
                a(k) = detail::sigmoid(a(k));
                a(h + k) = detail::sigmoid(a(h + k));
                a(2 * h + k) = std::tanh(a(2 * h + k));
                a(3 * h + k) = detail::sigmoid(a(3 * h + k));
            }
            cells.col(t + 1) = a.segment(h, h).cwiseProduct(cells.col(t)) +
                               a.segment(0, h).cwiseProduct(a.segment(2 * h, h));
            hiddens.col(t + 1) = a.segment(3 * h, h).cwiseProduct(cells.col(t + 1).array().tanh().matrix());
        }
        r.final_state.cell.col(l) = cells.col(steps);
        r.final_state.hidden.col(l) = hiddens.col(steps);
        r.tape.inputs[li] = std::move(layer_in);
        layer_in = hiddens.rightCols(steps);
    }
    r.outputs.noalias() = params.head_weights() * layer_in;
    r.outputs.colwise() += params.head_bias();
    return r;
}

inline LstmResult lstm_forward(const LstmParams& params, const Eigen::MatrixXd& sequence)
{
    return lstm_forward(params, sequence, LstmState::zeros(params.shape()));
}

/// Mean squared error (1 / (out T)) sum_t |y_t - target_t|^2.
inline double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0) {
        throw std::invalid_argument("mse_loss: shape mismatch");
    }
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

/// Loss of one sequence and its gradient w.r.t. the flat parameters (added into `grad`).
inline double lstm_backward(const LstmParams& params, const Eigen::MatrixXd& sequence, const Eigen::MatrixXd& target,
                            Eigen::VectorXd& grad)
{
    const LstmShape& s = params.shape();
    if (grad.size() != s.parameter_count()) {
        throw std::invalid_argument("lstm_backward: gradient size mismatch");
    }
    const LstmResult fwd = lstm_forward(params, sequence);
    const double loss = mse_loss(fwd.outputs, target);
    const Eigen::Index steps = sequence.cols();
    const int h = s.hidden;

    LstmParams g(s);
    const Eigen::MatrixXd d_out = (2.0 / static_cast<double>(fwd.outputs.size())) * (fwd.outputs - target);
    const Eigen::MatrixXd& top = fwd.tape.hiddens.back();
    g.head_weights().noalias() = d_out * top.rightCols(steps).transpose();
    g.head_bias() = d_out.rowwise().sum();
    Eigen::MatrixXd d_hidden_in = params.head_weights().transpose() * d_out;  // H x T

    Eigen::VectorXd da(4 * h);
    for (int l = s.layers - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const Eigen::MatrixXd& gates = fwd.tape.gates[li];
        const Eigen::MatrixXd& cells = fwd.tape.cells[li];
        const Eigen::MatrixXd& hiddens = fwd.tape.hiddens[li];
        const Eigen::MatrixXd& in = fwd.tape.inputs[li];
        const auto w_ih = params.input_weights(l);
        const auto w_hh = params.recurrent_weights(l);
        auto gw_ih = g.input_weights(l);
        auto gw_hh = g.recurrent_weights(l);
        auto gb = g.bias(l);
        Eigen::MatrixXd d_below(in.rows(), steps);
        Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
        Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
        for (Eigen::Index t = steps - 1; t >= 0; --t) {
            const Eigen::VectorXd dh = d_hidden_in.col(t) + dh_next;
            const auto ig = gates.col(t).segment(0, h).array();
            const auto fg = gates.col(t).segment(h, h).array();
            const auto gg = gates.col(t).segment(2 * h, h).array();
            const auto og = gates.col(t).segment(3 * h, h).array();
            const Eigen::ArrayXd tc = cells.col(t + 1).array().tanh();
            const Eigen::ArrayXd dc = dh.array() * og * (1.0 - tc.square()) + dc_next.array();
            da.segment(0, h) = (dc * gg * ig * (1.0 - ig)).matrix();
            da.segment(h, h) = (dc * cells.col(t).array() * fg * (1.0 - fg)).matrix();
            da.segment(2 * h, h) = (dc * ig * (1.0 - gg.square())).matrix();
            da.segment(3 * h, h) = (dh.array() * tc * og * (1.0 - og)).matrix();
            dc_next = (dc * fg).matrix();
            gw_ih.noalias() += da * in.col(t).transpose();
            gw_hh.noalias() += da * hiddens.col(t).transpose();
            gb += da;
            d_below.col(t).noalias() = w_ih.transpose() * da;
            dh_next.noalias() = w_hh.transpose() * da;
        }
        d_hidden_in = std::move(d_below);
    }
    grad += g.flat();
    return loss;
}

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Eigen::VectorXd first;
    Eigen::VectorXd second;
    long step = 0;

    static AdamState zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
};

/// One bias-corrected Adam update of x in place.
inline void adam_step(Eigen::VectorXd& x, const Eigen::VectorXd& grad, AdamState& state, const AdamConfig& cfg)
{
    if (grad.size() != x.size() || state.first.size() != x.size() || state.second.size() != x.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    ++state.step;
    state.first = cfg.beta1 * state.first + (1.0 - cfg.beta1) * grad;
    state.second = cfg.beta2 * state.second + (1.0 - cfg.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    x.array() -= cfg.learning_rate * (state.first.array() / c1) /
                 ((state.second.array() / c2).sqrt() + cfg.epsilon);
}

/// One flight resampled to the common clock: features (20 x N) and labels (3 x N).
struct TrainingRun {
    Eigen::MatrixXd features;
    Eigen::MatrixXd labels;
};

struct TrainConfig {
    int epochs = 400;
    int sequence_length = 5;
    int batch_size = 8;
    int validation_every = 5;   // every 5th block of windows is held out
    int block_windows = 50;
    AdamConfig adam;
    std::uint64_t seed = 1;
    LstmShape shape;

    void validate() const
    {
        if (epochs < 1 || sequence_length < 1 || batch_size < 1 || validation_every < 2 || block_windows < 1) {
            throw std::invalid_argument("TrainConfig: sizes must be positive");
        }
        if (!(adam.learning_rate > 0.0 && adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 &&
              adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
            throw std::invalid_argument("TrainConfig: invalid Adam parameters");
        }
        shape.validate();
    }
};

/// Trained network with the feature standardization it expects.
struct LstmModel {
    LstmParams params;
    FeatureVector feature_mean = FeatureVector::Zero();
    FeatureVector feature_scale = FeatureVector::Ones();
    Vec3 validation_rms = Vec3::Zero();  // per axis, m/s
    int sequence_length = 5;

    Eigen::MatrixXd standardize(const Eigen::MatrixXd& features) const
    {
        return (features.colwise() - feature_mean).array().colwise() / feature_scale.array();
    }

    /// Output at the last step of a window of raw features (20 x T).
    Vec3 predict(const Eigen::MatrixXd& raw_window) const
    {
        const LstmResult r = lstm_forward(params, standardize(raw_window));
        return r.outputs.col(r.outputs.cols() - 1);
    }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    LstmModel model;
    std::vector<EpochRecord> curve;
};

struct Window {
    std::size_t run = 0;
    Eigen::Index start = 0;
};

struct WindowSplit {
    std::vector<Window> train;
    std::vector<Window> validation;
};

/// Non-overlapping windows per run, grouped in contiguous blocks; every
/// `validation_every`-th block is held out.
inline WindowSplit split_windows(const std::vector<TrainingRun>& runs, const TrainConfig& cfg)
{
    std::vector<Window> all;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        if (runs[r].features.rows() != kFeatureSize && runs[r].features.cols() > 0) {
            throw std::invalid_argument("split_windows: feature rows must be 20");
        }
        if (runs[r].labels.cols() != runs[r].features.cols() || (runs[r].labels.cols() > 0 && runs[r].labels.rows() != 3)) {
            throw std::invalid_argument("split_windows: labels must be 3 x N matching features");
        }
        for (Eigen::Index s = 0; s + cfg.sequence_length <= runs[r].features.cols(); s += cfg.sequence_length) {
            all.push_back({r, s});
        }
    }
    if (all.size() < 2) {
        throw std::invalid_argument("train: dataset too small for one training and one validation window");
    }
    std::size_t block = static_cast<std::size_t>(cfg.block_windows);
    const auto every = static_cast<std::size_t>(cfg.validation_every);
    if (all.size() < block * every) {
        block = std::max<std::size_t>(1, all.size() / every);
    }
    WindowSplit split;
    for (std::size_t i = 0; i < all.size(); ++i) {
        ((i / block) % every == every - 1 ? split.validation : split.train).push_back(all[i]);
    }
    if (split.validation.empty()) {
        split.validation.push_back(split.train.back());
        split.train.pop_back();
    }
    return split;
}

namespace detail {

inline Eigen::MatrixXd window_block(const Eigen::MatrixXd& m, const Window& w, int length)
{
    return m.middleCols(w.start, length);
}

}  // namespace detail

/// Per-axis RMS of the last-step output over the given windows, plus the every-step loss.
inline std::pair<Vec3, double> evaluate_windows(const LstmModel& model, const std::vector<TrainingRun>& runs,
                                                const std::vector<Window>& windows, int length)
{
    Vec3 sq = Vec3::Zero();
    double loss = 0.0;
    for (const Window& w : windows) {
        const Eigen::MatrixXd x = model.standardize(detail::window_block(runs[w.run].features, w, length));
        const Eigen::MatrixXd y = detail::window_block(runs[w.run].labels, w, length);
        const LstmResult r = lstm_forward(model.params, x);
        loss += mse_loss(r.outputs, y);
        sq += (r.outputs.col(length - 1) - y.col(length - 1)).cwiseAbs2();
    }
    const double n = static_cast<double>(windows.size());
    return {(sq / n).cwiseSqrt(), loss / n};
}

/// Deterministic for a given seed and dataset.
inline TrainResult train(const std::vector<TrainingRun>& runs, const TrainConfig& cfg)
{
    cfg.validate();
    if (cfg.shape.input != kFeatureSize || cfg.shape.output != 3) {
        throw std::invalid_argument("train: network must map 20 features to 3 outputs");
    }
    const WindowSplit split = split_windows(runs, cfg);
    const int len = cfg.sequence_length;

    TrainResult result;
    LstmModel& model = result.model;
    model.sequence_length = len;

    // standardization statistics from the training windows only
    FeatureVector sum = FeatureVector::Zero();
    FeatureVector sum_sq = FeatureVector::Zero();
    double count = 0.0;
    for (const Window& w : split.train) {
        const Eigen::MatrixXd x = detail::window_block(runs[w.run].features, w, len);
        sum += x.rowwise().sum();
        sum_sq += x.cwiseAbs2().rowwise().sum();
        count += len;
    }
    model.feature_mean = sum / count;
    const FeatureVector var = (sum_sq / count - model.feature_mean.cwiseAbs2()).cwiseMax(0.0);
    for (int i = 0; i < kFeatureSize; ++i) {
        model.feature_scale(i) = var(i) > 1e-12 ? std::sqrt(var(i)) : 1.0;
    }

    std::vector<Eigen::MatrixXd> xs;
    std::vector<Eigen::MatrixXd> ys;
    for (const Window& w : split.train) {
        xs.push_back(model.standardize(detail::window_block(runs[w.run].features, w, len)));
        ys.push_back(detail::window_block(runs[w.run].labels, w, len));
    }

    model.params = LstmParams::initialized(cfg.shape, cfg.seed);
    AdamState adam = AdamState::zeros(model.params.flat().size());
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Eigen::VectorXd grad(model.params.flat().size());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            grad.setZero();
            for (std::size_t k = b; k < e; ++k) {
                epoch_loss += lstm_backward(model.params, xs[order[k]], ys[order[k]], grad);
            }
            grad /= static_cast<double>(e - b);
            adam_step(model.params.flat(), grad, adam, cfg.adam);
        }
        const auto [rms, val_loss] = evaluate_windows(model, runs, split.validation, len);
        model.validation_rms = rms;
        result.curve.push_back({epoch, epoch_loss / static_cast<double>(xs.size()), val_loss});
    }
    return result;
}

/// Sliding window over the most recent raw feature vectors, each evaluated from a zero state.
class LstmAirflowEstimator {
public:
    explicit LstmAirflowEstimator(const LstmModel& model) : model_(&model) {}

    Vec3 push(const FeatureVector& f)
    {
        history_.push_back(f);
        if (history_.size() > static_cast<std::size_t>(model_->sequence_length)) {
            history_.erase(history_.begin());
        }
        Eigen::MatrixXd window(kFeatureSize, static_cast<Eigen::Index>(history_.size()));
        for (std::size_t i = 0; i < history_.size(); ++i) {
            window.col(static_cast<Eigen::Index>(i)) = history_[i];
        }
        return model_->predict(window);
    }

    bool warm() const { return history_.size() == static_cast<std::size_t>(model_->sequence_length); }

private:
    const LstmModel* model_;
    std::vector<FeatureVector> history_;
};

}  // namespace windest
