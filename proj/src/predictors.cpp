#include "actsafe/predictors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "actsafe/error.hpp"

namespace actsafe {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Shared training loop
// ---------------------------------------------------------------------------

struct Dataset {
    std::size_t size = 0;
    std::function<nn::SequenceBatch(const std::vector<std::size_t>&)> batch;
    VectorXd targets;  // standardized
};

double batch_mse(const nn::LstmRegressor& net, const Dataset& data, std::size_t begin, std::size_t end, int batch) {
    double sum = 0.0;
    for (std::size_t i = begin; i < end; i += static_cast<std::size_t>(batch)) {
        std::vector<std::size_t> idx;
        for (std::size_t j = i; j < std::min(end, i + static_cast<std::size_t>(batch)); ++j) idx.push_back(j);
        VectorXd y = net.forward(data.batch(idx));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double r = y[static_cast<Index>(j)] - data.targets[static_cast<Index>(idx[j])];
            sum += r * r;
        }
    }
    return sum / static_cast<double>(end - begin);
}

LossCurve fit(nn::LstmRegressor& net, const Dataset& data, const TrainConfig& cfg) {
    if (data.size == 0) throw EmptyTrainingSet("no training samples");
    if (cfg.batch_size < 1 || cfg.max_epochs < 1) throw ConfigError("batch size and epoch count must be positive");
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(data.size)));
    if (n_val >= data.size) n_val = 0;
    const std::size_t n_train = data.size - n_val;

    nn::Adam adam(net.parameter_count(), cfg.learning_rate);
    std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    LossCurve curve;
    VectorXd best = net.params();
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    VectorXd grad;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        for (std::size_t i = 0; i < n_train; i += static_cast<std::size_t>(cfg.batch_size)) {
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(i),
                                         order.begin() + static_cast<std::ptrdiff_t>(
                                                             std::min(n_train, i + static_cast<std::size_t>(cfg.batch_size))));
            VectorXd t(static_cast<Index>(idx.size()));
            for (std::size_t j = 0; j < idx.size(); ++j) t[static_cast<Index>(j)] = data.targets[static_cast<Index>(idx[j])];
            const double loss = net.loss_and_gradient(data.batch(idx), t, grad);
            if (!std::isfinite(loss) || !grad.allFinite())
                throw DivergedLoss("non-finite loss at epoch " + std::to_string(epoch));
            nn::clip_gradient(grad, cfg.clip_norm);
            adam.step(net.params(), grad);
            sum += loss * static_cast<double>(idx.size());
        }
        curve.train.push_back(sum / static_cast<double>(n_train));
        double monitored = curve.train.back();
        if (n_val > 0) {
            curve.validation.push_back(batch_mse(net, data, n_train, data.size, cfg.batch_size));
            monitored = curve.validation.back();
        }
        if (!std::isfinite(monitored)) throw DivergedLoss("non-finite validation loss at epoch " + std::to_string(epoch));
        if (monitored < best_loss) {
            best_loss = monitored;
            best = net.params();
            curve.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    net.params() = best;
    return curve;
}

std::pair<double, double> standardize(VectorXd& v) {
    const double mean = v.mean();
    const double var = (v.array() - mean).square().mean();
    const double scale = var > 1e-18 ? std::sqrt(var) : 1.0;
    v = (v.array() - mean) / scale;
    return {mean, scale};
}

// ---------------------------------------------------------------------------
// Raw-entry features
// ---------------------------------------------------------------------------

constexpr int kClockFeatures = 4;

void entry_features(const RhbEntry& e, const std::vector<std::string>& behaviors, double* out) {
    for (std::size_t i = 0; i < behaviors.size(); ++i) out[i] = behaviors[i] == e.behavior ? 1.0 : 0.0;
    const double phase = static_cast<double>(clock_of(e.start)) / kMinutesPerDay;
    double* c = out + behaviors.size();
    c[0] = phase;
    c[1] = std::sin(2.0 * std::numbers::pi * phase);
    c[2] = std::cos(2.0 * std::numbers::pi * phase);
    c[3] = std::log1p(static_cast<double>(e.stop - e.start)) / std::log1p(static_cast<double>(kMinutesPerDay));
}

nn::SequenceBatch raw_batch(const std::vector<RhbEntry>& entries, const std::vector<std::string>& behaviors,
                            const std::vector<std::size_t>& ends) {
    const int inputs = static_cast<int>(behaviors.size()) + kClockFeatures;
    nn::SequenceBatch b;
    b.steps = kRawHistory;
    b.batch = static_cast<int>(ends.size());
    b.x.resize(inputs, static_cast<Index>(kRawHistory) * b.batch);
    for (int s = 0; s < b.batch; ++s)
        for (int t = 0; t < kRawHistory; ++t) {
            const auto& e = entries[ends[static_cast<std::size_t>(s)] - kRawHistory + static_cast<std::size_t>(t)];
            entry_features(e, behaviors, b.x.col(static_cast<Index>(t) * b.batch + s).data());
        }
    return b;
}

// ---------------------------------------------------------------------------
// Basis-matrix contexts
// ---------------------------------------------------------------------------

class ContextBuilder {
public:
    explicit ContextBuilder(const std::vector<std::string>& behaviors) : behaviors_(behaviors) {}

    // Model row -> matrix row, or -1. Throws ShapeMismatch for rows the model does not know.
    const std::vector<long>& rows_for(const BasisMatrix& bv) {
        auto it = cache_.find(&bv);
        if (it != cache_.end()) return it->second;
        for (const auto& b : bv.behaviors())
            if (!std::binary_search(behaviors_.begin(), behaviors_.end(), b))
                throw ShapeMismatch("behavior '" + b + "' is not an input of the model");
        std::vector<long> map(behaviors_.size(), -1);
        for (std::size_t r = 0; r < behaviors_.size(); ++r)
            if (auto row = bv.row_of(behaviors_[r])) map[r] = static_cast<long>(*row);
        return cache_.emplace(&bv, std::move(map)).first->second;
    }

    nn::SequenceBatch batch(const std::vector<FrameSample>& samples, const std::vector<std::size_t>& idx,
                            std::size_t k_ctx) {
        nn::SequenceBatch b;
        b.steps = static_cast<int>(k_ctx);
        b.batch = static_cast<int>(idx.size());
        b.x.setZero(static_cast<Index>(behaviors_.size()), static_cast<Index>(k_ctx) * b.batch);
        for (int s = 0; s < b.batch; ++s) {
            const auto& sample = samples[idx[static_cast<std::size_t>(s)]];
            const auto& map = rows_for(*sample.bv);
            for (std::size_t r = 0; r < map.size(); ++r) {
                if (map[r] < 0) continue;
                const std::uint8_t* row = sample.bv->row(static_cast<std::size_t>(map[r]));
                for (std::size_t t = 0; t < k_ctx; ++t)
                    b.x(static_cast<Index>(r), static_cast<Index>(t) * b.batch + s) = row[sample.frame.offset + t];
            }
        }
        return b;
    }

private:
    const std::vector<std::string>& behaviors_;
    std::unordered_map<const BasisMatrix*, std::vector<long>> cache_;
};

const std::string& sample_target(const FrameSample& s) { return s.bv->behaviors().at(s.frame.target_row); }

void check_samples(const std::vector<FrameSample>& samples, std::size_t k_ctx, int x, const std::string& target) {
    for (const auto& s : samples) {
        if (s.bv == nullptr) throw ShapeMismatch("sample without a basis matrix");
        if (s.frame.k_ctx != k_ctx) throw ShapeMismatch("frames differ in context length");
        if (s.bv->window() != x) throw ShapeMismatch("frames differ in window size");
        if (s.frame.context_end_column() > s.bv->cols()) throw ShapeMismatch("frame extends past its matrix");
        if (sample_target(s) != target) throw ShapeMismatch("frames differ in target behavior");
    }
}

Timestamp round_to_window(Timestamp reference, double windows, int x) {
    return reference + static_cast<std::int64_t>(std::llround(windows)) * x;
}

std::vector<RhbEntry> entries_before(const RhbLog& log, Timestamp now) {
    std::vector<RhbEntry> out;
    for (const auto& e : log.entries)
        if (e.start < now) out.push_back(e);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

double evaluate_rmse(const std::vector<double>& predictions, const std::vector<double>& truths) {
    if (predictions.size() != truths.size() || predictions.empty())
        throw LengthMismatch(std::to_string(predictions.size()) + " predictions for " + std::to_string(truths.size()) +
                             " truths");
    double sum = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) sum += (predictions[i] - truths[i]) * (predictions[i] - truths[i]);
    return std::sqrt(sum / static_cast<double>(truths.size()));
}

double frame_windows(const BasisMatrix& bv, const PredictionFrame& f, Timestamp t) {
    return static_cast<double>(bv.column_of(t) - static_cast<std::int64_t>(f.context_end_column()) + 1);
}

// ---------------------------------------------------------------------------

PredictionOutput prior_day_predict(const RhbLog& log, std::string_view behavior, Timestamp now, int x) {
    if (x < 1) throw std::invalid_argument("window size must be positive");
    const RhbEntry* last = nullptr;
    for (const auto& e : log.entries)
        if (e.behavior == behavior && e.start < now) last = &e;
    if (last == nullptr) throw NoHistory("no occurrence of '" + std::string(behavior) + "' before " + format_iso8601(now));
    Timestamp t = day_start(now) + clock_of(last->start);
    if (t < now) t = t + kMinutesPerDay;
    return {static_cast<double>(t - now) / x, t};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> difference(const std::vector<double>& v, int d) {
    std::vector<double> z = v;
    for (int k = 0; k < d; ++k) {
        if (z.empty()) break;
        std::vector<double> next;
        for (std::size_t i = 1; i < z.size(); ++i) next.push_back(z[i] - z[i - 1]);
        z = std::move(next);
    }
    return z;
}

}  // namespace

ArModel ar_fit_order(const std::vector<double>& gaps, int p, int d) {
    if (p < 1 || d < 0) throw std::invalid_argument("AR order must be p >= 1, d >= 0");
    const auto z = difference(gaps, d);
    const Index n = static_cast<Index>(z.size()) - p;
    if (n < p + 2) throw InsufficientHistory("gap series too short for AR(" + std::to_string(p) + ")");
    MatrixXd X(n, p + 1);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int k = 1; k <= p; ++k) X(i, k) = z[static_cast<std::size_t>(i + p - k)];
        y[i] = z[static_cast<std::size_t>(i + p)];
    }
    ArModel m;
    m.p = p;
    m.d = d;
    m.coef = X.completeOrthogonalDecomposition().solve(y);
    const double rss = (X * m.coef - y).squaredNorm();
    m.aic = static_cast<double>(n) * std::log(std::max(rss / static_cast<double>(n), 1e-12)) + 2.0 * (p + 1);
    return m;
}

ArModel ar_fit(const std::vector<double>& gaps, const ArBounds& bounds) {
    if (bounds.max_p < 1 || bounds.max_d < 0) throw ConfigError("invalid AR order bounds");
    if (gaps.size() < static_cast<std::size_t>(2 * bounds.max_p))
        throw InsufficientHistory(std::to_string(gaps.size()) + " gaps; need " + std::to_string(2 * bounds.max_p));
    std::optional<ArModel> best;
    for (int d = 0; d <= bounds.max_d; ++d)
        for (int p = 1; p <= bounds.max_p; ++p) {
            try {
                auto m = ar_fit_order(gaps, p, d);
                if (!best || m.aic < best->aic) best = std::move(m);
            } catch (const InsufficientHistory&) {
            }
        }
    if (!best) throw InsufficientHistory("no AR order fits the gap series");
    return *best;
}

double ar_predict_next_gap(const ArModel& model, const std::vector<double>& history) {
    const auto z = difference(history, model.d);
    if (z.size() < static_cast<std::size_t>(model.p) || history.empty())
        throw InsufficientHistory("history shorter than the AR order");
    double next = model.coef[0];
    for (int k = 1; k <= model.p; ++k) next += model.coef[k] * z[z.size() - static_cast<std::size_t>(k)];
    return model.d == 0 ? next : history.back() + next;
}

std::vector<double> gap_series(const RhbLog& log, std::string_view behavior, int x, std::optional<Timestamp> before) {
    std::vector<double> gaps;
    std::optional<Timestamp> prev;
    for (const auto& e : log.entries) {
        if (e.behavior != behavior || (before && e.start >= *before)) continue;
        if (prev) gaps.push_back(static_cast<double>(e.start - *prev) / x);
        prev = e.start;
    }
    return gaps;
}

PredictionOutput ar_predict(const ArModel& model, const RhbLog& log, std::string_view behavior, Timestamp now, int x) {
    std::optional<Timestamp> last;
    for (const auto& e : log.entries)
        if (e.behavior == behavior && e.start < now) last = e.start;
    if (!last) throw NoHistory("no occurrence of '" + std::string(behavior) + "' before " + format_iso8601(now));
    auto history = gap_series(log, behavior, x, now);
    double t = static_cast<double>(last->minutes);
    const auto limit = static_cast<double>(now.minutes);
    // Each step advances at least one window, so the loop ends.
    while (true) {
        const double g = std::max(1.0, ar_predict_next_gap(model, history));
        t += g * x;
        if (t >= limit) break;
        history.push_back(g);
    }
    Timestamp ts{std::llround(t)};
    return {static_cast<double>(ts - now) / x, ts};
}

// ---------------------------------------------------------------------------

RawLstmModel raw_lstm_train(const RhbLog& log, std::string_view target, const TrainConfig& cfg,
                            std::optional<Timestamp> until) {
    std::vector<RhbEntry> entries = until ? entries_before(log, *until) : log.entries;
    if (entries.size() < kRawHistory + 1)
        throw InsufficientHistory(std::to_string(entries.size()) + " entries; need " + std::to_string(kRawHistory + 1));
    RawLstmModel m;
    m.target = std::string(target);
    RhbLog view{log.patient_id, entries};
    m.behaviors = view.behaviors();

    std::vector<Timestamp> target_starts;
    for (const auto& e : entries)
        if (e.behavior == target) target_starts.push_back(e.start);

    std::vector<std::size_t> ends;
    std::vector<double> secs;
    for (std::size_t k = kRawHistory; k <= entries.size(); ++k) {
        const Timestamp anchor = entries[k - 1].start;
        auto it = std::upper_bound(target_starts.begin(), target_starts.end(), anchor);
        if (it == target_starts.end()) break;
        ends.push_back(k);
        secs.push_back(60.0 * static_cast<double>(*it - anchor));
    }
    if (ends.empty()) throw EmptyTrainingSet("no entry window is followed by '" + m.target + "'");

    Dataset data;
    data.size = ends.size();
    data.targets = Eigen::Map<VectorXd>(secs.data(), static_cast<Index>(secs.size()));
    std::tie(m.target_mean, m.target_scale) = standardize(data.targets);
    data.batch = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::size_t> e;
        for (auto i : idx) e.push_back(ends[i]);
        return raw_batch(entries, m.behaviors, e);
    };
    nn::LstmShape shape{static_cast<int>(m.behaviors.size()) + kClockFeatures, cfg.hidden, 1, nn::Pooling::last};
    m.net = nn::LstmRegressor(shape, cfg.seed);
    m.curve = fit(m.net, data, cfg);
    return m;
}

PredictionOutput raw_lstm_predict(const RawLstmModel& model, const RhbLog& log, Timestamp now, int x) {
    auto entries = entries_before(log, now);
    if (entries.size() < static_cast<std::size_t>(kRawHistory))
        throw InsufficientHistory(std::to_string(entries.size()) + " entries before " + format_iso8601(now));
    const double secs =
        model.target_mean + model.target_scale * model.net.forward(raw_batch(entries, model.behaviors, {entries.size()}))[0];
    Timestamp ts = entries.back().start + static_cast<std::int64_t>(std::llround(secs / 60.0));
    return {static_cast<double>(ts - now) / x, ts};
}

// ---------------------------------------------------------------------------

HerbertModel herbert_train(const std::vector<FrameSample>& samples, const TrainConfig& cfg) {
    if (samples.empty()) throw EmptyTrainingSet("no training frames");
    HerbertModel m;
    if (samples.front().bv == nullptr) throw ShapeMismatch("sample without a basis matrix");
    m.k_ctx = samples.front().frame.k_ctx;
    m.x = samples.front().bv->window();
    m.target = sample_target(samples.front());
    check_samples(samples, m.k_ctx, m.x, m.target);
    for (const auto& s : samples)
        for (const auto& b : s.bv->behaviors())
            if (std::find(m.behaviors.begin(), m.behaviors.end(), b) == m.behaviors.end()) m.behaviors.push_back(b);
    std::sort(m.behaviors.begin(), m.behaviors.end());

    Dataset data;
    data.size = samples.size();
    data.targets.resize(static_cast<Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) data.targets[static_cast<Index>(i)] = samples[i].frame.y;
    std::tie(m.target_mean, m.target_scale) = standardize(data.targets);
    ContextBuilder ctx(m.behaviors);
    data.batch = [&](const std::vector<std::size_t>& idx) { return ctx.batch(samples, idx, m.k_ctx); };

    nn::LstmShape shape{static_cast<int>(m.behaviors.size()), cfg.hidden, 2, cfg.pooling};
    m.net = nn::LstmRegressor(shape, cfg.seed);
    m.curve = fit(m.net, data, cfg);
    return m;
}

std::vector<double> herbert_predict(const HerbertModel& model, const std::vector<FrameSample>& samples) {
    check_samples(samples, model.k_ctx, model.x, model.target);
    ContextBuilder ctx(model.behaviors);
    std::vector<double> out;
    out.reserve(samples.size());
    constexpr std::size_t kBatch = 64;
    for (std::size_t i = 0; i < samples.size(); i += kBatch) {
        std::vector<std::size_t> idx;
        for (std::size_t j = i; j < std::min(samples.size(), i + kBatch); ++j) idx.push_back(j);
        VectorXd y = model.net.forward(ctx.batch(samples, idx, model.k_ctx));
        for (Index j = 0; j < y.size(); ++j) out.push_back(model.target_mean + model.target_scale * y[j]);
    }
    return out;
}

PredictionOutput herbert_predict(const HerbertModel& model, const MatrixXd& context, std::optional<Timestamp> reference) {
    if (context.rows() != static_cast<Index>(model.k_ctx) || context.cols() != static_cast<Index>(model.behaviors.size()))
        throw ShapeMismatch("context is " + std::to_string(context.rows()) + "x" + std::to_string(context.cols()) +
                            "; model expects " + std::to_string(model.k_ctx) + "x" +
                            std::to_string(model.behaviors.size()));
    nn::SequenceBatch b;
    b.steps = static_cast<int>(model.k_ctx);
    b.batch = 1;
    b.x = context.transpose();
    PredictionOutput out;
    out.windows = model.target_mean + model.target_scale * model.net.forward(b)[0];
    if (reference) out.timestamp = round_to_window(*reference, out.windows, model.x);
    return out;
}

PredictionOutput herbert_predict_frame(const HerbertModel& model, const BasisMatrix& bv, const PredictionFrame& f) {
    PredictionOutput out;
    out.windows = herbert_predict(model, {FrameSample{&bv, f}}).front();
    out.timestamp = round_to_window(frame_reference(bv, f), out.windows, model.x);
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(PredictorKind k) {
    switch (k) {
        case PredictorKind::prior: return "prior";
        case PredictorKind::ar: return "ar";
        case PredictorKind::lstm: return "lstm";
        case PredictorKind::herbert: return "herbert";
    }
    return "?";
}

PredictorKind predictor_kind_from(std::string_view text) {
    for (auto k : {PredictorKind::prior, PredictorKind::ar, PredictorKind::lstm, PredictorKind::herbert})
        if (to_string(k) == text) return k;
    throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

PredictorKind model_kind(const AnyModel& m) {
    return static_cast<PredictorKind>(m.index());
}

const std::string& model_target(const AnyModel& m) {
    return std::visit([](const auto& v) -> const std::string& { return v.target; }, m);
}

int model_window(const AnyModel& m) {
    return std::visit([](const auto& v) { return v.x; }, m);
}

AnyModel train_predictor(const RhbLog& log, std::string_view target, const PredictorConfig& cfg,
                         std::optional<Timestamp> until) {
    if (cfg.x < 1 || cfg.weeks < 1) throw ConfigError("window size and context weeks must be positive");
    switch (cfg.kind) {
        case PredictorKind::prior: {
            bool seen = false;
            for (const auto& e : log.entries) seen |= e.behavior == target && (!until || e.start < *until);
            if (!seen) throw NoHistory("no occurrence of '" + std::string(target) + "'");
            return PriorDayModel{std::string(target), cfg.x};
        }
        case PredictorKind::ar:
            return ArPredictor{std::string(target), cfg.x, ar_fit(gap_series(log, target, cfg.x, until), cfg.ar)};
        case PredictorKind::lstm: {
            auto m = raw_lstm_train(log, target, cfg.train, until);
            m.x = cfg.x;
            return m;
        }
        case PredictorKind::herbert: {
            auto bv = basis_vectorize(log, cfg.x);
            auto frames = make_frames(bv, target, context_windows(cfg.weeks, cfg.x), cfg.stride);
            std::vector<FrameSample> samples;
            for (const auto& f : frames) {
                // The answer must also be observed before `until`.
                if (until && bv.column_start(f.context_end_column() - 1 + static_cast<std::size_t>(f.y)) >= *until)
                    continue;
                samples.push_back({&bv, f});
            }
            auto m = herbert_train(samples, cfg.train);
            return m;
        }
    }
    throw ConfigError("unknown model kind");
}

PredictionOutput predict_at(const AnyModel& m, const RhbLog& log, Timestamp now) {
    if (const auto* p = std::get_if<PriorDayModel>(&m)) return prior_day_predict(log, p->target, now, p->x);
    if (const auto* a = std::get_if<ArPredictor>(&m)) return ar_predict(a->model, log, a->target, now, a->x);
    if (const auto* r = std::get_if<RawLstmModel>(&m)) return raw_lstm_predict(*r, log, now, r->x);
    const auto& h = std::get<HerbertModel>(m);
    // Columns end exactly at `now`; entries are cut off there.
    auto entries = entries_before(log, now);
    if (entries.empty()) throw InsufficientHistory("no entries before " + format_iso8601(now));
    for (auto& e : entries) e.stop = std::min(e.stop, now);
    const std::int64_t span = now - entries.front().start;
    const std::int64_t columns = (span + h.x - 1) / h.x;
    if (columns < static_cast<std::int64_t>(h.k_ctx))
        throw InsufficientHistory("history shorter than the model's context");
    const Timestamp origin = now - columns * h.x;
    RhbLog clipped{log.patient_id, entries};
    auto bv = basis_vectorize_from(clipped, h.x, origin, &h.behaviors);
    MatrixXd ctx = MatrixXd::Zero(static_cast<Index>(h.k_ctx), static_cast<Index>(h.behaviors.size()));
    for (std::size_t t = 0; t < h.k_ctx; ++t) {
        const auto col = static_cast<std::size_t>(columns) - h.k_ctx + t;
        if (col >= bv.cols()) continue;
        for (std::size_t r = 0; r < h.behaviors.size(); ++r)
            ctx(static_cast<Index>(t), static_cast<Index>(r)) = bv.at(r, col);
    }
    return herbert_predict(h, ctx, now - h.x);
}

std::vector<double> predict_frames(const AnyModel& m, const RhbLog& log, const BasisMatrix& bv,
                                   const std::vector<PredictionFrame>& frames) {
    if (const auto* h = std::get_if<HerbertModel>(&m)) {
        std::vector<FrameSample> samples;
        for (const auto& f : frames) samples.push_back({&bv, f});
        return herbert_predict(*h, samples);
    }
    std::vector<double> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(frame_windows(bv, f, *predict_at(m, log, frame_cutoff(bv, f)).timestamp));
    return out;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "ACTSAFE-MODEL 1";

std::string fmt(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        auto next = s.find(',', pos);
        out.push_back(s.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

struct Header {
    std::map<std::string, std::string> values;

    const std::string& get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ModelFormatError("missing header field '" + key + "'");
        return it->second;
    }
    double number(const std::string& key) const {
        const auto& s = get(key);
        double v = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ModelFormatError("field '" + key + "' is not a number");
        return v;
    }
    long integer(const std::string& key) const {
        const auto& s = get(key);
        long v = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ModelFormatError("field '" + key + "' is not an integer");
        return v;
    }
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : split_list(get(key))) {
            double v = 0;
            auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc() || r.ptr != s.data() + s.size())
                throw ModelFormatError("field '" + key + "' holds a non-number");
            out.push_back(v);
        }
        return out;
    }
};

void put_curve(std::vector<std::pair<std::string, std::string>>& kv, const LossCurve& c) {
    kv.emplace_back("best_epoch", std::to_string(c.best_epoch));
    kv.emplace_back("train_loss", join_doubles(c.train));
    kv.emplace_back("validation_loss", join_doubles(c.validation));
}

LossCurve get_curve(const Header& h) {
    LossCurve c;
    c.best_epoch = static_cast<int>(h.integer("best_epoch"));
    c.train = h.numbers("train_loss");
    c.validation = h.numbers("validation_loss");
    return c;
}

void put_shape(std::vector<std::pair<std::string, std::string>>& kv, const nn::LstmShape& s) {
    kv.emplace_back("inputs", std::to_string(s.inputs));
    kv.emplace_back("hidden", std::to_string(s.hidden));
    kv.emplace_back("directions", std::to_string(s.directions));
    kv.emplace_back("pooling", s.pooling == nn::Pooling::mean ? "mean" : "last");
}

nn::LstmShape get_shape(const Header& h) {
    nn::LstmShape s;
    s.inputs = static_cast<int>(h.integer("inputs"));
    s.hidden = static_cast<int>(h.integer("hidden"));
    s.directions = static_cast<int>(h.integer("directions"));
    const auto& pooling = h.get("pooling");
    if (pooling != "mean" && pooling != "last") throw ModelFormatError("unknown pooling '" + pooling + "'");
    s.pooling = pooling == "mean" ? nn::Pooling::mean : nn::Pooling::last;
    if (s.inputs < 1 || s.hidden < 1 || (s.directions != 1 && s.directions != 2))
        throw ModelFormatError("invalid network shape");
    return s;
}

nn::LstmRegressor restore_net(const nn::LstmShape& shape, const VectorXd& params) {
    if (static_cast<std::size_t>(params.size()) != nn::LstmRegressor::parameter_count(shape))
        throw ModelFormatError("parameter count does not match the network shape");
    nn::LstmRegressor net(shape, 0);
    net.params() = params;
    return net;
}

}  // namespace

std::string encode_model(const AnyModel& m) {
    std::vector<std::pair<std::string, std::string>> kv;
    VectorXd params;
    kv.emplace_back("kind", to_string(model_kind(m)));
    kv.emplace_back("target", model_target(m));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PriorDayModel>) {
                kv.emplace_back("x", std::to_string(v.x));
            } else if constexpr (std::is_same_v<T, ArPredictor>) {
                kv.emplace_back("x", std::to_string(v.x));
                kv.emplace_back("p", std::to_string(v.model.p));
                kv.emplace_back("d", std::to_string(v.model.d));
                kv.emplace_back("aic", fmt(v.model.aic));
                params = v.model.coef;
            } else {
                kv.emplace_back("x", std::to_string(v.x));
                if constexpr (std::is_same_v<T, HerbertModel>) kv.emplace_back("k_ctx", std::to_string(v.k_ctx));
                kv.emplace_back("behaviors", join(v.behaviors));
                put_shape(kv, v.net.shape());
                kv.emplace_back("target_mean", fmt(v.target_mean));
                kv.emplace_back("target_scale", fmt(v.target_scale));
                put_curve(kv, v.curve);
                params = v.net.params();
            }
        },
        m);

    std::string out(kMagic);
    out += "\n";
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    out += "params " + std::to_string(params.size()) + "\n";
    for (Index i = 0; i < params.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &params[i], sizeof bits);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
    return out;
}

AnyModel decode_model(const std::string& bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        auto end = bytes.find('\n', pos);
        if (end == std::string::npos) throw ModelFormatError("truncated header");
        std::string line = bytes.substr(pos, end - pos);
        pos = end + 1;
        return line;
    };
    if (next_line() != kMagic) throw ModelFormatError("not a model file");
    Header h;
    std::size_t count = 0;
    while (true) {
        auto line = next_line();
        if (line.rfind("params ", 0) == 0) {
            const auto n = line.substr(7);
            auto r = std::from_chars(n.data(), n.data() + n.size(), count);
            if (r.ec != std::errc() || r.ptr != n.data() + n.size()) throw ModelFormatError("bad parameter count");
            break;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ModelFormatError("bad header line '" + line + "'");
        h.values[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (bytes.size() - pos != 8 * count) throw ModelFormatError("parameter block size does not match its count");
    VectorXd params(static_cast<Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + 8 * i + static_cast<std::size_t>(b)]))
                    << (8 * b);
        std::memcpy(&params[static_cast<Index>(i)], &bits, sizeof bits);
    }

    PredictorKind kind;
    try {
        kind = predictor_kind_from(h.get("kind"));
    } catch (const ConfigError& e) {
        throw ModelFormatError(e.what());
    }
    const std::string target = h.get("target");
    switch (kind) {
        case PredictorKind::prior: return PriorDayModel{target, static_cast<int>(h.integer("x"))};
        case PredictorKind::ar: {
            ArPredictor a{target, static_cast<int>(h.integer("x")), {}};
            a.model.p = static_cast<int>(h.integer("p"));
            a.model.d = static_cast<int>(h.integer("d"));
            a.model.aic = h.number("aic");
            if (a.model.p < 1 || a.model.d < 0 || params.size() != a.model.p + 1)
                throw ModelFormatError("AR coefficients do not match the order");
            a.model.coef = params;
            return a;
        }
        case PredictorKind::lstm: {
            RawLstmModel r;
            r.target = target;
            r.x = static_cast<int>(h.integer("x"));
            r.behaviors = split_list(h.get("behaviors"));
            r.net = restore_net(get_shape(h), params);
            r.target_mean = h.number("target_mean");
            r.target_scale = h.number("target_scale");
            r.curve = get_curve(h);
            return r;
        }
        case PredictorKind::herbert: {
            HerbertModel m;
            m.target = target;
            m.x = static_cast<int>(h.integer("x"));
            m.k_ctx = static_cast<std::size_t>(h.integer("k_ctx"));
            m.behaviors = split_list(h.get("behaviors"));
            m.net = restore_net(get_shape(h), params);
            if (static_cast<std::size_t>(m.net.shape().inputs) != m.behaviors.size())
                throw ModelFormatError("input count does not match the behavior list");
            m.target_mean = h.number("target_mean");
            m.target_scale = h.number("target_scale");
            m.curve = get_curve(h);
            return m;
        }
    }
    throw ModelFormatError("unknown model kind");
}

void save_model(const AnyModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const auto bytes = encode_model(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_model(ss.str());
}

}  // namespace actsafe
