#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "actsafe/nn.hpp"
#include "actsafe/rhb.hpp"

namespace actsafe {

/// A window count, plus the instant it stands for when one is defined.
struct PredictionOutput {
    double windows = 0.0;
    std::optional<Timestamp> timestamp;
};

/// sqrt(mean((prediction - truth)^2)). Throws LengthMismatch on differing or zero length.
double evaluate_rmse(const std::vector<double>& predictions, const std::vector<double>& truths);

/// Frame-relative window count of an absolute prediction: the number of
/// columns from the last context column to the column containing t, i.e. the
/// same scale as PredictionFrame::y.
double frame_windows(const BasisMatrix& bv, const PredictionFrame& f, Timestamp t);

// ---------------------------------------------------------------------------
// Prior day
// ---------------------------------------------------------------------------

/// Projects the clock time of the latest occurrence starting before `now` to
/// its first recurrence at or after `now`; windows = (t - now) / x.
/// Throws NoHistory.
PredictionOutput prior_day_predict(const RhbLog& log, std::string_view behavior, Timestamp now, int x);

// ---------------------------------------------------------------------------
// Autoregression on the inter-occurrence gap series
// ---------------------------------------------------------------------------

struct ArBounds {
    int max_p = 7;
    int max_d = 1;
};

struct ArModel {
    int p = 1;
    int d = 0;
    Eigen::VectorXd coef;  // intercept, then lag 1..p
    double aic = 0.0;
};

/// Least-squares AR(p) with intercept on the gap series differenced d times;
/// (p, d) minimizes AIC = n ln(RSS/n) + 2(p + 1). Throws InsufficientHistory
/// when the series is shorter than 2 * max_p.
ArModel ar_fit(const std::vector<double>& gaps, const ArBounds& bounds = {});

/// Fit at a fixed order. Throws InsufficientHistory when fewer than p + 2
/// regression rows remain.
ArModel ar_fit_order(const std::vector<double>& gaps, int p, int d);

/// Next gap after `history` (same units as the fit).
double ar_predict_next_gap(const ArModel& model, const std::vector<double>& history);

/// Gaps, in windows, between consecutive starts of `behavior` that begin before `before`.
std::vector<double> gap_series(const RhbLog& log, std::string_view behavior, int x,
                               std::optional<Timestamp> before = std::nullopt);

/// Rolls predicted gaps forward from the latest occurrence before `now` until
/// the predicted start is at or after `now`.
PredictionOutput ar_predict(const ArModel& model, const RhbLog& log, std::string_view behavior, Timestamp now, int x);

// ---------------------------------------------------------------------------
// Raw-entry recurrent baseline
// ---------------------------------------------------------------------------

struct TrainConfig {
    int hidden = 64;
    nn::Pooling pooling = nn::Pooling::last;
    double learning_rate = 1e-3;
    int max_epochs = 50;
    int patience = 5;
    int batch_size = 32;
    double validation_fraction = 0.1;
    double clip_norm = 5.0;
    std::uint64_t seed = 1;
};

struct LossCurve {
    std::vector<double> train;
    std::vector<double> validation;
    int best_epoch = -1;
};

constexpr int kRawHistory = 25;

struct RawLstmModel {
    std::vector<std::string> behaviors;  // one-hot order
    std::string target;
    int x = 30;  // window size for reported window counts
    nn::LstmRegressor net;
    double target_mean = 0.0;
    double target_scale = 1.0;
    LossCurve curve;
};

/// Trains on every position with 25 prior entries; the target is the number
/// of seconds from the latest entry's start to the next start of `target`
/// after it. Entries after `until` are not used. Throws InsufficientHistory
/// with fewer than 26 entries.
RawLstmModel raw_lstm_train(const RhbLog& log, std::string_view target, const TrainConfig& cfg,
                            std::optional<Timestamp> until = std::nullopt);

/// Uses the 25 latest entries starting before `now`.
PredictionOutput raw_lstm_predict(const RawLstmModel& model, const RhbLog& log, Timestamp now, int x);

// ---------------------------------------------------------------------------
// HERBERT
// ---------------------------------------------------------------------------

/// A frame over a particular basis matrix.
struct FrameSample {
    const BasisMatrix* bv = nullptr;
    PredictionFrame frame;
};

struct HerbertModel {
    std::vector<std::string> behaviors;  // input row order
    std::string target;
    std::size_t k_ctx = 0;
    int x = 30;
    nn::LstmRegressor net;
    double target_mean = 0.0;
    double target_scale = 1.0;
    LossCurve curve;
};

/// Bidirectional LSTM over the K_ctx x M context, trained with MSE on
/// standardized y, Adam, gradient clipping, and early stopping on the last
/// `validation_fraction` of the samples (chronological). Deterministic for a
/// fixed seed. Throws EmptyTrainingSet and DivergedLoss.
HerbertModel herbert_train(const std::vector<FrameSample>& samples, const TrainConfig& cfg);

/// ŷ (unrounded) for each sample. Throws ShapeMismatch.
std::vector<double> herbert_predict(const HerbertModel& model, const std::vector<FrameSample>& samples);

/// Single-context form: `context` is K_ctx x M (rows are windows).
PredictionOutput herbert_predict(const HerbertModel& model, const Eigen::MatrixXd& context,
                                 std::optional<Timestamp> reference = std::nullopt);

/// Prediction anchored at the frame's last context column; the timestamp is
/// reference + round(ŷ) * x.
PredictionOutput herbert_predict_frame(const HerbertModel& model, const BasisMatrix& bv, const PredictionFrame& f);

// ---------------------------------------------------------------------------
// Uniform front end
// ---------------------------------------------------------------------------

enum class PredictorKind { prior, ar, lstm, herbert };

std::string to_string(PredictorKind k);
/// Throws ConfigError.
PredictorKind predictor_kind_from(std::string_view text);

struct PredictorConfig {
    int x = 30;
    int weeks = 1;  // HERBERT context length T
    PredictorKind kind = PredictorKind::herbert;
    std::size_t stride = 1;  // frame stride for HERBERT training
    TrainConfig train;
    ArBounds ar;
};

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

struct PriorDayModel {
    std::string target;
    int x = 30;
};

struct ArPredictor {
    std::string target;
    int x = 30;
    ArModel model;
};

using AnyModel = std::variant<PriorDayModel, ArPredictor, RawLstmModel, HerbertModel>;

PredictorKind model_kind(const AnyModel& m);
const std::string& model_target(const AnyModel& m);
int model_window(const AnyModel& m);

/// Trains one model for `target` on the part of `log` before `until` (all of
/// it when absent). HERBERT uses the frames whose prediction cutoff is at or
/// before `until`.
AnyModel train_predictor(const RhbLog& log, std::string_view target, const PredictorConfig& cfg,
                         std::optional<Timestamp> until = std::nullopt);

/// Next occurrence of the model's target after `now`, using only entries that start before `now`.
PredictionOutput predict_at(const AnyModel& m, const RhbLog& log, Timestamp now);

/// Per-frame predictions on the frame's window scale (comparable with
/// PredictionFrame::y). `bv` must be the model's window size; `log` is the
/// source of `bv`.
std::vector<double> predict_frames(const AnyModel& m, const RhbLog& log, const BasisMatrix& bv,
                                   const std::vector<PredictionFrame>& frames);

/// Text header (`ACTSAFE-MODEL 1`, kind, key=value lines, `params N`) followed
/// by N little-endian float64 values.
void save_model(const AnyModel& m, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);
std::string encode_model(const AnyModel& m);
AnyModel decode_model(const std::string& bytes);

}  // namespace actsafe
