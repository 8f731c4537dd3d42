#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "actsafe/error.hpp"
#include "actsafe/predictors.hpp"
#include "support/logs.hpp"
#include "support/schedules.hpp"

using namespace actsafe;
using testing::daily_log;
using testing::regular_day;

namespace {

std::vector<double> truths(const std::vector<PredictionFrame>& frames) {
    std::vector<double> y;
    for (const auto& f : frames) y.push_back(f.y);
    return y;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.max_epochs = 30;
    cfg.learning_rate = 1e-2;
    return cfg;
}

}  // namespace

TEST_CASE("prior day: yesterday 08:00 seen from midnight is 16 windows") {
    auto log = daily_log(1, [](int) { return std::vector<testing::DailyItem>{{"take_medicine", 8 * 60, 1}}; });
    Timestamp now = make_timestamp(2019, 7, 2);
    auto out = prior_day_predict(log, "take_medicine", now, 30);
    CHECK(out.windows == 16.0);
    CHECK(*out.timestamp == make_timestamp(2019, 7, 2, 8, 0));
    CHECK_THROWS_AS(prior_day_predict(log, "eating", now, 30), NoHistory);
    CHECK_THROWS_AS(prior_day_predict(log, "take_medicine", make_timestamp(2019, 7, 1, 8, 0), 30), NoHistory);
}

TEST_CASE("property: prior-day window counts scale with the window size") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        auto log = testing::random_log(rng, 10, 40);
        const auto& b = log.entries.front().behavior;
        Timestamp now = log.entries.back().start + std::uniform_int_distribution<int>(1, 3000)(rng);
        for (int x : {15, 30}) {
            auto a = prior_day_predict(log, b, now, x);
            auto c = prior_day_predict(log, b, now, 2 * x);
            REQUIRE(*a.timestamp == *c.timestamp);
            REQUIRE(a.windows == 2.0 * c.windows);
        }
    }
}

TEST_CASE("prior day and AR are exact on a periodic schedule") {
    auto log = daily_log(35, [](int) { return regular_day(); });
    auto bv = basis_vectorize(log, 30);
    auto frames = make_frames(bv, "take_medicine", context_windows(1, 30));
    auto split = split_by_fraction(frames, 0.5);
    const auto until = frame_cutoff(bv, split.test.front());

    PredictorConfig cfg;
    cfg.kind = PredictorKind::prior;
    auto prior = train_predictor(log, "take_medicine", cfg, until);
    CHECK(evaluate_rmse(predict_frames(prior, log, bv, split.test), truths(split.test)) == 0.0);

    cfg.kind = PredictorKind::ar;
    auto ar = train_predictor(log, "take_medicine", cfg, until);
    CHECK(std::abs(ar_predict_next_gap(std::get<ArPredictor>(ar).model, gap_series(log, "take_medicine", 30, until)) -
                   48.0) < 1e-6);
    CHECK(evaluate_rmse(predict_frames(ar, log, bv, split.test), truths(split.test)) == 0.0);
}

TEST_CASE("prior day misses an alternating 08:00/09:00 schedule by 2 windows") {
    auto log = daily_log(21, [](int d) { return regular_day(d % 2 ? 9 * 60 : 8 * 60); });
    auto bv = basis_vectorize(log, 30);
    // Stride of one day keeps every cutoff at midnight.
    auto frames = make_frames(bv, "take_medicine", context_windows(1, 30), 48);
    auto model = PriorDayModel{"take_medicine", 30};
    auto pred = predict_frames(model, log, bv, frames);
    REQUIRE(frames.size() == 14);
    for (std::size_t i = 0; i < frames.size(); ++i) CHECK(std::abs(pred[i] - frames[i].y) == 2.0);
}

TEST_CASE("property: AR on a constant gap series returns the constant at every order") {
    std::vector<double> gaps(30, 48.0);
    for (int d = 0; d <= 1; ++d)
        for (int p = 1; p <= 7; ++p) CHECK(std::abs(ar_predict_next_gap(ar_fit_order(gaps, p, d), gaps) - 48.0) < 1e-6);
    CHECK(std::abs(ar_predict_next_gap(ar_fit(gaps), gaps) - 48.0) < 1e-6);
}

TEST_CASE("AR on the differenced series tracks a two-cycle") {
    std::vector<double> gaps;
    for (int i = 0; i < 30; ++i) gaps.push_back(48.0 + (i % 2 ? 2.0 : -2.0));
    auto m = ar_fit_order(std::vector<double>(gaps.begin(), gaps.begin() + 20), 1, 1);
    CHECK(std::abs(m.coef[1] + 1.0) < 1e-9);
    for (std::size_t n = 20; n < gaps.size(); ++n) {
        std::vector<double> history(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(n));
        CHECK(std::abs(ar_predict_next_gap(m, history) - gaps[n]) < 1e-6);
    }
    auto chosen = ar_fit(gaps);
    CHECK(std::abs(ar_predict_next_gap(chosen, gaps) - 46.0) < 1e-6);
}

TEST_CASE("AR needs twice the maximum order") {
    std::vector<double> gaps(13, 48.0);
    CHECK_THROWS_AS(ar_fit(gaps), InsufficientHistory);
    ArBounds small{3, 1};
    CHECK_NOTHROW(ar_fit(gaps, small));
}

TEST_CASE("AR rolls forward past the cutoff") {
    auto log = daily_log(21, [](int) { return regular_day(); });
    ArPredictor ar{"take_medicine", 30, ar_fit(gap_series(log, "take_medicine", 30))};
    // Three days after the last dose.
    auto out = predict_at(ar, log, make_timestamp(2019, 7, 24, 12, 0));
    CHECK(*out.timestamp == make_timestamp(2019, 7, 25, 8, 0));
}

TEST_CASE("RMSE") {
    CHECK(evaluate_rmse({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(evaluate_rmse({3, -4}, {0, 0}) == doctest::Approx(3.5355339059327378).epsilon(1e-15));
    CHECK_THROWS_AS(evaluate_rmse({1}, {1, 2}), LengthMismatch);
    CHECK_THROWS_AS(evaluate_rmse({}, {}), LengthMismatch);
}

TEST_CASE("property: RMSE is permutation invariant and scales with the errors") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 10.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> p(20), t(20);
        for (int j = 0; j < 20; ++j) p[j] = n(rng), t[j] = n(rng);
        const double base = evaluate_rmse(p, t);
        std::vector<std::size_t> perm(20);
        for (std::size_t j = 0; j < 20; ++j) perm[j] = j;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> pp, tp, ps;
        for (auto j : perm) pp.push_back(p[j]), tp.push_back(t[j]);
        for (int j = 0; j < 20; ++j) ps.push_back(t[j] + 3.0 * (p[j] - t[j]));
        CHECK(evaluate_rmse(pp, tp) == doctest::Approx(base).epsilon(1e-12));
        CHECK(evaluate_rmse(ps, t) == doctest::Approx(3.0 * base).epsilon(1e-12));
    }
}

TEST_CASE("raw LSTM: needs 26 entries, loss falls, and a constant schedule is learned") {
    auto tiny = daily_log(3, [](int) { return regular_day(); });
    REQUIRE(tiny.entries.size() < 26);
    CHECK_THROWS_AS(raw_lstm_train(tiny, "take_medicine", {}), InsufficientHistory);

    auto log = daily_log(14, [](int) { return regular_day(); });
    TrainConfig cfg;
    cfg.hidden = 16;
    cfg.patience = 100;
    cfg.max_epochs = 5;
    auto m = raw_lstm_train(log, "take_medicine", cfg);
    REQUIRE(m.curve.train.size() == 5);
    for (std::size_t e = 1; e < 5; ++e) CHECK(m.curve.train[e] < m.curve.train[e - 1]);

    cfg.max_epochs = 200;
    cfg.learning_rate = 1e-2;
    auto until = make_timestamp(2019, 7, 12);
    m = raw_lstm_train(log, "take_medicine", cfg, until);
    for (int h : {0, 7 * 60, 9 * 60, 13 * 60, 20 * 60}) {
        Timestamp now = until + 24 * 60 + h;
        auto out = raw_lstm_predict(m, log, now, 30);
        Timestamp truth = make_timestamp(2019, 7, 13, 8, 0) + (h >= 8 * 60 ? kMinutesPerDay : 0);
        CHECK(std::abs(static_cast<double>(*out.timestamp - truth)) / 30.0 <= 1.0);
    }
}

TEST_CASE("HERBERT overfits a single frame") {
    auto log = daily_log(9, [](int) { return regular_day(); });
    auto bv = basis_vectorize(log, 30);
    auto frames = make_frames(bv, "take_medicine", 48);
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.max_epochs = 300;
    cfg.learning_rate = 1e-2;
    cfg.patience = 300;
    auto f = frames[5];
    auto m = herbert_train({{&bv, f}}, cfg);
    CHECK(std::abs(herbert_predict_frame(m, bv, f).windows - f.y) < 0.01);
}

TEST_CASE("HERBERT training is seeded and deterministic") {
    auto log = daily_log(9, [](int d) { return regular_day(8 * 60 + 30 * (d % 3)); });
    auto bv = basis_vectorize(log, 30);
    auto frames = make_frames(bv, "take_medicine", 48, 3);
    std::vector<FrameSample> samples;
    for (const auto& f : frames) samples.push_back({&bv, f});
    auto cfg = small_config();
    cfg.max_epochs = 5;
    auto a = herbert_train(samples, cfg);
    auto b = herbert_train(samples, cfg);
    CHECK(a.curve.train == b.curve.train);
    CHECK(a.curve.validation == b.curve.validation);
    CHECK(a.net.params() == b.net.params());
    CHECK(herbert_predict(a, samples) == herbert_predict(a, samples));

    cfg.seed = 2;
    CHECK(herbert_train(samples, cfg).curve.train != a.curve.train);
}

TEST_CASE("HERBERT prediction contracts") {
    auto log = daily_log(5, [](int) { return regular_day(); });
    auto bv = basis_vectorize(log, 30);
    auto frames = make_frames(bv, "take_medicine", 48, 4);
    std::vector<FrameSample> samples;
    for (const auto& f : frames) samples.push_back({&bv, f});
    auto cfg = small_config();
    cfg.max_epochs = 2;
    auto m = herbert_train(samples, cfg);

    auto zero = herbert_predict(m, Eigen::MatrixXd::Zero(48, static_cast<Eigen::Index>(m.behaviors.size())));
    CHECK(std::isfinite(zero.windows));
    CHECK_FALSE(zero.timestamp.has_value());
    CHECK_THROWS_AS(herbert_predict(m, Eigen::MatrixXd::Zero(47, 4)), ShapeMismatch);
    CHECK_THROWS_AS(herbert_predict(m, Eigen::MatrixXd::Zero(48, 3)), ShapeMismatch);
    auto longer = make_frames(bv, "take_medicine", 96, 4);
    CHECK_THROWS_AS(herbert_predict(m, {{&bv, longer.front()}}), ShapeMismatch);
    CHECK_THROWS_AS(herbert_train({}, cfg), EmptyTrainingSet);

    auto out = herbert_predict_frame(m, bv, frames[2]);
    CHECK(*out.timestamp == frame_reference(bv, frames[2]) + std::llround(out.windows) * 30);

    // Predicting at a frame cutoff sees exactly the frame's context.
    auto at = predict_at(m, log, frame_cutoff(bv, frames[2]));
    CHECK(at.windows == out.windows);
    CHECK(*at.timestamp == *out.timestamp);
}

TEST_CASE("learning rate blow-up is reported") {
    auto log = daily_log(5, [](int) { return regular_day(); });
    auto bv = basis_vectorize(log, 30);
    std::vector<FrameSample> samples;
    for (const auto& f : make_frames(bv, "take_medicine", 48, 4)) samples.push_back({&bv, f});
    auto cfg = small_config();
    cfg.learning_rate = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(herbert_train(samples, cfg), DivergedLoss);
}

TEST_CASE("HERBERT learns a constant schedule") {
    auto log = daily_log(21, [](int) { return regular_day(); });
    PredictorConfig cfg;
    cfg.kind = PredictorKind::herbert;
    // Coprime with the 48 windows of a day, so every phase is trained.
    cfg.stride = 5;
    cfg.train.hidden = 16;
    cfg.train.learning_rate = 1e-2;
    cfg.train.pooling = nn::Pooling::last;
    cfg.train.max_epochs = 80;
    cfg.train.patience = 80;
    auto bv = basis_vectorize(log, 30);
    auto frames = make_frames(bv, "take_medicine", context_windows(1, 30));
    auto split = split_by_fraction(frames, 0.75);
    auto until = frame_cutoff(bv, split.test.front());
    auto m = train_predictor(log, "take_medicine", cfg, until);
    CHECK(evaluate_rmse(predict_frames(m, log, bv, split.test), truths(split.test)) < 2.0);
}

TEST_CASE("model files round trip every kind") {
    auto log = daily_log(28, [](int d) { return regular_day(8 * 60 + 30 * (d % 2)); });
    auto until = make_timestamp(2019, 7, 22);
    for (auto kind : {PredictorKind::prior, PredictorKind::ar, PredictorKind::lstm, PredictorKind::herbert}) {
        PredictorConfig cfg;
        cfg.kind = kind;
        cfg.weeks = 1;
        cfg.stride = 7;
        cfg.train = small_config();
        cfg.train.max_epochs = 2;
        auto m = train_predictor(log, "take_medicine", cfg, until);
        auto bytes = encode_model(m);
        auto back = decode_model(bytes);
        CHECK(model_kind(back) == kind);
        CHECK(encode_model(back) == bytes);
        if (kind != PredictorKind::herbert) {
            auto now = make_timestamp(2019, 7, 18, 7, 0);
            CHECK(*predict_at(back, log, now).timestamp == *predict_at(m, log, now).timestamp);
        }
    }
    CHECK_THROWS_AS(decode_model("ACTSAFE-MODEL 2\n"), ModelFormatError);
    CHECK_THROWS_AS(decode_model("ACTSAFE-MODEL 1\nkind=ar\ntarget=x\nx=30\np=1\nd=0\naic=0\nparams 2\nabc"),
                    ModelFormatError);
}
