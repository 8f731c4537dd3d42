#include <doctest.h>

#include <random>

#include "actsafe/error.hpp"
#include "actsafe/violation.hpp"
#include "support/violation_oracle.hpp"

using namespace actsafe;

namespace {

Timestamp at(int day, int hour, int minute = 0) { return make_timestamp(2019, 7, 1 + day, hour, minute); }

const DefinitiveDependency kTwoHoursBefore{2, TimeUnit::hour, DependencyPrep::before, "eating"};
const DefinitiveDependency kTwoHoursAfter{2, TimeUnit::hour, DependencyPrep::after, "eating"};

Mtc empty_stomach() { return Mtc::compound({kTwoHoursBefore, kTwoHoursAfter}); }

FrameTimes frame(std::vector<Timestamp> meds, std::optional<std::vector<Timestamp>> meals = std::vector<Timestamp>{}) {
    FrameTimes f;
    f.start = at(0, 0);
    f.occurrences["take_medicine"] = std::move(meds);
    if (meals) f.occurrences["eating"] = std::move(*meals);
    return f;
}

}  // namespace

TEST_CASE("consistency examples") {
    CHECK(check_consistency(at(0, 8, 20), 8 * 60, 15) == Outcome::violation);
    CHECK(check_consistency(at(0, 8, 15), 8 * 60, 15) == Outcome::ok);
    CHECK(check_consistency(at(0, 23, 58), 5, 15) == Outcome::ok);
}

TEST_CASE("definitive dependency examples") {
    CHECK(check_definitive_dependency(kTwoHoursBefore, at(0, 8, 30), at(0, 7, 30)) == Outcome::violation);
    CHECK(check_definitive_dependency(kTwoHoursBefore, at(0, 8, 30), at(0, 6, 0)) == Outcome::ok);
    CHECK(check_definitive_dependency(kTwoHoursAfter, at(0, 8, 0), at(0, 9, 0)) == Outcome::violation);
    // Window edges: [act - g, act) and (act, act + g].
    CHECK(check_definitive_dependency(kTwoHoursBefore, at(0, 8, 30), at(0, 6, 30)) == Outcome::violation);
    CHECK(check_definitive_dependency(kTwoHoursBefore, at(0, 8, 30), at(0, 8, 30)) == Outcome::ok);
    CHECK(check_definitive_dependency(kTwoHoursAfter, at(0, 8, 0), at(0, 10, 0)) == Outcome::violation);
    CHECK(check_definitive_dependency(kTwoHoursAfter, at(0, 8, 0), at(0, 8, 0)) == Outcome::ok);
    CHECK(check_definitive_dependency(kTwoHoursBefore, at(0, 8, 30), at(0, 7, 30), DependencyPolarity::require) ==
          Outcome::ok);
}

TEST_CASE("frequency, interval, time of day and time dependency examples") {
    std::vector<Timestamp> twice{at(0, 8), at(0, 20)};
    CHECK(check_frequency({2, TimeUnit::day}, twice, at(0, 0)) == Outcome::ok);
    CHECK(check_frequency({2, TimeUnit::day}, std::vector<Timestamp>{at(0, 8)}, at(0, 0)) == Outcome::violation);
    CHECK(check_frequency({1, TimeUnit::day}, std::vector<Timestamp>{}, at(0, 0)) == Outcome::violation);

    std::vector<Timestamp> gaps{at(0, 6), at(0, 13), at(0, 18)};  // 7 h, then 5 h
    CHECK(check_interval({6, TimeUnit::hour, IntervalPrep::apart}, gaps) == Outcome::violation);
    CHECK(check_interval({4, TimeUnit::hour, IntervalPrep::apart}, gaps) == Outcome::ok);

    TimeDependency before_nine{DependencyPrep::before, ClockTime::at(9 * 60)};
    CHECK(check_time_dependency(before_nine, at(0, 9, 30), std::nullopt) == Outcome::violation);
    CHECK(check_time_dependency(before_nine, at(0, 8, 59), std::nullopt) == Outcome::ok);
    CHECK(check_time_dependency({DependencyPrep::before, ClockTime::same_time()}, at(0, 8), std::nullopt) ==
          Outcome::indeterminate);

    auto bounds = DaypartBounds::defaults();
    CHECK(check_time_of_day({OccurrencePrep::in, DayPart::morning}, at(0, 11, 59), bounds) == Outcome::ok);
    CHECK(check_time_of_day({OccurrencePrep::in, DayPart::morning}, at(0, 12, 0), bounds) == Outcome::violation);
    bounds.ranges.erase(DayPart::noon);
    CHECK_THROWS_AS(check_time_of_day({OccurrencePrep::at, DayPart::noon}, at(0, 12), bounds), UnconfiguredDaypart);

    DaypartBounds night;
    night.ranges[DayPart::evening] = {22 * 60, 2 * 60};
    CHECK(check_time_of_day({OccurrencePrep::in, DayPart::evening}, at(0, 1), night) == Outcome::ok);
    CHECK(check_time_of_day({OccurrencePrep::in, DayPart::evening}, at(0, 3), night) == Outcome::violation);
}

TEST_CASE("imprecise dependency orders against the nearest act") {
    ImpreciseDependency after_eating{DependencyPrep::after, "eating"};
    RuleContext ctx;
    CHECK(evaluate_rule(after_eating, frame({at(0, 9)}, std::vector{at(0, 8, 30), at(0, 18)}), ctx) == Outcome::ok);
    CHECK(evaluate_rule(after_eating, frame({at(0, 17, 30)}, std::vector{at(0, 8, 30), at(0, 18)}), ctx) ==
          Outcome::violation);
}

TEST_CASE("per-intake OR and indeterminate frames") {
    RuleContext ctx;
    ctx.reference_clock = 8 * 60;
    Consistency same{OccurrencePrep::at, ClockTime::same_time(), TimeUnit::day};
    CHECK(evaluate_rule(same, frame({at(0, 8), at(0, 20)}), ctx) == Outcome::violation);
    CHECK(evaluate_rule(same, frame({at(0, 8), at(0, 8, 10)}), ctx) == Outcome::ok);
    CHECK(evaluate_rule(same, frame({}), ctx) == Outcome::indeterminate);
    CHECK(evaluate_rule(Frequency{1, TimeUnit::day}, frame({}), ctx) == Outcome::violation);

    // Eating unlabeled, or labeled but absent from the horizon.
    CHECK(evaluate_rule(empty_stomach(), frame({at(0, 8)}, std::nullopt), ctx) == Outcome::indeterminate);
    CHECK(evaluate_rule(empty_stomach(), frame({at(0, 8)}), ctx) == Outcome::indeterminate);
    // A second meal can violate even when the nearest one does not.
    CHECK(evaluate_rule(kTwoHoursAfter, frame({at(0, 10)}, std::vector{at(0, 8, 30), at(0, 10, 45)}), ctx) ==
          Outcome::violation);

    RuleContext no_ref;
    CHECK(evaluate_rule(same, frame({at(0, 8)}), no_ref) == Outcome::indeterminate);
    Consistency at_nine{OccurrencePrep::at, ClockTime::at(9 * 60), TimeUnit::day};
    CHECK(evaluate_rule(at_nine, frame({at(0, 9, 10)}), no_ref) == Outcome::ok);
}

TEST_CASE("negation inverts unless configured off") {
    RuleContext ctx;
    auto no_food_before = Mtc::negated(ImpreciseDependency{DependencyPrep::before, "eating"});
    auto f = frame({at(0, 7)}, std::vector{at(0, 8)});
    CHECK(evaluate_rule(no_food_before, f, ctx) == Outcome::violation);
    CHECK(evaluate_rule(no_food_before, frame({at(0, 9)}, std::vector{at(0, 8)}), ctx) == Outcome::ok);
    ctx.negation = NegationMode::ignore;
    CHECK(evaluate_rule(no_food_before, f, ctx) == Outcome::ok);
}

TEST_CASE("property: every rule agrees with the inequality oracle on the 48-hour grid") {
    for (const auto& r : testing::run_violation_grid()) {
        INFO(r.name);
        CHECK(r.points == 576u * 576u);
        CHECK(r.agreements == r.points);
    }
}

TEST_CASE("property: widening the consistency window never creates a violation") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> clock(0, 1439), window(1, 180);
    for (int i = 0; i < 5000; ++i) {
        Timestamp med = at(0, 0) + clock(rng);
        int ref = clock(rng), w = window(rng);
        if (check_consistency(med, ref, w) == Outcome::ok) REQUIRE(check_consistency(med, ref, w + window(rng)) == Outcome::ok);
    }
}

TEST_CASE("property: the empty-stomach pair is translation invariant") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> minute(0, 2879), shift(-5000, 5000);
    RuleContext ctx;
    for (int i = 0; i < 5000; ++i) {
        Timestamp med = at(0, 0) + minute(rng), act = at(0, 0) + minute(rng);
        auto base = evaluate_rule(empty_stomach(), frame({med}, std::vector{act}), ctx);
        int s = shift(rng);
        REQUIRE(evaluate_rule(empty_stomach(), frame({med + s}, std::vector{act + s}), ctx) == base);
    }
}

TEST_CASE("metrics: agreement, accounting, and the harmonic F1") {
    RuleContext ctx;
    ctx.reference_clock = 8 * 60;
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> clock(6 * 60, 10 * 60);
    std::bernoulli_distribution skip(0.1), no_meals(0.1);
    std::vector<EvaluationFrame> frames;
    for (int d = 0; d < 200; ++d) {
        EvaluationFrame f;
        f.id = "day" + std::to_string(d);
        for (auto* side : {&f.predicted, &f.actual}) {
            side->start = at(d, 0);
            side->occurrences["take_medicine"] = skip(rng) ? std::vector<Timestamp>{} : std::vector{at(d, 0) + clock(rng)};
            if (!no_meals(rng)) side->occurrences["eating"] = {at(d, 0) + clock(rng)};
        }
        frames.push_back(f);
    }
    std::vector<Mtc> mtcs{Consistency{OccurrencePrep::at, ClockTime::same_time(), TimeUnit::day}, empty_stomach()};
    auto verdicts = predict_violations(frames, mtcs, ctx);
    REQUIRE(verdicts.size() == 400);
    auto metrics = evaluate_violations(verdicts);
    REQUIRE(metrics.size() == 2);
    for (const auto& m : metrics) {
        CHECK(m.evaluated + m.excluded == 200);
        CHECK(m.support_ok + m.support_violation == m.evaluated);
        CHECK(std::abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) < 1e-12);
        CHECK(m.recall == doctest::Approx(m.accuracy));
    }
    CHECK(metrics[0].type == "V1");
    CHECK(metrics[1].type == "V6");

    // Identical sides: perfect scores.
    for (auto& f : frames) f.predicted = f.actual;
    for (const auto& m : evaluate_violations(predict_violations(frames, mtcs, ctx))) {
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    CHECK_THROWS_AS(predict_violations(frames, mtcs, ctx, true), MissingBehavior);
}

TEST_CASE("weighted metrics by hand") {
    // Actual: 3 violations, 1 ok. Predicted: violation, violation, ok, ok.
    std::vector<ViolationVerdict> v;
    const Mtc m = Frequency{1, TimeUnit::day};
    auto add = [&](Outcome p, Outcome a) { v.push_back({m, "f", p, a, {}}); };
    add(Outcome::violation, Outcome::violation);
    add(Outcome::violation, Outcome::violation);
    add(Outcome::ok, Outcome::violation);
    add(Outcome::ok, Outcome::ok);
    add(Outcome::indeterminate, Outcome::ok);
    auto r = evaluate_violations(v).at(0);
    // Violation class: P = 1, R = 2/3, support 3. Ok class: P = 1/2, R = 1, support 1.
    CHECK(r.precision == doctest::Approx((3 * 1.0 + 1 * 0.5) / 4));
    CHECK(r.recall == doctest::Approx((3 * (2.0 / 3) + 1 * 1.0) / 4));
    CHECK(r.excluded == 1);
    CHECK(r.type == "V2");
}

TEST_CASE("median clock wraps midnight") {
    std::vector<Timestamp> t{at(0, 23, 50), at(1, 0, 10), at(2, 0, 0)};
    CHECK(median_clock(t) == 0);
    std::vector<Timestamp> u{at(0, 8), at(1, 9), at(2, 8, 30)};
    CHECK(median_clock(u) == 8 * 60 + 30);
    CHECK_THROWS_AS(median_clock(std::vector<Timestamp>{}), EmptySchedule);
}
