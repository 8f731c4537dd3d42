// Inequality oracles over raw minute values, written without the rule code,
// and the exhaustive 48-hour grid comparison built on them.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "actsafe/violation.hpp"

namespace actsafe::testing {

inline std::int64_t minute_of_day(std::int64_t m) { return ((m % 1440) + 1440) % 1440; }

inline bool oracle_consistency_violated(std::int64_t med, int reference, int window) {
    std::int64_t d = minute_of_day(med) - reference;
    if (d < 0) d = -d;
    if (d > 720) d = 1440 - d;
    return d > window;
}

inline bool oracle_empty_stomach_violated(std::int64_t med, std::int64_t act, int gap) {
    const bool before = act - gap <= med && med < act;
    const bool after = act < med && med <= act + gap;
    return before || after;
}

inline bool oracle_frequency_violated(std::int64_t a, std::int64_t b, std::int64_t period_start, int n) {
    int count = 0;
    for (auto t : {a, b}) count += (t >= period_start && t < period_start + 1440) ? 1 : 0;
    return count != n;
}

inline bool oracle_interval_violated(std::int64_t a, std::int64_t b, int min_gap) {
    return (a > b ? a - b : b - a) < min_gap;
}

inline bool oracle_before_clock_violated(std::int64_t med, int t) { return minute_of_day(med) >= t; }
inline bool oracle_after_clock_violated(std::int64_t med, int t) { return minute_of_day(med) <= t; }

inline bool oracle_daypart_violated(std::int64_t med, int first, int last) {
    const auto c = minute_of_day(med);
    return c < first || c > last;
}

struct GridRule {
    std::string name;
    Mtc mtc;
    // Behaviors given the grid's second point: the medication itself (second intake) or an act.
    std::string second;
    std::function<bool(std::int64_t med, std::int64_t other)> oracle;
};

/// The fixture rules checked on the grid.
inline std::vector<GridRule> grid_rules() {
    const int ref = 8 * 60;
    auto two_hours = [](DependencyPrep p) { return DefinitiveDependency{2, TimeUnit::hour, p, "eating"}; };
    return {
        {"consistency +-15 min", Consistency{OccurrencePrep::at, ClockTime::same_time(), TimeUnit::day}, "eating",
         [=](std::int64_t m, std::int64_t) { return oracle_consistency_violated(m, ref, 15); }},
        {"empty-stomach 2 h pair",
         Mtc::compound({two_hours(DependencyPrep::before), two_hours(DependencyPrep::after)}), "eating",
         [](std::int64_t m, std::int64_t a) { return oracle_empty_stomach_violated(m, a, 120); }},
        {"V2 twice a day", Frequency{2, TimeUnit::day}, "take_medicine",
         [](std::int64_t m, std::int64_t a) { return oracle_frequency_violated(m, a, 0, 2); }},
        {"V2 once a day", Frequency{1, TimeUnit::day}, "take_medicine",
         [](std::int64_t m, std::int64_t a) { return oracle_frequency_violated(m, a, 0, 1); }},
        {"V3 6 hours apart", Interval{6, TimeUnit::hour, IntervalPrep::apart}, "take_medicine",
         [](std::int64_t m, std::int64_t a) { return oracle_interval_violated(m, a, 360); }},
        {"V5 before 09:00", TimeDependency{DependencyPrep::before, ClockTime::at(9 * 60)}, "eating",
         [](std::int64_t m, std::int64_t) { return oracle_before_clock_violated(m, 9 * 60); }},
        {"V5 after 21:00", TimeDependency{DependencyPrep::after, ClockTime::at(21 * 60)}, "eating",
         [](std::int64_t m, std::int64_t) { return oracle_after_clock_violated(m, 21 * 60); }},
        {"V7 morning", TimeOfDay{OccurrencePrep::in, DayPart::morning}, "eating",
         [](std::int64_t m, std::int64_t) { return oracle_daypart_violated(m, 300, 719); }},
        {"V7 noon", TimeOfDay{OccurrencePrep::at, DayPart::noon}, "eating",
         [](std::int64_t m, std::int64_t) { return oracle_daypart_violated(m, 720, 839); }},
        {"V7 evening", TimeOfDay{OccurrencePrep::in, DayPart::evening}, "eating",
         [](std::int64_t m, std::int64_t) { return oracle_daypart_violated(m, 1020, 1319); }},
    };
}

struct GridResult {
    std::string name;
    std::size_t points = 0;
    std::size_t agreements = 0;
};

/// Every (med, other) pair on a 5-minute grid across 48 hours from 2019-07-01T00:00.
inline std::vector<GridResult> run_violation_grid() {
    const Timestamp origin = make_timestamp(2019, 7, 1);
    RuleContext ctx;
    ctx.reference_clock = 8 * 60;
    std::vector<GridResult> out;
    for (const auto& rule : grid_rules()) {
        GridResult r{rule.name, 0, 0};
        for (std::int64_t m = 0; m < 2 * 1440; m += 5)
            for (std::int64_t o = 0; o < 2 * 1440; o += 5) {
                FrameTimes f;
                f.start = origin;
                f.occurrences["take_medicine"].push_back(origin + m);
                f.occurrences[rule.second].push_back(origin + o);
                const bool engine = evaluate_rule(rule.mtc, f, ctx) == Outcome::violation;
                ++r.points;
                r.agreements += engine == rule.oracle(m, o) ? 1 : 0;
            }
        out.push_back(r);
    }
    return out;
}

}  // namespace actsafe::testing
