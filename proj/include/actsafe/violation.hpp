#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actsafe/mtc.hpp"
#include "actsafe/rhb.hpp"
#include "actsafe/time.hpp"

namespace actsafe {

enum class Outcome { ok, violation, indeterminate };

std::string_view to_string(Outcome o);
std::optional<Outcome> outcome_from(std::string_view text);

/// Inclusive clock ranges [first, last] in minutes past midnight; a range with
/// first > last wraps midnight.
struct DaypartBounds {
    std::map<DayPart, std::pair<int, int>> ranges;

    /// morning 05:00-11:59, noon 12:00-13:59, evening 17:00-21:59.
    static DaypartBounds defaults();
    /// Throws UnconfiguredDaypart.
    const std::pair<int, int>& of(DayPart d) const;
};

/// forbid: V1 is violated when the intake falls inside the gap window.
/// require: V1 is violated when it does not.
enum class DependencyPolarity { forbid, require };

/// invert: a negated constraint is violated exactly when its inner one holds.
/// ignore: negated constraints are always ok.
enum class NegationMode { invert, ignore };

struct RuleContext {
    int consistency_window = 15;  // minutes either side of the reference
    std::optional<int> reference_clock;  // for "the same time" constraints
    DaypartBounds dayparts = DaypartBounds::defaults();
    DependencyPolarity polarity = DependencyPolarity::forbid;
    NegationMode negation = NegationMode::invert;
    std::string medication = "take_medicine";
};

// ---------------------------------------------------------------------------
// Single rules
// ---------------------------------------------------------------------------

/// ok iff the circular clock distance between med and reference is <= window.
Outcome check_consistency(Timestamp med, int reference_clock, int window);

/// before: window [act - g, act); after: window (act, act + g].
Outcome check_definitive_dependency(const DefinitiveDependency& c, Timestamp act, Timestamp med,
                                    DependencyPolarity polarity = DependencyPolarity::forbid);

/// Violation iff the intakes in [period_start, period_start + u) number other than n.
Outcome check_frequency(const Frequency& c, std::span<const Timestamp> intakes, Timestamp period_start);

/// Violation iff two consecutive intakes are less than n*u apart.
Outcome check_interval(const Interval& c, std::span<const Timestamp> intakes);

/// Violation iff the intake's clock lies outside the daypart range.
Outcome check_time_of_day(const TimeOfDay& c, Timestamp med, const DaypartBounds& bounds);

/// before t: violation iff clock(med) >= t; after t: violation iff clock(med) <= t.
/// A "same time" constraint uses `reference_clock` (indeterminate without one).
Outcome check_time_dependency(const TimeDependency& c, Timestamp med, std::optional<int> reference_clock);

/// before: violation iff med >= act; after: violation iff med <= act.
Outcome check_imprecise_dependency(const ImpreciseDependency& c, Timestamp act, Timestamp med);

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

/// Occurrence starts per behavior inside one evaluation horizon beginning at
/// `start`. A behavior missing from the map is unlabeled; an empty list means
/// labeled but absent from the horizon.
struct FrameTimes {
    Timestamp start;
    std::map<std::string, std::vector<Timestamp>, std::less<>> occurrences;
};

/// Starts in [start, start + horizon) of each listed behavior; every listed
/// behavior is labeled, so it maps to a possibly empty list.
FrameTimes frame_from_log(const RhbLog& log, Timestamp start, int horizon_minutes,
                          const std::vector<std::string>& behaviors);

/// Behaviors a constraint reads: the medication plus any act.
std::vector<std::string> required_behaviors(const Mtc& m, const RuleContext& ctx);

/// Applies the matching rule to every medication intake of the frame and ORs
/// the results; compounds OR their parts. V1 looks at every act occurrence in
/// the frame (an intake is inside the gap window if any occurrence puts it
/// there); V4 orders each intake against its nearest act occurrence (earlier
/// one on ties). Indeterminate when a required behavior is unlabeled, or when a
/// rule needing an intake or an act finds none in the horizon.
Outcome evaluate_rule(const Mtc& m, const FrameTimes& frame, const RuleContext& ctx, std::string* explanation = nullptr);

struct EvaluationFrame {
    std::string id;
    FrameTimes predicted;
    FrameTimes actual;
};

struct ViolationVerdict {
    Mtc mtc;
    std::string frame_id;
    Outcome predicted = Outcome::indeterminate;
    Outcome actual = Outcome::indeterminate;
    std::string explanation;
};

/// Every (frame, constraint) pair. With `strict`, a frame lacking a required
/// behavior on either side raises MissingBehavior instead of yielding an
/// indeterminate verdict.
std::vector<ViolationVerdict> predict_violations(const std::vector<EvaluationFrame>& frames, const std::vector<Mtc>& mtcs,
                                                 const RuleContext& ctx, bool strict = false);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Type label used to group verdicts: "V1".."V7"; a compound whose parts share
/// one type takes that type, otherwise "COMPOUND"; "NEGATED".
std::string type_label(const Mtc& m);

struct ViolationMetrics {
    std::string type;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;  // indeterminate on either side
    std::size_t support_violation = 0;
    std::size_t support_ok = 0;
    double precision = 0.0;  // support-weighted over both classes
    double recall = 0.0;
    double f1 = 0.0;  // 2PR / (P + R) of the two values above
    double accuracy = 0.0;
};

/// Actual verdicts are ground truth. One row per type label, sorted.
std::vector<ViolationMetrics> evaluate_violations(const std::vector<ViolationVerdict>& verdicts);

/// Clock minimizing the summed circular distance to the intakes (smallest on ties). Throws EmptySchedule.
int median_clock(std::span<const Timestamp> intakes);

/// Tab-separated verdict table followed by the metrics table.
std::string format_violation_report(const std::vector<ViolationVerdict>& verdicts,
                                    const std::vector<ViolationMetrics>& metrics);

}  // namespace actsafe
