#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "actsafe/vocabulary.hpp"

namespace actsafe {

// ---------------------------------------------------------------------------
// Grammar terminals
// ---------------------------------------------------------------------------

enum class TimeUnit { minute, hour, day, week };
enum class DependencyPrep { before, after };
enum class IntervalPrep { within, for_, apart };
enum class OccurrencePrep { at, in };
enum class DayPart { morning, noon, evening };

std::string_view to_string(TimeUnit u);
std::string_view to_string(DependencyPrep p);
std::string_view to_string(IntervalPrep p);
std::string_view to_string(OccurrencePrep p);
std::string_view to_string(DayPart d);

/// Accepts singular, plural and common abbreviations ("hrs", "mins").
std::optional<TimeUnit> time_unit_from_word(std::string_view word);
std::optional<DependencyPrep> dependency_prep_from(std::string_view word);
std::optional<IntervalPrep> interval_prep_from(std::string_view word);
std::optional<OccurrencePrep> occurrence_prep_from(std::string_view word);
std::optional<DayPart> day_part_from(std::string_view word);

/// minute=1, hour=60, day=1440, week=10080, times n.
std::int64_t duration_minutes(std::int64_t n, TimeUnit u);

/// Terminal t: a clock time (minutes past midnight) or the sentinel "the same time".
class ClockTime {
public:
    constexpr ClockTime() = default;
    static constexpr ClockTime same_time() { return ClockTime(); }
    /// Throws std::invalid_argument outside [0, 1440).
    static ClockTime at(int minutes_past_midnight);

    constexpr bool is_same_time() const { return minutes_ < 0; }
    /// Minutes past midnight; -1 for the sentinel.
    constexpr int minutes() const { return minutes_; }

    constexpr auto operator<=>(const ClockTime&) const = default;

    /// "HH:MM" or "same_time".
    std::string to_record() const;
    static std::optional<ClockTime> from_record(std::string_view text);

private:
    int minutes_ = -1;
};

// ---------------------------------------------------------------------------
// Constraint variables
// ---------------------------------------------------------------------------

/// V1: n.u.dp.act ("30 minutes before a meal")
struct DefinitiveDependency {
    int n = 1;
    TimeUnit unit = TimeUnit::minute;
    DependencyPrep prep = DependencyPrep::before;
    std::string act;
    auto operator<=>(const DefinitiveDependency&) const = default;
};

/// V2: n times in a u
struct Frequency {
    int n = 1;
    TimeUnit unit = TimeUnit::day;
    auto operator<=>(const Frequency&) const = default;
};

/// V3: n.u.ip
struct Interval {
    int n = 1;
    TimeUnit unit = TimeUnit::hour;
    IntervalPrep prep = IntervalPrep::apart;
    auto operator<=>(const Interval&) const = default;
};

/// V4: dp.act
struct ImpreciseDependency {
    DependencyPrep prep = DependencyPrep::before;
    std::string act;
    auto operator<=>(const ImpreciseDependency&) const = default;
};

/// V5: dp.t
struct TimeDependency {
    DependencyPrep prep = DependencyPrep::before;
    ClockTime time;
    auto operator<=>(const TimeDependency&) const = default;
};

/// V6: p.t each u
struct Consistency {
    OccurrencePrep prep = OccurrencePrep::at;
    ClockTime time;
    TimeUnit unit = TimeUnit::day;
    auto operator<=>(const Consistency&) const = default;
};

/// V7: p.d
struct TimeOfDay {
    OccurrencePrep prep = OccurrencePrep::in;
    DayPart part = DayPart::morning;
    auto operator<=>(const TimeOfDay&) const = default;
};

class Mtc;

struct Compound {
    std::vector<Mtc> parts;
};

struct Negated {
    std::shared_ptr<const Mtc> inner;
};

enum class MtcKind { v1, v2, v3, v4, v5, v6, v7, compound, negated };

/// "V1".."V7", "COMPOUND", "NEGATED".
std::string_view to_string(MtcKind k);
std::optional<MtcKind> mtc_kind_from(std::string_view tag);

/// A medical temporal constraint. Immutable value type; copies share the
/// (immutable) inner node of negations.
class Mtc {
public:
    using Variant = std::variant<DefinitiveDependency, Frequency, Interval, ImpreciseDependency, TimeDependency,
                                 Consistency, TimeOfDay, Compound, Negated>;

    /// Throws std::invalid_argument when a count is < 1, a negation is empty,
    /// or a compound is empty.
    Mtc(Variant value);  // NOLINT(google-explicit-constructor)

    template <typename T>
        requires(!std::is_same_v<std::decay_t<T>, Variant> && !std::is_same_v<std::decay_t<T>, Mtc> &&
                 std::is_constructible_v<Variant, T>)
    Mtc(T&& alternative)  // NOLINT(google-explicit-constructor)
        : Mtc(Variant(std::forward<T>(alternative))) {}

    static Mtc compound(std::vector<Mtc> parts);
    static Mtc negated(Mtc inner);

    MtcKind kind() const { return static_cast<MtcKind>(value_.index()); }
    const Variant& value() const { return value_; }

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&value_);
    }

    friend std::strong_ordering operator<=>(const Mtc& a, const Mtc& b);
    friend bool operator==(const Mtc& a, const Mtc& b) { return (a <=> b) == 0; }

private:
    Variant value_;
};

/// Human-readable form, e.g. "V1(2, hour, before, eating)".
std::string to_string(const Mtc& m);

struct CanonicalizeOptions {
    /// When set, an activity absent from the vocabulary raises UnknownActivity;
    /// otherwise it is kept in normalized form (lowercase, '_' for spaces).
    bool strict = false;
};

/// Maps activities through the vocabulary, flattens compounds, removes double
/// negation, and orders compound parts by variant tag then fields. Duplicate
/// compound parts collapse; a compound left with one part becomes that part.
Mtc canonicalize(const Mtc& raw, const ActivityVocabulary& vocab, CanonicalizeOptions options = {});

/// True when `m` already satisfies every canonical-form invariant.
bool is_canonical(const Mtc& m);

/// One-line constraint record (JSON object; `type` first, then variant fields).
std::string serialize(const Mtc& m);

/// Inverse of serialize. Throws MalformedRecord with a byte position.
Mtc deserialize(std::string_view text);

}  // namespace actsafe
