#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace actsafe {

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kMinutesPerWeek = 7 * kMinutesPerDay;

/// Minute-precision instant: minutes since 1970-01-01T00:00 in the single
/// fixed UTC offset chosen at ingestion. No timezone is stored; every
/// timestamp in a run shares the same offset, so window arithmetic is uniform.
struct Timestamp {
    std::int64_t minutes = 0;

    constexpr auto operator<=>(const Timestamp&) const = default;

    constexpr Timestamp operator+(std::int64_t delta) const { return {minutes + delta}; }
    constexpr Timestamp operator-(std::int64_t delta) const { return {minutes - delta}; }
    constexpr std::int64_t operator-(Timestamp other) const { return minutes - other.minutes; }
};

/// Minutes past local midnight, in [0, 1440).
int clock_of(Timestamp t);

/// Local midnight of the day containing t.
Timestamp day_start(Timestamp t);

/// Distance between two clock times on the 24-hour circle; result in [0, 720].
int circular_clock_distance(int clock_a, int clock_b);

Timestamp make_timestamp(int year, int month, int day, int hour = 0, int minute = 0);

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z|±HH:MM]" (a space may replace 'T').
/// Seconds are truncated. A timestamp carrying an explicit offset is converted
/// into `ingest_offset_minutes`; a naive one is taken to already be in it.
std::optional<Timestamp> parse_iso8601(std::string_view text, int ingest_offset_minutes = 0);

/// Parses the legacy textual form "Tue Jul 16 2019 00:21:43" (seconds optional, truncated).
std::optional<Timestamp> parse_legacy(std::string_view text);

/// Tries ISO-8601 first, then the legacy form.
std::optional<Timestamp> parse_timestamp(std::string_view text, int ingest_offset_minutes = 0);

/// "YYYY-MM-DDTHH:MM".
std::string format_iso8601(Timestamp t);

/// "HH:MM" for a minute-of-day value.
std::string format_clock(int clock_minutes);

/// Parses "HH:MM" (24h) into minutes past midnight.
std::optional<int> parse_clock(std::string_view text);

}  // namespace actsafe
