#include "actsafe/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace actsafe {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
    if (pos + digits > s.size()) return false;
    int value = 0;
    for (std::size_t i = 0; i < digits; ++i) {
        char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        value = value * 10 + (c - '0');
    }
    pos += digits;
    out = value;
    return true;
}

bool valid_date(int y, int m, int d) {
    using namespace std::chrono;
    return year_month_day{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}}.ok();
}

bool valid_time(int hh, int mm, int ss) {
    return hh >= 0 && hh < 24 && mm >= 0 && mm < 60 && ss >= 0 && ss < 61;
}

constexpr std::array<std::string_view, 12> kMonths = {"jan", "feb", "mar", "apr", "may", "jun",
                                                      "jul", "aug", "sep", "oct", "nov", "dec"};
constexpr std::array<std::string_view, 7> kWeekdays = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};

std::string lower3(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size() && i < 3; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    return out;
}

}  // namespace

int clock_of(Timestamp t) {
    auto r = t.minutes % kMinutesPerDay;
    if (r < 0) r += kMinutesPerDay;
    return static_cast<int>(r);
}

Timestamp day_start(Timestamp t) { return {floor_div(t.minutes, kMinutesPerDay) * kMinutesPerDay}; }

int circular_clock_distance(int clock_a, int clock_b) {
    int d = (clock_a - clock_b) % kMinutesPerDay;
    if (d < 0) d += kMinutesPerDay;
    return d > kMinutesPerDay / 2 ? kMinutesPerDay - d : d;
}

Timestamp make_timestamp(int year, int month, int day, int hour, int minute) {
    using namespace std::chrono;
    sys_days days{year_month_day{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                 std::chrono::day{static_cast<unsigned>(day)}}};
    return {static_cast<std::int64_t>(days.time_since_epoch().count()) * kMinutesPerDay + hour * 60 + minute};
}

std::optional<Timestamp> parse_iso8601(std::string_view s, int ingest_offset_minutes) {
    std::size_t pos = 0;
    int y, mo, d, hh, mm, ss = 0;
    if (!read_int(s, pos, 4, y) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
    if (!read_int(s, pos, 2, mo) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
    if (!read_int(s, pos, 2, d)) return std::nullopt;
    if (pos >= s.size() || (s[pos] != 'T' && s[pos] != ' ')) return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, hh) || pos >= s.size() || s[pos++] != ':') return std::nullopt;
    if (!read_int(s, pos, 2, mm)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
        ++pos;
        if (!read_int(s, pos, 2, ss)) return std::nullopt;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
    }
    std::optional<int> offset;
    if (pos < s.size()) {
        if (s[pos] == 'Z') {
            offset = 0;
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            int sign = s[pos] == '-' ? -1 : 1;
            ++pos;
            int oh, om = 0;
            if (!read_int(s, pos, 2, oh)) return std::nullopt;
            if (pos < s.size() && s[pos] == ':') ++pos;
            if (pos < s.size() && !read_int(s, pos, 2, om)) return std::nullopt;
            offset = sign * (oh * 60 + om);
        }
    }
    if (pos != s.size()) return std::nullopt;
    if (!valid_date(y, mo, d) || !valid_time(hh, mm, ss)) return std::nullopt;
    Timestamp t = make_timestamp(y, mo, d, hh, mm);
    if (offset) t = t - *offset + ingest_offset_minutes;
    return t;
}

std::optional<Timestamp> parse_legacy(std::string_view s) {
    // "Tue Jul 16 2019 00:21:43"
    auto next_field = [&](std::size_t& pos) -> std::string_view {
        while (pos < s.size() && s[pos] == ' ') ++pos;
        std::size_t start = pos;
        while (pos < s.size() && s[pos] != ' ') ++pos;
        return s.substr(start, pos - start);
    };
    std::size_t pos = 0;
    auto weekday = next_field(pos);
    auto mon = next_field(pos);
    auto day_text = next_field(pos);
    auto year_text = next_field(pos);
    auto time_text = next_field(pos);
    if (!next_field(pos).empty() || time_text.empty()) return std::nullopt;

    bool weekday_ok = false;
    for (auto w : kWeekdays) weekday_ok |= (weekday.size() >= 3 && lower3(weekday) == w);
    if (!weekday_ok) return std::nullopt;
    int month = 0;
    for (std::size_t i = 0; i < kMonths.size(); ++i)
        if (mon.size() >= 3 && lower3(mon) == kMonths[i]) month = static_cast<int>(i) + 1;
    if (month == 0) return std::nullopt;

    int d = 0, y = 0;
    if (std::from_chars(day_text.data(), day_text.data() + day_text.size(), d).ptr != day_text.data() + day_text.size())
        return std::nullopt;
    if (std::from_chars(year_text.data(), year_text.data() + year_text.size(), y).ptr !=
        year_text.data() + year_text.size())
        return std::nullopt;

    std::size_t tp = 0;
    int hh, mm, ss = 0;
    std::size_t hour_digits = (time_text.size() > 1 && time_text[1] == ':') ? 1 : 2;
    if (!read_int(time_text, tp, hour_digits, hh) || tp >= time_text.size() || time_text[tp++] != ':')
        return std::nullopt;
    if (!read_int(time_text, tp, 2, mm)) return std::nullopt;
    if (tp < time_text.size()) {
        if (time_text[tp++] != ':' || !read_int(time_text, tp, 2, ss) || tp != time_text.size())
            return std::nullopt;
    }
    if (!valid_date(y, month, d) || !valid_time(hh, mm, ss)) return std::nullopt;
    return make_timestamp(y, month, d, hh, mm);
}

std::optional<Timestamp> parse_timestamp(std::string_view text, int ingest_offset_minutes) {
    if (auto t = parse_iso8601(text, ingest_offset_minutes)) return t;
    return parse_legacy(text);
}

std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    auto days = floor_div(t.minutes, kMinutesPerDay);
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    int clock = clock_of(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), clock / 60, clock % 60);
    return buf;
}

std::string format_clock(int clock_minutes) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d", clock_minutes / 60, clock_minutes % 60);
    return buf;
}

std::optional<int> parse_clock(std::string_view text) {
    std::size_t pos = 0;
    int hh, mm;
    std::size_t hour_digits = (text.size() == 4) ? 1 : 2;
    if (!read_int(text, pos, hour_digits, hh) || pos >= text.size() || text[pos++] != ':') return std::nullopt;
    if (!read_int(text, pos, 2, mm) || pos != text.size()) return std::nullopt;
    if (hh > 23 || mm > 59) return std::nullopt;
    return hh * 60 + mm;
}

}  // namespace actsafe
