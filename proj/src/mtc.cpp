#include "actsafe/mtc.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "actsafe/error.hpp"
#include "actsafe/time.hpp"

namespace actsafe {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Terminals
// ---------------------------------------------------------------------------

std::string_view to_string(TimeUnit u) {
    switch (u) {
        case TimeUnit::minute: return "minute";
        case TimeUnit::hour: return "hour";
        case TimeUnit::day: return "day";
        case TimeUnit::week: return "week";
    }
    return "?";
}

std::string_view to_string(DependencyPrep p) { return p == DependencyPrep::before ? "before" : "after"; }

std::string_view to_string(IntervalPrep p) {
    switch (p) {
        case IntervalPrep::within: return "within";
        case IntervalPrep::for_: return "for";
        case IntervalPrep::apart: return "apart";
    }
    return "?";
}

std::string_view to_string(OccurrencePrep p) { return p == OccurrencePrep::at ? "at" : "in"; }

std::string_view to_string(DayPart d) {
    switch (d) {
        case DayPart::morning: return "morning";
        case DayPart::noon: return "noon";
        case DayPart::evening: return "evening";
    }
    return "?";
}

std::optional<TimeUnit> time_unit_from_word(std::string_view w) {
    static const std::array<std::pair<std::string_view, TimeUnit>, 14> table{{
        {"minute", TimeUnit::minute}, {"minutes", TimeUnit::minute}, {"min", TimeUnit::minute},
        {"mins", TimeUnit::minute},   {"hour", TimeUnit::hour},      {"hours", TimeUnit::hour},
        {"hr", TimeUnit::hour},       {"hrs", TimeUnit::hour},       {"day", TimeUnit::day},
        {"days", TimeUnit::day},      {"week", TimeUnit::week},      {"weeks", TimeUnit::week},
        {"wk", TimeUnit::week},       {"wks", TimeUnit::week},
    }};
    auto lw = normalize_phrase(w);
    for (const auto& [k, u] : table)
        if (lw == k) return u;
    return std::nullopt;
}

std::optional<DependencyPrep> dependency_prep_from(std::string_view w) {
    if (w == "before") return DependencyPrep::before;
    if (w == "after") return DependencyPrep::after;
    return std::nullopt;
}

std::optional<IntervalPrep> interval_prep_from(std::string_view w) {
    if (w == "within") return IntervalPrep::within;
    if (w == "for") return IntervalPrep::for_;
    if (w == "apart") return IntervalPrep::apart;
    return std::nullopt;
}

std::optional<OccurrencePrep> occurrence_prep_from(std::string_view w) {
    if (w == "at") return OccurrencePrep::at;
    if (w == "in") return OccurrencePrep::in;
    return std::nullopt;
}

std::optional<DayPart> day_part_from(std::string_view w) {
    if (w == "morning") return DayPart::morning;
    if (w == "noon") return DayPart::noon;
    if (w == "evening") return DayPart::evening;
    return std::nullopt;
}

std::int64_t duration_minutes(std::int64_t n, TimeUnit u) {
    switch (u) {
        case TimeUnit::minute: return n;
        case TimeUnit::hour: return n * 60;
        case TimeUnit::day: return n * kMinutesPerDay;
        case TimeUnit::week: return n * kMinutesPerWeek;
    }
    return 0;
}

ClockTime ClockTime::at(int minutes_past_midnight) {
    if (minutes_past_midnight < 0 || minutes_past_midnight >= kMinutesPerDay)
        throw std::invalid_argument("clock time out of range: " + std::to_string(minutes_past_midnight));
    ClockTime t;
    t.minutes_ = minutes_past_midnight;
    return t;
}

std::string ClockTime::to_record() const { return is_same_time() ? "same_time" : format_clock(minutes_); }

std::optional<ClockTime> ClockTime::from_record(std::string_view text) {
    if (text == "same_time") return same_time();
    if (auto m = parse_clock(text); m && text.size() == 5) return at(*m);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Mtc
// ---------------------------------------------------------------------------

std::string_view to_string(MtcKind k) {
    static constexpr std::array<std::string_view, 9> names{"V1", "V2", "V3", "V4", "V5",
                                                           "V6", "V7", "COMPOUND", "NEGATED"};
    return names[static_cast<std::size_t>(k)];
}

std::optional<MtcKind> mtc_kind_from(std::string_view tag) {
    for (int i = 0; i <= static_cast<int>(MtcKind::negated); ++i)
        if (to_string(static_cast<MtcKind>(i)) == tag) return static_cast<MtcKind>(i);
    return std::nullopt;
}

namespace {

void require_count(int n) {
    if (n < 1) throw std::invalid_argument("natural number terminal must be >= 1, got " + std::to_string(n));
}

}  // namespace

Mtc::Mtc(Variant value) : value_(std::move(value)) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DefinitiveDependency> || std::is_same_v<T, Frequency> ||
                          std::is_same_v<T, Interval>) {
                require_count(v.n);
            } else if constexpr (std::is_same_v<T, Compound>) {
                if (v.parts.empty()) throw std::invalid_argument("compound constraint needs at least one part");
            } else if constexpr (std::is_same_v<T, Negated>) {
                if (!v.inner) throw std::invalid_argument("negated constraint has no inner constraint");
            }
        },
        value_);
}

Mtc Mtc::compound(std::vector<Mtc> parts) { return Mtc(Compound{std::move(parts)}); }

Mtc Mtc::negated(Mtc inner) { return Mtc(Negated{std::make_shared<const Mtc>(std::move(inner))}); }

std::strong_ordering operator<=>(const Mtc& a, const Mtc& b) {
    if (auto c = a.value_.index() <=> b.value_.index(); c != 0) return c;
    return std::visit(
        [&](const auto& x) -> std::strong_ordering {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.value_);
            if constexpr (std::is_same_v<T, Compound>) {
                return std::lexicographical_compare_three_way(x.parts.begin(), x.parts.end(), y.parts.begin(),
                                                              y.parts.end());
            } else if constexpr (std::is_same_v<T, Negated>) {
                return *x.inner <=> *y.inner;
            } else {
                return x <=> y;
            }
        },
        a.value_);
}

std::string to_string(const Mtc& m) {
    auto s = [](auto v) { return std::string(to_string(v)); };
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DefinitiveDependency>)
                return "V1(" + std::to_string(v.n) + ", " + s(v.unit) + ", " + s(v.prep) + ", " + v.act + ")";
            else if constexpr (std::is_same_v<T, Frequency>)
                return "V2(" + std::to_string(v.n) + ", " + s(v.unit) + ")";
            else if constexpr (std::is_same_v<T, Interval>)
                return "V3(" + std::to_string(v.n) + ", " + s(v.unit) + ", " + s(v.prep) + ")";
            else if constexpr (std::is_same_v<T, ImpreciseDependency>)
                return "V4(" + s(v.prep) + ", " + v.act + ")";
            else if constexpr (std::is_same_v<T, TimeDependency>)
                return "V5(" + s(v.prep) + ", " + v.time.to_record() + ")";
            else if constexpr (std::is_same_v<T, Consistency>)
                return "V6(" + s(v.prep) + ", " + v.time.to_record() + ", " + s(v.unit) + ")";
            else if constexpr (std::is_same_v<T, TimeOfDay>)
                return "V7(" + s(v.prep) + ", " + s(v.part) + ")";
            else if constexpr (std::is_same_v<T, Compound>) {
                std::string out = "COMPOUND(";
                for (std::size_t i = 0; i < v.parts.size(); ++i) out += (i ? ", " : "") + to_string(v.parts[i]);
                return out + ")";
            } else {
                return "NOT " + to_string(*v.inner);
            }
        },
        m.value());
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

namespace {

std::string canonical_act(const std::string& act, const ActivityVocabulary& vocab, bool strict) {
    if (auto hit = vocab.lookup(act)) return *hit;
    if (strict) throw UnknownActivity("'" + act + "' is not in the activity vocabulary");
    auto n = normalize_phrase(act);
    std::replace(n.begin(), n.end(), ' ', '_');
    return n;
}

}  // namespace

Mtc canonicalize(const Mtc& raw, const ActivityVocabulary& vocab, CanonicalizeOptions options) {
    return std::visit(
        [&](const auto& v) -> Mtc {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DefinitiveDependency> || std::is_same_v<T, ImpreciseDependency>) {
                T copy = v;
                copy.act = canonical_act(v.act, vocab, options.strict);
                return Mtc(copy);
            } else if constexpr (std::is_same_v<T, Compound>) {
                std::vector<Mtc> flat;
                for (const auto& part : v.parts) {
                    Mtc c = canonicalize(part, vocab, options);
                    if (const auto* inner = c.get_if<Compound>())
                        flat.insert(flat.end(), inner->parts.begin(), inner->parts.end());
                    else
                        flat.push_back(std::move(c));
                }
                std::sort(flat.begin(), flat.end());
                flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
                if (flat.size() == 1) return flat.front();
                return Mtc::compound(std::move(flat));
            } else if constexpr (std::is_same_v<T, Negated>) {
                Mtc inner = canonicalize(*v.inner, vocab, options);
                if (const auto* neg = inner.get_if<Negated>()) return *neg->inner;
                return Mtc::negated(std::move(inner));
            } else {
                return Mtc(v);
            }
        },
        raw.value());
}

bool is_canonical(const Mtc& m) {
    if (const auto* c = m.get_if<Compound>()) {
        if (c->parts.size() < 2) return false;
        for (std::size_t i = 0; i < c->parts.size(); ++i) {
            if (c->parts[i].kind() == MtcKind::compound || !is_canonical(c->parts[i])) return false;
            if (i > 0 && !(c->parts[i - 1] < c->parts[i])) return false;
        }
        return true;
    }
    if (const auto* n = m.get_if<Negated>()) return n->inner->kind() != MtcKind::negated && is_canonical(*n->inner);
    return true;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

namespace {

ojson to_json(const Mtc& m) {
    ojson j;
    j["type"] = std::string(to_string(m.kind()));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            auto s = [](auto e) { return std::string(to_string(e)); };
            if constexpr (std::is_same_v<T, DefinitiveDependency>) {
                j["n"] = v.n;
                j["u"] = s(v.unit);
                j["dp"] = s(v.prep);
                j["act"] = v.act;
            } else if constexpr (std::is_same_v<T, Frequency>) {
                j["n"] = v.n;
                j["u"] = s(v.unit);
            } else if constexpr (std::is_same_v<T, Interval>) {
                j["n"] = v.n;
                j["u"] = s(v.unit);
                j["ip"] = s(v.prep);
            } else if constexpr (std::is_same_v<T, ImpreciseDependency>) {
                j["dp"] = s(v.prep);
                j["act"] = v.act;
            } else if constexpr (std::is_same_v<T, TimeDependency>) {
                j["dp"] = s(v.prep);
                j["t"] = v.time.to_record();
            } else if constexpr (std::is_same_v<T, Consistency>) {
                j["p"] = s(v.prep);
                j["t"] = v.time.to_record();
                j["u"] = s(v.unit);
            } else if constexpr (std::is_same_v<T, TimeOfDay>) {
                j["p"] = s(v.prep);
                j["d"] = s(v.part);
            } else if constexpr (std::is_same_v<T, Compound>) {
                j["parts"] = ojson::array();
                for (const auto& part : v.parts) j["parts"].push_back(to_json(part));
            } else {
                j["inner"] = to_json(*v.inner);
            }
        },
        m.value());
    return j;
}

class RecordReader {
public:
    explicit RecordReader(std::string_view text) : text_(text) {}

    [[noreturn]] void fail(const std::string& what, const std::string& key = {}) const {
        std::size_t pos = 0;
        if (!key.empty()) {
            auto at = text_.find("\"" + key + "\"");
            if (at != std::string_view::npos) pos = at;
        }
        throw MalformedRecord(what, pos);
    }

    Mtc read(const ojson& j) const {
        if (!j.is_object()) fail("record must be a JSON object");
        if (!j.contains("type") || !j["type"].is_string()) fail("missing string field 'type'", "type");
        auto tag = j["type"].get<std::string>();
        auto kind = mtc_kind_from(tag);
        if (!kind) fail("unknown constraint type '" + tag + "'", "type");

        std::vector<std::string> expected;
        switch (*kind) {
            case MtcKind::v1: expected = {"n", "u", "dp", "act"}; break;
            case MtcKind::v2: expected = {"n", "u"}; break;
            case MtcKind::v3: expected = {"n", "u", "ip"}; break;
            case MtcKind::v4: expected = {"dp", "act"}; break;
            case MtcKind::v5: expected = {"dp", "t"}; break;
            case MtcKind::v6: expected = {"p", "t", "u"}; break;
            case MtcKind::v7: expected = {"p", "d"}; break;
            case MtcKind::compound: expected = {"parts"}; break;
            case MtcKind::negated: expected = {"inner"}; break;
        }
        for (const auto& [key, _] : j.items()) {
            if (key == "type") continue;
            if (std::find(expected.begin(), expected.end(), key) == expected.end())
                fail("unexpected field '" + key + "' for " + tag, key);
        }
        for (const auto& key : expected)
            if (!j.contains(key)) fail("missing field '" + key + "' for " + tag, "type");

        try {
            switch (*kind) {
                case MtcKind::v1:
                    return Mtc(DefinitiveDependency{count(j), unit(j), dprep(j), act(j)});
                case MtcKind::v2: return Mtc(Frequency{count(j), unit(j)});
                case MtcKind::v3: return Mtc(Interval{count(j), unit(j), iprep(j)});
                case MtcKind::v4: return Mtc(ImpreciseDependency{dprep(j), act(j)});
                case MtcKind::v5: return Mtc(TimeDependency{dprep(j), clock(j)});
                case MtcKind::v6: return Mtc(Consistency{oprep(j), clock(j), unit(j)});
                case MtcKind::v7: return Mtc(TimeOfDay{oprep(j), part(j)});
                case MtcKind::compound: {
                    const auto& parts = j["parts"];
                    if (!parts.is_array() || parts.empty()) fail("'parts' must be a non-empty array", "parts");
                    std::vector<Mtc> out;
                    for (const auto& p : parts) out.push_back(read(p));
                    return Mtc::compound(std::move(out));
                }
                case MtcKind::negated: return Mtc::negated(read(j["inner"]));
            }
        } catch (const std::invalid_argument& e) {
            fail(e.what(), "n");
        }
        fail("unreachable");
    }

private:
    std::string str(const ojson& j, const std::string& key) const {
        if (!j[key].is_string()) fail("field '" + key + "' must be a string", key);
        return j[key].get<std::string>();
    }
    int count(const ojson& j) const {
        if (!j["n"].is_number_integer()) fail("field 'n' must be an integer", "n");
        auto n = j["n"].get<std::int64_t>();
        if (n < 1 || n > 1000000) fail("field 'n' out of range", "n");
        return static_cast<int>(n);
    }
    TimeUnit unit(const ojson& j) const {
        auto s = str(j, "u");
        for (auto u : {TimeUnit::minute, TimeUnit::hour, TimeUnit::day, TimeUnit::week})
            if (to_string(u) == s) return u;
        fail("bad unit '" + s + "'", "u");
    }
    DependencyPrep dprep(const ojson& j) const {
        if (auto p = dependency_prep_from(str(j, "dp"))) return *p;
        fail("bad dependency preposition", "dp");
    }
    IntervalPrep iprep(const ojson& j) const {
        if (auto p = interval_prep_from(str(j, "ip"))) return *p;
        fail("bad interval preposition", "ip");
    }
    OccurrencePrep oprep(const ojson& j) const {
        if (auto p = occurrence_prep_from(str(j, "p"))) return *p;
        fail("bad occurrence preposition", "p");
    }
    DayPart part(const ojson& j) const {
        if (auto d = day_part_from(str(j, "d"))) return *d;
        fail("bad time of day", "d");
    }
    ClockTime clock(const ojson& j) const {
        if (auto t = ClockTime::from_record(str(j, "t"))) return *t;
        fail("bad time stamp (want HH:MM or same_time)", "t");
    }
    std::string act(const ojson& j) const {
        auto a = str(j, "act");
        if (a.empty()) fail("empty activity", "act");
        return a;
    }

    std::string_view text_;
};

}  // namespace

std::string serialize(const Mtc& m) { return to_json(m).dump(); }

Mtc deserialize(std::string_view text) {
    ojson j;
    try {
        j = ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
    return RecordReader(text).read(j);
}

}  // namespace actsafe
