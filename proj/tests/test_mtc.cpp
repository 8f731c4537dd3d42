#include <doctest.h>

#include <random>

#include "actsafe/error.hpp"
#include "actsafe/mtc.hpp"

using namespace actsafe;

namespace {

const ActivityVocabulary& vocab() { return ActivityVocabulary::builtin(); }

Mtc random_leaf(std::mt19937_64& rng) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    const char* acts[] = {"eating", "take_medicine", "sleeping", "wake_up", "exercise"};
    auto unit = static_cast<TimeUnit>(pick(4));
    auto dp = static_cast<DependencyPrep>(pick(2));
    auto clock = pick(3) == 0 ? ClockTime::same_time() : ClockTime::at(pick(1440));
    switch (pick(7)) {
        case 0: return DefinitiveDependency{1 + pick(120), unit, dp, acts[pick(5)]};
        case 1: return Frequency{1 + pick(6), unit};
        case 2: return Interval{1 + pick(24), unit, static_cast<IntervalPrep>(pick(3))};
        case 3: return ImpreciseDependency{dp, acts[pick(5)]};
        case 4: return TimeDependency{dp, clock};
        case 5: return Consistency{static_cast<OccurrencePrep>(pick(2)), clock, unit};
        default: return TimeOfDay{static_cast<OccurrencePrep>(pick(2)), static_cast<DayPart>(pick(3))};
    }
}

Mtc random_mtc(std::mt19937_64& rng, int depth = 0) {
    auto r = rng() % 10;
    if (depth < 3 && r == 0) {
        std::vector<Mtc> parts;
        auto n = 1 + rng() % 4;
        for (std::size_t i = 0; i < n; ++i) parts.push_back(random_mtc(rng, depth + 1));
        return Mtc::compound(std::move(parts));
    }
    if (depth < 3 && r == 1) return Mtc::negated(random_mtc(rng, depth + 1));
    return random_leaf(rng);
}

}  // namespace

TEST_CASE("duration in minutes") {
    CHECK(duration_minutes(2, TimeUnit::hour) == 120);
    CHECK(duration_minutes(1, TimeUnit::week) == 10080);
    CHECK(duration_minutes(30, TimeUnit::minute) == 30);
    CHECK(duration_minutes(3, TimeUnit::day) == 4320);
}

TEST_CASE("canonicalize maps synonyms") {
    Mtc raw = DefinitiveDependency{2, TimeUnit::hour, DependencyPrep::before, "meal"};
    Mtc want = DefinitiveDependency{2, TimeUnit::hour, DependencyPrep::before, "eating"};
    CHECK(canonicalize(raw, vocab()) == want);
    CHECK(canonicalize(ImpreciseDependency{DependencyPrep::after, "  A   Meal "}, vocab()) ==
          Mtc(ImpreciseDependency{DependencyPrep::after, "eating"}));
}

TEST_CASE("canonicalize flattens compounds") {
    Mtc inner = Mtc::compound({Frequency{3, TimeUnit::day}});
    Mtc raw = Mtc::compound({inner, Interval{6, TimeUnit::hour, IntervalPrep::apart}});
    Mtc want = Mtc::compound({Frequency{3, TimeUnit::day}, Interval{6, TimeUnit::hour, IntervalPrep::apart}});
    auto got = canonicalize(raw, vocab());
    CHECK(got == want);
    CHECK(is_canonical(got));
    CHECK_FALSE(is_canonical(raw));
}

TEST_CASE("canonicalize orders compound parts by tag then fields") {
    Mtc raw = Mtc::compound({TimeOfDay{OccurrencePrep::in, DayPart::morning}, Frequency{2, TimeUnit::day},
                             Frequency{1, TimeUnit::day}, Frequency{1, TimeUnit::day}});
    auto got = canonicalize(raw, vocab());
    const auto* c = got.get_if<Compound>();
    REQUIRE(c);
    REQUIRE(c->parts.size() == 3);
    CHECK(c->parts[0] == Mtc(Frequency{1, TimeUnit::day}));
    CHECK(c->parts[1] == Mtc(Frequency{2, TimeUnit::day}));
    CHECK(c->parts[2].kind() == MtcKind::v7);
}

TEST_CASE("canonicalize removes double negation") {
    Mtc raw = Mtc::negated(Mtc::negated(ImpreciseDependency{DependencyPrep::before, "exercise"}));
    CHECK(canonicalize(raw, vocab()) == Mtc(ImpreciseDependency{DependencyPrep::before, "exercise"}));
    Mtc triple = Mtc::negated(raw);
    CHECK(canonicalize(triple, vocab()) ==
          Mtc::negated(ImpreciseDependency{DependencyPrep::before, "exercise"}));
}

TEST_CASE("strict mode rejects unknown activities") {
    Mtc raw = ImpreciseDependency{DependencyPrep::before, "Skydiving"};
    CHECK_THROWS_AS(canonicalize(raw, vocab(), {.strict = true}), UnknownActivity);
    CHECK(canonicalize(raw, vocab()) == Mtc(ImpreciseDependency{DependencyPrep::before, "skydiving"}));
}

TEST_CASE("structural validation") {
    CHECK_THROWS_AS(Mtc(Frequency{0, TimeUnit::day}), std::invalid_argument);
    CHECK_THROWS_AS(Mtc::compound({}), std::invalid_argument);
    CHECK_THROWS_AS(ClockTime::at(1440), std::invalid_argument);
}

TEST_CASE("record round trips") {
    Mtc v6 = Consistency{OccurrencePrep::at, ClockTime::same_time(), TimeUnit::day};
    CHECK(serialize(v6) == R"({"type":"V6","p":"at","t":"same_time","u":"day"})");
    CHECK(deserialize(serialize(v6)) == v6);

    Mtc v1 = DefinitiveDependency{30, TimeUnit::minute, DependencyPrep::before, "eating"};
    CHECK(serialize(v1) == R"({"type":"V1","n":30,"u":"minute","dp":"before","act":"eating"})");
    CHECK(deserialize(serialize(v1)) == v1);

    Mtc v5 = TimeDependency{DependencyPrep::before, ClockTime::at(9 * 60)};
    CHECK(serialize(v5) == R"({"type":"V5","dp":"before","t":"09:00"})");
}

TEST_CASE("malformed records carry a position") {
    CHECK_THROWS_AS(deserialize(R"({"type":"V9"})"), MalformedRecord);
    CHECK_THROWS_AS(deserialize(R"({"type":"V2","n":0,"u":"day"})"), MalformedRecord);
    CHECK_THROWS_AS(deserialize(R"({"type":"V2","n":2,"u":"fortnight"})"), MalformedRecord);
    CHECK_THROWS_AS(deserialize(R"({"type":"V2","n":2,"u":"day","x":1})"), MalformedRecord);
    CHECK_THROWS_AS(deserialize(R"({"type":"V5","dp":"before","t":"9am"})"), MalformedRecord);
    try {
        deserialize(R"({"type":"V2","n":2,)");
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.position() >= 17);
    }
    try {
        deserialize(R"({"type":"V2","n":2,"u":"fortnight"})");
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.position() == 19);
    }
}

TEST_CASE("property: canonical records round trip and canonicalize is idempotent") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        Mtc raw = random_mtc(rng);
        Mtc c = canonicalize(raw, vocab());
        REQUIRE(is_canonical(c));
        REQUIRE(canonicalize(c, vocab()) == c);
        REQUIRE(deserialize(serialize(c)) == c);
    }
}

TEST_CASE("every table example is representable") {
    std::vector<Mtc> examples{
        DefinitiveDependency{2, TimeUnit::hour, DependencyPrep::before, "breakfast"},
        Frequency{2, TimeUnit::day},
        Interval{4, TimeUnit::hour, IntervalPrep::apart},
        ImpreciseDependency{DependencyPrep::after, "eating"},
        TimeDependency{DependencyPrep::before, ClockTime::at(9 * 60)},
        Consistency{OccurrencePrep::at, ClockTime::same_time(), TimeUnit::day},
        TimeOfDay{OccurrencePrep::in, DayPart::evening},
    };
    for (std::size_t i = 0; i < examples.size(); ++i) {
        auto c = canonicalize(examples[i], vocab());
        CHECK(static_cast<std::size_t>(c.kind()) == i);
        CHECK(deserialize(serialize(c)) == c);
    }
    CHECK(to_string(canonicalize(examples[0], vocab())) == "V1(2, hour, before, eating)");
}

TEST_CASE("unit words singularize") {
    CHECK(time_unit_from_word("Hours") == TimeUnit::hour);
    CHECK(time_unit_from_word("mins") == TimeUnit::minute);
    CHECK(time_unit_from_word("weeks") == TimeUnit::week);
    CHECK_FALSE(time_unit_from_word("fortnight"));
}
