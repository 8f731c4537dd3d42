#include <doctest.h>

#include <cmath>
#include <numeric>

#include "actsafe/error.hpp"
#include "actsafe/predictors.hpp"
#include "actsafe/synth.hpp"

using namespace actsafe;

namespace {

const char* kSpec = R"(# one patient-day template
patients: 3
days: 21
start: 2019-07-01
seed: 17
behavior: wake_up clock=06:30 jitter=45
behavior: take_medicine after=wake_up delta=60 jitter=5 duration=1
behavior: eating clock=12:30 jitter=20 duration=30
behavior: eating clock=19:00 jitter=20 duration=30
behavior: sleeping clock=22:30 jitter=20 duration=480 until=wake_up
miss: take_medicine 0.1
drop: eating 0.1
plant: 0.1 {"type":"V6","p":"at","t":"same_time","u":"day"}
)";

std::vector<std::string> spec_behaviors(const CohortSpec& spec) {
    std::vector<std::string> out;
    for (const auto& t : spec.templates)
        if (std::find(out.begin(), out.end(), t.behavior) == out.end()) out.push_back(t.behavior);
    return out;
}

// Engine verdict on each ledger frame, recomputed from the emitted log.
std::size_t engine_agreements(const SyntheticPatient& p, const CohortSpec& spec) {
    const auto ctx = p.ledger.context();
    const auto behaviors = spec_behaviors(spec);
    std::size_t agree = 0;
    for (const auto& e : p.ledger.entries) {
        const auto frame = frame_from_log(p.log, e.frame_start, kMinutesPerDay, behaviors);
        agree += evaluate_rule(p.ledger.constraints[e.constraint], frame, ctx) == e.logged ? 1 : 0;
    }
    return agree;
}

CohortSpec one_behavior_spec(int patients, int days, double jitter) {
    CohortSpec spec;
    spec.patients = patients;
    spec.days = days;
    spec.templates = {{"take_medicine", 8 * 60, std::nullopt, 0, jitter, 1, std::nullopt}};
    return spec;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double stdev(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("cohort spec parses, validates and round trips") {
    auto spec = parse_cohort_spec(kSpec);
    CHECK(spec.patients == 3);
    CHECK(spec.templates.size() == 5);
    CHECK(spec.templates[1].after == "wake_up");
    CHECK(spec.templates[4].until == "wake_up");
    CHECK(spec.miss.at("take_medicine") == 0.1);
    REQUIRE(spec.plants.size() == 1);
    CHECK(spec.plants[0].mtc.kind() == MtcKind::v6);
    CHECK(write_cohort_spec(parse_cohort_spec(write_cohort_spec(spec))) == write_cohort_spec(spec));

    CHECK_THROWS_AS(parse_cohort_spec("miss: x 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort_spec("behavior: a clock=08:00\nmiss: a 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort_spec("behavior: a clock=08:00 jitter=-1\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort_spec("behavior: a after=b delta=5\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort_spec("behavior: a clock=08:00 after=a\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort_spec("behavior: take_medicine clock=08:00\nplant: 0.1 {\"type\":\"V9\"}\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort_spec("behavior: take_medicine clock=08:00\nplant: 0.1 {\"type\":\"NEGATED\",\"inner\":{\"type\":\"V2\",\"n\":1,\"u\":\"day\"}}\n"),
                    ConfigError);
    try {
        parse_cohort_spec("patients: 2\nfrobnicate: 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("generation is deterministic in the seed") {
    const auto spec = parse_cohort_spec(kSpec);
    const auto a = generate_cohort(spec), b = generate_cohort(spec);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(write_log(a[i].log) == write_log(b[i].log));
        CHECK(write_ledger(a[i].ledger) == write_ledger(b[i].ledger));
    }
    CHECK(write_log(a[0].log) != write_log(a[1].log));
    auto other = spec;
    other.seed = 18;
    CHECK(write_log(generate_cohort(other)[0].log) != write_log(a[0].log));
    // A patient depends only on (seed, index).
    CHECK(write_log(generate_patient(spec, 2).log) == write_log(a[2].log));
}

TEST_CASE("zero jitter and zero miss give a periodic log with zero prior-day error") {
    auto spec = parse_cohort_spec(kSpec);
    spec.patients = 1;
    spec.miss.clear();
    spec.drop.clear();
    spec.plants.clear();
    for (auto& t : spec.templates) t.jitter = 0;
    const auto log = generate_cohort(spec)[0].log;
    for (std::size_t i = 1; i < log.entries.size(); ++i) {
        if (log.entries[i].behavior != "take_medicine") continue;
        CHECK(clock_of(log.entries[i].start) == 7 * 60 + 30);
    }
    const auto bv = basis_vectorize(log, 30);
    const auto frames = make_frames(bv, "take_medicine", context_windows(1, 30));
    REQUIRE(!frames.empty());
    PredictorConfig cfg;
    cfg.kind = PredictorKind::prior;
    const auto m = train_predictor(log, "take_medicine", cfg, frame_cutoff(bv, frames.front()));
    std::vector<double> truth;
    for (const auto& f : frames) truth.push_back(f.y);
    CHECK(evaluate_rmse(predict_frames(m, log, bv, frames), truth) == 0.0);
}

TEST_CASE("miss rate drives the once-a-day frequency violation rate") {
    auto spec = one_behavior_spec(10, 1000, 30);
    spec.miss["take_medicine"] = 0.2;
    spec.plants = {{Frequency{1, TimeUnit::day}, 0.0}};
    std::size_t violations = 0, total = 0;
    for (const auto& p : generate_cohort(spec))
        for (const auto& e : p.ledger.entries) {
            ++total;
            violations += e.logged == Outcome::violation ? 1 : 0;
        }
    REQUIRE(total == 10000);
    const double rate = static_cast<double>(violations) / static_cast<double>(total);
    const double se = std::sqrt(0.2 * 0.8 / static_cast<double>(total));
    CHECK(std::abs(rate - 0.2) < 3 * se);
}

TEST_CASE("jitter is a normal truncated at four standard deviations") {
    const double sd = 45;
    auto spec = one_behavior_spec(10, 1000, sd);
    std::vector<double> dev;
    for (const auto& p : generate_cohort(spec))
        for (const auto& e : p.log.entries) dev.push_back(static_cast<double>(clock_of(e.start) - 8 * 60));
    REQUIRE(dev.size() == 10000);
    for (double d : dev) REQUIRE(std::abs(d) <= 4 * sd + 0.5);
    const double n = static_cast<double>(dev.size());
    CHECK(std::abs(mean(dev)) < 3 * sd / std::sqrt(n));
    CHECK(std::abs(stdev(dev) - sd) < 3 * sd / std::sqrt(2 * n));
}

TEST_CASE("a dependency link correlates the linked behavior with its anchor") {
    auto spec = parse_cohort_spec(kSpec);
    spec.miss.clear();
    spec.plants.clear();
    spec.patients = 1;
    spec.days = 200;
    const auto log = generate_cohort(spec)[0].log;
    std::vector<double> wake, med;
    for (const auto& e : log.entries) {
        if (e.behavior == "wake_up") wake.push_back(clock_of(e.start));
        if (e.behavior == "take_medicine") med.push_back(clock_of(e.start));
    }
    REQUIRE(wake.size() == med.size());
    const double mw = mean(wake), mm = mean(med);
    double cov = 0;
    for (std::size_t i = 0; i < wake.size(); ++i) cov += (wake[i] - mw) * (med[i] - mm);
    cov /= static_cast<double>(wake.size());
    CHECK(cov / (stdev(wake) * stdev(med)) > 0.9);
}

TEST_CASE("ledger counts are conserved and unplanted noise-free days are all ok") {
    auto spec = parse_cohort_spec(kSpec);
    spec.miss.clear();
    spec.drop.clear();
    for (auto& t : spec.templates) t.jitter = 0;
    spec.plants[0].rate = 0;
    for (const auto& p : generate_cohort(spec)) {
        CHECK(p.ledger.reference_clock == 7 * 60 + 30);
        for (const auto& v : ledger_verdicts(p.ledger)) CHECK(v.actual == Outcome::ok);
    }

    spec.plants[0].rate = 0.3;
    spec.days = 400;
    std::size_t planted = 0, unplanted = 0, total = 0;
    for (const auto& p : generate_cohort(spec)) {
        total += p.ledger.entries.size();
        for (const auto& e : p.ledger.entries) (e.planted ? planted : unplanted) += 1;
    }
    CHECK(planted + unplanted == total);
    const double se = std::sqrt(0.3 * 0.7 / static_cast<double>(total));
    CHECK(std::abs(static_cast<double>(planted) / static_cast<double>(total) - 0.3) < 3 * se);
}

TEST_CASE("every planted rule type is violated where it was planted, and the engine agrees with the ledger") {
    const std::vector<std::string> plants{
        R"({"type":"V1","n":2,"u":"hour","dp":"before","act":"eating"})",
        R"({"type":"V1","n":2,"u":"hour","dp":"after","act":"eating"})",
        R"({"type":"V2","n":1,"u":"day"})",
        R"({"type":"V3","n":6,"u":"hour","ip":"apart"})",
        R"({"type":"V4","dp":"after","act":"wake_up"})",
        R"({"type":"V4","dp":"before","act":"eating"})",
        R"({"type":"V5","dp":"before","t":"09:00"})",
        R"({"type":"V5","dp":"after","t":"05:00"})",
        R"({"type":"V6","p":"at","t":"same_time","u":"day"})",
        R"({"type":"V6","p":"at","t":"07:00","u":"day"})",
        R"({"type":"V7","p":"in","d":"morning"})",
        R"({"type":"COMPOUND","parts":[{"type":"V1","n":2,"u":"hour","dp":"before","act":"eating"},{"type":"V1","n":2,"u":"hour","dp":"after","act":"eating"}]})",
    };
    for (const auto& record : plants) {
        INFO(record);
        auto spec = parse_cohort_spec(kSpec);
        spec.plants = {{deserialize(record), 0.3}};
        for (const auto& p : generate_cohort(spec)) {
            for (const auto& e : p.ledger.entries)
                if (e.planted) CHECK(e.generated == Outcome::violation);
            CHECK(engine_agreements(p, spec) == p.ledger.entries.size());
        }
    }

    // All plants together, with heavy jitter so that intakes cross midnight.
    auto spec = parse_cohort_spec(kSpec);
    spec.plants.clear();
    for (const auto& record : plants) spec.plants.push_back({deserialize(record), 0.05});
    for (auto& t : spec.templates) t.jitter *= 4;
    spec.patients = 5;
    spec.days = 60;
    std::size_t frames = 0, agree = 0;
    for (const auto& p : generate_cohort(spec)) {
        frames += p.ledger.entries.size();
        agree += engine_agreements(p, spec);
    }
    CHECK(frames == 5u * 60u * plants.size());
    CHECK(agree == frames);
}

TEST_CASE("dropped labels separate generated from logged outcomes") {
    auto spec = one_behavior_spec(1, 2000, 0);
    spec.drop["take_medicine"] = 0.25;
    spec.plants = {{Frequency{1, TimeUnit::day}, 0.0}};
    const auto p = generate_cohort(spec)[0];
    std::size_t differ = 0;
    for (const auto& e : p.ledger.entries) {
        CHECK(e.generated == Outcome::ok);
        differ += e.logged == Outcome::violation ? 1 : 0;
    }
    CHECK(differ == 2000 - p.log.entries.size());
    CHECK(differ > 0);
}

TEST_CASE("ledger files round trip") {
    auto spec = parse_cohort_spec(kSpec);
    spec.dayparts.ranges[DayPart::evening] = {22 * 60, 60};
    const auto p = generate_cohort(spec)[1];
    const auto text = write_ledger(p.ledger);
    const auto back = parse_ledger(text);
    CHECK(write_ledger(back) == text);
    CHECK(back.dayparts.ranges.at(DayPart::evening) == std::pair{22 * 60, 60});
    CHECK_THROWS_AS(parse_ledger(""), ConfigError);
    CHECK_THROWS_AS(parse_ledger("{\"patient\":1}\n"), ConfigError);
}
