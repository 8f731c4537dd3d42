#include <doctest.h>
#include <algorithm>

#include <random>

#include "actsafe/error.hpp"
#include "actsafe/extractor.hpp"
#include "support/text_cases.hpp"

using namespace actsafe;

namespace {

const std::vector<Template>& templates() {
    static const auto ts = enumerate_templates(ActivityVocabulary::builtin());
    return ts;
}

std::vector<Mtc> mtcs(const std::vector<MatchResult>& rs) {
    std::vector<Mtc> out;
    for (const auto& r : rs) out.push_back(r.mtc);
    return out;
}

std::string slice(std::string_view s, Span sp) { return std::string(s.substr(sp.begin, sp.end - sp.begin)); }

}  // namespace

TEST_CASE("tokenizer splits digits from letters and reads dashes") {
    auto toks = tokenize("Take 1–30min, 9a.m.");
    std::vector<std::string> words;
    for (const auto& t : toks) words.push_back(t.text);
    CHECK(words == std::vector<std::string>{"take", "1", "-", "30", "min", ",", "9", "a", ".", "m", "."});
    CHECK(toks[2].end - toks[2].begin == 3);
}

TEST_CASE("sentence splitter keeps abbreviations together") {
    auto ss = split_sentences("Take before 9 a.m. each day. Store cold; shake well\nDo not freeze.");
    REQUIRE(ss.size() == 4);
    CHECK(ss[0].text == "Take before 9 a.m. each day.");
    CHECK(ss[1].text == "Store cold");
    CHECK(ss[2].text == "shake well");
    CHECK(ss[3].text == "Do not freeze.");
    CHECK(split_sentences("").empty());
}

TEST_CASE("template list covers every variable form and is deterministic") {
    ActivityVocabulary eating;
    eating.add_canonical("eating");
    auto ts = enumerate_templates(eating);
    std::set<MtcKind> kinds;
    bool v1_before = false;
    for (const auto& t : ts) {
        kinds.insert(t.skeleton.kind());
        if (t.describe() == "V1: NUMBER UNIT 'before' ACTIVITY<eating>") v1_before = true;
    }
    CHECK(v1_before);
    for (int k = 0; k <= static_cast<int>(MtcKind::v7); ++k) CHECK(kinds.count(static_cast<MtcKind>(k)));

    auto again = enumerate_templates(eating);
    REQUIRE(again.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(again[i].describe() == ts[i].describe());

    std::set<MtcKind> free_kinds;
    for (const auto& t : enumerate_templates(ActivityVocabulary{})) free_kinds.insert(t.skeleton.kind());
    for (auto k : {MtcKind::v2, MtcKind::v3, MtcKind::v5, MtcKind::v6, MtcKind::v7}) CHECK(free_kinds.count(k));
    CHECK_FALSE(free_kinds.count(MtcKind::v1));
}

TEST_CASE("every template matches its own rendering") {
    std::mt19937_64 rng(11);
    for (const auto& t : templates()) {
        auto values = testing::random_slots(rng);
        auto text = render(t, values);
        auto rs = match_statement(text, templates());
        bool found = false;
        for (const auto& r : rs) found = found || r.mtc == instantiate(t, values);
        INFO(t.describe() << " :: " << text);
        CHECK(found);
    }
}

TEST_CASE("pravastatin yields both definitive dependencies") {
    auto rs = match_statement(
        "take pravastatin at least 1 hour before or at least 4 hours after taking these medications", templates());
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].mtc == Mtc(DefinitiveDependency{1, TimeUnit::hour, DependencyPrep::before, "take_medicine"}));
    CHECK(rs[1].mtc == Mtc(DefinitiveDependency{4, TimeUnit::hour, DependencyPrep::after, "take_medicine"}));
}

TEST_CASE("ranges bind to the upper bound") {
    std::string s = "Take this medication by mouth 1-30 minutes before each main meal, usually 3 times daily";
    auto rs = match_statement(s, templates());
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].mtc == Mtc(DefinitiveDependency{30, TimeUnit::minute, DependencyPrep::before, "eating"}));
    CHECK(rs[0].range);
    CHECK(slice(s, rs[0].spans[0]) == "1-30");
    CHECK(slice(s, rs[0].spans[3]) == "each main meal");
    CHECK(rs[1].mtc == Mtc(Frequency{3, TimeUnit::day}));
    CHECK_FALSE(rs[1].range);
}

TEST_CASE("statements without constraint tokens give nothing") {
    CHECK(match_statement("Wash hands thoroughly.", templates()).empty());
    CHECK(match_statement("", templates()).empty());
}

TEST_CASE("consistency with the same-time sentinel") {
    auto rs = match_statement("Remember to take it at the same time each day.", templates());
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].mtc == Mtc(Consistency{OccurrencePrep::at, ClockTime::same_time(), TimeUnit::day}));
}

TEST_CASE("guideline level extraction") {
    auto rs = extract_from_guideline(
        "Take this medication by mouth, with or without food, usually three times daily. It is important to take "
        "your doses at least 6 hours apart or as directed by your doctor.",
        templates());
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].mtc == Mtc(Frequency{3, TimeUnit::day}));
    CHECK(rs[0].statement == 0);
    CHECK(rs[1].mtc == Mtc(Interval{6, TimeUnit::hour, IntervalPrep::apart}));
    CHECK(rs[1].statement == 1);

    auto pred = mtcs(extract_from_guideline("If you are prescribed only one dose per day, take it in the morning before 9 AM.",
                                            templates()));
    CHECK(std::count(pred.begin(), pred.end(), Mtc(TimeOfDay{OccurrencePrep::in, DayPart::morning})) == 1);
    CHECK(std::count(pred.begin(), pred.end(), Mtc(TimeDependency{DependencyPrep::before, ClockTime::at(540)})) == 1);

    CHECK(extract_from_guideline("", templates()).empty());
}

TEST_CASE("clock time surface forms") {
    auto at = [&](const std::string& s) {
        auto rs = match_statement("take before " + s, templates());
        REQUIRE(rs.size() == 1);
        return rs[0].mtc.get_if<TimeDependency>()->time.minutes();
    };
    CHECK(at("9 am") == 540);
    CHECK(at("9 a.m.") == 540);
    CHECK(at("10.30 pm") == 22 * 60 + 30);
    CHECK(at("12 am") == 0);
    CHECK(at("12:15 pm") == 12 * 60 + 15);
    CHECK(at("21:45") == 21 * 60 + 45);
}

TEST_CASE("literal negation maps to a negated imprecise dependency") {
    auto rs = match_statement("Do not take this medication before exercise.", templates());
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].mtc == Mtc::negated(ImpreciseDependency{DependencyPrep::before, "exercise"}));
}

TEST_CASE("spans are sound") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        auto c = testing::embedded_case(rng, templates());
        for (const auto& r : match_statement(c.sentence, templates())) {
            const auto& t = templates()[r.template_id];
            REQUIRE(r.spans.size() == t.tokens.size());
            for (std::size_t j = 0; j < r.spans.size(); ++j) {
                if (j) REQUIRE(r.spans[j - 1].end <= r.spans[j].begin);
                auto toks = tokenize(slice(c.sentence, r.spans[j]));
                if (t.tokens[j].kind == SlotKind::literal || t.tokens[j].kind == SlotKind::activity) {
                    REQUIRE(toks.size() == t.tokens[j].words.size());
                    for (std::size_t w = 0; w < toks.size(); ++w) REQUIRE(toks[w].text == t.tokens[j].words[w]);
                }
            }
        }
    }
}

TEST_CASE("property: embedded instantiations are recovered, token-free prose gives nothing") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        auto c = testing::embedded_case(rng, templates());
        auto got = mtcs(match_statement(c.sentence, templates()));
        INFO(c.sentence << " expected " << to_string(c.expected));
        REQUIRE(std::find(got.begin(), got.end(), c.expected) != got.end());
        auto again = match_statement(c.sentence, templates());
        REQUIRE(mtcs(again) == got);
    }
    for (int i = 0; i < 1000; ++i) {
        auto s = testing::negative_sentence(rng);
        INFO(s);
        REQUIRE(match_statement(s, templates()).empty());
    }
}

TEST_CASE("evaluation by formula") {
    TypeLabels gold{{"a", {"V1"}}, {"b", {"V1"}}, {"c", {}}};
    TypeLabels pred{{"a", {"V1"}}, {"b", {}}, {"c", {}}};
    auto r = evaluate_extraction(pred, gold);
    CHECK(r.per_type.at("V1").precision == 1.0);
    CHECK(r.per_type.at("V1").recall == 0.5);
    CHECK(r.per_type.at("V1").f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    auto perfect = evaluate_extraction(gold, gold);
    CHECK(perfect.micro.f1 == 1.0);
    CHECK(perfect.weighted.f1 == 1.0);

    TypeLabels other{{"a", {}}, {"z", {}}, {"c", {}}};
    CHECK_THROWS_AS(evaluate_extraction(other, gold), MismatchedCorpus);
}

TEST_CASE("ten-document perfect agreement") {
    TypeLabels gold;
    const char* tags[] = {"V1", "V2", "V3", "V4", "V5", "V6", "V7"};
    for (int i = 0; i < 10; ++i) gold["doc" + std::to_string(i)] = {tags[i % 7], tags[(i * 3) % 7]};
    auto r = evaluate_extraction(gold, gold);
    for (const auto& [_, s] : r.per_type) CHECK(s.f1 == 1.0);
}

TEST_CASE("fixture corpus matches the hand-labeled oracle") {
    auto gold = parse_type_labels(testing::read_file(ACTSAFE_TEST_DATA "/fixture_gold.tsv"));
    auto pred = testing::fixture_predictions(ACTSAFE_TEST_DATA "/fixture_corpus.tsv", templates());
    REQUIRE(gold.size() == 30);
    for (const auto& [id, types] : gold) {
        INFO(id);
        CHECK(pred[id] == types);
    }
    auto r = evaluate_extraction(pred, gold);
    CHECK(r.micro.f1 == 1.0);
    CHECK(r.weighted.f1 == 1.0);
}
