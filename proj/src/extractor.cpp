#include "actsafe/extractor.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "actsafe/error.hpp"

namespace actsafe {

// ---------------------------------------------------------------------------
// Tokens and sentences
// ---------------------------------------------------------------------------

namespace {

bool is_alpha(unsigned char c) { return std::isalpha(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

// UTF-8 en dash (E2 80 93) or em dash (E2 80 94).
std::size_t dash_length(std::string_view s, std::size_t i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(s[i + 2]) == 0x93 || static_cast<unsigned char>(s[i + 2]) == 0x94))
        return 3;
    return 0;
}

}  // namespace

std::vector<TextToken> tokenize(std::string_view text) {
    std::vector<TextToken> out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (auto d = dash_length(text, i)) {
            out.push_back({"-", i, i + d});
            i += d;
            continue;
        }
        if (is_alpha(c) || is_digit(c)) {
            bool digits = is_digit(c);
            std::size_t j = i;
            std::string word;
            while (j < text.size()) {
                auto cj = static_cast<unsigned char>(text[j]);
                if (digits ? !is_digit(cj) : !is_alpha(cj)) break;
                word.push_back(static_cast<char>(std::tolower(cj)));
                ++j;
            }
            out.push_back({std::move(word), i, j});
            i = j;
            continue;
        }
        // Multi-byte sequences other than dashes stay together as one mark.
        std::size_t len = 1;
        if (c >= 0xC0) {
            while (i + len < text.size() && (static_cast<unsigned char>(text[i + len]) & 0xC0) == 0x80) ++len;
        }
        out.push_back({std::string(text.substr(i, len)), i, i + len});
        i += len;
    }
    return out;
}

std::vector<Sentence> split_sentences(std::string_view doc) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        std::string_view piece = doc.substr(start, end - start);
        std::size_t a = 0, b = piece.size();
        while (a < b && std::isspace(static_cast<unsigned char>(piece[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(piece[b - 1]))) --b;
        if (b > a) out.push_back({std::string(piece.substr(a, b - a)), start + a});
    };
    for (std::size_t i = 0; i < doc.size(); ++i) {
        char c = doc[i];
        bool split = false;
        if (c == ';' || c == '\n') {
            split = true;
        } else if (c == '.') {
            bool followed_by_break = i + 1 == doc.size() || std::isspace(static_cast<unsigned char>(doc[i + 1]));
            std::size_t w = 0;
            while (w < i && std::isalnum(static_cast<unsigned char>(doc[i - 1 - w]))) ++w;
            split = followed_by_break && w != 1;
        }
        if (split) {
            flush(c == '.' ? i + 1 : i);
            start = i + 1;
        }
    }
    flush(doc.size());
    return out;
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

std::string_view to_string(SlotKind k) {
    switch (k) {
        case SlotKind::literal: return "LITERAL";
        case SlotKind::number: return "NUMBER";
        case SlotKind::unit: return "UNIT";
        case SlotKind::clocktime: return "CLOCKTIME";
        case SlotKind::daypart: return "DAYPART";
        case SlotKind::activity: return "ACTIVITY";
    }
    return "?";
}

std::string Template::describe() const {
    std::string out = std::string(to_string(skeleton.kind())) + ":";
    for (const auto& tok : tokens) {
        out += ' ';
        if (tok.kind == SlotKind::literal || tok.kind == SlotKind::activity) {
            std::string joined;
            for (std::size_t i = 0; i < tok.words.size(); ++i) joined += (i ? " " : "") + tok.words[i];
            out += tok.kind == SlotKind::activity ? "ACTIVITY<" + joined + ">" : "'" + joined + "'";
        } else {
            out += to_string(tok.kind);
        }
    }
    return out;
}

Mtc instantiate(const Template& t, const SlotValues& given) {
    // Only slots the template actually carries may overwrite skeleton fields.
    SlotValues v;
    for (const auto& tok : t.tokens) {
        if (tok.kind == SlotKind::number) v.n = given.n;
        if (tok.kind == SlotKind::unit) v.unit = given.unit;
        if (tok.kind == SlotKind::clocktime) v.time = given.time;
        if (tok.kind == SlotKind::daypart) v.part = given.part;
    }
    auto fill = [&](const Mtc& m) -> Mtc {
        return std::visit(
            [&](auto x) -> Mtc {
                if constexpr (requires { x.n; }) {
                    if (v.n) x.n = *v.n;
                }
                if constexpr (requires { x.unit; }) {
                    if (v.unit) x.unit = *v.unit;
                }
                if constexpr (requires { x.time; }) {
                    if (v.time) x.time = *v.time;
                }
                if constexpr (requires { x.part; }) {
                    if (v.part) x.part = *v.part;
                }
                return Mtc(x);
            },
            m.value());
    };
    if (const auto* neg = t.skeleton.get_if<Negated>()) return Mtc::negated(fill(*neg->inner));
    return fill(t.skeleton);
}

namespace {

std::string render_clock(const ClockTime& t) {
    if (t.is_same_time()) return "same time";
    int h = t.minutes() / 60, m = t.minutes() % 60;
    const char* mer = h < 12 ? "am" : "pm";
    int h12 = h % 12 == 0 ? 12 : h % 12;
    char buf[16];
    if (m == 0)
        std::snprintf(buf, sizeof buf, "%d %s", h12, mer);
    else
        std::snprintf(buf, sizeof buf, "%d:%02d %s", h12, m, mer);
    return buf;
}

std::string render_unit(TimeUnit u, int n) {
    std::string s(to_string(u));
    return n == 1 ? s : s + "s";
}

}  // namespace

std::vector<std::string> render_tokens(const Template& t, const SlotValues& v) {
    std::vector<std::string> parts;
    for (const auto& tok : t.tokens) {
        switch (tok.kind) {
            case SlotKind::literal:
            case SlotKind::activity: {
                std::string joined;
                for (std::size_t i = 0; i < tok.words.size(); ++i) joined += (i ? " " : "") + tok.words[i];
                parts.push_back(joined);
                break;
            }
            case SlotKind::number: parts.push_back(std::to_string(v.n.value_or(1))); break;
            case SlotKind::unit: parts.push_back(render_unit(v.unit.value_or(TimeUnit::hour), v.n.value_or(1))); break;
            case SlotKind::clocktime: parts.push_back(render_clock(v.time.value_or(ClockTime::same_time()))); break;
            case SlotKind::daypart: parts.push_back(std::string(to_string(v.part.value_or(DayPart::morning)))); break;
        }
    }
    return parts;
}

std::string render(const Template& t, const SlotValues& v) {
    auto parts = render_tokens(t, v);
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " " : "") + parts[i];
    return out;
}

namespace {

TemplateToken lit(std::initializer_list<std::string> words) { return {SlotKind::literal, words}; }
TemplateToken slot(SlotKind k) { return {k, {}}; }

std::vector<std::string> words_of(std::string_view phrase) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(phrase)) out.push_back(std::move(tok.text));
    return out;
}

}  // namespace

std::vector<Template> enumerate_templates(const ActivityVocabulary& vocab) {
    std::vector<Template> out;
    auto add = [&](std::vector<TemplateToken> tokens, Mtc skeleton) {
        out.push_back(Template{out.size(), std::move(tokens), std::move(skeleton)});
    };
    const auto surfaces = vocab.surface_forms();
    constexpr std::array<DependencyPrep, 2> dps{DependencyPrep::before, DependencyPrep::after};
    constexpr std::array<OccurrencePrep, 2> ops{OccurrencePrep::at, OccurrencePrep::in};
    const std::array<std::pair<const char*, TimeUnit>, 2> adverbs{{{"daily", TimeUnit::day}, {"weekly", TimeUnit::week}}};
    const std::array<const char*, 4> quantifiers{"a", "per", "each", "every"};
    const std::array<const char*, 3> count_words{"times", "dose", "doses"};
    const std::array<std::pair<const char*, int>, 3> multiplicatives{{{"once", 1}, {"twice", 2}, {"thrice", 3}}};

    // V1
    for (auto dp : dps)
        for (const auto& [surface, canonical] : surfaces)
            add({slot(SlotKind::number), slot(SlotKind::unit), lit({std::string(to_string(dp))}),
                 {SlotKind::activity, words_of(surface)}},
                DefinitiveDependency{1, TimeUnit::minute, dp, canonical});

    // V2
    for (const char* w : count_words) {
        for (const auto& [adv, unit] : adverbs)
            add({slot(SlotKind::number), lit({w}), lit({adv})}, Frequency{1, unit});
        for (const char* q : quantifiers)
            add({slot(SlotKind::number), lit({w}), lit({q}), slot(SlotKind::unit)}, Frequency{1, TimeUnit::day});
    }
    for (const auto& [mult, n] : multiplicatives) {
        for (const auto& [adv, unit] : adverbs) add({lit({mult}), lit({adv})}, Frequency{n, unit});
        for (const char* q : quantifiers)
            add({lit({mult}), lit({q}), slot(SlotKind::unit)}, Frequency{n, TimeUnit::day});
    }

    // V3
    add({slot(SlotKind::number), slot(SlotKind::unit), lit({"apart"})}, Interval{1, TimeUnit::hour, IntervalPrep::apart});
    add({lit({"within"}), slot(SlotKind::number), slot(SlotKind::unit)},
        Interval{1, TimeUnit::hour, IntervalPrep::within});
    add({lit({"for"}), slot(SlotKind::number), slot(SlotKind::unit)}, Interval{1, TimeUnit::hour, IntervalPrep::for_});

    // V4
    for (auto dp : dps)
        for (const auto& [surface, canonical] : surfaces)
            add({lit({std::string(to_string(dp))}), {SlotKind::activity, words_of(surface)}},
                ImpreciseDependency{dp, canonical});

    // V5
    for (auto dp : dps)
        add({lit({std::string(to_string(dp))}), slot(SlotKind::clocktime)}, TimeDependency{dp, ClockTime::same_time()});

    // V6
    for (auto p : ops)
        for (const char* q : {"each", "every"})
            add({lit({std::string(to_string(p))}), slot(SlotKind::clocktime), lit({q}), slot(SlotKind::unit)},
                Consistency{p, ClockTime::same_time(), TimeUnit::day});

    // V7
    for (auto p : ops)
        add({lit({std::string(to_string(p))}), slot(SlotKind::daypart)}, TimeOfDay{p, DayPart::morning});

    // Negated V4: "do not ... before/after <act>"
    for (auto dp : dps)
        for (const auto& [surface, canonical] : surfaces)
            add({lit({"do", "not"}), lit({std::string(to_string(dp))}), {SlotKind::activity, words_of(surface)}},
                Mtc::negated(ImpreciseDependency{dp, canonical}));

    return out;
}

// ---------------------------------------------------------------------------
// Slot matching
// ---------------------------------------------------------------------------

namespace {

struct SlotMatch {
    std::size_t length = 0;
    SlotValues values;
};

std::optional<int> number_word(const std::string& w) {
    static const std::array<const char*, 12> spelled{"one", "two",   "three", "four",   "five",   "six",
                                                     "seven", "eight", "nine", "ten", "eleven", "twelve"};
    if (!w.empty() && w.size() <= 4 && std::all_of(w.begin(), w.end(), [](char c) { return is_digit(c); })) {
        int v = std::stoi(w);
        return v >= 1 ? std::optional<int>(v) : std::nullopt;
    }
    for (std::size_t i = 0; i < spelled.size(); ++i)
        if (w == spelled[i]) return static_cast<int>(i) + 1;
    return std::nullopt;
}

bool two_digit_minutes(const std::string& w, int& out) {
    if (w.size() != 2 || !is_digit(w[0]) || !is_digit(w[1])) return false;
    out = (w[0] - '0') * 10 + (w[1] - '0');
    return out < 60;
}

// Meridiem at toks[i..]: "am", "pm", "a.m", "a.m.", "p.m", "p.m.". Appends lengths.
void meridiem_at(const std::vector<TextToken>& toks, std::size_t i, std::vector<std::pair<std::size_t, bool>>& out) {
    if (i >= toks.size()) return;
    const auto& w = toks[i].text;
    if (w == "am" || w == "pm") out.emplace_back(1, w == "pm");
    if ((w == "a" || w == "p") && i + 2 < toks.size() && toks[i + 1].text == "." && toks[i + 2].text == "m") {
        out.emplace_back(3, w == "p");
        if (i + 3 < toks.size() && toks[i + 3].text == ".") out.emplace_back(4, w == "p");
    }
}

std::vector<SlotMatch> match_clock(const std::vector<TextToken>& toks, std::size_t p) {
    std::vector<SlotMatch> out;
    const auto& w = toks[p].text;
    if (w == "same" && p + 1 < toks.size() && toks[p + 1].text == "time") {
        SlotMatch m{2, {}};
        m.values.time = ClockTime::same_time();
        out.push_back(m);
        return out;
    }
    if (w.empty() || w.size() > 2 || !std::all_of(w.begin(), w.end(), [](char c) { return is_digit(c); })) return out;
    int h = std::stoi(w);
    // Optional ":MM" or ".MM".
    std::vector<std::pair<std::size_t, int>> bodies{{1, 0}};
    int mm = 0;
    bool has_minutes = false;
    if (p + 2 < toks.size() && (toks[p + 1].text == ":" || toks[p + 1].text == ".") &&
        two_digit_minutes(toks[p + 2].text, mm)) {
        bodies.emplace_back(3, mm);
        has_minutes = true;
    }
    for (auto [len, minutes] : bodies) {
        std::vector<std::pair<std::size_t, bool>> mers;
        meridiem_at(toks, p + len, mers);
        if (h >= 1 && h <= 12) {
            for (auto [mlen, pm] : mers) {
                int hour = h % 12 + (pm ? 12 : 0);
                SlotMatch m{len + mlen, {}};
                m.values.time = ClockTime::at(hour * 60 + minutes);
                out.push_back(m);
            }
        }
        if (len == 3 && has_minutes && mers.empty() && h <= 23) {
            SlotMatch m{3, {}};
            m.values.time = ClockTime::at(h * 60 + minutes);
            out.push_back(m);
        }
    }
    return out;
}

std::vector<SlotMatch> match_number(const std::vector<TextToken>& toks, std::size_t p) {
    std::vector<SlotMatch> out;
    auto a = number_word(toks[p].text);
    if (!a) return out;
    SlotMatch single{1, {}};
    single.values.n = *a;
    out.push_back(single);
    if (p + 2 < toks.size() && (toks[p + 1].text == "-" || toks[p + 1].text == "to")) {
        if (auto b = number_word(toks[p + 2].text); b && *b >= *a) {
            SlotMatch range{3, {}};
            range.values.n = *b;
            range.values.range = true;
            out.push_back(range);
        }
    }
    return out;
}

bool words_at(const std::vector<TextToken>& toks, std::size_t p, const std::vector<std::string>& words) {
    if (p + words.size() > toks.size()) return false;
    for (std::size_t i = 0; i < words.size(); ++i)
        if (toks[p + i].text != words[i]) return false;
    return true;
}

std::vector<SlotMatch> match_token(const TemplateToken& t, const std::vector<TextToken>& toks, std::size_t p) {
    std::vector<SlotMatch> out;
    switch (t.kind) {
        case SlotKind::literal:
        case SlotKind::activity:
            if (words_at(toks, p, t.words)) out.push_back({t.words.size(), {}});
            break;
        case SlotKind::number: return match_number(toks, p);
        case SlotKind::unit:
            if (auto u = time_unit_from_word(toks[p].text)) {
                SlotMatch m{1, {}};
                m.values.unit = *u;
                out.push_back(m);
            }
            break;
        case SlotKind::clocktime: return match_clock(toks, p);
        case SlotKind::daypart:
            if (auto d = day_part_from(toks[p].text)) {
                SlotMatch m{1, {}};
                m.values.part = *d;
                out.push_back(m);
            }
            break;
    }
    return out;
}

constexpr std::size_t kMaxSlotTokens = 8;

void merge(SlotValues& into, const SlotValues& from) {
    if (from.n) into.n = from.n;
    into.range = into.range || from.range;
    if (from.unit) into.unit = from.unit;
    if (from.time) into.time = from.time;
    if (from.part) into.part = from.part;
}

struct Candidate {
    const Template* tmpl;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // token index ranges [a, b)
    SlotValues values;

    std::size_t covered() const {
        std::size_t n = 0;
        for (auto [a, b] : ranges) n += b - a;
        return n;
    }
    std::size_t start() const { return ranges.front().first; }
    std::size_t extent() const { return ranges.back().second - ranges.front().first; }
};

// Latest-ending, then longest match of token `t` that ends at or before `limit`.
std::optional<std::pair<std::size_t, SlotMatch>> match_backward(const TemplateToken& t,
                                                                const std::vector<TextToken>& toks,
                                                                std::size_t limit) {
    for (std::size_t e = limit; e >= 1; --e) {
        std::size_t lo = e > kMaxSlotTokens ? e - kMaxSlotTokens : 0;
        for (std::size_t s = lo; s < e; ++s) {
            for (auto& m : match_token(t, toks, s))
                if (s + m.length == e) return std::make_pair(s, m);
        }
    }
    return std::nullopt;
}

std::vector<Candidate> candidates_for(const Template& tmpl, const std::vector<TextToken>& toks) {
    std::vector<Candidate> out;
    const auto k = tmpl.tokens.size();
    for (std::size_t p = 0; p < toks.size(); ++p) {
        auto lasts = match_token(tmpl.tokens[k - 1], toks, p);
        if (lasts.empty()) continue;
        const auto& last = *std::max_element(lasts.begin(), lasts.end(),
                                             [](const SlotMatch& a, const SlotMatch& b) { return a.length < b.length; });
        Candidate c{&tmpl, std::vector<std::pair<std::size_t, std::size_t>>(k), {}};
        c.ranges[k - 1] = {p, p + last.length};
        merge(c.values, last.values);
        std::size_t limit = p;
        bool ok = true;
        for (std::size_t j = k - 1; j-- > 0;) {
            auto hit = match_backward(tmpl.tokens[j], toks, limit);
            if (!hit) {
                ok = false;
                break;
            }
            c.ranges[j] = {hit->first, hit->first + hit->second.length};
            merge(c.values, hit->second.values);
            limit = hit->first;
        }
        if (ok) out.push_back(std::move(c));
    }
    return out;
}

bool shareable(SlotKind k) { return k == SlotKind::activity || k == SlotKind::clocktime; }

}  // namespace

std::vector<MatchResult> match_statement(std::string_view statement, const std::vector<Template>& templates,
                                         std::size_t statement_index) {
    const auto toks = tokenize(statement);
    std::vector<Candidate> all;
    for (const auto& t : templates) {
        auto cs = candidates_for(t, toks);
        all.insert(all.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        if (a.tmpl->tokens.size() != b.tmpl->tokens.size()) return a.tmpl->tokens.size() > b.tmpl->tokens.size();
        if (a.covered() != b.covered()) return a.covered() > b.covered();
        if (a.start() != b.start()) return a.start() < b.start();
        if (a.extent() != b.extent()) return a.extent() < b.extent();
        if (a.tmpl->id != b.tmpl->id) return a.tmpl->id < b.tmpl->id;
        return a.ranges < b.ranges;
    });

    std::vector<bool> taken(toks.size(), false);
    std::vector<const Candidate*> kept;
    for (const auto& c : all) {
        bool clash = false;
        for (std::size_t j = 0; j < c.ranges.size() && !clash; ++j) {
            if (shareable(c.tmpl->tokens[j].kind)) continue;
            for (auto i = c.ranges[j].first; i < c.ranges[j].second; ++i) clash = clash || taken[i];
        }
        if (clash) continue;
        for (std::size_t j = 0; j < c.ranges.size(); ++j) {
            if (shareable(c.tmpl->tokens[j].kind)) continue;
            for (auto i = c.ranges[j].first; i < c.ranges[j].second; ++i) taken[i] = true;
        }
        kept.push_back(&c);
    }

    std::vector<MatchResult> out;
    for (const auto* c : kept) {
        MatchResult r{instantiate(*c->tmpl, c->values), statement_index, {}, c->tmpl->id, c->values.range};
        for (auto [a, b] : c->ranges) r.spans.push_back({toks[a].begin, toks[b - 1].end});
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
        if (a.spans.front() != b.spans.front()) return a.spans.front() < b.spans.front();
        return a.template_id < b.template_id;
    });
    return out;
}

std::vector<MatchResult> extract_from_guideline(std::string_view document, const std::vector<Template>& templates) {
    std::vector<MatchResult> out;
    auto sentences = split_sentences(document);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        auto rs = match_statement(sentences[i].text, templates, i);
        out.insert(out.end(), std::make_move_iterator(rs.begin()), std::make_move_iterator(rs.end()));
    }
    return out;
}

std::vector<MatchResult> extract_from_guideline(std::string_view document, const ActivityVocabulary& vocab) {
    return extract_from_guideline(document, enumerate_templates(vocab));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

ClassScores score(std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassScores s;
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.support = tp + fn;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace

std::set<std::string> type_tags(const std::vector<MatchResult>& results) {
    std::set<std::string> out;
    for (const auto& r : results) out.insert(std::string(to_string(r.mtc.kind())));
    return out;
}

ExtractionReport evaluate_extraction(const TypeLabels& pred, const TypeLabels& gold) {
    if (pred.size() != gold.size() ||
        !std::equal(pred.begin(), pred.end(), gold.begin(), [](const auto& a, const auto& b) { return a.first == b.first; }))
        throw MismatchedCorpus("prediction and gold document ids differ");

    std::set<std::string> types;
    for (const auto& [_, ts] : pred) types.insert(ts.begin(), ts.end());
    for (const auto& [_, ts] : gold) types.insert(ts.begin(), ts.end());

    ExtractionReport report;
    std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (const auto& type : types) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& [doc, g] : gold) {
            bool in_gold = g.count(type) > 0;
            bool in_pred = pred.at(doc).count(type) > 0;
            tp += in_gold && in_pred;
            fp += !in_gold && in_pred;
            fn += in_gold && !in_pred;
        }
        report.per_type[type] = score(tp, fp, fn);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
    }
    report.micro = score(tp_all, fp_all, fn_all);

    std::size_t total_support = 0;
    for (const auto& [_, s] : report.per_type) total_support += s.support;
    report.weighted.support = total_support;
    report.weighted.tp = tp_all;
    report.weighted.fp = fp_all;
    report.weighted.fn = fn_all;
    if (total_support > 0) {
        for (const auto& [_, s] : report.per_type) {
            double w = static_cast<double>(s.support) / static_cast<double>(total_support);
            report.weighted.precision += w * s.precision;
            report.weighted.recall += w * s.recall;
            report.weighted.f1 += w * s.f1;
        }
    }
    return report;
}

TypeLabels parse_type_labels(std::string_view text) {
    TypeLabels out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (normalize_phrase(line).empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        std::string doc = line.substr(0, tab);
        if (doc.empty()) throw ConfigError("label line " + std::to_string(lineno) + " has no document id");
        if (out.count(doc)) throw ConfigError("duplicate document id '" + doc + "'");
        auto& types = out[doc];
        if (tab == std::string::npos) continue;
        std::stringstream list(line.substr(tab + 1));
        std::string type;
        while (std::getline(list, type, ',')) {
            auto t = normalize_phrase(type);
            if (t.empty()) continue;
            std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
            if (!mtc_kind_from(t)) throw ConfigError("unknown constraint type '" + type + "' on line " + std::to_string(lineno));
            types.insert(t);
        }
    }
    return out;
}

std::string format_report(const ExtractionReport& r) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %8s\n", "type", "precision", "recall", "f1", "support");
    out += buf;
    auto row = [&](const std::string& name, const ClassScores& s) {
        std::snprintf(buf, sizeof buf, "%-10s %9.4f %9.4f %9.4f %8zu\n", name.c_str(), s.precision, s.recall, s.f1,
                      s.support);
        out += buf;
    };
    for (const auto& [type, s] : r.per_type) row(type, s);
    row("micro", r.micro);
    row("weighted", r.weighted);
    return out;
}

}  // namespace actsafe
