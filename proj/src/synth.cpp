#include "actsafe/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "actsafe/error.hpp"

namespace actsafe {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

template <typename T>
T number(std::string_view text, std::size_t line, std::string_view field) {
    T v{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        fail(line, "bad " + std::string(field) + " '" + std::string(text) + "'");
    return v;
}

int clock_field(std::string_view text, std::size_t line) {
    auto c = parse_clock(text);
    if (!c) fail(line, "bad clock '" + std::string(text) + "'");
    return *c;
}

std::string clock_text(int c) { return format_clock(c); }

std::string number_text(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

bool in_range(int c, std::pair<int, int> r) {
    return r.first <= r.second ? (c >= r.first && c <= r.second) : (c >= r.first || c <= r.second);
}

int day_clock(std::int64_t minute) { return static_cast<int>(((minute % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void collect_parts(const Mtc& m, std::vector<DayPart>& parts, std::vector<std::string>& acts, bool& negated) {
    if (const auto* c = m.get_if<Compound>())
        for (const auto& p : c->parts) collect_parts(p, parts, acts, negated);
    if (m.get_if<Negated>() != nullptr) negated = true;
    if (const auto* v7 = m.get_if<TimeOfDay>()) parts.push_back(v7->part);
    if (const auto* v1 = m.get_if<DefinitiveDependency>()) acts.push_back(v1->act);
    if (const auto* v4 = m.get_if<ImpreciseDependency>()) acts.push_back(v4->act);
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct Item {
    std::size_t tmpl = 0;
    std::string behavior;
    std::int64_t start = 0;
    int duration = 0;
    bool skipped = false;
    bool dropped = false;
};

class Generator {
public:
    Generator(const CohortSpec& spec, int index) : spec_(spec), rng_(patient_seed(spec.seed, index)) {}

    SyntheticPatient run(int index) {
        shift_ = static_cast<int>(std::lround(spec_.shift_sd * truncated_normal()));
        SyntheticPatient out;
        out.log.patient_id = patient_id(index);
        auto& led = out.ledger;
        led.patient_id = out.log.patient_id;
        led.reference_clock = reference_clock();
        led.consistency_window = spec_.consistency_window;
        led.dayparts = spec_.dayparts;
        led.medication = spec_.medication;
        for (const auto& p : spec_.plants) led.constraints.push_back(p.mtc);

        std::vector<std::vector<bool>> planted(static_cast<std::size_t>(spec_.days));
        for (int d = 0; d < spec_.days; ++d) {
            const std::size_t first = items_.size();
            const std::int64_t day0 = spec_.start.minutes + static_cast<std::int64_t>(d) * kMinutesPerDay;
            for (std::size_t i = 0; i < spec_.templates.size(); ++i) draw(i, day0, first);
            for (const auto& p : spec_.plants) {
                const bool hit = std::bernoulli_distribution(p.rate)(rng_);
                planted[static_cast<std::size_t>(d)].push_back(hit && plant(p.mtc, day0, first, led.reference_clock));
            }
        }
        emit(out.log);
        fill_ledger(led, planted);
        return out;
    }

private:
    static std::string patient_id(int index) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth_%03d", index);
        return buf;
    }

    double truncated_normal() {
        std::normal_distribution<double> n(0.0, 1.0);
        for (;;)
            if (double z = n(rng_); std::abs(z) <= 4.0) return z;
    }

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    int nominal(std::size_t i) const {
        const auto& t = spec_.templates[i];
        if (t.clock) return *t.clock + shift_;
        for (std::size_t j = 0; j < i; ++j)
            if (spec_.templates[j].behavior == *t.after) return nominal(j) + t.delta;
        return 0;
    }

    int reference_clock() const {
        for (std::size_t i = 0; i < spec_.templates.size(); ++i)
            if (spec_.templates[i].behavior == spec_.medication) return day_clock(nominal(i));
        return 0;
    }

    void draw(std::size_t i, std::int64_t day0, std::size_t first) {
        const auto& t = spec_.templates[i];
        const double z = truncated_normal();
        std::int64_t base = day0 + shift_ + (t.clock ? *t.clock : 0);
        if (t.after) {
            const auto anchor = std::find_if(items_.begin() + static_cast<std::ptrdiff_t>(first), items_.end(),
                                             [&](const Item& it) { return it.behavior == *t.after; });
            base = anchor->start + t.delta;
        }
        Item it{i, t.behavior, base + std::lround(t.jitter * z), t.duration, false, false};
        it.skipped = std::bernoulli_distribution(probability(spec_.miss, t.behavior))(rng_);
        it.dropped = std::bernoulli_distribution(probability(spec_.drop, t.behavior))(rng_);
        items_.push_back(it);
    }

    static double probability(const std::map<std::string, double>& m, const std::string& b) {
        auto it = m.find(b);
        return it == m.end() ? 0.0 : it->second;
    }

    Item* first_of(const std::string& behavior, std::size_t first) {
        for (std::size_t k = first; k < items_.size(); ++k)
            if (items_[k].behavior == behavior && !items_[k].skipped) return &items_[k];
        return nullptr;
    }

    // Moves or adds the day's medication so that `m` is violated; false when
    // the day offers nothing to perturb.
    bool plant(const Mtc& m, std::int64_t day0, std::size_t first, int reference) {
        if (const auto* c = m.get_if<Compound>())
            return plant(c->parts[static_cast<std::size_t>(uniform(0, static_cast<int>(c->parts.size()) - 1))], day0,
                         first, reference);
        Item* med = first_of(spec_.medication, first);
        if (med == nullptr) return false;
        if (m.get_if<Frequency>() != nullptr) {
            for (std::size_t k = first; k < items_.size(); ++k)
                if (items_[k].behavior == spec_.medication) items_[k].skipped = true;
            return true;
        }
        if (const auto* v3 = m.get_if<Interval>()) {
            const auto gap = duration_minutes(v3->n, v3->unit);
            if (gap < 2) return false;
            const int off = uniform(1, static_cast<int>(std::min<std::int64_t>(gap - 1, kMinutesPerDay - 1)));
            Item extra = *med;
            extra.start = med->start + off < day0 + kMinutesPerDay ? med->start + off : med->start - off;
            items_.push_back(extra);
            return true;
        }
        if (const auto* v6 = m.get_if<Consistency>()) {
            const int ref = v6->time.is_same_time() ? reference : v6->time.minutes();
            const int off = std::min(spec_.consistency_window + uniform(1, 90), 720);
            if (off <= spec_.consistency_window) return false;
            med->start = day0 + day_clock(ref + (uniform(0, 1) == 0 ? -off : off));
            return true;
        }
        if (const auto* v5 = m.get_if<TimeDependency>()) {
            const int t = v5->time.is_same_time() ? reference : v5->time.minutes();
            const int c = v5->prep == DependencyPrep::before ? t + uniform(0, std::min(120, 1439 - t))
                                                             : t - uniform(0, std::min(120, t));
            med->start = day0 + c;
            return true;
        }
        if (const auto* v7 = m.get_if<TimeOfDay>()) {
            const auto r = spec_.dayparts.ranges.at(v7->part);
            const int len = day_clock(r.second - r.first) + 1;
            if (len >= kMinutesPerDay) return false;
            med->start = day0 + day_clock(r.second + 1 + uniform(0, kMinutesPerDay - len - 1));
            return true;
        }
        if (const auto* v1 = m.get_if<DefinitiveDependency>()) {
            const Item* act = first_of(v1->act, first);
            if (act == nullptr) return false;
            const int g = static_cast<int>(duration_minutes(v1->n, v1->unit));
            med->start = v1->prep == DependencyPrep::before ? act->start - uniform(1, g) : act->start + uniform(1, g);
            return true;
        }
        if (const auto* v4 = m.get_if<ImpreciseDependency>()) {
            const Item* act = first_of(v4->act, first);
            if (act == nullptr) return false;
            med->start = v4->prep == DependencyPrep::before ? act->start + uniform(0, 60) : act->start - uniform(0, 60);
            return true;
        }
        return false;
    }

    std::int64_t stop_of(const Item& it) const {
        const auto& t = spec_.templates[it.tmpl];
        if (t.until) {
            std::optional<std::int64_t> next;
            for (const auto& o : items_)
                if (o.behavior == *t.until && !o.skipped && o.start > it.start && (!next || o.start < *next)) next = o.start;
            if (next) return *next;
        }
        return it.start + it.duration;
    }

    void emit(RhbLog& log) const {
        for (const auto& it : items_)
            if (!it.skipped && !it.dropped) log.entries.push_back({it.behavior, Timestamp{it.start}, Timestamp{stop_of(it)}});
        sort_entries(log);
    }

    void fill_ledger(PatientLedger& led, const std::vector<std::vector<bool>>& planted) const;

    const CohortSpec& spec_;
    std::mt19937_64 rng_;
    int shift_ = 0;
    std::vector<Item> items_;
};

// ---------------------------------------------------------------------------
// Ground truth, computed from the generator's own minute values.
// ---------------------------------------------------------------------------

struct DayView {
    std::int64_t start = 0;
    std::map<std::string, std::vector<std::int64_t>> starts;  // sorted, in [start, start + 1 day)
};

class Truth {
public:
    Truth(const PatientLedger& led, const DayView& day) : led_(led), day_(day) {}

    Outcome of(const Mtc& m) const {
        if (const auto* c = m.get_if<Compound>()) {
            bool any_violation = false, any_unknown = false;
            for (const auto& p : c->parts) {
                const auto o = of(p);
                any_violation |= o == Outcome::violation;
                any_unknown |= o == Outcome::indeterminate;
            }
            return any_violation ? Outcome::violation : any_unknown ? Outcome::indeterminate : Outcome::ok;
        }
        if (const auto* n = m.get_if<Negated>()) {
            const auto o = of(*n->inner);
            return o == Outcome::ok ? Outcome::violation : o == Outcome::violation ? Outcome::ok : o;
        }
        const auto* meds = find(led_.medication);
        if (meds == nullptr) return Outcome::indeterminate;
        if (const auto* v2 = m.get_if<Frequency>()) {
            const auto end = day_.start + duration_minutes(1, v2->unit);
            const auto count = std::count_if(meds->begin(), meds->end(), [&](auto t) { return t < end; });
            return count == v2->n ? Outcome::ok : Outcome::violation;
        }
        if (const auto* v3 = m.get_if<Interval>()) {
            for (std::size_t i = 1; i < meds->size(); ++i)
                if ((*meds)[i] - (*meds)[i - 1] < duration_minutes(v3->n, v3->unit)) return Outcome::violation;
            return Outcome::ok;
        }
        if (meds->empty()) return Outcome::indeterminate;

        const std::vector<std::int64_t>* acts = nullptr;
        if (const auto* v1 = m.get_if<DefinitiveDependency>()) acts = find(v1->act);
        if (const auto* v4 = m.get_if<ImpreciseDependency>()) acts = find(v4->act);
        if ((m.get_if<DefinitiveDependency>() || m.get_if<ImpreciseDependency>()) && (acts == nullptr || acts->empty()))
            return Outcome::indeterminate;

        for (auto med : *meds)
            if (violated(m, med, acts)) return Outcome::violation;
        return Outcome::ok;
    }

private:
    const std::vector<std::int64_t>* find(const std::string& b) const {
        auto it = day_.starts.find(b);
        return it == day_.starts.end() ? nullptr : &it->second;
    }

    bool violated(const Mtc& m, std::int64_t med, const std::vector<std::int64_t>* acts) const {
        const int c = day_clock(med);
        if (const auto* v1 = m.get_if<DefinitiveDependency>()) {
            const auto g = duration_minutes(v1->n, v1->unit);
            for (auto a : *acts) {
                if (v1->prep == DependencyPrep::before && med >= a - g && med < a) return true;
                if (v1->prep == DependencyPrep::after && med > a && med <= a + g) return true;
            }
            return false;
        }
        if (const auto* v4 = m.get_if<ImpreciseDependency>()) {
            std::int64_t best = acts->front();
            for (auto a : *acts)
                if (std::llabs(a - med) < std::llabs(best - med)) best = a;
            return v4->prep == DependencyPrep::before ? med >= best : med <= best;
        }
        if (const auto* v5 = m.get_if<TimeDependency>()) {
            const int t = v5->time.is_same_time() ? led_.reference_clock : v5->time.minutes();
            return v5->prep == DependencyPrep::before ? c >= t : c <= t;
        }
        if (const auto* v6 = m.get_if<Consistency>()) {
            const int ref = v6->time.is_same_time() ? led_.reference_clock : v6->time.minutes();
            const int d = std::abs(c - ref);
            return std::min(d, kMinutesPerDay - d) > led_.consistency_window;
        }
        if (const auto* v7 = m.get_if<TimeOfDay>()) return !in_range(c, led_.dayparts.ranges.at(v7->part));
        return false;
    }

    const PatientLedger& led_;
    const DayView& day_;
};

void Generator::fill_ledger(PatientLedger& led, const std::vector<std::vector<bool>>& planted) const {
    for (int d = 0; d < spec_.days; ++d) {
        DayView generated, logged;
        generated.start = logged.start = spec_.start.minutes + static_cast<std::int64_t>(d) * kMinutesPerDay;
        for (const auto& t : spec_.templates) generated.starts[t.behavior], logged.starts[t.behavior];
        for (const auto& it : items_) {
            if (it.skipped || it.start < generated.start || it.start >= generated.start + kMinutesPerDay) continue;
            generated.starts[it.behavior].push_back(it.start);
            if (!it.dropped) logged.starts[it.behavior].push_back(it.start);
        }
        for (auto* v : {&generated, &logged})
            for (auto& [b, s] : v->starts) std::sort(s.begin(), s.end());
        for (std::size_t k = 0; k < led.constraints.size(); ++k)
            led.entries.push_back({d, Timestamp{generated.start}, k, planted[static_cast<std::size_t>(d)][k],
                                   Truth(led, generated).of(led.constraints[k]), Truth(led, logged).of(led.constraints[k])});
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t patient_seed(std::uint64_t seed, int index) {
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
}

void CohortSpec::validate() const {
    if (patients < 1) throw ConfigError("patients must be >= 1");
    if (days < 1) throw ConfigError("days must be >= 1");
    if (day_start(start) != start) throw ConfigError("start must be a midnight");
    if (shift_sd < 0) throw ConfigError("shift_sd must be >= 0");
    if (consistency_window < 0) throw ConfigError("consistency_window must be >= 0");
    std::vector<std::string> seen;
    for (const auto& t : templates) {
        if (t.behavior.empty()) throw ConfigError("behavior template without a name");
        if (t.clock.has_value() == t.after.has_value())
            throw ConfigError("behavior '" + t.behavior + "' needs exactly one of clock= and after=");
        if (t.after && std::find(seen.begin(), seen.end(), *t.after) == seen.end())
            throw ConfigError("behavior '" + t.behavior + "' is linked to '" + *t.after + "', which is not defined above it");
        if (!(t.jitter >= 0)) throw ConfigError("behavior '" + t.behavior + "' has negative jitter");
        if (t.duration < 0) throw ConfigError("behavior '" + t.behavior + "' has negative duration");
        seen.push_back(t.behavior);
    }
    for (const auto* probs : {&miss, &drop})
        for (const auto& [b, p] : *probs) {
            if (!(p >= 0 && p <= 1)) throw ConfigError("probability for '" + b + "' outside [0, 1]");
            if (std::find(seen.begin(), seen.end(), b) == seen.end()) throw ConfigError("no template for '" + b + "'");
        }
    if (!plants.empty() && std::find(seen.begin(), seen.end(), medication) == seen.end())
        throw ConfigError("plants need a template for '" + medication + "'");
    for (const auto& p : plants) {
        if (!(p.rate >= 0 && p.rate <= 1)) throw ConfigError("plant rate outside [0, 1]");
        std::vector<DayPart> parts;
        std::vector<std::string> acts;
        bool negated = false;
        collect_parts(p.mtc, parts, acts, negated);
        if (negated) throw ConfigError("negated constraints cannot be planted: " + to_string(p.mtc));
        for (auto d : parts)
            if (!dayparts.ranges.contains(d)) throw ConfigError("daypart '" + std::string(to_string(d)) + "' is not configured");
        for (const auto& a : acts)
            if (std::find(seen.begin(), seen.end(), a) == seen.end()) throw ConfigError("no template for act '" + a + "'");
    }
}

CohortSpec parse_cohort_spec(std::string_view text) {
    CohortSpec spec;
    spec.templates.clear();
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) fail(line_no, "expected 'key: value'");
        const auto key = trim(line.substr(0, colon));
        const auto value = trim(line.substr(colon + 1));
        if (key == "patients") spec.patients = number<int>(value, line_no, key);
        else if (key == "days") spec.days = number<int>(value, line_no, key);
        else if (key == "seed") spec.seed = number<std::uint64_t>(value, line_no, key);
        else if (key == "shift_sd") spec.shift_sd = number<double>(value, line_no, key);
        else if (key == "consistency_window") spec.consistency_window = number<int>(value, line_no, key);
        else if (key == "medication") spec.medication = std::string(value);
        else if (key == "start") {
            auto t = parse_timestamp(std::string(value).find('T') == std::string::npos ? std::string(value) + "T00:00"
                                                                                        : std::string(value));
            if (!t) fail(line_no, "bad start '" + std::string(value) + "'");
            spec.start = *t;
        } else if (key == "behavior") {
            auto w = words(value);
            if (w.empty()) fail(line_no, "behavior needs a name");
            BehaviorTemplate t;
            t.behavior = w[0];
            for (std::size_t i = 1; i < w.size(); ++i) {
                const auto eq = w[i].find('=');
                if (eq == std::string::npos) fail(line_no, "expected field=value, got '" + w[i] + "'");
                const std::string f = w[i].substr(0, eq), v = w[i].substr(eq + 1);
                if (f == "clock") t.clock = clock_field(v, line_no);
                else if (f == "after") t.after = v;
                else if (f == "delta") t.delta = number<int>(v, line_no, f);
                else if (f == "jitter") t.jitter = number<double>(v, line_no, f);
                else if (f == "duration") t.duration = number<int>(v, line_no, f);
                else if (f == "until") t.until = v;
                else fail(line_no, "unknown behavior field '" + f + "'");
            }
            spec.templates.push_back(std::move(t));
        } else if (key == "miss" || key == "drop") {
            auto w = words(value);
            if (w.size() != 2) fail(line_no, std::string(key) + " needs a behavior and a probability");
            (key == "miss" ? spec.miss : spec.drop)[w[0]] = number<double>(w[1], line_no, key);
        } else if (key == "daypart") {
            auto w = words(value);
            auto part = w.size() == 2 ? day_part_from(w[0]) : std::nullopt;
            const auto dash = w.size() == 2 ? w[1].find('-') : std::string::npos;
            if (!part || dash == std::string::npos) fail(line_no, "daypart needs 'NAME HH:MM-HH:MM'");
            spec.dayparts.ranges[*part] = {clock_field(w[1].substr(0, dash), line_no), clock_field(w[1].substr(dash + 1), line_no)};
        } else if (key == "plant") {
            const auto space = value.find_first_of(" \t");
            if (space == std::string_view::npos) fail(line_no, "plant needs a rate and a constraint record");
            PlantedConstraint p{Frequency{}, number<double>(value.substr(0, space), line_no, "rate")};
            try {
                p.mtc = deserialize(trim(value.substr(space)));
            } catch (const MalformedRecord& e) {
                fail(line_no, e.what());
            }
            spec.plants.push_back(std::move(p));
        } else {
            fail(line_no, "unknown key '" + std::string(key) + "'");
        }
    }
    spec.validate();
    return spec;
}

CohortSpec load_cohort_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_cohort_spec(ss.str());
}

std::string write_cohort_spec(const CohortSpec& spec) {
    std::ostringstream out;
    out << "patients: " << spec.patients << "\ndays: " << spec.days << "\nstart: " << format_iso8601(spec.start)
        << "\nseed: " << spec.seed << "\nshift_sd: " << number_text(spec.shift_sd) << "\nmedication: " << spec.medication
        << "\nconsistency_window: " << spec.consistency_window << "\n";
    for (const auto& [part, r] : spec.dayparts.ranges)
        out << "daypart: " << to_string(part) << " " << clock_text(r.first) << "-" << clock_text(r.second) << "\n";
    for (const auto& t : spec.templates) {
        out << "behavior: " << t.behavior;
        if (t.clock) out << " clock=" << clock_text(*t.clock);
        if (t.after) out << " after=" << *t.after << " delta=" << t.delta;
        out << " jitter=" << number_text(t.jitter) << " duration=" << t.duration;
        if (t.until) out << " until=" << *t.until;
        out << "\n";
    }
    for (const auto& [b, p] : spec.miss) out << "miss: " << b << " " << number_text(p) << "\n";
    for (const auto& [b, p] : spec.drop) out << "drop: " << b << " " << number_text(p) << "\n";
    for (const auto& p : spec.plants) out << "plant: " << number_text(p.rate) << " " << serialize(p.mtc) << "\n";
    return out.str();
}

SyntheticPatient generate_patient(const CohortSpec& spec, int index) {
    spec.validate();
    return Generator(spec, index).run(index);
}

std::vector<SyntheticPatient> generate_cohort(const CohortSpec& spec) {
    spec.validate();
    std::vector<SyntheticPatient> out;
    for (int i = 0; i < spec.patients; ++i) out.push_back(Generator(spec, i).run(i));
    return out;
}

RuleContext PatientLedger::context() const {
    RuleContext ctx;
    ctx.consistency_window = consistency_window;
    ctx.reference_clock = reference_clock;
    ctx.dayparts = dayparts;
    ctx.medication = medication;
    return ctx;
}

std::vector<ViolationVerdict> ledger_verdicts(const PatientLedger& ledger, bool logged) {
    std::vector<ViolationVerdict> out;
    out.reserve(ledger.entries.size());
    for (const auto& e : ledger.entries) {
        const auto o = logged ? e.logged : e.generated;
        out.push_back({ledger.constraints.at(e.constraint), ledger.patient_id + "/" + format_iso8601(e.frame_start), o, o,
                       e.planted ? "planted" : ""});
    }
    return out;
}

std::string write_ledger(const PatientLedger& ledger) {
    Json head;
    head["patient"] = ledger.patient_id;
    head["reference_clock"] = clock_text(ledger.reference_clock);
    head["consistency_window"] = ledger.consistency_window;
    head["medication"] = ledger.medication;
    Json parts = Json::object();
    for (const auto& [part, r] : ledger.dayparts.ranges)
        parts[std::string(to_string(part))] = clock_text(r.first) + "-" + clock_text(r.second);
    head["dayparts"] = parts;
    Json cons = Json::array();
    for (const auto& m : ledger.constraints) cons.push_back(Json::parse(serialize(m)));
    head["constraints"] = cons;
    std::string out = head.dump() + "\n";
    for (const auto& e : ledger.entries) {
        Json j;
        j["day"] = e.day;
        j["frame_start"] = format_iso8601(e.frame_start);
        j["constraint"] = e.constraint;
        j["planted"] = e.planted;
        j["generated"] = std::string(to_string(e.generated));
        j["logged"] = std::string(to_string(e.logged));
        out += j.dump() + "\n";
    }
    return out;
}

PatientLedger parse_ledger(std::string_view text) {
    PatientLedger led;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    auto outcome = [&](const Json& j) {
        auto o = outcome_from(j.get<std::string>());
        if (!o) fail(line_no, "bad outcome");
        return *o;
    };
    try {
        if (!std::getline(in, line)) throw ConfigError("empty ledger");
        ++line_no;
        const auto head = Json::parse(line);
        led.patient_id = head.at("patient").get<std::string>();
        auto ref = parse_clock(head.at("reference_clock").get<std::string>());
        if (!ref) fail(line_no, "bad reference_clock");
        led.reference_clock = *ref;
        led.consistency_window = head.at("consistency_window").get<int>();
        led.medication = head.at("medication").get<std::string>();
        led.dayparts.ranges.clear();
        for (const auto& [name, range] : head.at("dayparts").items()) {
            auto part = day_part_from(name);
            const auto r = range.get<std::string>();
            const auto dash = r.find('-');
            if (!part || dash == std::string::npos) fail(line_no, "bad daypart");
            led.dayparts.ranges[*part] = {clock_field(r.substr(0, dash), line_no), clock_field(r.substr(dash + 1), line_no)};
        }
        for (const auto& c : head.at("constraints")) led.constraints.push_back(deserialize(c.dump()));
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const auto j = Json::parse(line);
            LedgerEntry e;
            e.day = j.at("day").get<int>();
            auto start = parse_iso8601(j.at("frame_start").get<std::string>());
            if (!start) fail(line_no, "bad frame_start");
            e.frame_start = *start;
            e.constraint = j.at("constraint").get<std::size_t>();
            if (e.constraint >= led.constraints.size()) fail(line_no, "constraint index out of range");
            e.planted = j.at("planted").get<bool>();
            e.generated = outcome(j.at("generated"));
            e.logged = outcome(j.at("logged"));
            led.entries.push_back(e);
        }
    } catch (const Json::exception& e) {
        fail(line_no, e.what());
    } catch (const MalformedRecord& e) {
        fail(line_no, e.what());
    }
    return led;
}

}  // namespace actsafe
