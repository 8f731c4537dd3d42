#include "actsafe/violation.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "actsafe/error.hpp"

namespace actsafe {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::ok: return "ok";
        case Outcome::violation: return "violation";
        case Outcome::indeterminate: return "indeterminate";
    }
    return "?";
}

std::optional<Outcome> outcome_from(std::string_view text) {
    for (auto o : {Outcome::ok, Outcome::violation, Outcome::indeterminate})
        if (to_string(o) == text) return o;
    return std::nullopt;
}

DaypartBounds DaypartBounds::defaults() {
    DaypartBounds b;
    b.ranges[DayPart::morning] = {5 * 60, 11 * 60 + 59};
    b.ranges[DayPart::noon] = {12 * 60, 13 * 60 + 59};
    b.ranges[DayPart::evening] = {17 * 60, 21 * 60 + 59};
    return b;
}

const std::pair<int, int>& DaypartBounds::of(DayPart d) const {
    auto it = ranges.find(d);
    if (it == ranges.end()) throw UnconfiguredDaypart(std::string(to_string(d)));
    return it->second;
}

namespace {

Outcome from_bool(bool violated) { return violated ? Outcome::violation : Outcome::ok; }

std::string clock_text(Timestamp t) { return format_iso8601(t).substr(11); }

bool in_clock_range(int clock, std::pair<int, int> r) {
    return r.first <= r.second ? (clock >= r.first && clock <= r.second) : (clock >= r.first || clock <= r.second);
}

}  // namespace

Outcome check_consistency(Timestamp med, int reference_clock, int window) {
    return from_bool(circular_clock_distance(clock_of(med), reference_clock) > window);
}

Outcome check_definitive_dependency(const DefinitiveDependency& c, Timestamp act, Timestamp med,
                                    DependencyPolarity polarity) {
    const auto g = duration_minutes(c.n, c.unit);
    const bool inside = c.prep == DependencyPrep::before ? (med >= act - g && med < act) : (med > act && med <= act + g);
    return from_bool(polarity == DependencyPolarity::forbid ? inside : !inside);
}

Outcome check_frequency(const Frequency& c, std::span<const Timestamp> intakes, Timestamp period_start) {
    const Timestamp end = period_start + duration_minutes(1, c.unit);
    const auto count = std::count_if(intakes.begin(), intakes.end(),
                                     [&](Timestamp t) { return t >= period_start && t < end; });
    return from_bool(count != c.n);
}

Outcome check_interval(const Interval& c, std::span<const Timestamp> intakes) {
    std::vector<Timestamp> sorted(intakes.begin(), intakes.end());
    std::sort(sorted.begin(), sorted.end());
    const auto min_gap = duration_minutes(c.n, c.unit);
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] - sorted[i - 1] < min_gap) return Outcome::violation;
    return Outcome::ok;
}

Outcome check_time_of_day(const TimeOfDay& c, Timestamp med, const DaypartBounds& bounds) {
    return from_bool(!in_clock_range(clock_of(med), bounds.of(c.part)));
}

Outcome check_time_dependency(const TimeDependency& c, Timestamp med, std::optional<int> reference_clock) {
    const std::optional<int> t = c.time.is_same_time() ? reference_clock : std::optional<int>(c.time.minutes());
    if (!t) return Outcome::indeterminate;
    const int clock = clock_of(med);
    return from_bool(c.prep == DependencyPrep::before ? clock >= *t : clock <= *t);
}

Outcome check_imprecise_dependency(const ImpreciseDependency& c, Timestamp act, Timestamp med) {
    return from_bool(c.prep == DependencyPrep::before ? med >= act : med <= act);
}

// ---------------------------------------------------------------------------

namespace {

void collect_required(const Mtc& m, const RuleContext& ctx, std::set<std::string>& out) {
    out.insert(ctx.medication);
    if (const auto* v1 = m.get_if<DefinitiveDependency>()) out.insert(v1->act);
    if (const auto* v4 = m.get_if<ImpreciseDependency>()) out.insert(v4->act);
    if (const auto* c = m.get_if<Compound>())
        for (const auto& p : c->parts) collect_required(p, ctx, out);
    if (const auto* n = m.get_if<Negated>()) collect_required(*n->inner, ctx, out);
}

Timestamp nearest(const std::vector<Timestamp>& acts, Timestamp med) {
    Timestamp best = acts.front();
    for (auto t : acts) {
        const auto d = std::llabs(t - med), bd = std::llabs(best - med);
        if (d < bd || (d == bd && t < best)) best = t;
    }
    return best;
}

class Evaluator {
public:
    Evaluator(const FrameTimes& frame, const RuleContext& ctx, std::string* explanation)
        : frame_(frame), ctx_(ctx), why_(explanation) {}

    Outcome run(const Mtc& m) {
        if (const auto* c = m.get_if<Compound>()) {
            bool indeterminate = false;
            Outcome result = Outcome::ok;
            for (const auto& p : c->parts) {
                const auto o = run(p);
                if (o == Outcome::violation) result = Outcome::violation;
                indeterminate |= o == Outcome::indeterminate;
            }
            return result == Outcome::violation ? result : (indeterminate ? Outcome::indeterminate : Outcome::ok);
        }
        if (const auto* n = m.get_if<Negated>()) {
            if (ctx_.negation == NegationMode::ignore) return Outcome::ok;
            const auto o = run(*n->inner);
            if (o == Outcome::indeterminate) return o;
            note(o == Outcome::ok ? "negated constraint's inner rule holds" : "");
            return o == Outcome::ok ? Outcome::violation : Outcome::ok;
        }

        const auto* meds = list(ctx_.medication);
        if (meds == nullptr) return unlabeled(ctx_.medication);

        if (const auto* v2 = m.get_if<Frequency>()) {
            const auto o = check_frequency(*v2, *meds, frame_.start);
            if (o == Outcome::violation) note(std::to_string(meds->size()) + " intakes in the horizon");
            return o;
        }
        if (const auto* v3 = m.get_if<Interval>()) {
            const auto o = check_interval(*v3, *meds);
            if (o == Outcome::violation) note("consecutive intakes closer than " + std::to_string(duration_minutes(v3->n, v3->unit)) + " minutes");
            return o;
        }
        if (meds->empty()) return missing(ctx_.medication);

        const std::vector<Timestamp>* acts = nullptr;
        std::string act_name;
        if (const auto* v1 = m.get_if<DefinitiveDependency>()) act_name = v1->act;
        if (const auto* v4 = m.get_if<ImpreciseDependency>()) act_name = v4->act;
        if (!act_name.empty()) {
            acts = list(act_name);
            if (acts == nullptr) return unlabeled(act_name);
            if (acts->empty()) return missing(act_name);
        }

        for (auto med : *meds) {
            Outcome o = Outcome::ok;
            std::string detail;
            if (const auto* v1 = m.get_if<DefinitiveDependency>()) {
                // forbid: any act occurrence can put the intake inside its window;
                // require: the intake must sit inside some occurrence's window.
                const bool forbid = ctx_.polarity == DependencyPolarity::forbid;
                o = forbid ? Outcome::ok : Outcome::violation;
                for (auto act : *acts) {
                    const bool inside =
                        check_definitive_dependency(*v1, act, med, DependencyPolarity::forbid) == Outcome::violation;
                    if (inside) {
                        o = forbid ? Outcome::violation : Outcome::ok;
                        detail = "intake " + clock_text(med) + " vs " + act_name + " " + clock_text(act);
                        break;
                    }
                }
                if (detail.empty()) detail = "intake " + clock_text(med) + " outside every " + act_name + " window";
            } else if (const auto* v4 = m.get_if<ImpreciseDependency>()) {
                const auto act = nearest(*acts, med);
                o = check_imprecise_dependency(*v4, act, med);
                detail = "intake " + clock_text(med) + " vs " + act_name + " " + clock_text(act);
            } else if (const auto* v5 = m.get_if<TimeDependency>()) {
                o = check_time_dependency(*v5, med, ctx_.reference_clock);
                detail = "intake " + clock_text(med);
            } else if (const auto* v6 = m.get_if<Consistency>()) {
                const std::optional<int> ref =
                    v6->time.is_same_time() ? ctx_.reference_clock : std::optional<int>(v6->time.minutes());
                if (!ref) return Outcome::indeterminate;
                o = check_consistency(med, *ref, ctx_.consistency_window);
                detail = "intake " + clock_text(med) + " vs reference " + format_clock(*ref);
            } else if (const auto* v7 = m.get_if<TimeOfDay>()) {
                o = check_time_of_day(*v7, med, ctx_.dayparts);
                detail = "intake " + clock_text(med) + " vs " + std::string(to_string(v7->part));
            }
            if (o != Outcome::ok) {
                if (o == Outcome::violation) note(detail);
                return o;
            }
        }
        return Outcome::ok;
    }

private:
    const std::vector<Timestamp>* list(const std::string& behavior) const {
        auto it = frame_.occurrences.find(behavior);
        return it == frame_.occurrences.end() ? nullptr : &it->second;
    }
    Outcome unlabeled(const std::string& behavior) {
        note(behavior + " is not labeled");
        return Outcome::indeterminate;
    }
    Outcome missing(const std::string& behavior) {
        note("no " + behavior + " in the horizon");
        return Outcome::indeterminate;
    }
    void note(const std::string& text) {
        if (why_ != nullptr && why_->empty()) *why_ = text;
    }

    const FrameTimes& frame_;
    const RuleContext& ctx_;
    std::string* why_;
};

}  // namespace

FrameTimes frame_from_log(const RhbLog& log, Timestamp start, int horizon_minutes,
                          const std::vector<std::string>& behaviors) {
    FrameTimes f;
    f.start = start;
    for (const auto& b : behaviors) f.occurrences[b];
    const Timestamp end = start + horizon_minutes;
    for (const auto& e : log.entries) {
        if (e.start < start || e.start >= end) continue;
        if (auto it = f.occurrences.find(e.behavior); it != f.occurrences.end()) it->second.push_back(e.start);
    }
    return f;
}

std::vector<std::string> required_behaviors(const Mtc& m, const RuleContext& ctx) {
    std::set<std::string> out;
    collect_required(m, ctx, out);
    return {out.begin(), out.end()};
}

Outcome evaluate_rule(const Mtc& m, const FrameTimes& frame, const RuleContext& ctx, std::string* explanation) {
    return Evaluator(frame, ctx, explanation).run(m);
}

std::vector<ViolationVerdict> predict_violations(const std::vector<EvaluationFrame>& frames, const std::vector<Mtc>& mtcs,
                                                 const RuleContext& ctx, bool strict) {
    std::vector<ViolationVerdict> out;
    out.reserve(frames.size() * mtcs.size());
    for (const auto& f : frames)
        for (const auto& m : mtcs) {
            if (strict)
                for (const auto& b : required_behaviors(m, ctx))
                    if (!f.predicted.occurrences.contains(b) || !f.actual.occurrences.contains(b))
                        throw MissingBehavior("frame " + f.id + " lacks '" + b + "'");
            ViolationVerdict v{m, f.id, Outcome::indeterminate, Outcome::indeterminate, {}};
            std::string why_pred, why_act;
            v.predicted = evaluate_rule(m, f.predicted, ctx, &why_pred);
            v.actual = evaluate_rule(m, f.actual, ctx, &why_act);
            if (!why_pred.empty()) v.explanation += "predicted: " + why_pred;
            if (!why_act.empty()) v.explanation += (v.explanation.empty() ? "" : "; ") + std::string("actual: ") + why_act;
            out.push_back(std::move(v));
        }
    return out;
}

// ---------------------------------------------------------------------------

std::string type_label(const Mtc& m) {
    if (const auto* c = m.get_if<Compound>()) {
        std::set<std::string> types;
        for (const auto& p : c->parts) types.insert(type_label(p));
        return types.size() == 1 ? *types.begin() : "COMPOUND";
    }
    return std::string(to_string(m.kind()));
}

std::vector<ViolationMetrics> evaluate_violations(const std::vector<ViolationVerdict>& verdicts) {
    struct Counts {
        std::size_t n[2][2] = {{0, 0}, {0, 0}};  // [actual][predicted], 1 = violation
        std::size_t excluded = 0;
    };
    std::map<std::string, Counts> groups;
    for (const auto& v : verdicts) {
        auto& c = groups[type_label(v.mtc)];
        if (v.predicted == Outcome::indeterminate || v.actual == Outcome::indeterminate) {
            ++c.excluded;
            continue;
        }
        ++c.n[v.actual == Outcome::violation][v.predicted == Outcome::violation];
    }
    std::vector<ViolationMetrics> out;
    for (const auto& [type, c] : groups) {
        ViolationMetrics m;
        m.type = type;
        m.excluded = c.excluded;
        m.support_ok = c.n[0][0] + c.n[0][1];
        m.support_violation = c.n[1][0] + c.n[1][1];
        m.evaluated = m.support_ok + m.support_violation;
        if (m.evaluated > 0) {
            const auto total = static_cast<double>(m.evaluated);
            double p = 0.0, r = 0.0;
            for (int k = 0; k < 2; ++k) {
                const auto support = static_cast<double>(c.n[k][0] + c.n[k][1]);
                const auto predicted = static_cast<double>(c.n[0][k] + c.n[1][k]);
                const auto tp = static_cast<double>(c.n[k][k]);
                if (predicted > 0) p += support * (tp / predicted);
                if (support > 0) r += support * (tp / support);
            }
            m.precision = p / total;
            m.recall = r / total;
            m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
            m.accuracy = static_cast<double>(c.n[0][0] + c.n[1][1]) / total;
        }
        out.push_back(m);
    }
    return out;
}

int median_clock(std::span<const Timestamp> intakes) {
    if (intakes.empty()) throw EmptySchedule("no intakes to take a reference clock from");
    std::vector<int> clocks;
    for (auto t : intakes) clocks.push_back(clock_of(t));
    std::sort(clocks.begin(), clocks.end());
    int best = clocks.front();
    long best_cost = -1;
    for (int c : clocks) {
        long cost = 0;
        for (int d : clocks) cost += circular_clock_distance(c, d);
        if (best_cost < 0 || cost < best_cost) best = c, best_cost = cost;
    }
    return best;
}

std::string format_violation_report(const std::vector<ViolationVerdict>& verdicts,
                                    const std::vector<ViolationMetrics>& metrics) {
    std::string out = "frame\tconstraint\tpredicted\tactual\texplanation\n";
    for (const auto& v : verdicts)
        out += v.frame_id + "\t" + to_string(v.mtc) + "\t" + std::string(to_string(v.predicted)) + "\t" +
               std::string(to_string(v.actual)) + "\t" + v.explanation + "\n";
    out += "\ntype\tevaluated\texcluded\tsupport_violation\tsupport_ok\tprecision\trecall\tf1\taccuracy\n";
    char buf[256];
    for (const auto& m : metrics) {
        std::snprintf(buf, sizeof buf, "%s\t%zu\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", m.type.c_str(), m.evaluated,
                      m.excluded, m.support_violation, m.support_ok, m.precision, m.recall, m.f1, m.accuracy);
        out += buf;
    }
    return out;
}

}  // namespace actsafe
