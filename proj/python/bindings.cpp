#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "actsafe/error.hpp"
#include "actsafe/extractor.hpp"
#include "actsafe/metrics.hpp"
#include "actsafe/pipeline.hpp"
#include "actsafe/synth.hpp"

namespace py = pybind11;
using namespace actsafe;

namespace {

const ActivityVocabulary& vocabulary_or_builtin(const std::optional<ActivityVocabulary>& v) {
    return v ? *v : ActivityVocabulary::builtin();
}

Timestamp timestamp_arg(const std::string& text) {
    auto t = parse_timestamp(text);
    if (!t && text.size() == 10) t = parse_timestamp(text + "T00:00");
    if (!t) throw ConfigError("cannot parse timestamp '" + text + "'");
    return *t;
}

py::dict metrics_dict(const ViolationMetrics& m) {
    py::dict d;
    d["type"] = m.type;
    d["evaluated"] = m.evaluated;
    d["excluded"] = m.excluded;
    d["support_violation"] = m.support_violation;
    d["support_ok"] = m.support_ok;
    d["precision"] = m.precision;
    d["recall"] = m.recall;
    d["f1"] = m.f1;
    d["accuracy"] = m.accuracy;
    return d;
}

py::list metrics_list(const std::vector<ViolationMetrics>& rows) {
    py::list out;
    for (const auto& m : rows) out.append(metrics_dict(m));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Medical temporal constraints: extraction, behavior prediction and violation checks";

    static py::exception<Error> base(m, "ActsafeError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    py::class_<ActivityVocabulary>(m, "Vocabulary")
        .def_static("parse", &ActivityVocabulary::parse, py::arg("text"))
        .def_static("builtin", []() { return ActivityVocabulary::builtin(); })
        .def("lookup", &ActivityVocabulary::lookup, py::arg("surface"))
        .def_property_readonly("names", [](const ActivityVocabulary& v) {
            return std::vector<std::string>(v.canonical_names().begin(), v.canonical_names().end());
        })
        .def("to_text", &ActivityVocabulary::to_text);

    m.def(
        "extract",
        [](const std::string& guideline, const std::optional<ActivityVocabulary>& vocab) {
            const auto& v = vocabulary_or_builtin(vocab);
            py::list out;
            for (const auto& r : extract_from_guideline(guideline, v)) {
                const auto c = canonicalize(r.mtc, v);
                py::dict d;
                d["record"] = serialize(c);
                d["text"] = to_string(c);
                d["type"] = type_label(c);
                d["sentence"] = r.statement;
                py::list spans;
                for (const auto& s : r.spans) spans.append(py::make_tuple(s.begin, s.end));
                d["spans"] = spans;
                d["range"] = r.range;
                out.append(d);
            }
            return out;
        },
        py::arg("guideline"), py::arg("vocabulary") = std::nullopt,
        "Constraints found in a guideline, canonicalized, in document order.");

    m.def(
        "canonicalize",
        [](const std::string& record, const std::optional<ActivityVocabulary>& vocab) {
            return serialize(canonicalize(deserialize(record), vocabulary_or_builtin(vocab)));
        },
        py::arg("record"), py::arg("vocabulary") = std::nullopt);

    m.def(
        "describe", [](const std::string& record) { return to_string(deserialize(record)); }, py::arg("record"),
        "Grammar notation of one constraint record.");

    m.def(
        "basis_vectorize",
        [](const std::string& log_text, int window) {
            const auto bv = basis_vectorize(parse_log(log_text), window);
            py::array_t<std::uint8_t> cells({bv.rows(), bv.cols()});
            auto w = cells.mutable_unchecked<2>();
            for (std::size_t i = 0; i < bv.rows(); ++i)
                for (std::size_t j = 0; j < bv.cols(); ++j) w(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = bv.at(i, j);
            return py::make_tuple(cells, bv.behaviors(), format_iso8601(bv.origin()));
        },
        py::arg("log"), py::arg("window"),
        "(cells, behaviors, origin) for a JSONL log; cells is an M x K uint8 array.");

    m.def(
        "sparsity", [](const std::string& log_text, int window) { return sparsity(basis_vectorize(parse_log(log_text), window)); },
        py::arg("log"), py::arg("window"));

    m.def(
        "schedule_vector",
        [](const std::string& log_text, const std::string& behavior, int window) {
            return schedule_vector(parse_log(log_text), behavior, window);
        },
        py::arg("log"), py::arg("behavior"), py::arg("window"));
    m.def(
        "schedule_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) { return schedule_similarity(a, b); },
        py::arg("a"), py::arg("b"));
    m.def("regularity_scores", &regularity_scores, py::arg("schedules"));
    m.def("similarity_heatmap", &similarity_heatmap, py::arg("schedules"));

    m.def(
        "train",
        [](const std::string& log_text, const std::string& behavior, const std::string& kind, int window, int weeks,
           std::size_t stride, int hidden, int max_epochs, double learning_rate, std::uint64_t seed,
           const std::optional<std::string>& until) {
            PredictorConfig cfg;
            cfg.kind = predictor_kind_from(kind);
            cfg.x = window;
            cfg.weeks = weeks;
            cfg.stride = stride;
            cfg.train.hidden = hidden;
            cfg.train.max_epochs = max_epochs;
            cfg.train.learning_rate = learning_rate;
            cfg.train.seed = seed;
            std::optional<Timestamp> cut;
            if (until) cut = timestamp_arg(*until);
            const auto model = train_predictor(parse_log(log_text), behavior, cfg, cut);
            return py::bytes(encode_model(model));
        },
        py::arg("log"), py::arg("behavior"), py::arg("kind") = "herbert", py::arg("window") = 30, py::arg("weeks") = 1,
        py::arg("stride") = 1, py::arg("hidden") = 64, py::arg("max_epochs") = 50, py::arg("learning_rate") = 1e-3,
        py::arg("seed") = 1, py::arg("until") = std::nullopt,
        "Trains a predictor and returns the encoded model file.");

    m.def(
        "predict",
        [](const py::bytes& model, const std::string& log_text, const std::string& at) {
            const auto p = predict_at(decode_model(model), parse_log(log_text), timestamp_arg(at));
            return py::make_tuple(p.windows, p.timestamp ? py::object(py::str(format_iso8601(*p.timestamp))) : py::none());
        },
        py::arg("model"), py::arg("log"), py::arg("at"),
        "(windows, timestamp) of the next occurrence after `at`.");

    m.def(
        "check",
        [](const std::string& record, const std::map<std::string, std::vector<std::string>>& occurrences,
           const std::string& frame_start, std::optional<std::string> reference_clock, int consistency_window) {
            FrameTimes f;
            f.start = timestamp_arg(frame_start);
            for (const auto& [b, times] : occurrences) {
                auto& list = f.occurrences[b];
                for (const auto& t : times) list.push_back(timestamp_arg(t));
            }
            RuleContext ctx;
            ctx.consistency_window = consistency_window;
            if (reference_clock) {
                auto c = parse_clock(*reference_clock);
                if (!c) throw ConfigError("reference clock must be HH:MM");
                ctx.reference_clock = *c;
            }
            return std::string(to_string(evaluate_rule(deserialize(record), f, ctx)));
        },
        py::arg("record"), py::arg("occurrences"), py::arg("frame_start"), py::arg("reference_clock") = std::nullopt,
        py::arg("consistency_window") = 15,
        "'ok', 'violation' or 'indeterminate' for one constraint over one frame.");

    m.def(
        "simulate",
        [](const std::string& spec_text, std::optional<std::uint64_t> seed) {
            auto spec = parse_cohort_spec(spec_text);
            if (seed) spec.seed = *seed;
            py::list out;
            for (const auto& p : generate_cohort(spec))
                out.append(py::make_tuple(p.log.patient_id, write_log(p.log), write_ledger(p.ledger)));
            return out;
        },
        py::arg("spec"), py::arg("seed") = std::nullopt, "[(patient_id, log_jsonl, ledger_jsonl)] for a cohort spec.");

    m.def(
        "ledger_metrics", [](const std::string& ledger) { return metrics_list(evaluate_violations(ledger_verdicts(parse_ledger(ledger)))); },
        py::arg("ledger"), "Violation metrics with the ledger standing in for a perfect predictor.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> output) {
            auto config = load_pipeline_config(config_path);
            if (output) config.output = *output;
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(config);
            }
            py::dict d;
            d["summary"] = r.summary;
            d["report"] = r.report;
            d["metrics"] = metrics_list(r.metrics);
            py::list stages;
            for (const auto& s : r.stages) stages.append(py::make_tuple(s.name, s.cache_hit, s.key));
            d["stages"] = stages;
            return d;
        },
        py::arg("config"), py::arg("output") = std::nullopt,
        "Runs every stage from a JSON config and returns the summary, report path, metrics and stage cache status.");
}
