// Command-line front end: one binary, one subcommand per pipeline stage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "actsafe/error.hpp"
#include "actsafe/extractor.hpp"
#include "actsafe/metrics.hpp"
#include "actsafe/pipeline.hpp"
#include "actsafe/synth.hpp"

namespace fs = std::filesystem;
using namespace actsafe;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-") {
        std::cout << content;
        return;
    }
    const fs::path p(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw ConfigError("cannot write " + out);
}

Timestamp timestamp_arg(const std::string& text) {
    auto t = parse_timestamp(text);
    if (!t && text.size() == 10) t = parse_timestamp(text + "T00:00");
    if (!t) throw ConfigError("cannot parse timestamp '" + text + "'");
    return *t;
}

ActivityVocabulary vocabulary_arg(const std::string& path) {
    return path.empty() ? ActivityVocabulary::builtin() : ActivityVocabulary::load(path);
}

RhbLog log_arg(const std::string& path, const ActivityVocabulary& vocab) {
    LogParseOptions options;
    options.vocab = &vocab;
    auto log = load_log(path, options);
    if (log.patient_id.empty()) log.patient_id = fs::path(path).stem().string();
    return log;
}

/// Flat `key = value` (or `key: value`) rule settings for check-violations.
struct RuleFile {
    RuleContext rules;
    int frame_clock = 0;
    std::optional<Timestamp> from, to;
};

RuleFile parse_rule_file(std::string_view text) {
    RuleFile r;
    std::istringstream in{std::string(text)};
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto sep = line.find_first_of("=:");
        if (sep == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        const auto key = trim(line.substr(0, sep));
        const auto value = trim(line.substr(sep + 1));
        auto clock = [&] {
            auto c = parse_clock(value);
            if (!c) throw ConfigError("line " + std::to_string(line_no) + ": '" + value + "' is not HH:MM");
            return *c;
        };
        try {
            if (key == "consistency_window") r.rules.consistency_window = std::stoi(value);
            else if (key == "reference_clock") r.rules.reference_clock = clock();
            else if (key == "frame_clock") r.frame_clock = clock();
            else if (key == "medication") r.rules.medication = value;
            else if (key == "polarity") r.rules.polarity = value == "require" ? DependencyPolarity::require : DependencyPolarity::forbid;
            else if (key == "negation") r.rules.negation = value == "ignore" ? NegationMode::ignore : NegationMode::invert;
            else if (key == "from") r.from = day_start(timestamp_arg(value));
            else if (key == "to") r.to = day_start(timestamp_arg(value));
            else if (auto part = day_part_from(key)) {
                const auto dash = value.find('-');
                if (dash == std::string::npos) throw ConfigError("daypart '" + key + "' needs HH:MM-HH:MM");
                const auto a = parse_clock(trim(value.substr(0, dash))), b = parse_clock(trim(value.substr(dash + 1)));
                if (!a || !b) throw ConfigError("daypart '" + key + "' needs HH:MM-HH:MM");
                r.rules.dayparts.ranges[*part] = {*a, *b};
            } else {
                throw ConfigError("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("line " + std::to_string(line_no) + ": bad number '" + value + "'");
        }
    }
    return r;
}

/// Minutes of history a model needs before its first prediction.
std::int64_t history_needed(const AnyModel& m) {
    if (const auto* h = std::get_if<HerbertModel>(&m)) return static_cast<std::int64_t>(h->k_ctx) * h->x;
    return kMinutesPerDay;
}

std::vector<Timestamp> day_range(const RhbLog& log, Timestamp from, std::optional<Timestamp> to) {
    Timestamp last = day_start(log.entries.front().start);
    for (const auto& e : log.entries) last = std::max(last, day_start(e.start));
    if (to) last = std::min(last, *to);
    std::vector<Timestamp> out;
    for (Timestamp d = from; d <= last; d = d + kMinutesPerDay) out.push_back(d);
    return out;
}

std::string metrics_summary(const std::vector<ViolationMetrics>& metrics) {
    std::string out;
    for (const auto& m : metrics) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-8s P=%.4f R=%.4f F1=%.4f (n=%zu, excluded %zu)\n", m.type.c_str(), m.precision,
                      m.recall, m.f1, m.evaluated, m.excluded);
        out += buf;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"actsafe: medical temporal constraints, behavior prediction and violation checks"};
    app.require_subcommand(1);

    // extract ---------------------------------------------------------------
    std::string guideline, vocab_path, out, corpus;
    auto* extract = app.add_subcommand("extract", "Extract constraint records from a guideline or a corpus");
    auto* guideline_opt = extract->add_option("--guideline", guideline, "Plain-text guideline")->check(CLI::ExistingFile);
    extract->add_option("--corpus", corpus, "TSV corpus (id<TAB>statement); writes id<TAB>types lines")
        ->check(CLI::ExistingFile)
        ->excludes(guideline_opt);
    extract->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);
    extract->add_option("--out", out, "Output file (default stdout)");

    // eval-extract ----------------------------------------------------------
    std::string pred_path, gold_path;
    auto* eval_extract = app.add_subcommand("eval-extract", "Score predicted constraint types against gold labels");
    eval_extract->add_option("--pred", pred_path, "id<TAB>types predictions")->required()->check(CLI::ExistingFile);
    eval_extract->add_option("--gold", gold_path, "id<TAB>types gold labels")->required()->check(CLI::ExistingFile);
    eval_extract->add_option("--out", out, "Output file (default stdout)");

    // vectorize -------------------------------------------------------------
    std::string log_path;
    int window = 30;
    auto* vectorize = app.add_subcommand("vectorize", "Basis-vectorize one activity log");
    vectorize->add_option("--log", log_path, "Activity log")->required()->check(CLI::ExistingFile);
    vectorize->add_option("--window", window, "Window size in minutes")->check(CLI::Range(1, kMinutesPerDay));
    vectorize->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);
    vectorize->add_option("--out", out, "Output file (default stdout)");

    // train -----------------------------------------------------------------
    std::string behavior = "take_medicine", model_kind = "herbert", split_date;
    int weeks = 1, epochs = 50, hidden = 64;
    std::size_t stride = 1;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    auto* train = app.add_subcommand("train", "Train a next-occurrence predictor");
    train->add_option("--log", log_path, "Activity log")->required()->check(CLI::ExistingFile);
    train->add_option("--behavior", behavior, "Target behavior");
    train->add_option("--model", model_kind, "prior | ar | lstm | herbert")
        ->check(CLI::IsMember({"prior", "ar", "lstm", "herbert"}));
    train->add_option("--window", window, "Window size in minutes")->check(CLI::Range(1, kMinutesPerDay));
    train->add_option("--weeks", weeks, "Context length in weeks")->check(CLI::PositiveNumber);
    train->add_option("--seed", seed, "Random seed");
    train->add_option("--stride", stride, "Frame stride")->check(CLI::PositiveNumber);
    train->add_option("--hidden", hidden, "LSTM hidden size")->check(CLI::PositiveNumber);
    train->add_option("--epochs", epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    train->add_option("--learning-rate", learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    train->add_option("--split-date", split_date, "Train only on data before this date");
    train->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);
    train->add_option("--out", out, "Model file")->required();

    // predict ---------------------------------------------------------------
    std::string model_path, at;
    auto* predict = app.add_subcommand("predict", "Predict the next occurrence after a timestamp");
    predict->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    predict->add_option("--log", log_path, "Activity log")->required()->check(CLI::ExistingFile);
    predict->add_option("--at", at, "Prediction time")->required();
    predict->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);

    // eval ------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "RMSE in windows over the frames after a split date");
    eval->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    eval->add_option("--log", log_path, "Activity log")->required()->check(CLI::ExistingFile);
    eval->add_option("--split-date", split_date, "First held-out date")->required();
    eval->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);

    // check-violations ------------------------------------------------------
    std::vector<std::string> model_paths;
    std::string constraints_path, rule_path, ledger_path;
    auto* check = app.add_subcommand("check-violations", "Predict constraint violations per day");
    auto* models_opt = check->add_option("--model", model_paths, "Model file, one per predicted behavior")
                           ->check(CLI::ExistingFile);
    auto* ledger_opt = check->add_option("--ledger", ledger_path, "Score a simulator ledger as a perfect predictor")
                           ->check(CLI::ExistingFile)
                           ->excludes(models_opt);
    check->add_option("--log", log_path, "Activity log")->check(CLI::ExistingFile)->needs(models_opt);
    check->add_option("--constraints", constraints_path, "Constraint records")->check(CLI::ExistingFile)->needs(models_opt);
    check->add_option("--config", rule_path, "Flat key = value rule settings")->check(CLI::ExistingFile);
    check->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);
    check->add_option("--out", out, "Report file (default stdout)");

    // metrics ---------------------------------------------------------------
    std::string logs_dir;
    std::vector<int> windows{15, 30, 60};
    auto* metrics = app.add_subcommand("metrics", "Regularity, similarity heatmap and sparsity tables");
    metrics->add_option("--logs", logs_dir, "Directory of logs")->required()->check(CLI::ExistingPath);
    metrics->add_option("--behavior", behavior, "Behavior whose schedule is compared");
    metrics->add_option("--window", window, "Window size in minutes")->check(CLI::Range(1, kMinutesPerDay));
    metrics->add_option("--sparsity-windows", windows, "Window sizes for the sparsity table")->delimiter(',');
    metrics->add_option("--vocab", vocab_path, "Activity vocabulary")->check(CLI::ExistingFile);
    metrics->add_option("--out", out, "Output directory")->required();

    // simulate --------------------------------------------------------------
    std::string spec_path;
    std::optional<std::uint64_t> seed_override;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort with a ground-truth ledger");
    simulate->add_option("--spec", spec_path, "Cohort spec")->required()->check(CLI::ExistingFile);
    simulate->add_option("--seed", seed_override, "Override the spec's seed");
    simulate->add_option("--out", out, "Output directory")->required();

    // run / demo ------------------------------------------------------------
    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the full pipeline from a JSON config");
    run->add_option("--config", config_path, "Pipeline config")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Override the output directory");
    auto* demo = app.add_subcommand("demo", "Run the bundled demo pipeline over a seeded synthetic cohort");
    demo->add_option("--out", out, "Output directory (default actsafe-demo)");
    auto* config_dump = app.add_subcommand("config", "Print the effective pipeline config");
    config_dump->add_option("--config", config_path, "Pipeline config")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto vocab = vocabulary_arg(vocab_path);

        if (extract->parsed()) {
            if (!corpus.empty()) {
                std::string labels;
                std::istringstream in(slurp(corpus));
                const auto templates = enumerate_templates(vocab);
                for (std::string line; std::getline(in, line);) {
                    if (line.empty() || line[0] == '#') continue;
                    const auto tab = line.find('\t');
                    if (tab == std::string::npos) throw ConfigError("corpus line without a tab: " + line);
                    std::string types;
                    for (const auto& t : type_tags(extract_from_guideline(line.substr(tab + 1), templates)))
                        types += (types.empty() ? "" : ",") + t;
                    labels += line.substr(0, tab) + "\t" + types + "\n";
                }
                emit(out, labels);
            } else {
                if (guideline.empty()) throw ConfigError("extract needs --guideline or --corpus");
                const auto text = slurp(guideline);
                const auto sentences = split_sentences(text);
                std::string records;
                for (const auto& r : extract_from_guideline(text, vocab)) {
                    const auto& s = sentences.at(r.statement).text;
                    const auto begin = r.spans.front().begin, end = r.spans.back().end;
                    records += "# sentence " + std::to_string(r.statement + 1) + " [" + std::to_string(begin) + "," +
                               std::to_string(end) + "): " + s.substr(begin, end - begin) + (r.range ? " (range)" : "") +
                               "\n";
                    records += serialize(canonicalize(r.mtc, vocab)) + "\n";
                }
                emit(out, records);
            }
        } else if (eval_extract->parsed()) {
            emit(out, format_report(evaluate_extraction(parse_type_labels(slurp(pred_path)),
                                                        parse_type_labels(slurp(gold_path)))));
        } else if (vectorize->parsed()) {
            emit(out, basis_vectorize(log_arg(log_path, vocab), window).to_text());
        } else if (train->parsed()) {
            PredictorConfig cfg;
            cfg.kind = predictor_kind_from(model_kind);
            cfg.x = window;
            cfg.weeks = weeks;
            cfg.stride = stride;
            cfg.train.hidden = hidden;
            cfg.train.max_epochs = epochs;
            cfg.train.learning_rate = learning_rate;
            cfg.train.seed = seed;
            std::optional<Timestamp> until;
            if (!split_date.empty()) until = timestamp_arg(split_date);
            save_model(train_predictor(log_arg(log_path, vocab), behavior, cfg, until), out);
        } else if (predict->parsed()) {
            const auto model = load_model(model_path);
            const auto p = predict_at(model, log_arg(log_path, vocab), timestamp_arg(at));
            std::printf("%s\t%.6f\t%s\n", model_target(model).c_str(), p.windows,
                        p.timestamp ? format_iso8601(*p.timestamp).c_str() : "-");
        } else if (eval->parsed()) {
            const auto model = load_model(model_path);
            const auto log = log_arg(log_path, vocab);
            const int x = model_window(model);
            std::size_t k_ctx = 1;
            if (const auto* h = std::get_if<HerbertModel>(&model)) k_ctx = h->k_ctx;
            const auto bv = basis_vectorize(log, x);
            const auto frames = make_frames(bv, model_target(model), k_ctx, 1);
            const auto split = split_by_date(bv, frames, timestamp_arg(split_date));
            if (split.test.empty()) throw EmptyTrainingSet("no frames after " + split_date);
            std::vector<double> truth;
            for (const auto& f : split.test) truth.push_back(f.y);
            std::printf("%s\t%zu\t%.6f\n", model_target(model).c_str(), truth.size(),
                        evaluate_rmse(predict_frames(model, log, bv, split.test), truth));
        } else if (check->parsed()) {
            RuleFile rf;
            if (!rule_path.empty()) rf = parse_rule_file(slurp(rule_path));
            std::vector<ViolationVerdict> verdicts;
            if (!ledger_path.empty()) {
                verdicts = ledger_verdicts(parse_ledger(slurp(ledger_path)));
            } else {
                if (model_paths.empty() || log_path.empty() || constraints_path.empty())
                    throw ConfigError("check-violations needs --model, --log and --constraints (or --ledger)");
                const auto log = log_arg(log_path, vocab);
                if (log.entries.empty()) throw EmptyLog("log has no entries");
                std::vector<AnyModel> models;
                std::vector<std::string> targets;
                std::int64_t history = 0;
                for (const auto& p : model_paths) {
                    models.push_back(load_model(p));
                    targets.push_back(model_target(models.back()));
                    history = std::max(history, history_needed(models.back()));
                }
                const auto mtcs = parse_constraint_records(slurp(constraints_path));
                if (!rf.rules.reference_clock) {
                    std::vector<Timestamp> intakes;
                    for (const auto& e : log.entries)
                        if (e.behavior == rf.rules.medication && (!rf.from || e.start < *rf.from)) intakes.push_back(e.start);
                    if (!intakes.empty()) rf.rules.reference_clock = median_clock(intakes);
                }
                const Timestamp earliest =
                    day_start(log.entries.front().start + history + kMinutesPerDay - 1) + kMinutesPerDay;
                const auto days = day_range(log, rf.from ? std::max(*rf.from, earliest) : earliest, rf.to);
                const auto predicted = predicted_log(models, log, days, rf.frame_clock);
                verdicts = predict_violations(violation_frames(log, predicted, targets, days, rf.frame_clock), mtcs, rf.rules);
            }
            const auto metrics_rows = evaluate_violations(verdicts);
            emit(out, format_violation_report(verdicts, metrics_rows));
            if (!out.empty() && out != "-") std::cout << metrics_summary(metrics_rows);
        } else if (metrics->parsed()) {
            std::vector<std::string> ids, schedule_ids;
            std::vector<std::vector<double>> sparsities, schedules;
            for (const auto& p : list_log_files(logs_dir)) {
                auto log = log_arg(p.string(), vocab);
                if (log.entries.empty()) continue;
                ids.push_back(p.stem().string());
                std::vector<double> row;
                for (int x : windows) row.push_back(sparsity(basis_vectorize(log, x)));
                sparsities.push_back(row);
                auto s = schedule_vector(log, behavior, window);
                if (s.empty()) {
                    std::cerr << "skipping " << ids.back() << ": fewer than two '" << behavior << "' entries\n";
                    continue;
                }
                schedule_ids.push_back(ids.back());
                schedules.push_back(std::move(s));
            }
            fs::create_directories(out);
            emit((fs::path(out) / "sparsity.tsv").string(), format_sparsity(ids, windows, sparsities));
            emit((fs::path(out) / "regularity.tsv").string(), format_regularity(schedule_ids, regularity_scores(schedules)));
            emit((fs::path(out) / "heatmap.tsv").string(), format_heatmap(schedule_ids, similarity_heatmap(schedules)));
        } else if (simulate->parsed()) {
            auto spec = load_cohort_spec(spec_path);
            if (seed_override) spec.seed = *seed_override;
            for (const auto& p : generate_cohort(spec)) {
                emit((fs::path(out) / "logs" / (p.log.patient_id + ".jsonl")).string(), write_log(p.log));
                emit((fs::path(out) / "ledgers" / (p.log.patient_id + ".ledger.jsonl")).string(), write_ledger(p.ledger));
            }
        } else if (run->parsed() || demo->parsed()) {
            auto config = load_pipeline_config(run->parsed() ? fs::path(config_path)
                                                             : fs::path(ACTSAFE_DATA_DIR) / "demo" / "config.json");
            if (!out.empty()) config.output = out;
            else if (demo->parsed()) config.output = "actsafe-demo";
            const auto result = run_pipeline(config, &std::cerr);
            std::cout << result.summary << "\nreport: " << result.report.string() << "\n";
        } else if (config_dump->parsed()) {
            std::cout << pipeline_config_json(config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path));
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
