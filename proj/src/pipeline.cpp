#include "actsafe/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "actsafe/error.hpp"
#include "actsafe/extractor.hpp"
#include "actsafe/metrics.hpp"
#include "actsafe/synth.hpp"

namespace fs = std::filesystem;

namespace actsafe {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kCacheVersion = "actsafe-cache 3";

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("cannot write " + p.string());
}

FileSet read_tree(const fs::path& root) {
    FileSet out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    return out;
}

void write_tree(const fs::path& root, const FileSet& files) {
    for (const auto& [rel, content] : files) write_file(root / rel, content);
}

/// Length-prefixed fields, so that ("ab","c") and ("a","bc") differ.
class Hasher {
public:
    Hasher& add(std::string_view s) {
        const auto n = std::to_string(s.size()) + ":";
        h_ = fnv1a(n, h_);
        h_ = fnv1a(s, h_);
        return *this;
    }
    Hasher& add(const FileSet& files) {
        add(std::to_string(files.size()));
        for (const auto& [k, v] : files) add(k).add(v);
        return *this;
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// ---------------------------------------------------------------------------
// Config <-> JSON
// ---------------------------------------------------------------------------

std::string pooling_name(nn::Pooling p) { return p == nn::Pooling::mean ? "mean" : "last"; }

std::string range_text(std::pair<int, int> r) { return format_clock(r.first) + "-" + format_clock(r.second); }

Json path_json(const std::optional<fs::path>& p) { return p ? Json(p->generic_string()) : Json(nullptr); }

Json config_to_json(const PipelineConfig& c) {
    Json j;
    j["logs"] = path_json(c.logs);
    j["simulate"] = path_json(c.simulate);
    j["guidelines"] = Json::array();
    for (const auto& g : c.guidelines) j["guidelines"].push_back(g.generic_string());
    j["constraints"] = path_json(c.constraints);
    j["vocabulary"] = path_json(c.vocabulary);
    j["output"] = c.output.generic_string();
    j["window"] = c.window;
    j["weeks"] = c.weeks;
    j["seed"] = c.seed;
    j["medication"] = c.medication;
    j["train_fraction"] = c.train_fraction;
    const auto& p = c.predictor;
    j["predictor"] = {{"kind", to_string(p.kind)},
                      {"stride", p.stride},
                      {"hidden", p.train.hidden},
                      {"pooling", pooling_name(p.train.pooling)},
                      {"learning_rate", p.train.learning_rate},
                      {"max_epochs", p.train.max_epochs},
                      {"patience", p.train.patience},
                      {"batch_size", p.train.batch_size},
                      {"validation_fraction", p.train.validation_fraction},
                      {"clip_norm", p.train.clip_norm},
                      {"ar_max_p", p.ar.max_p},
                      {"ar_max_d", p.ar.max_d}};
    Json parts = Json::object();
    for (const auto& [part, r] : c.rules.dayparts.ranges) parts[std::string(to_string(part))] = range_text(r);
    j["violations"] = {{"consistency_window", c.rules.consistency_window},
                       {"reference_clock", c.rules.reference_clock ? Json(format_clock(*c.rules.reference_clock)) : Json(nullptr)},
                       {"frame_clock", format_clock(c.frame_clock)},
                       {"polarity", c.rules.polarity == DependencyPolarity::forbid ? "forbid" : "require"},
                       {"negation", c.rules.negation == NegationMode::invert ? "invert" : "ignore"},
                       {"dayparts", parts}};
    j["sparsity_windows"] = c.sparsity_windows;
    return j;
}

void merge(Json& into, const Json& from, const std::string& where) {
    if (!from.is_object()) throw ConfigError(where.empty() ? "config must be a JSON object" : "'" + where + "' must be an object");
    for (const auto& [key, value] : from.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        const bool open_map = where == "violations.dayparts";
        if (!into.contains(key) && !open_map) throw ConfigError("unknown config key '" + path + "'");
        if (into.contains(key) && into[key].is_object() && !open_map) merge(into[key], value, path);
        else into[key] = value;
    }
}

std::string env_name(const std::string& path) {
    std::string out = "ACTSAFE_";
    for (char ch : path) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

void apply_env(Json& j, const std::string& where, const EnvLookup& env) {
    for (auto& [key, value] : j.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (value.is_object()) {
            apply_env(value, path, env);
            continue;
        }
        const auto name = env_name(path);
        auto v = env(name);
        if (!v) continue;
        if (value.is_string() || value.is_null()) {
            value = *v;
        } else {
            try {
                value = Json::parse(*v);
            } catch (const Json::exception&) {
                throw ConfigError(name + ": cannot parse '" + *v + "'");
            }
        }
    }
}

template <typename T>
T field(const Json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("config key '" + where + key + "' has the wrong type");
    }
}

std::optional<fs::path> optional_path(const Json& j, const char* key, const fs::path& base) {
    if (j.at(key).is_null()) return std::nullopt;
    fs::path p = field<std::string>(j, key, "");
    return p.is_absolute() ? p : base / p;
}

int clock_value(const std::string& text, const std::string& key) {
    auto c = parse_clock(text);
    if (!c) throw ConfigError("config key '" + key + "' is not HH:MM");
    return *c;
}

PipelineConfig config_from_json(const Json& j, const fs::path& base) {
    PipelineConfig c;
    c.logs = optional_path(j, "logs", base);
    c.simulate = optional_path(j, "simulate", base);
    const auto& g = j.at("guidelines");
    if (g.is_string()) {
        c.guidelines.push_back(base / g.get<std::string>());
    } else if (g.is_array()) {
        for (const auto& p : g) {
            if (!p.is_string()) throw ConfigError("guidelines must be paths");
            fs::path path = p.get<std::string>();
            c.guidelines.push_back(path.is_absolute() ? path : base / path);
        }
    } else {
        throw ConfigError("guidelines must be a path or a list of paths");
    }
    c.constraints = optional_path(j, "constraints", base);
    c.vocabulary = optional_path(j, "vocabulary", base);
    fs::path out = field<std::string>(j, "output", "");
    c.output = out.is_absolute() ? out : base / out;
    c.window = field<int>(j, "window", "");
    c.weeks = field<int>(j, "weeks", "");
    c.seed = field<std::uint64_t>(j, "seed", "");
    c.medication = field<std::string>(j, "medication", "");
    c.train_fraction = field<double>(j, "train_fraction", "");

    const auto& p = j.at("predictor");
    c.predictor.kind = predictor_kind_from(field<std::string>(p, "kind", "predictor."));
    c.predictor.x = c.window;
    c.predictor.weeks = c.weeks;
    c.predictor.stride = field<std::size_t>(p, "stride", "predictor.");
    auto& t = c.predictor.train;
    t.hidden = field<int>(p, "hidden", "predictor.");
    const auto pooling = field<std::string>(p, "pooling", "predictor.");
    if (pooling != "mean" && pooling != "last") throw ConfigError("predictor.pooling must be 'mean' or 'last'");
    t.pooling = pooling == "mean" ? nn::Pooling::mean : nn::Pooling::last;
    t.learning_rate = field<double>(p, "learning_rate", "predictor.");
    t.max_epochs = field<int>(p, "max_epochs", "predictor.");
    t.patience = field<int>(p, "patience", "predictor.");
    t.batch_size = field<int>(p, "batch_size", "predictor.");
    t.validation_fraction = field<double>(p, "validation_fraction", "predictor.");
    t.clip_norm = field<double>(p, "clip_norm", "predictor.");
    c.predictor.ar.max_p = field<int>(p, "ar_max_p", "predictor.");
    c.predictor.ar.max_d = field<int>(p, "ar_max_d", "predictor.");

    const auto& v = j.at("violations");
    c.rules.consistency_window = field<int>(v, "consistency_window", "violations.");
    if (!v.at("reference_clock").is_null())
        c.rules.reference_clock = clock_value(field<std::string>(v, "reference_clock", "violations."), "violations.reference_clock");
    c.frame_clock = clock_value(field<std::string>(v, "frame_clock", "violations."), "violations.frame_clock");
    const auto polarity = field<std::string>(v, "polarity", "violations.");
    if (polarity != "forbid" && polarity != "require") throw ConfigError("violations.polarity must be 'forbid' or 'require'");
    c.rules.polarity = polarity == "forbid" ? DependencyPolarity::forbid : DependencyPolarity::require;
    const auto negation = field<std::string>(v, "negation", "violations.");
    if (negation != "invert" && negation != "ignore") throw ConfigError("violations.negation must be 'invert' or 'ignore'");
    c.rules.negation = negation == "invert" ? NegationMode::invert : NegationMode::ignore;
    c.rules.medication = c.medication;
    c.rules.dayparts.ranges.clear();
    for (const auto& [name, range] : v.at("dayparts").items()) {
        auto part = day_part_from(name);
        if (!part) throw ConfigError("unknown daypart '" + name + "'");
        if (range.is_null()) continue;
        if (!range.is_string()) throw ConfigError("daypart '" + name + "' must be 'HH:MM-HH:MM'");
        const auto r = range.get<std::string>();
        const auto dash = r.find('-');
        if (dash == std::string::npos) throw ConfigError("daypart '" + name + "' must be 'HH:MM-HH:MM'");
        c.rules.dayparts.ranges[*part] = {clock_value(r.substr(0, dash), "violations.dayparts." + name),
                                          clock_value(r.substr(dash + 1), "violations.dayparts." + name)};
    }
    c.sparsity_windows = field<std::vector<int>>(j, "sparsity_windows", "");
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Stage cache
// ---------------------------------------------------------------------------

class StageRunner {
public:
    StageRunner(fs::path cache, std::ostream* progress) : cache_(std::move(cache)), progress_(progress) {}

    template <typename Fn>
    FileSet run(const std::string& name, std::uint64_t key, Fn&& body) {
        const fs::path dir = cache_ / (name + "-" + hex(key));
        StageStatus status{name, false, hex(key)};
        FileSet files;
        try {
            if (fs::exists(dir / ".complete")) {
                status.cache_hit = true;
                files = read_tree(dir / "files");
            } else {
                files = body();
                const fs::path tmp = cache_ / (name + "-" + hex(key) + ".partial");
                fs::remove_all(tmp);
                write_tree(tmp / "files", files);
                write_file(tmp / ".complete", "");
                fs::remove_all(dir);
                fs::rename(tmp, dir);
            }
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        if (progress_ != nullptr)
            *progress_ << "stage " << name << ": " << (status.cache_hit ? "cache hit" : "computed") << " (" << status.key << ")\n";
        stages_.push_back(status);
        return files;
    }

    const std::vector<StageStatus>& stages() const { return stages_; }

private:
    fs::path cache_;
    std::ostream* progress_;
    std::vector<StageStatus> stages_;
};

struct Patient {
    std::string id;
    RhbLog log;
};

std::vector<Patient> parse_logs(const FileSet& files, const std::string& prefix, const LogParseOptions& options) {
    std::vector<Patient> out;
    for (const auto& [rel, content] : files) {
        if (rel.rfind(prefix, 0) != 0) continue;
        const fs::path p(rel);
        Patient patient{p.stem().string(), parse_log(content, options)};
        patient.log.patient_id = patient.id;
        if (patient.log.entries.empty()) throw EmptyLog("log '" + rel + "' has no entries");
        out.push_back(std::move(patient));
    }
    if (out.empty()) throw EmptyLog("no patient logs");
    return out;
}

std::uint64_t train_seed(std::uint64_t root, const std::string& patient, const std::string& behavior) {
    return fnv1a(patient + "/" + behavior, fnv1a(std::to_string(root)));
}

std::vector<std::string> predicted_behaviors(const std::vector<Mtc>& mtcs, const RuleContext& ctx, const RhbLog& log) {
    std::set<std::string> wanted{ctx.medication};
    for (const auto& m : mtcs)
        for (const auto& b : required_behaviors(m, ctx)) wanted.insert(b);
    const auto present = log.behaviors();
    std::vector<std::string> out;
    for (const auto& b : wanted)
        if (std::binary_search(present.begin(), present.end(), b)) out.push_back(b);
    return out;
}

std::string model_file(const std::string& patient, const std::string& behavior) {
    return "models/" + patient + "/" + behavior + ".model";
}

std::optional<Timestamp> next_start(const RhbLog& log, const std::string& behavior, Timestamp from) {
    for (const auto& e : log.entries)
        if (e.behavior == behavior && e.start >= from) return e.start;
    return std::nullopt;
}

std::string metrics_table(const std::vector<ViolationMetrics>& metrics) {
    std::string out = "type\tevaluated\texcluded\tsupport_violation\tsupport_ok\tprecision\trecall\tf1\taccuracy\n";
    for (const auto& m : metrics)
        out += m.type + "\t" + std::to_string(m.evaluated) + "\t" + std::to_string(m.excluded) + "\t" +
               std::to_string(m.support_violation) + "\t" + std::to_string(m.support_ok) + "\t" + fixed(m.precision) +
               "\t" + fixed(m.recall) + "\t" + fixed(m.f1) + "\t" + fixed(m.accuracy) + "\n";
    return out;
}

/// Full precision, for callers that recompute from the emitted values.
std::string metrics_json(const std::vector<ViolationMetrics>& metrics) {
    Json out = Json::array();
    for (const auto& m : metrics)
        out.push_back({{"type", m.type},
                       {"evaluated", m.evaluated},
                       {"excluded", m.excluded},
                       {"support_violation", m.support_violation},
                       {"support_ok", m.support_ok},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"accuracy", m.accuracy}});
    return out.dump(2) + "\n";
}

std::vector<ViolationMetrics> parse_metrics_json(const std::string& text) {
    std::vector<ViolationMetrics> out;
    for (const auto& j : Json::parse(text)) {
        ViolationMetrics m;
        m.type = j.at("type").get<std::string>();
        m.evaluated = j.at("evaluated").get<std::size_t>();
        m.excluded = j.at("excluded").get<std::size_t>();
        m.support_violation = j.at("support_violation").get<std::size_t>();
        m.support_ok = j.at("support_ok").get<std::size_t>();
        m.precision = j.at("precision").get<double>();
        m.recall = j.at("recall").get<double>();
        m.f1 = j.at("f1").get<double>();
        m.accuracy = j.at("accuracy").get<double>();
        out.push_back(m);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
    for (unsigned char ch : bytes) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

void PipelineConfig::validate() const {
    if (!logs && !simulate) throw ConfigError("config needs 'logs' or 'simulate'");
    if (window < 1 || window > kMinutesPerDay) throw ConfigError("window must lie in [1, 1440]");
    if (weeks < 1) throw ConfigError("weeks must be >= 1");
    if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train_fraction must lie in (0, 1)");
    if (medication.empty()) throw ConfigError("medication must be named");
    if (predictor.stride < 1) throw ConfigError("predictor.stride must be >= 1");
    const auto& t = predictor.train;
    if (t.hidden < 1 || t.max_epochs < 1 || t.patience < 1 || t.batch_size < 1)
        throw ConfigError("predictor sizes and epoch counts must be >= 1");
    if (!(t.learning_rate > 0)) throw ConfigError("predictor.learning_rate must be > 0");
    if (!(t.validation_fraction >= 0 && t.validation_fraction < 1))
        throw ConfigError("predictor.validation_fraction must lie in [0, 1)");
    if (!(t.clip_norm > 0)) throw ConfigError("predictor.clip_norm must be > 0");
    if (predictor.ar.max_p < 1 || predictor.ar.max_d < 0) throw ConfigError("AR bounds must be p >= 1, d >= 0");
    if (rules.consistency_window < 0) throw ConfigError("violations.consistency_window must be >= 0");
    if (frame_clock < 0 || frame_clock >= kMinutesPerDay) throw ConfigError("violations.frame_clock out of range");
    for (int x : sparsity_windows)
        if (x < 1 || x > kMinutesPerDay) throw ConfigError("sparsity windows must lie in [1, 1440]");
}

EnvLookup process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        return v == nullptr ? std::nullopt : std::optional<std::string>(v);
    };
}

PipelineConfig parse_pipeline_config(std::string_view json, const fs::path& base, const EnvLookup& env) {
    Json merged = config_to_json(PipelineConfig{});
    try {
        merge(merged, Json::parse(json), "");
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    apply_env(merged, "", env);
    return config_from_json(merged, base);
}

PipelineConfig load_pipeline_config(const fs::path& path, const EnvLookup& env) {
    return parse_pipeline_config(read_file(path), path.parent_path(), env);
}

std::string pipeline_config_json(const PipelineConfig& config) { return config_to_json(config).dump(2) + "\n"; }

std::vector<fs::path> list_log_files(const fs::path& dir_or_file) {
    if (!fs::exists(dir_or_file)) throw ConfigError("log path " + dir_or_file.string() + " does not exist");
    if (fs::is_regular_file(dir_or_file)) return {dir_or_file};
    static const std::set<std::string> exts{".jsonl", ".json", ".csv", ".tsv", ".txt"};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir_or_file))
        if (e.is_regular_file() && exts.contains(e.path().extension().string())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Mtc> extract_constraints(std::string_view guideline, const ActivityVocabulary& vocab) {
    std::vector<Mtc> out;
    for (const auto& r : extract_from_guideline(guideline, vocab)) {
        auto m = canonicalize(r.mtc, vocab);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(std::move(m));
    }
    return out;
}

std::vector<Mtc> parse_constraint_records(std::string_view text) {
    std::vector<Mtc> out;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        out.push_back(deserialize(line));
    }
    return out;
}

std::string write_constraint_records(const std::vector<Mtc>& mtcs) {
    std::string out;
    for (const auto& m : mtcs) out += serialize(m) + "\n";
    return out;
}

Timestamp split_day(const RhbLog& log, double fraction, int weeks) {
    if (log.entries.empty()) throw EmptyLog("cannot split an empty log");
    const Timestamp first = day_start(log.entries.front().start);
    Timestamp last = first;
    for (const auto& e : log.entries) last = std::max(last, day_start(e.start));
    const auto days = (last - first) / kMinutesPerDay + 1;
    const auto by_fraction = static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(days)));
    return first + std::max<std::int64_t>(by_fraction, 7LL * weeks + 1) * kMinutesPerDay;
}

std::vector<Timestamp> test_days(const RhbLog& log, Timestamp split) {
    if (log.entries.empty()) return {};
    Timestamp last = day_start(log.entries.front().start);
    for (const auto& e : log.entries) last = std::max(last, day_start(e.start));
    std::vector<Timestamp> out;
    for (Timestamp d = split; d <= last; d = d + kMinutesPerDay) out.push_back(d);
    return out;
}

RhbLog predicted_log(const std::vector<AnyModel>& models, const RhbLog& log, const std::vector<Timestamp>& days,
                     int frame_clock) {
    RhbLog out;
    out.patient_id = log.patient_id;
    for (auto day : days) {
        const Timestamp start = day + frame_clock;
        for (const auto& m : models) {
            const auto p = predict_at(m, log, start);
            if (!p.timestamp) continue;
            // A window-resolution prediction stands for the middle of its window.
            Timestamp t = *p.timestamp;
            if (model_kind(m) == PredictorKind::herbert) t = t + model_window(m) / 2;
            if (t >= start && t < start + kMinutesPerDay) out.entries.push_back({model_target(m), t, t});
        }
    }
    sort_entries(out);
    return out;
}

std::vector<EvaluationFrame> violation_frames(const RhbLog& actual, const RhbLog& predicted,
                                              const std::vector<std::string>& predicted_behaviors,
                                              const std::vector<Timestamp>& days, int frame_clock) {
    const auto actual_behaviors = actual.behaviors();
    std::vector<EvaluationFrame> out;
    for (auto day : days) {
        const Timestamp start = day + frame_clock;
        EvaluationFrame f;
        f.id = actual.patient_id + "/" + format_iso8601(start);
        f.predicted = frame_from_log(predicted, start, kMinutesPerDay, predicted_behaviors);
        f.actual = frame_from_log(actual, start, kMinutesPerDay, actual_behaviors);
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* progress) {
    config.validate();
    StageRunner runner(config.output / "cache", progress);
    const std::string config_text = config_to_json(config).dump();
    const Json cj = Json::parse(config_text);

    // --- simulate -----------------------------------------------------------
    FileSet sim;
    std::uint64_t logs_key = 0;
    FileSet log_files;
    if (config.simulate) {
        std::string spec_text;
        try {
            spec_text = read_file(*config.simulate);
        } catch (const std::exception& e) {
            throw StageError("simulate", e.what());
        }
        const auto key = Hasher().add(kCacheVersion).add("simulate").add(spec_text).add(std::to_string(config.seed)).value();
        sim = runner.run("simulate", key, [&] {
            auto spec = parse_cohort_spec(spec_text);
            spec.seed = config.seed;
            FileSet out;
            out["cohort_spec.txt"] = write_cohort_spec(spec);
            for (const auto& p : generate_cohort(spec)) {
                out["logs/" + p.log.patient_id + ".jsonl"] = write_log(p.log);
                out["ledgers/" + p.log.patient_id + ".ledger.jsonl"] = write_ledger(p.ledger);
            }
            return out;
        });
        for (const auto& [rel, content] : sim)
            if (rel.rfind("logs/", 0) == 0) log_files[rel] = content;
    }

    // --- extract ------------------------------------------------------------
    FileSet guideline_files;
    std::string vocab_text, extra_constraints;
    try {
        for (const auto& g : config.guidelines) {
            if (fs::is_directory(g)) {
                for (const auto& e : fs::directory_iterator(g))
                    if (e.is_regular_file() && e.path().extension() == ".txt")
                        guideline_files[e.path().filename().string()] = read_file(e.path());
            } else {
                guideline_files[g.filename().string()] = read_file(g);
            }
        }
        if (config.vocabulary) vocab_text = read_file(*config.vocabulary);
        if (config.constraints) extra_constraints = read_file(*config.constraints);
    } catch (const std::exception& e) {
        throw StageError("extract", e.what());
    }
    const ActivityVocabulary vocab =
        config.vocabulary ? ActivityVocabulary::parse(vocab_text) : ActivityVocabulary::builtin();
    const auto extract_key = Hasher()
                                 .add(kCacheVersion)
                                 .add("extract")
                                 .add(guideline_files)
                                 .add(config.vocabulary ? vocab_text : "builtin")
                                 .add(extra_constraints)
                                 .value();
    const auto extracted = runner.run("extract", extract_key, [&] {
        std::vector<Mtc> all;
        std::string table = "guideline\tconstraint\trecord\n";
        for (const auto& [name, text] : guideline_files)
            for (const auto& m : extract_constraints(text, vocab)) {
                table += name + "\t" + to_string(m) + "\t" + serialize(m) + "\n";
                if (std::find(all.begin(), all.end(), m) == all.end()) all.push_back(m);
            }
        for (const auto& m : parse_constraint_records(extra_constraints)) {
            const auto c = canonicalize(m, vocab);
            table += "(config)\t" + to_string(c) + "\t" + serialize(c) + "\n";
            if (std::find(all.begin(), all.end(), c) == all.end()) all.push_back(c);
        }
        return FileSet{{"constraints.jsonl", write_constraint_records(all)}, {"extraction.tsv", table}};
    });
    const auto mtcs = parse_constraint_records(extracted.at("constraints.jsonl"));

    // --- vectorize ----------------------------------------------------------
    if (!config.simulate) {
        try {
            for (const auto& p : list_log_files(*config.logs)) log_files["logs/" + p.filename().string()] = read_file(p);
        } catch (const std::exception& e) {
            throw StageError("vectorize", e.what());
        }
        if (log_files.empty()) throw StageError("vectorize", "no log files under " + config.logs->string());
    }
    LogParseOptions parse_options;
    parse_options.vocab = &vocab;
    logs_key = Hasher().add(kCacheVersion).add(log_files).add(config.vocabulary ? vocab_text : "builtin").value();
    std::vector<Patient> patients;
    const auto vectorized = runner.run("vectorize", Hasher().add("vectorize").add(hex(logs_key)).add(std::to_string(config.window)).value(), [&] {
        FileSet out;
        for (const auto& p : parse_logs(log_files, "logs/", parse_options))
            out["basis/" + p.id + ".txt"] = basis_vectorize(p.log, config.window).to_text();
        return out;
    });
    try {
        patients = parse_logs(log_files, "logs/", parse_options);
    } catch (const std::exception& e) {
        throw StageError("vectorize", e.what());
    }

    // --- metrics ------------------------------------------------------------
    const auto metrics_key = Hasher()
                                 .add("metrics")
                                 .add(hex(logs_key))
                                 .add(config.medication)
                                 .add(std::to_string(config.window))
                                 .add(cj.at("sparsity_windows").dump())
                                 .value();
    const auto metric_files = runner.run("metrics", metrics_key, [&] {
        std::vector<std::string> ids, schedule_ids;
        std::vector<std::vector<double>> sparsities, schedules;
        for (const auto& p : patients) {
            ids.push_back(p.id);
            std::vector<double> row;
            const Timestamp origin = p.log.entries.front().start;
            for (int x : config.sparsity_windows) row.push_back(sparsity(basis_vectorize_from(p.log, x, origin)));
            sparsities.push_back(row);
            auto s = schedule_vector(p.log, config.medication, config.window);
            if (!s.empty()) {
                schedule_ids.push_back(p.id);
                schedules.push_back(std::move(s));
            }
        }
        FileSet out{{"metrics/sparsity.tsv", format_sparsity(ids, config.sparsity_windows, sparsities)}};
        if (schedules.size() >= 2) {
            out["metrics/regularity.tsv"] = format_regularity(schedule_ids, regularity_scores(schedules));
            out["metrics/heatmap.tsv"] = format_heatmap(schedule_ids, similarity_heatmap(schedules));
        }
        return out;
    });

    // --- train --------------------------------------------------------------
    const auto train_key = Hasher()
                               .add("train")
                               .add(hex(logs_key))
                               .add(hex(extract_key))
                               .add(cj.at("predictor").dump())
                               .add(std::to_string(config.window))
                               .add(std::to_string(config.weeks))
                               .add(std::to_string(config.seed))
                               .add(fixed(config.train_fraction, 17))
                               .add(config.medication)
                               .value();
    const auto trained = runner.run("train", train_key, [&] {
        FileSet out;
        std::string table = "patient\tbehavior\tkind\tsplit_day\tbest_epoch\ttrain_loss\tvalidation_loss\n";
        for (const auto& p : patients) {
            const Timestamp split = split_day(p.log, config.train_fraction, config.weeks);
            for (const auto& b : predicted_behaviors(mtcs, config.rules, p.log)) {
                auto cfg = config.predictor;
                cfg.train.seed = train_seed(config.seed, p.id, b);
                const auto model = train_predictor(p.log, b, cfg, split);
                out[model_file(p.id, b)] = encode_model(model);
                std::string epoch = "-", tl = "-", vl = "-";
                if (const auto* h = std::get_if<HerbertModel>(&model); h && h->curve.best_epoch >= 0) {
                    const auto e = static_cast<std::size_t>(h->curve.best_epoch);
                    epoch = std::to_string(e);
                    tl = fixed(h->curve.train.at(e));
                    if (e < h->curve.validation.size()) vl = fixed(h->curve.validation[e]);
                }
                table += p.id + "\t" + b + "\t" + to_string(cfg.kind) + "\t" + format_iso8601(split) + "\t" + epoch + "\t" +
                         tl + "\t" + vl + "\n";
            }
        }
        out["training.tsv"] = table;
        return out;
    });

    // --- predict ------------------------------------------------------------
    const auto predict_key =
        Hasher().add("predict").add(hex(train_key)).add(std::to_string(config.frame_clock)).value();
    const auto predicted = runner.run("predict", predict_key, [&] {
        FileSet out;
        std::string table = "patient\tbehavior\tframe_start\tpredicted\tactual\terror_windows\n";
        std::string rmse = "patient\tbehavior\tframes\trmse_windows\n";
        for (const auto& p : patients) {
            std::vector<AnyModel> models;
            for (const auto& b : predicted_behaviors(mtcs, config.rules, p.log))
                models.push_back(decode_model(trained.at(model_file(p.id, b))));
            const auto days = test_days(p.log, split_day(p.log, config.train_fraction, config.weeks));
            out["predicted/" + p.id + ".jsonl"] = write_log(predicted_log(models, p.log, days, config.frame_clock));
            for (const auto& m : models) {
                std::vector<double> pred, truth;
                for (auto day : days) {
                    const Timestamp start = day + config.frame_clock;
                    const auto out_p = predict_at(m, p.log, start);
                    const auto actual = next_start(p.log, model_target(m), start);
                    std::string err = "-";
                    if (out_p.timestamp && actual) {
                        pred.push_back(static_cast<double>(*out_p.timestamp - start) / config.window);
                        truth.push_back(static_cast<double>(*actual - start) / config.window);
                        err = fixed(pred.back() - truth.back(), 3);
                    }
                    table += p.id + "\t" + model_target(m) + "\t" + format_iso8601(start) + "\t" +
                             (out_p.timestamp ? format_iso8601(*out_p.timestamp) : "-") + "\t" +
                             (actual ? format_iso8601(*actual) : "-") + "\t" + err + "\n";
                }
                rmse += p.id + "\t" + model_target(m) + "\t" + std::to_string(pred.size()) + "\t" +
                        (pred.empty() ? "-" : fixed(evaluate_rmse(pred, truth))) + "\n";
            }
        }
        out["predictions.tsv"] = table;
        out["prediction_rmse.tsv"] = rmse;
        return out;
    });

    // --- check-violations ---------------------------------------------------
    const auto violations_key =
        Hasher().add("check-violations").add(hex(predict_key)).add(hex(extract_key)).add(cj.at("violations").dump()).value();
    const auto checked = runner.run("check-violations", violations_key, [&] {
        std::vector<ViolationVerdict> verdicts;
        std::string refs = "patient\treference_clock\n";
        for (const auto& p : patients) {
            const Timestamp split = split_day(p.log, config.train_fraction, config.weeks);
            RuleContext ctx = config.rules;
            if (!ctx.reference_clock) {
                std::vector<Timestamp> intakes;
                for (const auto& e : p.log.entries)
                    if (e.behavior == config.medication && e.start < split) intakes.push_back(e.start);
                if (!intakes.empty()) ctx.reference_clock = median_clock(intakes);
            }
            refs += p.id + "\t" + (ctx.reference_clock ? format_clock(*ctx.reference_clock) : "-") + "\n";
            const auto pred_log = parse_log(predicted.at("predicted/" + p.id + ".jsonl"));
            const auto frames = violation_frames(p.log, pred_log, predicted_behaviors(mtcs, config.rules, p.log),
                                                 test_days(p.log, split), config.frame_clock);
            auto v = predict_violations(frames, mtcs, ctx);
            verdicts.insert(verdicts.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
        }
        const auto metrics = evaluate_violations(verdicts);
        return FileSet{{"violations.tsv", format_violation_report(verdicts, metrics)},
                       {"violation_metrics.tsv", metrics_table(metrics)},
                       {"violation_metrics.json", metrics_json(metrics)},
                       {"reference_clocks.tsv", refs}};
    });

    // --- report bundle ------------------------------------------------------
    PipelineResult result;
    result.stages = runner.stages();
    result.report = config.output / "report";
    result.metrics = parse_metrics_json(checked.at("violation_metrics.json"));

    FileSet bundle;
    for (const FileSet* set : std::initializer_list<const FileSet*>{&sim, &extracted, &vectorized, &metric_files, &trained, &predicted, &checked})
        for (const auto& [rel, content] : *set) bundle[rel] = content;

    std::ostringstream summary;
    summary << "patients: " << patients.size() << "\n";
    summary << "constraints: " << mtcs.size() << "\n";
    for (const auto& m : mtcs) summary << "  " << to_string(m) << "\n";
    summary << "predictor: " << to_string(config.predictor.kind) << ", window " << config.window << " min, context "
            << config.weeks << " week(s)\n\nprediction RMSE (windows)\n" << predicted.at("prediction_rmse.tsv")
            << "\nviolation metrics\n" << checked.at("violation_metrics.tsv");
    result.summary = summary.str();
    bundle["summary.txt"] = result.summary;
    bundle["config.json"] = [&] {
        auto j = config_to_json(config);
        // Paths depend on where the run happens; the bundle records the rest.
        for (const char* k : {"logs", "simulate", "constraints", "vocabulary"})
            if (!j[k].is_null()) j[k] = fs::path(j[k].get<std::string>()).filename().generic_string();
        j["guidelines"] = Json::array();
        for (const auto& [name, text] : guideline_files) j["guidelines"].push_back(name);
        j.erase("output");
        return j.dump(2) + "\n";
    }();
    Json manifest;
    manifest["files"] = Json::array();
    for (const auto& [rel, content] : bundle)
        manifest["files"].push_back({{"path", rel}, {"bytes", content.size()}, {"fnv1a", hex(fnv1a(content))}});
    bundle["manifest.json"] = manifest.dump(2) + "\n";

    try {
        fs::remove_all(result.report);
        write_tree(result.report, bundle);
    } catch (const std::exception& e) {
        throw StageError("report", e.what());
    }
    return result;
}

}  // namespace actsafe
