#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "actsafe/predictors.hpp"
#include "actsafe/violation.hpp"

namespace actsafe {

/// Relative path -> file content.
using FileSet = std::map<std::string, std::string>;

struct PipelineConfig {
    std::optional<std::filesystem::path> logs;      // directory of logs, or one log file
    std::optional<std::filesystem::path> simulate;  // cohort spec; its logs replace `logs`
    std::vector<std::filesystem::path> guidelines;  // files or directories of .txt files
    std::optional<std::filesystem::path> constraints;  // extra constraint records, one per line
    std::optional<std::filesystem::path> vocabulary;
    std::filesystem::path output = "actsafe-out";  // holds report/ and cache/

    int window = 30;
    int weeks = 1;
    std::uint64_t seed = 1;  // root of every random stream, including the simulator's
    std::string medication = "take_medicine";
    double train_fraction = 0.75;  // leading share of each patient's days used for training
    PredictorConfig predictor;
    RuleContext rules;
    int frame_clock = 0;  // violation frames run [day + frame_clock, +1 day)
    std::vector<int> sparsity_windows{15, 30, 60};

    /// Throws ConfigError.
    void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
EnvLookup process_environment();

/// JSON config. Every leaf key can be overridden by ACTSAFE_<PATH>, the key
/// path upper-cased and joined with '_' (ACTSAFE_PREDICTOR_HIDDEN). Relative
/// paths resolve against `base`. Throws ConfigError.
PipelineConfig parse_pipeline_config(std::string_view json, const std::filesystem::path& base,
                                     const EnvLookup& env = process_environment());
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const EnvLookup& env = process_environment());

/// The effective configuration as JSON, paths as given.
std::string pipeline_config_json(const PipelineConfig& config);

struct StageStatus {
    std::string name;
    bool cache_hit = false;
    std::string key;  // 16 hex digits
};

struct PipelineResult {
    std::vector<StageStatus> stages;
    std::filesystem::path report;
    std::vector<ViolationMetrics> metrics;
    std::string summary;
};

/// simulate (optional) -> extract -> vectorize -> metrics -> train -> predict
/// -> check-violations. Each stage's files are cached under output/cache keyed
/// by a content hash of its inputs; the report bundle under output/report is
/// rewritten from scratch. Throws StageError naming the failing stage.
PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* progress = nullptr);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

// ---------------------------------------------------------------------------
// Building blocks shared with the command-line tool
// ---------------------------------------------------------------------------

/// Regular files with a log extension (.jsonl .json .csv .tsv .txt), sorted by name.
std::vector<std::filesystem::path> list_log_files(const std::filesystem::path& dir_or_file);

/// Extracted constraints of one guideline, canonicalized, duplicates removed.
std::vector<Mtc> extract_constraints(std::string_view guideline, const ActivityVocabulary& vocab);

/// One record per line; blank lines and '#' comments skipped. Throws MalformedRecord.
std::vector<Mtc> parse_constraint_records(std::string_view text);
std::string write_constraint_records(const std::vector<Mtc>& mtcs);

/// First day of the held-out period: at least `weeks` weeks plus one day after
/// the first entry's day, otherwise the day at `fraction` of the log's days.
Timestamp split_day(const RhbLog& log, double fraction, int weeks);

/// Days [split, last entry's day]; empty if the split lies past the log.
std::vector<Timestamp> test_days(const RhbLog& log, Timestamp split);

/// Predicted occurrences: one prediction per (day, model), made at the day's
/// frame start, kept when it lands inside that day's horizon. HERBERT
/// predictions are placed at the middle of their predicted window.
RhbLog predicted_log(const std::vector<AnyModel>& models, const RhbLog& log, const std::vector<Timestamp>& days,
                     int frame_clock);

/// Pairs each day's predicted frame with its actual frame. Predicted
/// behaviors are the model targets; actual ones are the log's behaviors.
std::vector<EvaluationFrame> violation_frames(const RhbLog& actual, const RhbLog& predicted,
                                              const std::vector<std::string>& predicted_behaviors,
                                              const std::vector<Timestamp>& days, int frame_clock);

}  // namespace actsafe
