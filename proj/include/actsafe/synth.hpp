#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "actsafe/mtc.hpp"
#include "actsafe/rhb.hpp"
#include "actsafe/violation.hpp"

namespace actsafe {

/// One daily occurrence. Its start is either a clock time or an offset after
/// the first same-day occurrence of another behavior (a dependency link); in
/// both cases truncated-normal jitter is added.
struct BehaviorTemplate {
    std::string behavior;
    std::optional<int> clock;          // minutes past midnight
    std::optional<std::string> after;  // anchor behavior of a link
    int delta = 0;                     // link offset, minutes
    double jitter = 0.0;               // stdev, minutes
    int duration = 0;                  // minutes
    /// Stop at the next start of this behavior instead (falls back to `duration`).
    std::optional<std::string> until;
};

struct PlantedConstraint {
    Mtc mtc;
    double rate = 0.0;  // per patient-day
};

struct CohortSpec {
    int patients = 1;
    int days = 28;
    Timestamp start = make_timestamp(2019, 7, 1);
    std::uint64_t seed = 1;
    double shift_sd = 0.0;  // per-patient shift of every nominal clock, minutes
    std::string medication = "take_medicine";
    int consistency_window = 15;
    DaypartBounds dayparts = DaypartBounds::defaults();
    std::vector<BehaviorTemplate> templates;
    std::map<std::string, double> miss;  // behavior skipped
    std::map<std::string, double> drop;  // behavior happened but its label is lost
    std::vector<PlantedConstraint> plants;

    /// Throws ConfigError.
    void validate() const;
};

/// Flat text, one field per line (`key: value`, `#` comments):
///   patients / days / start / seed / shift_sd / medication / consistency_window
///   behavior: NAME clock=HH:MM|after=NAME [delta=MIN] [jitter=SD] [duration=MIN] [until=NAME]
///   miss: NAME P        drop: NAME P
///   daypart: morning|noon|evening HH:MM-HH:MM
///   plant: RATE CONSTRAINT-RECORD
/// Throws ConfigError with the line number.
CohortSpec parse_cohort_spec(std::string_view text);
CohortSpec load_cohort_spec(const std::filesystem::path& path);
std::string write_cohort_spec(const CohortSpec& spec);

struct LedgerEntry {
    int day = 0;
    Timestamp frame_start;
    std::size_t constraint = 0;  // index into PatientLedger::constraints
    bool planted = false;
    Outcome generated = Outcome::ok;  // over everything that happened
    Outcome logged = Outcome::ok;     // over what the log shows
};

/// Ground truth per patient-day frame [day start, day start + 1 day).
struct PatientLedger {
    std::string patient_id;
    int reference_clock = 0;  // nominal medication clock, for "the same time"
    int consistency_window = 15;
    DaypartBounds dayparts = DaypartBounds::defaults();
    std::string medication = "take_medicine";
    std::vector<Mtc> constraints;
    std::vector<LedgerEntry> entries;  // day-major, then constraint

    /// Rule context under which the ledger's outcomes are defined.
    RuleContext context() const;
};

struct SyntheticPatient {
    RhbLog log;
    PatientLedger ledger;
};

/// Deterministic in the spec; patients use independent derived seeds.
std::vector<SyntheticPatient> generate_cohort(const CohortSpec& spec);
SyntheticPatient generate_patient(const CohortSpec& spec, int index);

/// Verdicts with predicted = actual = the ledger outcome (logged by default).
std::vector<ViolationVerdict> ledger_verdicts(const PatientLedger& ledger, bool logged = true);

/// One JSON line per entry after a header line.
std::string write_ledger(const PatientLedger& ledger);
/// Throws ConfigError.
PatientLedger parse_ledger(std::string_view text);

/// Per-patient seed: splitmix64 of (seed, index).
std::uint64_t patient_seed(std::uint64_t seed, int index);

}  // namespace actsafe
