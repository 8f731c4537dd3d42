#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "actsafe/time.hpp"
#include "actsafe/vocabulary.hpp"

namespace actsafe {

struct RhbEntry {
    std::string behavior;  // canonical activity name
    Timestamp start;
    Timestamp stop;
    auto operator<=>(const RhbEntry&) const = default;
};

struct RhbLog {
    std::string patient_id;
    std::vector<RhbEntry> entries;  // ordered by start

    /// Distinct behavior names, sorted.
    std::vector<std::string> behaviors() const;
    /// Entries of one behavior, in order.
    std::vector<RhbEntry> of(std::string_view behavior) const;
};

struct LogParseOptions {
    /// Unknown behaviors raise UnknownBehavior instead of being kept in
    /// normalized form.
    bool strict = false;
    /// Fixed UTC offset, in minutes, that all timestamps are normalized into.
    int ingest_offset_minutes = 0;
    const ActivityVocabulary* vocab = nullptr;  // builtin vocabulary when null
};

/// Accepts canonical JSONL (`{"behavior","start","stop"}` per line) and the
/// legacy delimited form `behavior<TAB or comma>start<sep>stop` with textual
/// timestamps such as "Mon Jul 15 2019 16:59:05"; the two may be mixed. A
/// first line whose fields are not timestamps is taken as a header. Seconds are
/// truncated. Output entries are sorted by (start, stop, behavior).
RhbLog parse_log(std::string_view text, const LogParseOptions& options = {});

/// parse_log on a file; the patient id is the file stem.
RhbLog load_log(const std::filesystem::path& path, const LogParseOptions& options = {});

/// Canonical JSONL.
std::string write_log(const RhbLog& log);

void sort_entries(RhbLog& log);

// ---------------------------------------------------------------------------
// Basis vectorization
// ---------------------------------------------------------------------------

/// M x K binary occupancy matrix over x-minute windows starting at `origin`.
class BasisMatrix {
public:
    BasisMatrix() = default;
    BasisMatrix(std::vector<std::string> behaviors, std::size_t k, int x, Timestamp origin);

    std::size_t rows() const { return behaviors_.size(); }
    std::size_t cols() const { return k_; }
    int window() const { return x_; }
    Timestamp origin() const { return origin_; }
    const std::vector<std::string>& behaviors() const { return behaviors_; }
    std::optional<std::size_t> row_of(std::string_view behavior) const;

    std::uint8_t at(std::size_t i, std::size_t j) const { return cells_[i * k_ + j]; }
    void set(std::size_t i, std::size_t j, std::uint8_t v) { cells_[i * k_ + j] = v; }
    const std::uint8_t* row(std::size_t i) const { return cells_.data() + i * k_; }

    /// Start instant of column j.
    Timestamp column_start(std::size_t j) const { return origin_ + static_cast<std::int64_t>(j) * x_; }
    /// Column containing instant t (may be out of range).
    std::int64_t column_of(Timestamp t) const;

    std::size_t zeros() const;

    /// Header line `basis M=<M> K=<K> x=<x> origin=<ISO>`, a `behaviors` line,
    /// then one line of '0'/'1' characters per row.
    std::string to_text() const;
    static BasisMatrix from_text(std::string_view text);

    bool operator==(const BasisMatrix&) const = default;

private:
    std::vector<std::string> behaviors_;
    std::size_t k_ = 0;
    int x_ = 1;
    Timestamp origin_;
    std::vector<std::uint8_t> cells_;
};

/// Cell (i, j) is 1 iff some entry of behavior i, read as the closed interval
/// [start, stop], meets the half-open window [origin + j*x, origin + (j+1)*x).
/// origin is the first entry's start; K = ceil((max stop - origin) / x),
/// widened when needed so that every entry start falls inside a column (a
/// zero-duration entry on the final boundary). When `behaviors` is given it
/// fixes the row set and order; otherwise rows are the log's behaviors, sorted.
/// Throws EmptyLog; x must lie in [1, 1440].
BasisMatrix basis_vectorize(const RhbLog& log, int x, const std::vector<std::string>* behaviors = nullptr);

/// Same as above with an explicit origin (shared-origin comparisons across window sizes).
BasisMatrix basis_vectorize_from(const RhbLog& log, int x, Timestamp origin,
                                 const std::vector<std::string>* behaviors = nullptr);

// ---------------------------------------------------------------------------
// Prediction frames
// ---------------------------------------------------------------------------

/// Number of x-minute windows in `weeks` weeks.
std::size_t context_windows(int weeks, int x);

/// Context = columns [offset, offset + k_ctx); y counts windows from the end of
/// the context to the first later column holding the target (y >= 1).
struct PredictionFrame {
    std::size_t offset = 0;
    std::size_t k_ctx = 0;
    std::size_t target_row = 0;
    int y = 0;

    std::size_t context_end_column() const { return offset + k_ctx; }
};

/// Start of the last context column; predictions are anchored here, so a
/// prediction of y windows lands on the column that starts at reference + y*x.
Timestamp frame_reference(const BasisMatrix& bv, const PredictionFrame& f);
/// First instant after the context.
Timestamp frame_cutoff(const BasisMatrix& bv, const PredictionFrame& f);

/// Frames at offsets 0, stride, 2*stride, ...; frames with no later target
/// occurrence are dropped. Throws NoTargetOccurrences when the target row is
/// empty and std::invalid_argument when k_ctx > K, k_ctx == 0 or stride == 0.
std::vector<PredictionFrame> make_frames(const BasisMatrix& bv, std::string_view target, std::size_t k_ctx,
                                         std::size_t stride = 1);

struct FrameSplit {
    std::vector<PredictionFrame> train;
    std::vector<PredictionFrame> test;
};

/// Chronological split: the first floor(fraction * N) frames train.
FrameSplit split_by_fraction(const std::vector<PredictionFrame>& frames, double fraction);
/// Chronological split: frames whose context ends at or before `date` train.
FrameSplit split_by_date(const BasisMatrix& bv, const std::vector<PredictionFrame>& frames, Timestamp date);

}  // namespace actsafe
