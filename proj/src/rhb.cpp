#include "actsafe/rhb.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "actsafe/error.hpp"

namespace actsafe {

std::vector<std::string> RhbLog::behaviors() const {
    std::set<std::string> names;
    for (const auto& e : entries) names.insert(e.behavior);
    return {names.begin(), names.end()};
}

std::vector<RhbEntry> RhbLog::of(std::string_view behavior) const {
    std::vector<RhbEntry> out;
    for (const auto& e : entries)
        if (e.behavior == behavior) out.push_back(e);
    return out;
}

void sort_entries(RhbLog& log) {
    std::sort(log.entries.begin(), log.entries.end(), [](const RhbEntry& a, const RhbEntry& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.stop != b.stop) return a.stop < b.stop;
        return a.behavior < b.behavior;
    });
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    std::string out(s.substr(a, b - a));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, sep)) out.push_back(trim(field));
    return out;
}

}  // namespace

RhbLog parse_log(std::string_view text, const LogParseOptions& options) {
    const ActivityVocabulary& vocab = options.vocab ? *options.vocab : ActivityVocabulary::builtin();
    RhbLog log;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto body = trim(line);
        if (body.empty() || body[0] == '#') continue;

        std::string behavior, start_text, stop_text;
        if (body[0] == '{') {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(body);
            } catch (const nlohmann::json::parse_error& e) {
                throw BadTimestamp(std::string("unparseable JSON entry: ") + e.what(), lineno);
            }
            for (const char* key : {"behavior", "start", "stop"})
                if (!j.contains(key) || !j[key].is_string())
                    throw BadTimestamp(std::string("entry lacks string field '") + key + "'", lineno);
            behavior = j["behavior"].get<std::string>();
            start_text = j["start"].get<std::string>();
            stop_text = j["stop"].get<std::string>();
        } else {
            auto fields = split_fields(body);
            if (fields.size() != 3)
                throw BadTimestamp("expected 3 fields (behavior, start, stop), got " + std::to_string(fields.size()),
                                   lineno);
            if (!seen_data && !parse_timestamp(fields[1], options.ingest_offset_minutes) &&
                !parse_timestamp(fields[2], options.ingest_offset_minutes)) {
                seen_data = true;  // header
                continue;
            }
            behavior = fields[0];
            start_text = fields[1];
            stop_text = fields[2];
        }
        seen_data = true;

        auto start = parse_timestamp(start_text, options.ingest_offset_minutes);
        if (!start) throw BadTimestamp("cannot read start '" + start_text + "'", lineno);
        auto stop = parse_timestamp(stop_text, options.ingest_offset_minutes);
        if (!stop) throw BadTimestamp("cannot read stop '" + stop_text + "'", lineno);
        if (*stop < *start) throw BadTimestamp("stop precedes start", lineno);

        std::string name;
        if (auto canonical = vocab.lookup(behavior)) {
            name = *canonical;
        } else if (options.strict) {
            throw UnknownBehavior("'" + behavior + "' is not in the activity vocabulary", lineno);
        } else {
            name = normalize_phrase(behavior);
            std::replace(name.begin(), name.end(), ' ', '_');
            if (name.empty()) throw UnknownBehavior("empty behavior name", lineno);
        }
        log.entries.push_back({std::move(name), *start, *stop});
    }
    sort_entries(log);
    return log;
}

RhbLog load_log(const std::filesystem::path& path, const LogParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open log file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto log = parse_log(buf.str(), options);
    log.patient_id = path.stem().string();
    return log;
}

std::string write_log(const RhbLog& log) {
    std::string out;
    for (const auto& e : log.entries) {
        nlohmann::ordered_json j;
        j["behavior"] = e.behavior;
        j["start"] = format_iso8601(e.start);
        j["stop"] = format_iso8601(e.stop);
        out += j.dump() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// BasisMatrix
// ---------------------------------------------------------------------------

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

BasisMatrix::BasisMatrix(std::vector<std::string> behaviors, std::size_t k, int x, Timestamp origin)
    : behaviors_(std::move(behaviors)), k_(k), x_(x), origin_(origin), cells_(behaviors_.size() * k, 0) {}

std::optional<std::size_t> BasisMatrix::row_of(std::string_view behavior) const {
    auto it = std::find(behaviors_.begin(), behaviors_.end(), behavior);
    if (it == behaviors_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - behaviors_.begin());
}

std::int64_t BasisMatrix::column_of(Timestamp t) const { return floor_div(t - origin_, x_); }

std::size_t BasisMatrix::zeros() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 0)); }

std::string BasisMatrix::to_text() const {
    std::string out = "basis M=" + std::to_string(rows()) + " K=" + std::to_string(k_) + " x=" + std::to_string(x_) +
                      " origin=" + format_iso8601(origin_) + "\nbehaviors";
    for (const auto& b : behaviors_) out += " " + b;
    out += "\n";
    for (std::size_t i = 0; i < rows(); ++i) {
        for (std::size_t j = 0; j < k_; ++j) out.push_back(at(i, j) ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

BasisMatrix BasisMatrix::from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string header, tag;
    std::getline(in, header);
    std::istringstream hs(header);
    hs >> tag;
    if (tag != "basis") throw ConfigError("basis matrix text lacks its header");
    std::size_t m = 0, k = 0;
    int x = 0;
    std::optional<Timestamp> origin;
    std::string kv;
    while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "M") m = std::stoul(value);
        if (key == "K") k = std::stoul(value);
        if (key == "x") x = std::stoi(value);
        if (key == "origin") origin = parse_iso8601(value);
    }
    if (!origin || x <= 0) throw ConfigError("basis matrix header incomplete");
    std::string line;
    std::getline(in, line);
    std::istringstream bs(line);
    bs >> tag;
    std::vector<std::string> names;
    std::string name;
    while (bs >> name) names.push_back(name);
    if (tag != "behaviors" || names.size() != m) throw ConfigError("basis matrix behavior line does not match M");
    BasisMatrix bv(names, k, x, *origin);
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::getline(in, line) || line.size() != k) throw ConfigError("basis matrix row " + std::to_string(i) + " has wrong length");
        for (std::size_t j = 0; j < k; ++j) {
            if (line[j] != '0' && line[j] != '1') throw ConfigError("basis matrix cell is not 0 or 1");
            bv.set(i, j, line[j] == '1');
        }
    }
    return bv;
}

BasisMatrix basis_vectorize_from(const RhbLog& log, int x, Timestamp origin, const std::vector<std::string>* behaviors) {
    if (log.entries.empty()) throw EmptyLog("cannot vectorize an empty log");
    if (x < 1 || x > kMinutesPerDay) throw std::invalid_argument("window must be in [1, 1440] minutes");
    Timestamp max_stop = log.entries.front().stop, max_start = log.entries.front().start;
    for (const auto& e : log.entries) {
        max_stop = std::max(max_stop, e.stop);
        max_start = std::max(max_start, e.start);
    }
    std::int64_t span = max_stop - origin;
    std::int64_t k = span > 0 ? floor_div(span + x - 1, x) : 0;
    k = std::max(k, floor_div(max_start - origin, x) + 1);

    std::vector<std::string> rows = behaviors ? *behaviors : log.behaviors();
    BasisMatrix bv(rows, static_cast<std::size_t>(k), x, origin);
    for (const auto& e : log.entries) {
        auto row = bv.row_of(e.behavior);
        if (!row) continue;
        std::int64_t first = std::max<std::int64_t>(0, floor_div(e.start - origin, x));
        std::int64_t last = std::min<std::int64_t>(k - 1, floor_div(e.stop - origin, x));
        for (std::int64_t j = first; j <= last; ++j) bv.set(*row, static_cast<std::size_t>(j), 1);
    }
    return bv;
}

BasisMatrix basis_vectorize(const RhbLog& log, int x, const std::vector<std::string>* behaviors) {
    if (log.entries.empty()) throw EmptyLog("cannot vectorize an empty log");
    return basis_vectorize_from(log, x, log.entries.front().start, behaviors);
}

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

std::size_t context_windows(int weeks, int x) {
    if (weeks < 1 || x < 1) throw std::invalid_argument("weeks and window must be positive");
    return static_cast<std::size_t>(weeks) * kMinutesPerWeek / static_cast<std::size_t>(x);
}

Timestamp frame_reference(const BasisMatrix& bv, const PredictionFrame& f) {
    return bv.column_start(f.context_end_column() - 1);
}

Timestamp frame_cutoff(const BasisMatrix& bv, const PredictionFrame& f) { return bv.column_start(f.context_end_column()); }

std::vector<PredictionFrame> make_frames(const BasisMatrix& bv, std::string_view target, std::size_t k_ctx,
                                         std::size_t stride) {
    if (k_ctx == 0 || stride == 0) throw std::invalid_argument("context length and stride must be positive");
    if (k_ctx > bv.cols()) throw std::invalid_argument("context longer than the basis matrix");
    auto row = bv.row_of(target);
    const std::size_t k = bv.cols();
    if (!row) throw NoTargetOccurrences("behavior '" + std::string(target) + "' is not a row of the matrix");
    const auto* r = bv.row(*row);
    if (std::none_of(r, r + k, [](std::uint8_t c) { return c != 0; }))
        throw NoTargetOccurrences("behavior '" + std::string(target) + "' never occurs");

    // next[j] = first column >= j holding the target, or k.
    std::vector<std::size_t> next(k + 1, k);
    for (std::size_t j = k; j-- > 0;) next[j] = r[j] ? j : next[j + 1];

    std::vector<PredictionFrame> out;
    for (std::size_t o = 0; o + k_ctx < k; o += stride) {
        std::size_t end = o + k_ctx;
        if (next[end] == k) break;
        out.push_back({o, k_ctx, *row, static_cast<int>(next[end] - end + 1)});
    }
    return out;
}

FrameSplit split_by_fraction(const std::vector<PredictionFrame>& frames, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("split fraction must be in [0, 1]");
    auto n_train = static_cast<std::size_t>(fraction * static_cast<double>(frames.size()));
    return {{frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(n_train)},
            {frames.begin() + static_cast<std::ptrdiff_t>(n_train), frames.end()}};
}

FrameSplit split_by_date(const BasisMatrix& bv, const std::vector<PredictionFrame>& frames, Timestamp date) {
    FrameSplit s;
    for (const auto& f : frames) (frame_cutoff(bv, f) <= date ? s.train : s.test).push_back(f);
    return s;
}

}  // namespace actsafe
