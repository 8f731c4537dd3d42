#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "actsafe/mtc.hpp"
#include "actsafe/vocabulary.hpp"

namespace actsafe {

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

/// A lowercase word (alphanumeric run, split at digit/letter boundaries) or a
/// single punctuation mark, with its byte range in the source text. En and em
/// dashes are read as "-".
struct TextToken {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<TextToken> tokenize(std::string_view text);

/// Splits on '.', ';' and newlines. A period ends a sentence only when
/// followed by whitespace or end of text and preceded by a word longer than
/// one character, so "a.m." and "1.5" stay inside their sentence.
struct Sentence {
    std::string text;
    std::size_t offset = 0;  // byte offset in the document
};

std::vector<Sentence> split_sentences(std::string_view document);

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

enum class SlotKind { literal, number, unit, clocktime, daypart, activity };

std::string_view to_string(SlotKind k);

struct TemplateToken {
    SlotKind kind = SlotKind::literal;
    /// Literal words (possibly several, matched contiguously) or the activity
    /// surface form; empty for pattern slots.
    std::vector<std::string> words;
};

/// Values bound to the pattern slots of a template.
struct SlotValues {
    std::optional<int> n;
    bool range = false;  // NUMBER came from "a-b"; n holds b
    std::optional<TimeUnit> unit;
    std::optional<ClockTime> time;
    std::optional<DayPart> part;
};

struct Template {
    std::size_t id = 0;
    std::vector<TemplateToken> tokens;
    /// Constraint with every fixed field set; slot fields hold placeholders
    /// that `instantiate` overwrites.
    Mtc skeleton;

    std::string describe() const;
};

Mtc instantiate(const Template& t, const SlotValues& values);

/// Surface text of each template token with `values` bound.
std::vector<std::string> render_tokens(const Template& t, const SlotValues& values);

/// render_tokens joined by single spaces.
std::string render(const Template& t, const SlotValues& values);

/// Deterministic template list. Activity slots are expanded over every
/// surface form of `vocab`, each bound to its canonical name.
std::vector<Template> enumerate_templates(const ActivityVocabulary& vocab);

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    auto operator<=>(const Span&) const = default;
};

struct MatchResult {
    Mtc mtc;
    std::size_t statement = 0;
    std::vector<Span> spans;  // byte ranges in the statement, one per template token
    std::size_t template_id = 0;
    bool range = false;
};

/// In-order, gap-tolerant matching of every template inside one sentence.
/// Overlapping candidates are resolved greedily by (most template tokens,
/// most covered words, earliest start, shortest extent, template id); two
/// candidates overlap when they share a word outside an activity or
/// clock-time slot. Results are ordered by first span.
std::vector<MatchResult> match_statement(std::string_view statement, const std::vector<Template>& templates,
                                         std::size_t statement_index = 0);

std::vector<MatchResult> extract_from_guideline(std::string_view document, const std::vector<Template>& templates);

/// Convenience overload that builds the template list from `vocab`.
std::vector<MatchResult> extract_from_guideline(std::string_view document, const ActivityVocabulary& vocab);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Document id -> set of constraint type tags ("V1".."V7", "NEGATED").
using TypeLabels = std::map<std::string, std::set<std::string>>;

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // gold documents carrying the type
    std::size_t tp = 0, fp = 0, fn = 0;
};

struct ExtractionReport {
    std::map<std::string, ClassScores> per_type;
    ClassScores micro;
    ClassScores weighted;  // support-weighted macro average
};

/// Type tags present in `results`.
std::set<std::string> type_tags(const std::vector<MatchResult>& results);

/// Throws MismatchedCorpus when the document id sets differ.
ExtractionReport evaluate_extraction(const TypeLabels& predictions, const TypeLabels& gold);

/// Reads `doc_id<TAB>V1,V2` lines; an empty type list is allowed.
TypeLabels parse_type_labels(std::string_view text);

/// Aligned plain-text table.
std::string format_report(const ExtractionReport& report);

}  // namespace actsafe
