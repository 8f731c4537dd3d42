#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace actsafe {

/// Lowercases, trims and collapses internal whitespace runs to one space.
std::string normalize_phrase(std::string_view text);

/// Canonical activity names plus a surface-form -> canonical synonym map.
/// Lookups are case-insensitive and whitespace-normalized. A canonical name
/// always resolves to itself.
class ActivityVocabulary {
public:
    ActivityVocabulary() = default;

    void add_canonical(std::string_view name);
    /// Throws ConfigError when `canonical` is not a known canonical name.
    void add_synonym(std::string_view surface, std::string_view canonical);

    std::optional<std::string> lookup(std::string_view surface) const;
    bool contains(std::string_view canonical) const;
    bool empty() const { return canonical_.empty(); }

    const std::set<std::string>& canonical_names() const { return canonical_; }
    const std::map<std::string, std::string>& synonyms() const { return synonyms_; }

    /// Every surface form (canonical names with '_' read as spaces, plus synonyms)
    /// paired with its canonical name, in sorted order.
    std::vector<std::pair<std::string, std::string>> surface_forms() const;

    /// One line per canonical name: `name: synonym, synonym, ...`.
    /// Blank lines and lines starting with '#' are ignored.
    static ActivityVocabulary parse(std::string_view text);
    static ActivityVocabulary load(const std::filesystem::path& path);

    /// Vocabulary covering the behaviors and guideline phrasing used throughout
    /// the project (eating, medication intake, sleep, exercise, ...).
    static const ActivityVocabulary& builtin();

    std::string to_text() const;

private:
    std::set<std::string> canonical_;
    std::map<std::string, std::string> synonyms_;
};

}  // namespace actsafe
