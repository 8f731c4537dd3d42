#include "actsafe/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "actsafe/error.hpp"

namespace actsafe {

std::string normalize_phrase(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

namespace {

std::string canonical_key(std::string_view name) {
    std::string n = normalize_phrase(name);
    std::replace(n.begin(), n.end(), ' ', '_');
    return n;
}

std::string surface_of(std::string_view canonical) {
    std::string s(canonical);
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
}

}  // namespace

void ActivityVocabulary::add_canonical(std::string_view name) {
    auto key = canonical_key(name);
    if (key.empty()) throw ConfigError("empty canonical activity name");
    canonical_.insert(key);
}

void ActivityVocabulary::add_synonym(std::string_view surface, std::string_view canonical) {
    auto target = canonical_key(canonical);
    if (!canonical_.count(target)) throw ConfigError("synonym target '" + target + "' is not a canonical name");
    auto key = normalize_phrase(surface);
    if (key.empty()) throw ConfigError("empty synonym for '" + target + "'");
    synonyms_[key] = target;
}

std::optional<std::string> ActivityVocabulary::lookup(std::string_view surface) const {
    auto phrase = normalize_phrase(surface);
    if (auto it = synonyms_.find(phrase); it != synonyms_.end()) return it->second;
    auto key = canonical_key(surface);
    if (canonical_.count(key)) return key;
    return std::nullopt;
}

bool ActivityVocabulary::contains(std::string_view canonical) const { return canonical_.count(std::string(canonical)) > 0; }

std::vector<std::pair<std::string, std::string>> ActivityVocabulary::surface_forms() const {
    std::map<std::string, std::string> forms;
    for (const auto& c : canonical_) forms.emplace(surface_of(c), c);
    for (const auto& [s, c] : synonyms_) forms[s] = c;
    return {forms.begin(), forms.end()};
}

ActivityVocabulary ActivityVocabulary::parse(std::string_view text) {
    ActivityVocabulary vocab;
    std::vector<std::pair<std::string, std::string>> pending;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto trimmed = normalize_phrase(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        auto colon = line.find(':');
        std::string name = line.substr(0, colon);
        if (normalize_phrase(name).empty())
            throw ConfigError("vocabulary line " + std::to_string(lineno) + " has no canonical name");
        vocab.add_canonical(name);
        if (colon == std::string::npos) continue;
        std::stringstream syns(line.substr(colon + 1));
        std::string syn;
        while (std::getline(syns, syn, ',')) {
            if (!normalize_phrase(syn).empty()) pending.emplace_back(syn, name);
        }
    }
    for (const auto& [syn, name] : pending) vocab.add_synonym(syn, name);
    return vocab;
}

ActivityVocabulary ActivityVocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vocabulary file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const ActivityVocabulary& ActivityVocabulary::builtin() {
    static const ActivityVocabulary vocab = parse(R"(# canonical: synonyms
eating: eat, eats, meal, meals, a meal, food, breakfast, lunch, dinner, supper, each main meal, main meal
take_medicine: take medicine, taking medication, taking medications, taking these medications, these medications, take medication
sleeping: sleep, bedtime, going to bed, asleep
wake_up: waking up, wake up, you wake up, waking
exercise: exercising, workout, physical activity, strenuous exercise
work: working
drive: driving
)");
    return vocab;
}

std::string ActivityVocabulary::to_text() const {
    std::map<std::string, std::vector<std::string>> by_target;
    for (const auto& c : canonical_) by_target[c];
    for (const auto& [s, c] : synonyms_) by_target[c].push_back(s);
    std::string out;
    for (const auto& [c, syns] : by_target) {
        out += c + ":";
        for (std::size_t i = 0; i < syns.size(); ++i) out += (i ? ", " : " ") + syns[i];
        out += "\n";
    }
    return out;
}

}  // namespace actsafe
