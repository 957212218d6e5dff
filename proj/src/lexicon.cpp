#include "cohort/lexicon.hpp"

#include "cohort/error.hpp"
#include "cohort/strings.hpp"
#include "cohort/textproc.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace cohort {

std::string_view to_string(Polarity polarity) { return polarity == Polarity::Positive ? "Positive" : "Negative"; }

std::string_view to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::Manual: return "Manual";
        case Provenance::IelsInternal: return "IelsInternal";
        case Provenance::IelsExpanded: return "IelsExpanded";
    }
    return "Manual";
}

Lexicon::Lexicon(std::string name, SemanticType type, Polarity polarity, Provenance provenance)
    : name_(std::move(name)), type_(type), polarity_(polarity), provenance_(provenance) {}

bool Lexicon::add(LexTerm term) {
    term.text = normalize_phrase(term.text);
    if (term.text.empty()) throw Error(ErrorKind::BadTerm, fmt::format("lexicon '{}': empty term", name_));
    const std::size_t order = word_count(term.text);
    if (order > kMaxNgramOrder) {
        throw Error(ErrorKind::BadTerm, fmt::format("lexicon '{}': term '{}' has {} words (max {})", name_, term.text, order, kMaxNgramOrder));
    }
    const bool derived = provenance_ != Provenance::Manual;
    if (term.weight.has_value() != derived) {
        throw Error(ErrorKind::BadTerm, fmt::format("lexicon '{}': term '{}' weight must be {} for provenance {}", name_, term.text,
                                                    derived ? "present" : "absent", to_string(provenance_)));
    }
    if (contains(term.text)) return false;
    terms_.push_back(std::move(term));
    return true;
}

bool Lexicon::contains(std::string_view text) const {
    const std::string key = normalize_phrase(text);
    for (const LexTerm& t : terms_) {
        if (t.text == key) return true;
    }
    return false;
}

namespace {

std::optional<Polarity> parse_polarity(std::string_view s) {
    const std::string t = to_lower(trim(s));
    if (t == "positive") return Polarity::Positive;
    if (t == "negative") return Polarity::Negative;
    return std::nullopt;
}

std::optional<Provenance> parse_provenance(std::string_view s) {
    const std::string t = to_lower(trim(s));
    if (t == "manual") return Provenance::Manual;
    if (t == "ielsinternal") return Provenance::IelsInternal;
    if (t == "ielsexpanded") return Provenance::IelsExpanded;
    return std::nullopt;
}

}  // namespace

Lexicon parse_lexicon(std::string_view content, std::string_view origin) {
    std::optional<std::string> name;
    std::optional<SemanticType> type;
    Polarity polarity = Polarity::Positive;
    Provenance provenance = Provenance::Manual;
    std::vector<LexTerm> terms;

    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    bool in_body = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.front() == '#') {
            if (in_body) continue;  // comment inside the body
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = to_lower(trim(std::string_view(line).substr(1, eq - 1)));
            const std::string_view value = trim(std::string_view(line).substr(eq + 1));
            if (key == "name") {
                name = std::string(value);
            } else if (key == "type") {
                type = parse_semantic_type(value);
                if (!type) throw Error(ErrorKind::BadHeader, fmt::format("{}:{}: unknown type '{}'", origin, line_no, value));
            } else if (key == "polarity") {
                const auto p = parse_polarity(value);
                if (!p) throw Error(ErrorKind::BadHeader, fmt::format("{}:{}: unknown polarity '{}'", origin, line_no, value));
                polarity = *p;
            } else if (key == "provenance") {
                const auto p = parse_provenance(value);
                if (!p) throw Error(ErrorKind::BadHeader, fmt::format("{}:{}: unknown provenance '{}'", origin, line_no, value));
                provenance = *p;
            }
            continue;
        }
        in_body = true;
        const auto fields = split(line, '\t');
        LexTerm term;
        term.text = std::string(fields[0]);
        if (fields.size() > 1 && !trim(fields[1]).empty()) {
            const std::string w(trim(fields[1]));
            try {
                std::size_t used = 0;
                term.weight = std::stod(w, &used);
                if (used != w.size()) throw std::invalid_argument(w);
            } catch (const std::exception&) {
                throw Error(ErrorKind::BadTerm, fmt::format("{}:{}: bad weight '{}'", origin, line_no, w));
            }
        }
        if (fields.size() > 2 && !trim(fields[2]).empty()) term.neighbors_of = std::string(trim(fields[2]));
        terms.push_back(std::move(term));
    }
    if (!name || name->empty()) throw Error(ErrorKind::BadHeader, fmt::format("{}: missing #name= header", origin));
    if (!type) throw Error(ErrorKind::BadHeader, fmt::format("{}: missing #type= header", origin));

    Lexicon lexicon(*name, *type, polarity, provenance);
    for (LexTerm& term : terms) {
        const std::string shown = term.text;
        if (!lexicon.add(std::move(term))) spdlog::warn("{}: duplicate term '{}' ignored", origin, shown);
    }
    return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read lexicon '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_lexicon(buf.str(), path.string());
}

std::string format_lexicon(const Lexicon& lexicon) {
    std::string out = fmt::format("#name={}\n#type={}\n#polarity={}\n#provenance={}\n", lexicon.name(),
                                  to_string(lexicon.semantic_type()), to_string(lexicon.polarity()),
                                  to_string(lexicon.provenance()));
    for (const LexTerm& t : lexicon.terms()) {
        out += t.text;
        if (t.weight || t.neighbors_of) {
            // Round-trip precision for weights.
            out += '\t';
            if (t.weight) out += fmt::format("{:.17g}", *t.weight);
            if (t.neighbors_of) out += '\t' + *t.neighbors_of;
        }
        out += '\n';
    }
    return out;
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write lexicon '{}'", path.string()));
    out << format_lexicon(lexicon);
}

bool two_way_substring_match(std::string_view s1, std::string_view s2) {
    const std::string a = to_lower(trim(s1));
    const std::string b = to_lower(trim(s2));
    return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

bool matches_lexicon(std::string_view surface, const Lexicon& lexicon, MatchMode mode, std::size_t min_substring_length) {
    if (mode == MatchMode::Exact) {
        const std::string key = token_key(surface);
        for (const LexTerm& t : lexicon.terms()) {
            if (token_key(t.text) == key) return true;
        }
        return false;
    }
    const std::string s = normalize_phrase(surface);
    const std::string key = token_key(surface);
    for (const LexTerm& t : lexicon.terms()) {
        if (std::min(s.size(), t.text.size()) < min_substring_length) {
            if (s == t.text || key == token_key(t.text)) return true;
            continue;
        }
        if (two_way_substring_match(s, t.text) || key == token_key(t.text)) return true;
    }
    return false;
}

std::vector<Entity> match_lexicon(const std::vector<Entity>& entities, const Lexicon& lexicon, MatchMode mode,
                                  std::size_t min_substring_length) {
    std::vector<Entity> out;
    for (const Entity& e : entities) {
        if (matches_lexicon(e.surface, lexicon, mode, min_substring_length)) out.push_back(e);
    }
    return out;
}

}  // namespace cohort
