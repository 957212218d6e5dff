#include "cohort/record_io.hpp"

#include "cohort/error.hpp"
#include "cohort/strings.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace cohort {

namespace {

constexpr std::size_t kMinSeparatorStars = 20;
const std::string kSeparatorLine(100, '*');

bool is_separator_line(std::string_view line) {
    line = trim(line);
    return line.size() >= kMinSeparatorStars && std::all_of(line.begin(), line.end(), [](char c) { return c == '*'; });
}

Date parse_note_header(std::string_view text) {
    const std::size_t eol = text.find('\n');
    const std::string first_line(trim(text.substr(0, eol)));
    static const std::regex header(R"(^record date:\s*(\d{4}-\d{2}-\d{2}))", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(first_line, m, header)) {
        throw Error(ErrorKind::MalformedHeader, fmt::format("note does not start with 'Record date: YYYY-MM-DD': '{}'", first_line));
    }
    const auto date = Date::parse_iso(m[1].str());
    if (!date) throw Error(ErrorKind::MalformedHeader, fmt::format("invalid record date '{}'", m[1].str()));
    return *date;
}

std::string_view between(std::string_view s, std::string_view open, std::string_view close, bool& found) {
    found = false;
    const std::size_t a = s.find(open);
    if (a == std::string_view::npos) return {};
    const std::size_t start = a + open.size();
    const std::size_t b = s.find(close, start);
    if (b == std::string_view::npos) return {};
    found = true;
    return s.substr(start, b - start);
}

std::map<CriterionId, Label> parse_tags(std::string_view tags_block) {
    std::map<CriterionId, Label> gold;
    static const std::regex tag(R"re(<\s*([A-Za-z0-9_\-]+)\s+met\s*=\s*"([^"]*)"\s*/?\s*>)re");
    const std::string block(tags_block);
    for (auto it = std::sregex_iterator(block.begin(), block.end(), tag); it != std::sregex_iterator(); ++it) {
        const std::string name = (*it)[1].str();
        const auto id = parse_criterion(name);
        if (!id) throw Error(ErrorKind::UnknownCriterionTag, fmt::format("unknown criterion tag '{}'", name));
        const auto label = parse_label((*it)[2].str());
        if (!label) throw Error(ErrorKind::MalformedHeader, fmt::format("tag {} has invalid met value '{}'", name, (*it)[2].str()));
        gold[*id] = *label;
    }
    return gold;
}

}  // namespace

std::vector<ClinicalNote> split_notes(std::string_view body) {
    std::vector<ClinicalNote> notes;
    std::size_t segment_start = 0;
    std::size_t pos = 0;
    auto flush = [&](std::size_t segment_end) {
        std::size_t b = segment_start;
        std::size_t e = segment_end;
        while (b < e && is_space(body[b])) ++b;
        while (e > b && is_space(body[e - 1])) --e;
        if (b == e) return;
        ClinicalNote note;
        note.text = std::string(body.substr(b, e - b));
        note.char_offset = b;
        note.record_date = parse_note_header(note.text);
        notes.push_back(std::move(note));
    };
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        if (eol == std::string_view::npos) eol = body.size();
        if (is_separator_line(body.substr(pos, eol - pos))) {
            flush(pos);
            segment_start = eol;
        }
        pos = eol + 1;
    }
    flush(body.size());
    return notes;
}

PatientRecord make_record(std::string patient_id, std::string body, std::vector<ClinicalNote> notes,
                          std::map<CriterionId, Label> gold) {
    if (notes.empty()) throw Error(ErrorKind::EmptyRecord, fmt::format("patient '{}' has no notes", patient_id));
    if (notes.size() < 3 || notes.size() > 5) {
        spdlog::warn("patient '{}' has {} notes (expected 3-5)", patient_id, notes.size());
    }
    std::stable_sort(notes.begin(), notes.end(),
                     [](const ClinicalNote& a, const ClinicalNote& b) { return a.record_date < b.record_date; });
    PatientRecord record;
    record.patient_id = std::move(patient_id);
    record.body = std::move(body);
    record.present_day = notes.back().record_date;
    record.notes = std::move(notes);
    record.gold = std::move(gold);
    return record;
}

PatientRecord parse_record(std::string_view bytes, std::string patient_id) {
    bool has_text = false;
    std::string_view body = between(bytes, "<TEXT>", "</TEXT>", has_text);
    if (!has_text) {
        body = bytes;
    } else {
        bool has_cdata = false;
        const std::string_view inner = between(body, "<![CDATA[", "]]>", has_cdata);
        if (has_cdata) body = inner;
    }
    std::map<CriterionId, Label> gold;
    bool has_tags = false;
    const std::string_view tags = between(bytes, "<TAGS>", "</TAGS>", has_tags);
    if (has_tags) gold = parse_tags(tags);

    auto notes = split_notes(body);
    return make_record(std::move(patient_id), std::string(body), std::move(notes), std::move(gold));
}

PatientRecord read_record_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_record(buf.str(), path.stem().string());
}

std::vector<PatientRecord> read_record_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, fmt::format("'{}' is not a directory", dir.string()));

    std::vector<fs::path> xml_files;
    // patient id -> (sequence number, path)
    std::map<std::string, std::vector<std::pair<long, fs::path>>> note_files;
    static const std::regex note_name(R"(^(.+)_(\d+)$)");
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() == ".xml") {
            xml_files.push_back(p);
        } else if (p.extension() == ".txt") {
            std::smatch m;
            const std::string stem = p.stem().string();
            if (std::regex_match(stem, m, note_name)) note_files[m[1].str()].emplace_back(std::stol(m[2].str()), p);
        }
    }

    std::vector<PatientRecord> records;
    for (const auto& p : xml_files) {
        try {
            records.push_back(read_record_file(p));
        } catch (const Error& e) {
            throw Error(e.kind(), fmt::format("{}: {}", p.string(), e.what()));
        }
    }
    for (auto& [pid, files] : note_files) {
        std::sort(files.begin(), files.end());
        std::string body;
        std::vector<ClinicalNote> notes;
        for (const auto& [seq, p] : files) {
            std::ifstream in(p, std::ios::binary);
            if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read '{}'", p.string()));
            std::ostringstream buf;
            buf << in.rdbuf();
            if (!body.empty()) body += "\n" + kSeparatorLine + "\n";
            const std::size_t base = body.size();
            body += buf.str();
            try {
                for (auto note : split_notes(buf.str())) {
                    note.char_offset += base;
                    notes.push_back(std::move(note));
                }
            } catch (const Error& e) {
                throw Error(e.kind(), fmt::format("{}: {}", p.string(), e.what()));
            }
        }
        records.push_back(make_record(pid, std::move(body), std::move(notes)));
    }
    std::sort(records.begin(), records.end(),
              [](const PatientRecord& a, const PatientRecord& b) { return a.patient_id < b.patient_id; });
    return records;
}

namespace {

void require_all(const DecisionMap& decisions) {
    for (CriterionId id : kAllCriteria) {
        if (!decisions.contains(id)) {
            throw Error(ErrorKind::MissingCriterion, fmt::format("no decision for {}", display_name(id)));
        }
    }
}

}  // namespace

std::string write_decisions(const PatientRecord& record, const DecisionMap& decisions) {
    require_all(decisions);
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n<PatientMatching>\n<TEXT><![CDATA[";
    out += record.body;
    out += "]]></TEXT>\n<TAGS>\n";
    for (CriterionId id : kAllCriteria) {
        out += fmt::format("<{} met=\"{}\" />\n", tag_name(id), to_string(decisions.at(id).label));
    }
    out += "</TAGS>\n</PatientMatching>\n";
    return out;
}

std::string write_evidence_json(const PatientRecord& record, const DecisionMap& decisions) {
    require_all(decisions);
    nlohmann::ordered_json doc;
    doc["patient_id"] = record.patient_id;
    doc["present_day"] = record.present_day.iso();
    auto& notes = doc["notes"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < record.notes.size(); ++i) {
        notes.push_back({{"index", i}, {"record_date", record.notes[i].record_date.iso()}});
    }
    auto& out = doc["decisions"] = nlohmann::ordered_json::array();
    for (CriterionId id : kAllCriteria) {
        const CriterionDecision& d = decisions.at(id);
        nlohmann::ordered_json item;
        item["criterion"] = display_name(id);
        item["label"] = to_string(d.label);
        item["fallback"] = d.fallback;
        if (d.score) item["score"] = *d.score;
        if (!d.trace.empty()) {
            auto& trace = item["trace"] = nlohmann::ordered_json::object();
            for (const auto& [name, value] : d.trace) trace[name] = value;
        }
        auto& ev = item["evidence"] = nlohmann::ordered_json::array();
        for (const EvidenceItem& e : d.evidence) {
            nlohmann::ordered_json j{{"note_index", e.note_index}, {"begin", e.span.begin}, {"end", e.span.end}, {"reason", e.reason}};
            if (e.note_index >= 0 && static_cast<std::size_t>(e.note_index) < record.notes.size()) {
                const std::string& text = record.notes[static_cast<std::size_t>(e.note_index)].text;
                if (e.span.end <= text.size() && e.span.begin < e.span.end) j["text"] = text.substr(e.span.begin, e.span.size());
            }
            ev.push_back(std::move(j));
        }
        out.push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

}  // namespace cohort
