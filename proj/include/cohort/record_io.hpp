#pragma once

#include "cohort/date.hpp"
#include "cohort/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cohort {

struct ClinicalNote {
    Date record_date;
    std::string text;
    /// Offset of `text` within the record's TEXT body.
    std::size_t char_offset = 0;
};

/// One patient: notes in ascending record-date order, optional gold tags.
struct PatientRecord {
    std::string patient_id;
    std::string body;  // raw TEXT body, notes are substrings of it
    std::vector<ClinicalNote> notes;
    std::map<CriterionId, Label> gold;
    Date present_day;

    bool has_gold() const { return !gold.empty(); }
};

/// Parses a patient file (`<TEXT>` CDATA body plus optional `<TAGS>` block).
/// A file without a `<TEXT>` element is treated as a bare TEXT body.
PatientRecord parse_record(std::string_view bytes, std::string patient_id);

/// Splits a TEXT body into notes on separator lines of >= 20 '*' characters.
std::vector<ClinicalNote> split_notes(std::string_view body);

/// Builds a record from already-split notes (e.g. the per-note directory layout).
PatientRecord make_record(std::string patient_id, std::string body, std::vector<ClinicalNote> notes,
                          std::map<CriterionId, Label> gold = {});

PatientRecord read_record_file(const std::filesystem::path& path);

/// Loads every patient under `dir`: `*.xml` files, or `<patientid>_<seq>.txt` note files
/// grouped per patient. Result is sorted by patient id.
std::vector<PatientRecord> read_record_directory(const std::filesystem::path& dir);

struct EvidenceItem {
    int note_index = -1;  // -1 for record-level evidence
    Span span;
    std::string reason;
};

struct CriterionDecision {
    CriterionId criterion{};
    Label label = Label::NotMet;
    std::vector<EvidenceItem> evidence;
    /// Sub-criterion trace; Advanced-CAD records its four sub-criteria here.
    std::map<std::string, bool> trace;
    std::optional<double> score;
    /// True when a classifier criterion ran its rule fallback.
    bool fallback = false;
};

using DecisionMap = std::map<CriterionId, CriterionDecision>;

/// Patient file with the original TEXT body and a TAGS block of all 13 decisions.
std::string write_decisions(const PatientRecord& record, const DecisionMap& decisions);

/// Sidecar JSON with evidence spans and traces.
std::string write_evidence_json(const PatientRecord& record, const DecisionMap& decisions);

}  // namespace cohort
