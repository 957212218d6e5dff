#pragma once

// Case tables shared by the unit tests and the acceptance binary.

#include "cohort/criteria.hpp"
#include "cohort/date.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace cohort::testing {

struct ResolveCase {
    const char* text;
    Date anchor;
    std::optional<Date> expected;
};

/// Fixed timex resolution table.
const std::vector<ResolveCase>& resolve_cases();

/// Extracts exactly one timex from `text` and resolves it; nullopt otherwise.
std::optional<Date> resolve_text(std::string_view text, const Date& anchor);

struct Evidence {
    CriterionId id;
    const char* phrase;
};

/// One evidence phrase per criterion that a plain negation must switch off.
const std::vector<Evidence>& negation_evidence();

Label default_label(CriterionId id);

/// Label of `id` for a one-note record whose HPI section holds `sentence`.
Label hpi_label(std::string_view sentence, CriterionId id);

struct DominanceResult {
    CriterionId id;
    Label with;
    Label denied;
    bool holds() const { return with != default_label(id) && denied == default_label(id); }
};

/// "The patient has X." against "The patient denies X." for every evidence phrase.
std::vector<DominanceResult> negation_dominance();

}  // namespace cohort::testing
