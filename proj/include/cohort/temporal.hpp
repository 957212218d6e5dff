#pragma once

#include "cohort/date.hpp"
#include "cohort/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cohort {

enum class TimexKind : std::uint8_t { AbsoluteDate, PartialDate, RelativeOffset, VagueHistory };

std::string_view to_string(TimexKind kind);

enum class TimeUnit : std::uint8_t { Day, Week, Month, Year };

struct Timex {
    Span span;
    TimexKind kind = TimexKind::VagueHistory;
    std::string raw;

    // AbsoluteDate / PartialDate components. `year_digits` is 2 when the year was
    // written with two digits and needs century resolution.
    int year = 0;
    int year_digits = 4;
    unsigned month = 0;
    unsigned day = 0;  // 0 for partial dates

    // RelativeOffset
    int amount = 0;
    TimeUnit unit = TimeUnit::Day;
};

/// Finds temporal expressions in `text`; spans are offsets into `text` shifted by `base`.
std::vector<Timex> extract_timexes(std::string_view text, std::size_t base = 0);

/// Resolves a timex against the containing note's record date.
std::optional<Date> resolve(const Timex& timex, const Date& anchor);

/// Year among {1900+yy, 2000+yy, 2100+yy} whose (month, day) date is closest to `anchor`;
/// ties go to the earlier century.
int closest_century_year(int two_digit_year, unsigned month, unsigned day, const Date& anchor);

struct TemporalWindow {
    int length_months = 6;
    CriterionId criterion = CriterionId::Mi6mos;
};

TemporalWindow window_for(CriterionId criterion);

/// Everything known about when a mention happened.
struct MentionTime {
    std::optional<Date> event_date;  // resolved in-sentence timex
    bool vague = false;              // the in-sentence timex was VagueHistory
    SectionKind section = SectionKind::Other;
    Assertion assertion = Assertion::Present;
    Date note_date;
};

/// True when the mention is a current (Present, non-PMH) event dated within the window
/// ending at `present_day`. Mentions without a timex inherit their note's date.
bool within_window(const MentionTime& mention, const Date& present_day, const TemporalWindow& window);

}  // namespace cohort
