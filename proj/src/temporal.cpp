#include "cohort/temporal.hpp"

#include "cohort/strings.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>

namespace cohort {

std::string_view to_string(TimexKind kind) {
    switch (kind) {
        case TimexKind::AbsoluteDate: return "AbsoluteDate";
        case TimexKind::PartialDate: return "PartialDate";
        case TimexKind::RelativeOffset: return "RelativeOffset";
        case TimexKind::VagueHistory: return "VagueHistory";
    }
    return "VagueHistory";
}

namespace {

constexpr auto kFlags = std::regex::ECMAScript | std::regex::icase;

const std::string kMonthAlternation =
    "(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|"
    "nov(?:ember)?|dec(?:ember)?)";

unsigned month_from_name(std::string_view name) {
    static constexpr std::array<std::string_view, 12> prefixes = {"jan", "feb", "mar", "apr", "may", "jun",
                                                                  "jul", "aug", "sep", "oct", "nov", "dec"};
    const std::string lower = to_lower(name.substr(0, 3));
    for (unsigned i = 0; i < prefixes.size(); ++i) {
        if (lower == prefixes[i]) return i + 1;
    }
    return 0;
}

int number_word(std::string_view word) {
    static constexpr std::array<std::string_view, 13> words = {"zero", "one", "two",   "three", "four",   "five", "six",
                                                               "seven", "eight", "nine", "ten", "eleven", "twelve"};
    const std::string lower = to_lower(word);
    if (lower == "a" || lower == "an") return 1;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (lower == words[i]) return static_cast<int>(i);
    }
    return std::atoi(lower.c_str());
}

TimeUnit unit_from_word(std::string_view word) {
    const std::string lower = to_lower(word);
    if (lower.starts_with("d")) return TimeUnit::Day;
    if (lower.starts_with("w")) return TimeUnit::Week;
    if (lower.starts_with("m")) return TimeUnit::Month;
    return TimeUnit::Year;
}

struct Pattern {
    std::regex re;
    TimexKind kind;
    int id;
};

const std::vector<Pattern>& patterns() {
    static const std::vector<Pattern> table = [] {
        std::vector<Pattern> p;
        p.push_back({std::regex(R"(\b(\d{4})-(\d{1,2})-(\d{1,2})\b)", kFlags), TimexKind::AbsoluteDate, 0});
        p.push_back({std::regex(R"(\b(\d{1,2})/(\d{1,2})/(\d{4}|\d{2})\b)", kFlags), TimexKind::AbsoluteDate, 1});
        p.push_back({std::regex("\\b" + kMonthAlternation + R"(\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})\b)", kFlags),
                     TimexKind::AbsoluteDate, 2});
        p.push_back({std::regex("\\b" + kMonthAlternation + R"(\.?,?\s+(?:of\s+)?(\d{4})\b)", kFlags), TimexKind::PartialDate, 3});
        p.push_back({std::regex(R"(\b(\d{1,2})/(\d{4}|\d{2})\b)", kFlags), TimexKind::PartialDate, 4});
        p.push_back({std::regex(R"(\b(\d+|an?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\s+)"
                                R"((days?|weeks?|wks?|months?|mos?|years?|yrs?)\s+ago\b)",
                                kFlags),
                     TimexKind::RelativeOffset, 5});
        p.push_back({std::regex(R"(\blast\s+(week|month|year)\b)", kFlags), TimexKind::RelativeOffset, 6});
        p.push_back({std::regex(R"(\byesterday\b)", kFlags), TimexKind::RelativeOffset, 7});
        p.push_back({std::regex(R"(\b(?:(?:many|several|a\s+few|few|some)\s+)?(?:years|decades)\s+ago\b)", kFlags),
                     TimexKind::VagueHistory, 8});
        p.push_back({std::regex(R"(\bremote(?:\s+history)?\b|\blong\s+ago\b|\bas\s+a\s+(?:child|teenager)\b)", kFlags),
                     TimexKind::VagueHistory, 9});
        p.push_back({std::regex(R"(\bin\s+the\s+(?:distant\s+|remote\s+)?past\b(?!\s+(?:\d|few|several|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|year|month|week|day)))",
                                kFlags),
                     TimexKind::VagueHistory, 10});
        return p;
    }();
    return table;
}

bool fill(Timex& t, int id, const std::smatch& m, std::string_view text, std::size_t pos) {
    switch (id) {
        case 0:
            t.year = std::stoi(m[1].str());
            t.month = static_cast<unsigned>(std::stoi(m[2].str()));
            t.day = static_cast<unsigned>(std::stoi(m[3].str()));
            return Date::make(t.year, t.month, t.day).has_value();
        case 1:
            t.month = static_cast<unsigned>(std::stoi(m[1].str()));
            t.day = static_cast<unsigned>(std::stoi(m[2].str()));
            t.year = std::stoi(m[3].str());
            t.year_digits = static_cast<int>(m[3].length());
            return t.month >= 1 && t.month <= 12 && t.day >= 1 && t.day <= 31;
        case 2:
            t.month = month_from_name(m[1].str());
            t.day = static_cast<unsigned>(std::stoi(m[2].str()));
            t.year = std::stoi(m[3].str());
            return Date::make(t.year, t.month, t.day).has_value();
        case 3:
            t.month = month_from_name(m[1].str());
            t.year = std::stoi(m[2].str());
            return t.month != 0;
        case 4: {
            // Reject pieces of longer slash expressions such as "120/80/3".
            const std::size_t end = pos + static_cast<std::size_t>(m.length(0));
            if (pos > 0 && (text[pos - 1] == '/' || text[pos - 1] == '.')) return false;
            if (end < text.size() && (text[end] == '/' || (text[end] == '.' && end + 1 < text.size() && is_digit(text[end + 1])))) return false;
            t.month = static_cast<unsigned>(std::stoi(m[1].str()));
            t.year = std::stoi(m[2].str());
            t.year_digits = static_cast<int>(m[2].length());
            return t.month >= 1 && t.month <= 12;
        }
        case 5:
            t.amount = number_word(m[1].str());
            t.unit = unit_from_word(m[2].str());
            return t.amount > 0;
        case 6:
            t.amount = 1;
            t.unit = unit_from_word(m[1].str());
            return true;
        case 7:
            t.amount = 1;
            t.unit = TimeUnit::Day;
            return true;
        default:
            return true;
    }
}

}  // namespace

std::vector<Timex> extract_timexes(std::string_view text, std::size_t base) {
    const std::string s(text);
    std::vector<Timex> found;
    auto overlaps = [&](std::size_t b, std::size_t e) {
        return std::any_of(found.begin(), found.end(), [&](const Timex& t) {
            return b < t.span.end - base && t.span.begin - base < e;
        });
    };
    for (const Pattern& p : patterns()) {
        for (auto it = std::sregex_iterator(s.begin(), s.end(), p.re); it != std::sregex_iterator(); ++it) {
            const std::smatch& m = *it;
            const auto b = static_cast<std::size_t>(m.position(0));
            const std::size_t e = b + static_cast<std::size_t>(m.length(0));
            if (overlaps(b, e)) continue;
            Timex t;
            t.kind = p.kind;
            t.raw = m.str(0);
            t.span = Span{base + b, base + e};
            if (!fill(t, p.id, m, text, b)) continue;
            found.push_back(std::move(t));
        }
    }
    std::sort(found.begin(), found.end(), [](const Timex& a, const Timex& b) { return a.span < b.span; });
    return found;
}

int closest_century_year(int two_digit_year, unsigned month, unsigned day, const Date& anchor) {
    int best_year = 1900 + two_digit_year;
    long best_distance = -1;
    for (int century : {1900, 2000, 2100}) {
        const int year = century + two_digit_year;
        auto candidate = Date::make(year, month, day == 0 ? 1 : day);
        if (!candidate) candidate = Date(year, month, 1).minus_months(-1).minus_days(1);  // clamp to month end
        const long distance = std::labs(days_between(*candidate, anchor));
        if (best_distance < 0 || distance < best_distance) {
            best_distance = distance;
            best_year = year;
        }
    }
    return best_year;
}

std::optional<Date> resolve(const Timex& timex, const Date& anchor) {
    switch (timex.kind) {
        case TimexKind::AbsoluteDate:
        case TimexKind::PartialDate: {
            const unsigned day = timex.kind == TimexKind::PartialDate ? 1 : timex.day;
            int year = timex.year;
            if (timex.year_digits == 2) year = closest_century_year(timex.year, timex.month, day, anchor);
            return Date::make(year, timex.month, day);
        }
        case TimexKind::RelativeOffset:
            switch (timex.unit) {
                case TimeUnit::Day: return anchor.minus_days(timex.amount);
                case TimeUnit::Week: return anchor.minus_days(7L * timex.amount);
                case TimeUnit::Month: return anchor.minus_months(timex.amount);
                case TimeUnit::Year: return anchor.minus_years(timex.amount);
            }
            return std::nullopt;
        case TimexKind::VagueHistory:
            return std::nullopt;
    }
    return std::nullopt;
}

TemporalWindow window_for(CriterionId criterion) {
    switch (criterion) {
        case CriterionId::Dietsupp2mos: return {2, criterion};
        case CriterionId::Keto1yr: return {12, criterion};
        default: return {6, CriterionId::Mi6mos};
    }
}

bool within_window(const MentionTime& mention, const Date& present_day, const TemporalWindow& window) {
    if (mention.assertion != Assertion::Present) return false;
    if (mention.section == SectionKind::PastMedicalHistory) return false;
    if (mention.vague) return false;
    const Date cutoff = present_day.minus_months(window.length_months);
    const Date when = mention.event_date.value_or(mention.note_date);
    return when >= cutoff;
}

}  // namespace cohort
