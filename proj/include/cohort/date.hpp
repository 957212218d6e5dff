#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace cohort {

/// Calendar date at day granularity.
class Date {
public:
    Date() = default;
    Date(int year, unsigned month, unsigned day) : ymd_{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}} {}
    explicit Date(std::chrono::year_month_day ymd) : ymd_{ymd} {}
    explicit Date(std::chrono::sys_days days) : ymd_{days} {}

    /// Returns nullopt when the components do not form a valid date.
    static std::optional<Date> make(int year, unsigned month, unsigned day);
    /// Parses "YYYY-MM-DD"; trailing text is not allowed.
    static std::optional<Date> parse_iso(std::string_view text);

    int year() const { return static_cast<int>(ymd_.year()); }
    unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
    unsigned day() const { return static_cast<unsigned>(ymd_.day()); }

    std::chrono::sys_days days() const { return std::chrono::sys_days{ymd_}; }
    std::string iso() const;

    Date minus_days(long n) const { return Date{days() - std::chrono::days{n}}; }
    /// Calendar month arithmetic; the day of month is clamped to the target month length.
    Date minus_months(int n) const;
    Date minus_years(int n) const { return minus_months(12 * n); }

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date& a, const Date& b) { return a.days() <=> b.days(); }

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January, std::chrono::day{1}};
};

/// Signed number of days from `from` to `to`.
inline long days_between(const Date& from, const Date& to) { return (to.days() - from.days()).count(); }

}  // namespace cohort
