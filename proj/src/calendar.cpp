#include "vpp/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "vpp/errors.hpp"

namespace vpp {

namespace chr = std::chrono;

int day_of_year(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    const chr::sys_days jan1{ymd.year() / chr::January / 1};
    return static_cast<int>((day - jan1).count()) + 1;
}

double hour_of_day(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    return static_cast<double>((t - day).count()) / 3600.0;
}

int hour_index(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    return static_cast<int>(chr::floor<chr::hours>(t - day).count());
}

namespace {

int read_field(std::string_view text, std::size_t pos, std::size_t width) {
    if (pos + width > text.size()) {
        throw InvalidArgument("timestamp too short: '" + std::string(text) + "'");
    }
    int value = 0;
    const char* first = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + width, value);
    if (ec != std::errc{} || ptr != first + width) {
        throw InvalidArgument("malformed timestamp: '" + std::string(text) + "'");
    }
    return value;
}

void expect(std::string_view text, std::size_t pos, std::string_view allowed) {
    if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
        throw InvalidArgument("malformed timestamp: '" + std::string(text) + "'");
    }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    const int year = read_field(text, 0, 4);
    expect(text, 4, "-");
    const int month = read_field(text, 5, 2);
    expect(text, 7, "-");
    const int day = read_field(text, 8, 2);
    int hour = 0;
    int minute = 0;
    int second = 0;
    if (text.size() > 10) {
        expect(text, 10, "T ");
        hour = read_field(text, 11, 2);
        expect(text, 13, ":");
        minute = read_field(text, 14, 2);
        if (text.size() > 16) {
            expect(text, 16, ":");
            second = read_field(text, 17, 2);
            if (text.size() != 19) {
                throw InvalidArgument("malformed timestamp: '" + std::string(text) + "'");
            }
        }
    }
    const chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                                  chr::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) {
        throw InvalidArgument("invalid calendar value: '" + std::string(text) + "'");
    }
    return chr::sys_days{ymd} + chr::hours{hour} + chr::minutes{minute} + chr::seconds{second};
}

std::string format_timestamp(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    const chr::hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

}  // namespace vpp
