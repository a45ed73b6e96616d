#include "pricing/date.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "pricing/error.hpp"

namespace pricing {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
    int value = 0;
    if (pos + len > text.size()) throw ParseError("truncated date/time: '" + std::string(whole) + "'");
    auto sub = text.substr(pos, len);
    auto [ptr, ec] = std::from_chars(sub.data(), sub.data() + sub.size(), value);
    if (ec != std::errc{} || ptr != sub.data() + sub.size())
        throw ParseError("malformed date/time: '" + std::string(whole) + "'");
    return value;
}

void expect(std::string_view text, std::size_t pos, char c, std::string_view whole) {
    if (pos >= text.size() || text[pos] != c)
        throw ParseError("malformed date/time: '" + std::string(whole) + "'");
}

} // namespace

Date parse_date(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    if (text.size() != 10) throw ParseError("expected YYYY-MM-DD, got '" + std::string(text) + "'");
    int y = read_int(text, 0, 4, text);
    expect(text, 4, '-', text);
    int m = read_int(text, 5, 2, text);
    expect(text, 7, '-', text);
    int d = read_int(text, 8, 2, text);
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf.data();
}

LocalTime parse_timestamp(std::string_view text, int utc_offset_minutes) {
    std::string_view whole = text;
    if (text.size() < 16) throw ParseError("expected ISO-8601 timestamp, got '" + std::string(text) + "'");
    Date day = parse_date(text.substr(0, 10));
    if (text[10] != 'T' && text[10] != ' ') throw ParseError("malformed timestamp '" + std::string(whole) + "'");
    int hh = read_int(text, 11, 2, whole);
    expect(text, 13, ':', whole);
    int mm = read_int(text, 14, 2, whole);
    int ss = 0;
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        ss = read_int(text, pos + 1, 2, whole);
        pos += 3;
        // fractional seconds are dropped
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) throw ParseError("time out of range in '" + std::string(whole) + "'");
    LocalTime t = day + std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};

    if (pos == text.size()) return t;
    int offset_minutes = 0;
    if (text[pos] == 'Z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        int sign = text[pos] == '-' ? -1 : 1;
        int oh = read_int(text, pos + 1, 2, whole);
        pos += 3;
        int om = 0;
        if (pos < text.size() && text[pos] == ':') ++pos;
        if (pos < text.size()) {
            om = read_int(text, pos, 2, whole);
            pos += 2;
        }
        offset_minutes = sign * (oh * 60 + om);
    } else {
        throw ParseError("malformed timestamp '" + std::string(whole) + "'");
    }
    if (pos != text.size()) throw ParseError("trailing characters in timestamp '" + std::string(whole) + "'");
    return t - std::chrono::minutes{offset_minutes} + std::chrono::minutes{utc_offset_minutes};
}

std::chrono::weekday parse_weekday(std::string_view name) {
    static constexpr std::array<std::string_view, 7> names{"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
    std::string lower;
    for (char c : name.substr(0, 3)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (unsigned i = 0; i < names.size(); ++i)
        if (lower == names[i]) return std::chrono::weekday{i};
    throw ParseError("unknown weekday '" + std::string(name) + "'");
}

} // namespace pricing
