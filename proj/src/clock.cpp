#include "catalog/clock.hpp"

#include "catalog/error.hpp"

#include <charconv>
#include <cstdio>
#include <thread>

namespace catalog {

TimePoint SystemClock::now() const {
    return std::chrono::floor<Millis>(std::chrono::system_clock::now());
}

void SystemClock::sleep_for(Millis duration) { std::this_thread::sleep_for(duration); }

TimePoint FakeClock::now() const {
    std::lock_guard lock(mu_);
    return now_;
}

void FakeClock::sleep_for(Millis duration) {
    std::lock_guard lock(mu_);
    sleeps_.push_back(duration);
    if (duration > Millis::zero()) now_ += duration;
}

void FakeClock::advance(Millis duration) {
    std::lock_guard lock(mu_);
    now_ += duration;
}

void FakeClock::set(TimePoint t) {
    std::lock_guard lock(mu_);
    now_ = t;
}

std::vector<Millis> FakeClock::sleeps() const {
    std::lock_guard lock(mu_);
    return sleeps_;
}

void FakeClock::clear_sleeps() {
    std::lock_guard lock(mu_);
    sleeps_.clear();
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto* first = s.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
}

}  // namespace

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    auto day = floor<days>(t);
    year_month_day ymd{day};
    hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

Timestamp parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    auto date = parse_date_prefix(s);
    int hh = 0, mm = 0, ss = 0;
    if (!date || s.size() != 20 || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z' ||
        !read_int(s, 11, 2, hh) || !read_int(s, 14, 2, mm) || !read_int(s, 17, 2, ss) || hh > 23 ||
        mm > 59 || ss > 60) {
        throw InvalidValue("bad timestamp: " + std::string(s));
    }
    return sys_days{*date} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

std::optional<Date> parse_date_prefix(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !read_int(s, 0, 4, y) ||
        !read_int(s, 5, 2, m) || !read_int(s, 8, 2, d)) {
        return std::nullopt;
    }
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

}  // namespace catalog
