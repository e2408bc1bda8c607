#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace catalog {

using Millis = std::chrono::milliseconds;
using TimePoint = std::chrono::sys_time<Millis>;
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

// Injectable time source. Everything that waits or stamps records goes
// through a Clock so tests can run on simulated time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
    virtual void sleep_for(Millis duration) = 0;

    void sleep_until(TimePoint deadline) {
        auto remaining = deadline - now();
        if (remaining > Millis::zero()) sleep_for(remaining);
    }
    Timestamp now_seconds() const { return std::chrono::floor<std::chrono::seconds>(now()); }
};

class SystemClock final : public Clock {
public:
    TimePoint now() const override;
    void sleep_for(Millis duration) override;
};

// Simulated clock: sleeping advances time instantly and is recorded.
class FakeClock final : public Clock {
public:
    explicit FakeClock(TimePoint start = TimePoint{}) : now_(start) {}

    TimePoint now() const override;
    void sleep_for(Millis duration) override;
    void advance(Millis duration);
    void set(TimePoint t);

    std::vector<Millis> sleeps() const;
    void clear_sleeps();

private:
    mutable std::mutex mu_;
    TimePoint now_;
    std::vector<Millis> sleeps_;
};

// "2023-08-15T00:00:00Z"
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view s);

// "2023-08-15"
std::string format_date(Date d);
// Accepts "YYYY-MM-DD" optionally followed by a time part; nullopt when the
// prefix is not a valid calendar date.
std::optional<Date> parse_date_prefix(std::string_view s);

}  // namespace catalog
