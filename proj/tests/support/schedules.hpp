// Hand-built daily schedules.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "actsafe/rhb.hpp"

namespace actsafe::testing {

struct DailyItem {
    std::string behavior;
    int clock = 0;     // minutes past midnight
    int duration = 0;  // minutes
};

/// `days` days from 2019-07-01; `items(day)` lists that day's entries. A
/// zero-length sleeping entry at midnight of day 0 pins the matrix origin to midnight.
inline RhbLog daily_log(int days, const std::function<std::vector<DailyItem>(int)>& items) {
    RhbLog log;
    log.patient_id = "schedule";
    const Timestamp first = make_timestamp(2019, 7, 1);
    log.entries.push_back({"sleeping", first, first});
    for (int d = 0; d < days; ++d)
        for (const auto& it : items(d)) {
            Timestamp s = first + static_cast<std::int64_t>(d) * kMinutesPerDay + it.clock;
            log.entries.push_back({it.behavior, s, s + it.duration});
        }
    sort_entries(log);
    return log;
}

inline std::vector<DailyItem> regular_day(int med_clock = 8 * 60) {
    return {{"sleeping", 0, 6 * 60},
            {"wake_up", 6 * 60, 0},
            {"take_medicine", med_clock, 1},
            {"eating", 12 * 60, 30},
            {"eating", 18 * 60, 30},
            {"sleeping", 22 * 60, 119}};
}

}  // namespace actsafe::testing
