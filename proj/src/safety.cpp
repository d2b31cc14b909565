#include "taskprog/safety.hpp"

#include "taskprog/errors.hpp"

namespace taskprog {

std::string_view to_string(Feedback f) {
    return f == Feedback::Positive ? "positive" : "negative";
}

std::string_view to_string(StreakMode m) {
    return m == StreakMode::Consecutive ? "consecutive" : "cumulative";
}

std::string_view to_string(MonitorStatus s) {
    return s == MonitorStatus::Running ? "running" : "terminated";
}

SafetyMonitor::SafetyMonitor(std::size_t threshold, StreakMode mode)
    : threshold_(threshold), mode_(mode) {
    if (threshold < 1) throw UsageError("safety monitor: threshold must be >= 1");
}

MonitorStatus SafetyMonitor::observe(Feedback feedback, std::size_t step) {
    if (status_ == MonitorStatus::Terminated)
        throw UsageError("safety monitor: observe called after termination");

    if (feedback == Feedback::Negative) {
        ++streak_;
    } else if (mode_ == StreakMode::Consecutive) {
        streak_ = 0;
    }

    if (streak_ >= threshold_) {
        status_ = MonitorStatus::Terminated;
        terminated_at_ = step;
    }
    return status_;
}

}  // namespace taskprog
