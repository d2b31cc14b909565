#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace taskprog {

enum class Feedback { Positive, Negative };

// Consecutive resets the streak on Positive feedback; Cumulative never
// resets. Both readings of the boundary rule are supported.
enum class StreakMode { Consecutive, Cumulative };

enum class MonitorStatus { Running, Terminated };

std::string_view to_string(Feedback f);
std::string_view to_string(StreakMode m);
std::string_view to_string(MonitorStatus s);

// Terminates a rollout once the negative-preference streak reaches the
// tolerable threshold. One monitor per rollout; not shared across workers.
class SafetyMonitor {
public:
    explicit SafetyMonitor(std::size_t threshold, StreakMode mode = StreakMode::Consecutive);

    // Feeds one preference signal. Observing after termination is an error.
    MonitorStatus observe(Feedback feedback, std::size_t step);

    std::size_t threshold() const { return threshold_; }
    StreakMode mode() const { return mode_; }
    std::size_t streak() const { return streak_; }
    MonitorStatus status() const { return status_; }
    std::optional<std::size_t> terminated_at() const { return terminated_at_; }

private:
    std::size_t threshold_;
    StreakMode mode_;
    std::size_t streak_ = 0;
    MonitorStatus status_ = MonitorStatus::Running;
    std::optional<std::size_t> terminated_at_;
};

}  // namespace taskprog
