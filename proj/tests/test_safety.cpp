#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <random>
#include <vector>

#include "taskprog/errors.hpp"
#include "taskprog/safety.hpp"

using namespace taskprog;

namespace {

// Brute-force scanner: replays the sequence prefix by prefix and reports the
// first 1-indexed step at which the boundary rule fires.
std::optional<std::size_t> scan_termination(const std::vector<Feedback>& feedback,
                                            std::size_t threshold, StreakMode mode) {
    std::size_t streak = 0;
    for (std::size_t s = 0; s < feedback.size(); ++s) {
        if (feedback[s] == Feedback::Negative)
            ++streak;
        else if (mode == StreakMode::Consecutive)
            streak = 0;
        if (streak >= threshold) return s + 1;
    }
    return std::nullopt;
}

std::optional<std::size_t> run_monitor(const std::vector<Feedback>& feedback,
                                       std::size_t threshold, StreakMode mode) {
    SafetyMonitor monitor(threshold, mode);
    for (std::size_t s = 0; s < feedback.size(); ++s) {
        if (monitor.observe(feedback[s], s + 1) == MonitorStatus::Terminated)
            return monitor.terminated_at();
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("T=3 with N,N,P,N,N,N terminates at step 6") {
    const std::vector<Feedback> seq = {Feedback::Negative, Feedback::Negative, Feedback::Positive,
                                       Feedback::Negative, Feedback::Negative, Feedback::Negative};
    SafetyMonitor monitor(3);
    std::vector<std::size_t> streaks;
    for (std::size_t s = 0; s < seq.size(); ++s) {
        monitor.observe(seq[s], s + 1);
        streaks.push_back(monitor.streak());
    }
    CHECK(streaks == std::vector<std::size_t>{1, 2, 0, 1, 2, 3});
    CHECK(monitor.status() == MonitorStatus::Terminated);
    CHECK(monitor.terminated_at() == 6);
}

TEST_CASE("all-positive feedback never terminates") {
    SafetyMonitor monitor(2);
    for (std::size_t s = 1; s <= 100; ++s)
        CHECK(monitor.observe(Feedback::Positive, s) == MonitorStatus::Running);
    CHECK(monitor.streak() == 0);
    CHECK(!monitor.terminated_at().has_value());
}

TEST_CASE("T=1 terminates on the first negative") {
    SafetyMonitor monitor(1);
    CHECK(monitor.observe(Feedback::Positive, 1) == MonitorStatus::Running);
    CHECK(monitor.observe(Feedback::Negative, 2) == MonitorStatus::Terminated);
    CHECK(monitor.terminated_at() == 2);
}

TEST_CASE("observing after termination is an error") {
    SafetyMonitor monitor(1);
    monitor.observe(Feedback::Negative, 1);
    CHECK_THROWS_AS(monitor.observe(Feedback::Positive, 2), UsageError);
}

TEST_CASE("cumulative mode counts negatives without resetting") {
    const std::vector<Feedback> seq = {Feedback::Negative, Feedback::Positive, Feedback::Negative,
                                       Feedback::Positive, Feedback::Negative};
    CHECK(run_monitor(seq, 3, StreakMode::Cumulative) == 5);
    CHECK(run_monitor(seq, 3, StreakMode::Consecutive) == std::nullopt);
}

TEST_CASE("threshold must be positive") {
    CHECK_THROWS_AS(SafetyMonitor(0), UsageError);
}

TEST_CASE("monitor matches the brute-force scanner on random sequences") {
    std::mt19937_64 rng(31337);
    for (int it = 0; it < 1000; ++it) {
        std::vector<Feedback> seq(rng() % 50);
        for (auto& f : seq) f = (rng() & 1) ? Feedback::Negative : Feedback::Positive;
        for (std::size_t threshold = 1; threshold <= 5; ++threshold) {
            for (StreakMode mode : {StreakMode::Consecutive, StreakMode::Cumulative}) {
                CHECK(run_monitor(seq, threshold, mode) == scan_termination(seq, threshold, mode));
            }
        }
    }
}

TEST_CASE("streak never exceeds the threshold") {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 50; ++it) {
        SafetyMonitor monitor(3, StreakMode::Consecutive);
        for (std::size_t s = 1; s <= 40; ++s) {
            const Feedback f = (rng() & 1) ? Feedback::Negative : Feedback::Positive;
            CHECK(monitor.streak() <= monitor.threshold());
            if (monitor.observe(f, s) == MonitorStatus::Terminated) break;
        }
        CHECK(monitor.streak() <= monitor.threshold());
    }
}
