#include "taskprog/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "taskprog/util.hpp"

namespace taskprog {

using ordered_json = nlohmann::ordered_json;

double StratumCounts::forward_acc() const {
    return forward_n == 0 ? 0.0 : static_cast<double>(forward_correct) / static_cast<double>(forward_n);
}

double StratumCounts::reverse_acc() const {
    return reverse_n == 0 ? 0.0 : static_cast<double>(reverse_correct) / static_cast<double>(reverse_n);
}

double StratumCounts::average() const {
    return 0.5 * (forward_acc() + reverse_acc());
}

namespace {

struct RawResult {
    Choice choice = Choice::Unparsable;
    bool transport_failed = false;
};

EvalReport fold(const std::vector<JournalEntry>& journal) {
    EvalReport report;
    report.sample_count = journal.size();

    std::size_t forward_n = 0, forward_correct = 0, reverse_n = 0, reverse_correct = 0;
    for (const JournalEntry& e : journal) {
        auto& stratum = report.per_window[e.window];
        if (e.orientation == Orientation::Forward) {
            ++stratum.forward_n;
            ++forward_n;
            if (e.correct) {
                ++stratum.forward_correct;
                ++forward_correct;
            }
        } else {
            ++stratum.reverse_n;
            ++reverse_n;
            if (e.correct) {
                ++stratum.reverse_correct;
                ++reverse_correct;
            }
        }
        if (e.transport_failed)
            ++report.transport_failures;
        else if (e.choice == Choice::Unparsable)
            ++report.parse_failures;
    }

    report.parse_failure_rate = report.sample_count == 0
                                    ? 0.0
                                    : static_cast<double>(report.parse_failures) /
                                          static_cast<double>(report.sample_count);
    report.overall_forward =
        forward_n == 0 ? 0.0 : static_cast<double>(forward_correct) / static_cast<double>(forward_n);
    report.overall_reverse =
        reverse_n == 0 ? 0.0 : static_cast<double>(reverse_correct) / static_cast<double>(reverse_n);
    report.overall_average = 0.5 * (report.overall_forward + report.overall_reverse);
    report.gap_signed = 100.0 * (report.overall_forward - report.overall_reverse);
    report.gap = std::fabs(report.gap_signed);

    if (!report.per_window.empty()) {
        double fsum = 0.0, rsum = 0.0;
        for (const auto& [w, s] : report.per_window) {
            fsum += s.forward_acc();
            rsum += s.reverse_acc();
        }
        report.window_avg_forward = fsum / static_cast<double>(report.per_window.size());
        report.window_avg_reverse = rsum / static_cast<double>(report.per_window.size());
    }
    return report;
}

}  // namespace

EvalResult evaluate(const Adapter& adapter, const SampleSet& set, const std::string& prompt,
                    int concurrency_bound) {
    if (set.samples.empty()) throw DataError("evaluate: empty sample set");
    if (concurrency_bound < 1) throw UsageError("evaluate: concurrency bound must be >= 1");

    const std::size_t n = set.samples.size();
    std::vector<RawResult> results(n);

    auto query_one = [&](std::size_t i) {
        const Sample& s = set.samples[i];
        AdapterQuery q;
        q.image_a = s.first_presented().payload;
        q.image_b = s.second_presented().payload;
        q.prompt = prompt;
        q.id = s.block_id + "#" + (s.orientation == Orientation::Forward ? "F" : "R");
        q.orientation = s.orientation;
        try {
            results[i].choice = adapter.query(q);
        } catch (const TransportError&) {
            results[i].transport_failed = true;
        }
    };

    const auto workers = static_cast<std::size_t>(concurrency_bound);
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) query_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(workers, n); ++t) {
            pool.emplace_back([&] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) query_one(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    // Deterministic fold in sample order, independent of completion order.
    EvalResult out;
    out.journal.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = set.samples[i];
        JournalEntry e;
        e.sample_index = i;
        e.sample_id = s.block_id + "#" + (s.orientation == Orientation::Forward ? "F" : "R");
        e.orientation = s.orientation;
        e.window = s.pair.window;
        e.choice = results[i].choice;
        e.transport_failed = results[i].transport_failed;
        const Choice expected = s.label == ChoiceLabel::First ? Choice::First : Choice::Second;
        e.correct = !e.transport_failed && e.choice == expected;
        out.journal.push_back(std::move(e));
    }
    out.report = fold(out.journal);

    if (out.report.transport_failures == n)
        throw EvalError("evaluate: every query failed at the transport layer", out.report);
    return out;
}

void write_journal(const std::vector<JournalEntry>& journal, std::ostream& out) {
    for (const JournalEntry& e : journal) {
        ordered_json j;
        j["sample_id"] = e.sample_id;
        j["orientation"] = to_string(e.orientation);
        j["window"] = e.window;
        j["choice"] = e.transport_failed ? "transport_error" : std::string(to_string(e.choice));
        j["correct"] = e.correct;
        out << j.dump() << '\n';
    }
}

EvalReport recompute_report(std::istream& in) {
    std::vector<JournalEntry> journal;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("journal:" + std::to_string(line_no) + ": malformed record: " + e.what());
        }
        JournalEntry e;
        e.sample_index = journal.size();
        e.sample_id = j.at("sample_id").get<std::string>();
        const auto orientation_text = j.at("orientation").get<std::string>();
        if (orientation_text == "forward")
            e.orientation = Orientation::Forward;
        else if (orientation_text == "reverse")
            e.orientation = Orientation::Reverse;
        else
            throw DataError("journal:" + std::to_string(line_no) + ": bad orientation");
        e.window = j.at("window").get<int>();
        const auto choice_text = j.at("choice").get<std::string>();
        if (choice_text == "first")
            e.choice = Choice::First;
        else if (choice_text == "second")
            e.choice = Choice::Second;
        else if (choice_text == "unparsable")
            e.choice = Choice::Unparsable;
        else if (choice_text == "transport_error")
            e.transport_failed = true;
        else
            throw DataError("journal:" + std::to_string(line_no) + ": bad choice");
        e.correct = j.at("correct").get<bool>();
        journal.push_back(std::move(e));
    }
    return fold(journal);
}

std::string render_eval_json(const EvalReport& report) {
    ordered_json j;
    j["sample_count"] = report.sample_count;
    j["parse_failures"] = report.parse_failures;
    j["parse_failure_rate"] = report.parse_failure_rate;
    j["transport_failures"] = report.transport_failures;

    ordered_json overall;
    overall["forward"] = report.overall_forward;
    overall["reverse"] = report.overall_reverse;
    overall["average"] = report.overall_average;
    overall["gap"] = report.gap;
    overall["gap_signed"] = report.gap_signed;
    overall["window_avg_forward"] = report.window_avg_forward;
    overall["window_avg_reverse"] = report.window_avg_reverse;
    j["overall"] = std::move(overall);

    ordered_json windows = ordered_json::array();
    for (const auto& [w, s] : report.per_window) {
        ordered_json row;
        row["window"] = w;
        row["forward_acc"] = s.forward_acc();
        row["reverse_acc"] = s.reverse_acc();
        row["average"] = s.average();
        row["forward_correct"] = s.forward_correct;
        row["forward_n"] = s.forward_n;
        row["reverse_correct"] = s.reverse_correct;
        row["reverse_n"] = s.reverse_n;
        windows.push_back(std::move(row));
    }
    j["per_window"] = std::move(windows);
    return j.dump(2) + "\n";
}

std::string stratify(const EvalReport& report, std::optional<int> aggregate_from) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %12s %12s %12s %10s\n", "WinSize", "Forward(%)",
                  "Reverse(%)", "Average(%)", "Samples");
    out << buf;

    auto row = [&](const std::string& label, const StratumCounts& s) {
        std::snprintf(buf, sizeof(buf), "%-10s %12.2f %12.2f %12.2f %10zu\n", label.c_str(),
                      100.0 * s.forward_acc(), 100.0 * s.reverse_acc(), 100.0 * s.average(),
                      s.forward_n + s.reverse_n);
        out << buf;
    };

    StratumCounts aggregate;
    bool have_aggregate = false;
    for (const auto& [w, s] : report.per_window) {
        if (aggregate_from && w >= *aggregate_from) {
            aggregate.forward_n += s.forward_n;
            aggregate.forward_correct += s.forward_correct;
            aggregate.reverse_n += s.reverse_n;
            aggregate.reverse_correct += s.reverse_correct;
            have_aggregate = true;
            continue;
        }
        row(std::to_string(w), s);
    }
    if (have_aggregate) row(">=" + std::to_string(*aggregate_from), aggregate);

    std::snprintf(buf, sizeof(buf), "%-10s %12.2f %12.2f %12.2f %10zu\n", "overall",
                  100.0 * report.overall_forward, 100.0 * report.overall_reverse,
                  100.0 * report.overall_average, report.sample_count);
    out << buf;
    std::snprintf(buf, sizeof(buf), "gap: %.2f points   parse failures: %.2f%%\n", report.gap,
                  100.0 * report.parse_failure_rate);
    out << buf;
    return out.str();
}

}  // namespace taskprog
