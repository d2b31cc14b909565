#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskprog/adapter.hpp"
#include "taskprog/errors.hpp"
#include "taskprog/pairing.hpp"

namespace taskprog {

struct StratumCounts {
    std::size_t forward_n = 0;
    std::size_t forward_correct = 0;
    std::size_t reverse_n = 0;
    std::size_t reverse_correct = 0;

    double forward_acc() const;
    double reverse_acc() const;
    double average() const;  // unweighted mean of the two orientation accuracies
};

struct EvalReport {
    std::map<int, StratumCounts> per_window;
    std::size_t sample_count = 0;
    std::size_t parse_failures = 0;
    std::size_t transport_failures = 0;
    double parse_failure_rate = 0.0;

    // Sample-weighted overall accuracies (fractions in [0,1]).
    double overall_forward = 0.0;
    double overall_reverse = 0.0;
    double overall_average = 0.0;

    // Unweighted mean over window strata, exposed alongside the
    // sample-weighted figures.
    double window_avg_forward = 0.0;
    double window_avg_reverse = 0.0;

    double gap = 0.0;         // |forward - reverse| in percentage points
    double gap_signed = 0.0;  // forward - reverse, points
};

struct JournalEntry {
    std::size_t sample_index = 0;
    std::string sample_id;
    Orientation orientation = Orientation::Forward;
    int window = 0;
    Choice choice = Choice::Unparsable;
    bool transport_failed = false;
    bool correct = false;
};

struct EvalResult {
    EvalReport report;
    std::vector<JournalEntry> journal;
};

// Raised when every query failed at the transport layer; carries whatever
// could still be aggregated.
struct EvalError : TransportError {
    EvalError(const std::string& what, EvalReport partial_report)
        : TransportError(what), partial(std::move(partial_report)) {}
    EvalReport partial;
};

/// Queries the adapter once per sample (fanning out up to concurrency_bound
/// workers) and aggregates accuracies per window and orientation. Unparsable
/// answers count as incorrect and are reported separately; per-sample results
/// come back as a journal so reports are recomputable without re-querying.
EvalResult evaluate(const Adapter& adapter, const SampleSet& set, const std::string& prompt,
                    int concurrency_bound = 1);

// Rebuilds a report from journal lines. Aggregation is pure counting, so the
// line order does not matter.
EvalReport recompute_report(std::istream& journal);

void write_journal(const std::vector<JournalEntry>& journal, std::ostream& out);

std::string render_eval_json(const EvalReport& report);

/// Fixed-width table, windows ascending, with an aggregate ">=N" row when
/// aggregate_from is set. Aggregate accuracies are recomputed from the raw
/// per-window counts, i.e. they are count-weighted.
std::string stratify(const EvalReport& report, std::optional<int> aggregate_from = 12);

}  // namespace taskprog
