#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "taskprog/pairing.hpp"

namespace taskprog {

struct DatasetStats {
    std::size_t total = 0;
    double forward_fraction = 0.0;
    std::map<int, std::size_t> per_window;
    std::map<std::string, std::size_t> per_category;
    std::size_t unique_episodes = 0;
};

// Exact counting over a non-empty sample set. Samples whose episode has no
// recorded category are bucketed under "unknown".
DatasetStats compute_stats(const SampleSet& set);

enum class ReportFormat { Json, Table };

/// Renders the statistics report. The JSON form is lossless; the table form
/// lists windows ascending and, when aggregate_from is set, folds all windows
/// >= that size into a single ">=N" row.
std::string render_report(const DatasetStats& stats, ReportFormat format,
                          std::optional<int> aggregate_from = std::nullopt);

DatasetStats stats_from_json(const std::string& text);

}  // namespace taskprog
