#include "taskprog/stats.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "taskprog/errors.hpp"

namespace taskprog {

using ordered_json = nlohmann::ordered_json;

DatasetStats compute_stats(const SampleSet& set) {
    if (set.samples.empty()) throw DataError("compute_stats: empty sample set");

    DatasetStats stats;
    stats.total = set.samples.size();
    std::size_t forward = 0;
    std::set<std::string> episodes;
    for (const Sample& s : set.samples) {
        if (s.orientation == Orientation::Forward) ++forward;
        stats.per_window[s.pair.window] += 1;
        auto it = set.episode_categories.find(s.pair.episode_id);
        stats.per_category[it == set.episode_categories.end() ? "unknown" : it->second] += 1;
        episodes.insert(s.pair.episode_id);
    }
    stats.forward_fraction = static_cast<double>(forward) / static_cast<double>(stats.total);
    stats.unique_episodes = episodes.size();
    return stats;
}

namespace {

std::string render_json(const DatasetStats& stats) {
    ordered_json j;
    j["total"] = stats.total;
    j["forward_fraction"] = stats.forward_fraction;
    j["unique_episodes"] = stats.unique_episodes;
    ordered_json windows = ordered_json::object();
    for (const auto& [w, n] : stats.per_window) windows[std::to_string(w)] = n;
    j["per_window"] = std::move(windows);
    ordered_json categories = ordered_json::object();
    for (const auto& [c, n] : stats.per_category) categories[c] = n;
    j["per_category"] = std::move(categories);
    return j.dump(2) + "\n";
}

std::string render_table(const DatasetStats& stats, std::optional<int> aggregate_from) {
    std::ostringstream out;
    char buf[128];
    out << "Dataset statistics\n";
    std::snprintf(buf, sizeof(buf), "  %-18s %zu\n", "total samples", stats.total);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  %-18s %.4f\n", "forward fraction", stats.forward_fraction);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  %-18s %zu\n", "unique episodes", stats.unique_episodes);
    out << buf;

    out << "\n  window     samples\n";
    std::size_t aggregated = 0;
    for (const auto& [w, n] : stats.per_window) {
        if (aggregate_from && w >= *aggregate_from) {
            aggregated += n;
            continue;
        }
        std::snprintf(buf, sizeof(buf), "  %-10d %zu\n", w, n);
        out << buf;
    }
    if (aggregate_from && aggregated > 0) {
        const std::string label = ">=" + std::to_string(*aggregate_from);
        std::snprintf(buf, sizeof(buf), "  %-10s %zu\n", label.c_str(), aggregated);
        out << buf;
    }

    out << "\n  category                          samples\n";
    if (stats.per_category.empty()) {
        out << "  (none)\n";
    } else {
        for (const auto& [c, n] : stats.per_category) {
            std::snprintf(buf, sizeof(buf), "  %-33s %zu\n", c.c_str(), n);
            out << buf;
        }
    }
    return out.str();
}

}  // namespace

std::string render_report(const DatasetStats& stats, ReportFormat format,
                          std::optional<int> aggregate_from) {
    switch (format) {
        case ReportFormat::Json:
            return render_json(stats);
        case ReportFormat::Table:
            return render_table(stats, aggregate_from);
    }
    throw UsageError("render_report: unknown format");
}

DatasetStats stats_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("stats_from_json: malformed JSON: ") + e.what());
    }
    DatasetStats stats;
    stats.total = j.at("total").get<std::size_t>();
    stats.forward_fraction = j.at("forward_fraction").get<double>();
    stats.unique_episodes = j.at("unique_episodes").get<std::size_t>();
    for (const auto& [key, value] : j.at("per_window").items())
        stats.per_window[std::stoi(key)] = value.get<std::size_t>();
    for (const auto& [key, value] : j.at("per_category").items())
        stats.per_category[key] = value.get<std::size_t>();
    return stats;
}

}  // namespace taskprog
