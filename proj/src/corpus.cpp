#include "taskprog/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "payload_json.hpp"
#include "taskprog/errors.hpp"
#include "taskprog/util.hpp"

namespace taskprog {

using ordered_json = nlohmann::ordered_json;

TaskCategory::TaskCategory(std::string n) : name(std::move(n)) {
    if (name.empty()) throw UsageError("task category name must be non-empty");
}

const std::vector<TaskCategory>& default_categories() {
    static const std::vector<TaskCategory> categories = {
        TaskCategory("Pick and Place"),
        TaskCategory("Packing and Staging"),
        TaskCategory("Appliance/Object Manipulation"),
        TaskCategory("Cleaning and Tidying"),
        TaskCategory("Garment Manipulation"),
        TaskCategory("Cooking and Food Preparation"),
        TaskCategory("Other"),
    };
    return categories;
}

void validate_episode(const Episode& episode) {
    if (episode.id.empty()) throw DataError("episode id must be non-empty");
    if (episode.category.name.empty()) throw DataError("episode " + episode.id + ": empty category");
    for (std::size_t i = 0; i < episode.frames.size(); ++i) {
        const Frame& f = episode.frames[i];
        if (f.index < 0) throw DataError("episode " + episode.id + ": negative frame index");
        if (i > 0 && episode.frames[i - 1].index >= f.index)
            throw DataError("episode " + episode.id + ": frame indices not strictly increasing");
        if (f.progress && (*f.progress < 0.0 || *f.progress > 1.0 || !std::isfinite(*f.progress)))
            throw DataError("episode " + episode.id + ": progress outside [0,1]");
        if (const auto* features = std::get_if<FeatureVector>(&f.payload)) {
            for (double v : *features)
                if (!std::isfinite(v))
                    throw DataError("episode " + episode.id + ": non-finite feature value");
        }
    }
    if (episode.trim_index && *episode.trim_index > episode.frames.size())
        throw DataError("episode " + episode.id + ": trim_index exceeds frame count");
}

std::vector<Episode> parse_manifest(std::istream& in, std::string_view source_name) {
    std::vector<Episode> episodes;
    std::map<std::string, std::size_t> slot;                          // episode_id -> episodes index
    std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;  // (id, index) -> line number

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = std::string(source_name) + ":" + std::to_string(line_no);

        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": malformed record: " + e.what());
        }
        if (!j.is_object()) throw DataError(where + ": record must be a JSON object");

        static const std::set<std::string> known = {"episode_id", "index", "category", "payload",
                                                    "progress"};
        for (const auto& [key, _] : j.items())
            if (!known.count(key)) throw DataError(where + ": unknown field '" + key + "'");
        for (const char* required : {"episode_id", "index", "category", "payload"})
            if (!j.contains(required))
                throw DataError(where + ": missing field '" + std::string(required) + "'");

        Frame frame;
        if (!j["episode_id"].is_string()) throw DataError(where + ": episode_id must be a string");
        frame.episode_id = j["episode_id"].get<std::string>();
        if (frame.episode_id.empty()) throw DataError(where + ": episode_id must be non-empty");
        if (!j["index"].is_number_integer() || j["index"].get<std::int64_t>() < 0)
            throw DataError(where + ": index must be a non-negative integer");
        frame.index = j["index"].get<std::int64_t>();
        if (!j["category"].is_string() || j["category"].get<std::string>().empty())
            throw DataError(where + ": category must be a non-empty string");
        frame.payload = detail::payload_from_json(j["payload"], where);
        if (j.contains("progress")) {
            if (!j["progress"].is_number()) throw DataError(where + ": progress must be a number");
            const double p = j["progress"].get<double>();
            if (p < 0.0 || p > 1.0) throw DataError(where + ": progress outside [0,1]");
            frame.progress = p;
        }

        const auto key = std::make_pair(frame.episode_id, frame.index);
        if (auto it = seen.find(key); it != seen.end())
            throw DataError(where + ": duplicate (episode_id, index) also on line " +
                            std::to_string(it->second));
        seen.emplace(key, line_no);

        const std::string category = j["category"].get<std::string>();
        auto it = slot.find(frame.episode_id);
        if (it == slot.end()) {
            Episode ep;
            ep.id = frame.episode_id;
            ep.category = TaskCategory(category);
            slot.emplace(frame.episode_id, episodes.size());
            episodes.push_back(std::move(ep));
            it = slot.find(frame.episode_id);
        } else if (episodes[it->second].category.name != category) {
            throw DataError(where + ": category disagrees with earlier lines of episode '" +
                            frame.episode_id + "'");
        }
        episodes[it->second].frames.push_back(std::move(frame));
    }

    for (auto& ep : episodes) {
        std::sort(ep.frames.begin(), ep.frames.end(),
                  [](const Frame& a, const Frame& b) { return a.index < b.index; });
        validate_episode(ep);
    }
    return episodes;
}

std::vector<Episode> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("manifest not found: " + path.string());
    return parse_manifest(in, path.string());
}

void write_manifest(const std::vector<Episode>& episodes, std::ostream& out) {
    for (const Episode& ep : episodes) {
        for (const Frame& f : ep.frames) {
            ordered_json j;
            j["episode_id"] = ep.id;
            j["index"] = f.index;
            j["category"] = ep.category.name;
            j["payload"] = detail::payload_to_json(f.payload);
            if (f.progress) j["progress"] = *f.progress;
            out << j.dump() << '\n';
        }
    }
}

void write_manifest(const std::vector<Episode>& episodes, const std::filesystem::path& path) {
    std::ostringstream buf;
    write_manifest(episodes, buf);
    write_file_atomic(path, buf.str());
}

Episode synthesize_episode(std::uint64_t seed, std::size_t num_frames, double noise,
                           const TaskCategory& category, std::size_t feature_dim) {
    if (num_frames < 2) throw UsageError("synthesize_episode: num_frames must be >= 2");
    if (!(noise >= 0.0)) throw UsageError("synthesize_episode: noise must be >= 0");
    if (feature_dim < 1) throw UsageError("synthesize_episode: feature_dim must be >= 1");

    Episode ep;
    ep.id = "syn-" + std::to_string(seed);
    ep.category = category;
    ep.frames.reserve(num_frames);

    // mt19937_64 output is fully specified by the standard; mapping raw bits
    // through unit_interval keeps the episode bit-identical across platforms.
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < num_frames; ++t) {
        const double p = static_cast<double>(t) / static_cast<double>(num_frames - 1);
        FeatureVector features(feature_dim);
        features[0] = p;
        for (std::size_t k = 1; k < feature_dim; ++k)
            features[k] = noise * (2.0 * unit_interval(rng()) - 1.0);
        ep.frames.push_back(Frame{ep.id, static_cast<std::int64_t>(t), std::move(features), p});
    }
    return ep;
}

}  // namespace taskprog
