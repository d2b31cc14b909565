#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace taskprog {

using FeatureVector = std::vector<double>;

// A frame payload is either an opaque reference (file path or URI) or an
// inline feature vector. No pixel decoding happens anywhere in the pipeline.
using Payload = std::variant<std::string, FeatureVector>;

struct TaskCategory {
    std::string name;

    TaskCategory() = default;
    explicit TaskCategory(std::string n);

    bool operator==(const TaskCategory&) const = default;
};

// The canonical task categories used for synthetic corpora. Any non-empty
// category name is accepted from manifests.
const std::vector<TaskCategory>& default_categories();

struct Frame {
    std::string episode_id;
    std::int64_t index = 0;  // position in the source video
    Payload payload;
    std::optional<double> progress;  // latent completion fraction, synthetic only

    bool operator==(const Frame&) const = default;
};

struct Episode {
    std::string id;
    TaskCategory category;
    std::vector<Frame> frames;  // indices strictly increasing
    std::optional<std::size_t> trim_index;

    bool operator==(const Episode&) const = default;
};

// Checks the structural invariants (strictly increasing indices, progress in
// [0,1], trim_index within range). Throws DataError on violation.
void validate_episode(const Episode& episode);

/// Reads a line-delimited manifest (one frame record per line, JSON encoded)
/// and groups frames into episodes, sorted by frame index. Episodes come back
/// in first-appearance order. Malformed lines are reported with their line
/// number; duplicate (episode_id, index) pairs are an error.
std::vector<Episode> load_manifest(const std::filesystem::path& path);
std::vector<Episode> parse_manifest(std::istream& in, std::string_view source_name);

void write_manifest(const std::vector<Episode>& episodes, std::ostream& out);
void write_manifest(const std::vector<Episode>& episodes, const std::filesystem::path& path);

/// Builds a deterministic monotone-progress episode for desk-scale testing.
/// Frame t carries progress t/(num_frames-1) exactly; its feature vector is
/// [progress, n_1 .. n_{d-1}] where the noise channels are seeded uniform
/// draws in [-noise, noise]. Identical seeds give bit-identical episodes.
Episode synthesize_episode(std::uint64_t seed, std::size_t num_frames, double noise,
                           const TaskCategory& category, std::size_t feature_dim);

}  // namespace taskprog
