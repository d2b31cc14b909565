#pragma once

#include <string_view>
#include <vector>

#include "taskprog/corpus.hpp"

namespace taskprog {

struct WindowSpec {
    std::vector<int> sizes;  // ascending, unique, every size >= 1
    int stride = 1;

    // {5..16}, stride 1.
    static WindowSpec defaults();

    // Accepts "5-16", "5..16", or "5,10,12".
    static WindowSpec parse(std::string_view text, int stride = 1);
};

void validate_spec(const WindowSpec& spec);

// An ordered frame pair drawn from one episode. Positions refer to the
// episode's frame list at extraction time (post-trim, post-downsample), so
// window == later_pos - earlier_pos regardless of raw video indices.
struct RawPair {
    std::string episode_id;
    Frame earlier;
    Frame later;
    std::size_t earlier_pos = 0;
    std::size_t later_pos = 0;
    int window = 0;
};

/// Keeps frames at list positions phase, phase+factor, phase+2*factor, ...
/// preserving order and metadata. A trim_index, if still present, is remapped
/// to the count of kept frames that preceded it.
Episode downsample(const Episode& episode, int factor, int phase = 0);

/// Drops frames at positions >= trim_index when the annotation is present;
/// returns the episode unchanged otherwise. trim_index == 0 is rejected
/// because it would empty the episode.
Episode trim_tail(const Episode& episode);

// trim_tail then downsample; the pipeline's canonical preprocessing order.
Episode preprocess(const Episode& episode, int factor, int phase = 0);

/// For each window size w and each start i with i + w < N (stepping i by
/// stride), emits the pair (frame_i, frame_{i+w}). Output is deterministic:
/// window ascending, then start position ascending.
std::vector<RawPair> extract_pairs(const Episode& episode, const WindowSpec& spec);

}  // namespace taskprog
