#include "taskprog/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "taskprog/errors.hpp"

namespace taskprog {

WindowSpec WindowSpec::defaults() {
    WindowSpec spec;
    for (int w = 5; w <= 16; ++w) spec.sizes.push_back(w);
    return spec;
}

namespace {

int parse_int(std::string_view text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw UsageError("window spec: bad integer '" + std::string(text) + "'");
    return value;
}

}  // namespace

WindowSpec WindowSpec::parse(std::string_view text, int stride) {
    WindowSpec spec;
    spec.stride = stride;
    if (auto dash = text.find('-'); dash != std::string_view::npos && text.find(',') == std::string_view::npos) {
        const int lo = parse_int(text.substr(0, dash));
        const int hi = parse_int(text.substr(dash + 1));
        if (lo > hi) throw UsageError("window spec: empty range");
        for (int w = lo; w <= hi; ++w) spec.sizes.push_back(w);
    } else if (auto dots = text.find(".."); dots != std::string_view::npos) {
        const int lo = parse_int(text.substr(0, dots));
        const int hi = parse_int(text.substr(dots + 2));
        if (lo > hi) throw UsageError("window spec: empty range");
        for (int w = lo; w <= hi; ++w) spec.sizes.push_back(w);
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                  : comma - start);
            if (!piece.empty()) spec.sizes.push_back(parse_int(piece));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    validate_spec(spec);
    return spec;
}

void validate_spec(const WindowSpec& spec) {
    if (spec.sizes.empty()) throw UsageError("window spec: empty window set");
    if (spec.stride < 1) throw UsageError("window spec: stride must be >= 1");
    for (int w : spec.sizes)
        if (w < 1) throw UsageError("window spec: sizes must be >= 1");
    if (!std::is_sorted(spec.sizes.begin(), spec.sizes.end()) ||
        std::adjacent_find(spec.sizes.begin(), spec.sizes.end()) != spec.sizes.end())
        throw UsageError("window spec: sizes must be strictly ascending");
}

Episode downsample(const Episode& episode, int factor, int phase) {
    if (factor < 1) throw UsageError("downsample: factor must be >= 1");
    if (phase < 0 || phase >= factor) throw UsageError("downsample: phase must satisfy 0 <= phase < factor");

    Episode out;
    out.id = episode.id;
    out.category = episode.category;
    std::size_t kept_before_trim = 0;
    for (std::size_t i = static_cast<std::size_t>(phase); i < episode.frames.size();
         i += static_cast<std::size_t>(factor)) {
        if (episode.trim_index && i < *episode.trim_index) ++kept_before_trim;
        out.frames.push_back(episode.frames[i]);
    }
    if (episode.trim_index) out.trim_index = kept_before_trim;
    return out;
}

Episode trim_tail(const Episode& episode) {
    if (!episode.trim_index) return episode;
    const std::size_t trim = *episode.trim_index;
    if (trim == 0) throw DataError("trim_tail: trim_index 0 would empty episode '" + episode.id + "'");
    if (trim > episode.frames.size())
        throw DataError("trim_tail: trim_index exceeds frame count in episode '" + episode.id + "'");

    Episode out;
    out.id = episode.id;
    out.category = episode.category;
    out.frames.assign(episode.frames.begin(), episode.frames.begin() + static_cast<std::ptrdiff_t>(trim));
    return out;
}

Episode preprocess(const Episode& episode, int factor, int phase) {
    return downsample(trim_tail(episode), factor, phase);
}

std::vector<RawPair> extract_pairs(const Episode& episode, const WindowSpec& spec) {
    validate_spec(spec);
    const std::size_t n = episode.frames.size();
    std::vector<RawPair> pairs;
    for (int w : spec.sizes) {
        const auto window = static_cast<std::size_t>(w);
        for (std::size_t i = 0; i + window < n; i += static_cast<std::size_t>(spec.stride)) {
            pairs.push_back(RawPair{episode.id, episode.frames[i], episode.frames[i + window], i,
                                    i + window, w});
        }
    }
    return pairs;
}

}  // namespace taskprog
