#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taskprog/sampler.hpp"

namespace taskprog {

// Forward presents (earlier, later); Reverse presents (later, earlier).
enum class Orientation { Forward, Reverse };

// Position of the temporally later frame as presented. Forward pairs are
// labelled Second, Reverse pairs First, always.
enum class ChoiceLabel { First, Second };

enum class SampleKind { CoT, Tag };

std::string_view to_string(Orientation o);
std::string_view to_string(ChoiceLabel l);
std::string_view to_string(SampleKind k);

struct CoTAnnotation {
    std::vector<std::string> spatial_details;  // non-empty
    ChoiceLabel judgment = ChoiceLabel::Second;

    bool operator==(const CoTAnnotation&) const = default;
};

struct Sample {
    RawPair pair;
    Orientation orientation = Orientation::Forward;
    ChoiceLabel label = ChoiceLabel::Second;
    SampleKind kind = SampleKind::Tag;
    std::optional<CoTAnnotation> cot;
    std::string block_id;  // shared by a forward sample and its reverse twin

    const Frame& first_presented() const;
    const Frame& second_presented() const;
};

struct SampleSet {
    std::vector<Sample> samples;
    // episode_id -> category name; provenance for stats. Sets reconstructed
    // from a sample file have no category information until joined with the
    // originating manifest.
    std::map<std::string, std::string> episode_categories;
    std::string provenance;  // generation config snapshot, JSON text
};

struct KindPolicy {
    double cot_fraction = 0.0;  // fraction of blocks annotated as CoT
};

using CoTAnnotator = std::function<CoTAnnotation(const RawPair&, Orientation)>;

/// Builds the forward/reverse contrastive twins for one raw pair. Both share
/// a block_id derived from (episode, window, start position); labels follow
/// the orientation coupling.
std::pair<Sample, Sample> make_contrastive_block(const RawPair& raw, SampleKind kind);

/// The built-in annotator for synthetic episodes: states both presented
/// progress values and which presented image shows the more advanced state.
/// Requires progress on both frames.
CoTAnnotation template_annotation(const RawPair& raw, Orientation orientation);

/// Fills in the reasoning annotation of a CoT-kind sample. Rejects annotators
/// whose judgment contradicts the sample's ground-truth label.
Sample attach_cot(Sample sample, const CoTAnnotator& annotator);

/// Extracts pairs from every episode and emits contrastive blocks with exact
/// 50/50 forward/reverse balance. interleave=true keeps blocks in canonical
/// order (episode, window, start); interleave=false applies a seeded
/// block-level shuffle. Twins stay adjacent in both modes.
SampleSet build_dataset(const std::vector<Episode>& episodes, const WindowSpec& spec,
                        const KindPolicy& policy, bool interleave, std::uint64_t seed,
                        const CoTAnnotator& annotator = template_annotation);

// Checks every SampleSet invariant: orientation-label coupling, CoT/Tag
// annotation presence, exact balance, each block_id appearing exactly twice.
void validate(const SampleSet& set);

void write_samples(const SampleSet& set, std::ostream& out);
void write_samples(const SampleSet& set, const std::filesystem::path& path);

/// Reads a sample file back into memory. Frames are reconstructed from the
/// presented payloads; raw video indices are not part of the sample schema
/// and come back as downsampled positions.
SampleSet read_samples(std::istream& in, std::string_view source_name);
SampleSet read_samples(const std::filesystem::path& path);

}  // namespace taskprog
