#include "taskprog/pairing.hpp"

#include <cstdio>
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

std::string_view to_string(Orientation o) {
    return o == Orientation::Forward ? "forward" : "reverse";
}

std::string_view to_string(ChoiceLabel l) {
    return l == ChoiceLabel::First ? "first" : "second";
}

std::string_view to_string(SampleKind k) {
    return k == SampleKind::CoT ? "cot" : "tag";
}

const Frame& Sample::first_presented() const {
    return orientation == Orientation::Forward ? pair.earlier : pair.later;
}

const Frame& Sample::second_presented() const {
    return orientation == Orientation::Forward ? pair.later : pair.earlier;
}

std::pair<Sample, Sample> make_contrastive_block(const RawPair& raw, SampleKind kind) {
    std::string block_id = raw.episode_id + ":w" + std::to_string(raw.window) + ":i" +
                           std::to_string(raw.earlier_pos);

    Sample forward{raw, Orientation::Forward, ChoiceLabel::Second, kind, std::nullopt, block_id};
    Sample reverse{raw, Orientation::Reverse, ChoiceLabel::First, kind, std::nullopt, block_id};
    return {std::move(forward), std::move(reverse)};
}

namespace {

std::string format_progress(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", p);
    return buf;
}

}  // namespace

CoTAnnotation template_annotation(const RawPair& raw, Orientation orientation) {
    const Frame& first = orientation == Orientation::Forward ? raw.earlier : raw.later;
    const Frame& second = orientation == Orientation::Forward ? raw.later : raw.earlier;
    if (!first.progress || !second.progress)
        throw DataError("template annotator needs progress on both frames (episode '" +
                        raw.episode_id + "')");

    const double pa = *first.progress;
    const double pb = *second.progress;
    CoTAnnotation ann;
    ann.spatial_details.push_back("first image: task progress " + format_progress(pa));
    ann.spatial_details.push_back("second image: task progress " + format_progress(pb));
    ann.spatial_details.push_back(pb > pa ? "the second image shows the more advanced task state"
                                          : "the first image shows the more advanced task state");
    ann.judgment = pb > pa ? ChoiceLabel::Second : ChoiceLabel::First;
    return ann;
}

Sample attach_cot(Sample sample, const CoTAnnotator& annotator) {
    if (sample.kind != SampleKind::CoT)
        throw UsageError("attach_cot: sample kind must be CoT");
    CoTAnnotation ann = annotator(sample.pair, sample.orientation);
    if (ann.spatial_details.empty())
        throw DataError("attach_cot: annotator returned no spatial details");
    if (ann.judgment != sample.label)
        throw DataError("attach_cot: annotator judgment contradicts the ground-truth label "
                        "(block " + sample.block_id + ")");
    sample.cot = std::move(ann);
    return sample;
}

SampleSet build_dataset(const std::vector<Episode>& episodes, const WindowSpec& spec,
                        const KindPolicy& policy, bool interleave, std::uint64_t seed,
                        const CoTAnnotator& annotator) {
    validate_spec(spec);
    if (policy.cot_fraction < 0.0 || policy.cot_fraction > 1.0)
        throw UsageError("build_dataset: cot_fraction must lie in [0,1]");

    std::mt19937_64 rng(seed);
    std::vector<std::pair<Sample, Sample>> blocks;
    SampleSet set;

    for (const Episode& ep : episodes) {
        set.episode_categories[ep.id] = ep.category.name;
        for (const RawPair& raw : extract_pairs(ep, spec)) {
            const bool cot = unit_interval(rng()) < policy.cot_fraction;
            auto [fwd, rev] = make_contrastive_block(raw, cot ? SampleKind::CoT : SampleKind::Tag);
            if (cot) {
                fwd = attach_cot(std::move(fwd), annotator);
                rev = attach_cot(std::move(rev), annotator);
            }
            blocks.emplace_back(std::move(fwd), std::move(rev));
        }
    }
    if (blocks.empty()) throw DataError("build_dataset: no pairs extracted from the given episodes");

    if (!interleave) {
        // Block-level Fisher-Yates; twins stay adjacent.
        for (std::size_t i = blocks.size() - 1; i > 0; --i) {
            const std::size_t j = rng() % (i + 1);
            std::swap(blocks[i], blocks[j]);
        }
    }

    set.samples.reserve(2 * blocks.size());
    for (auto& [fwd, rev] : blocks) {
        set.samples.push_back(std::move(fwd));
        set.samples.push_back(std::move(rev));
    }

    ordered_json prov;
    prov["windows"] = spec.sizes;
    prov["stride"] = spec.stride;
    prov["cot_fraction"] = policy.cot_fraction;
    prov["interleave"] = interleave;
    prov["seed"] = seed;
    prov["episodes"] = episodes.size();
    set.provenance = prov.dump();

    validate(set);
    return set;
}

void validate(const SampleSet& set) {
    std::map<std::string, std::pair<int, int>> block_counts;  // block_id -> (forward, reverse)
    std::size_t forward = 0, reverse = 0;

    for (const Sample& s : set.samples) {
        const ChoiceLabel expected =
            s.orientation == Orientation::Forward ? ChoiceLabel::Second : ChoiceLabel::First;
        if (s.label != expected)
            throw DataError("sample set: orientation-label coupling violated in block " + s.block_id);
        if (s.kind == SampleKind::CoT) {
            if (!s.cot) throw DataError("sample set: CoT sample missing annotation in block " + s.block_id);
            if (s.cot->spatial_details.empty())
                throw DataError("sample set: empty spatial details in block " + s.block_id);
            if (s.cot->judgment != s.label)
                throw DataError("sample set: annotation judgment mismatch in block " + s.block_id);
        } else if (s.cot) {
            throw DataError("sample set: Tag sample carries an annotation in block " + s.block_id);
        }
        auto& [f, r] = block_counts[s.block_id];
        (s.orientation == Orientation::Forward ? f : r) += 1;
        (s.orientation == Orientation::Forward ? forward : reverse) += 1;
    }

    if (forward != reverse)
        throw DataError("sample set: forward/reverse counts differ (" + std::to_string(forward) +
                        " vs " + std::to_string(reverse) + ")");
    for (const auto& [id, counts] : block_counts)
        if (counts.first != 1 || counts.second != 1)
            throw DataError("sample set: block " + id + " does not appear exactly once per orientation");
}

void write_samples(const SampleSet& set, std::ostream& out) {
    for (const Sample& s : set.samples) {
        ordered_json j;
        j["block_id"] = s.block_id;
        j["episode_id"] = s.pair.episode_id;
        j["window"] = s.pair.window;
        j["orientation"] = to_string(s.orientation);
        j["image_a"] = detail::payload_to_json(s.first_presented().payload);
        j["image_b"] = detail::payload_to_json(s.second_presented().payload);
        j["label"] = to_string(s.label);
        j["kind"] = to_string(s.kind);
        if (s.cot) {
            ordered_json cot;
            cot["spatial_details"] = s.cot->spatial_details;
            cot["judgment"] = to_string(s.cot->judgment);
            j["cot"] = std::move(cot);
        }
        out << j.dump() << '\n';
    }
}

void write_samples(const SampleSet& set, const std::filesystem::path& path) {
    std::ostringstream buf;
    write_samples(set, buf);
    write_file_atomic(path, buf.str());
}

SampleSet read_samples(std::istream& in, std::string_view source_name) {
    SampleSet set;
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
        static const std::set<std::string> known = {"block_id", "episode_id", "window", "orientation",
                                                    "image_a", "image_b", "label", "kind", "cot"};
        for (const auto& [key, _] : j.items())
            if (!known.count(key)) throw DataError(where + ": unknown field '" + key + "'");
        for (const char* required : {"block_id", "episode_id", "window", "orientation", "image_a",
                                     "image_b", "label", "kind"})
            if (!j.contains(required))
                throw DataError(where + ": missing field '" + std::string(required) + "'");

        Sample s;
        s.block_id = j["block_id"].get<std::string>();
        const auto episode_id = j["episode_id"].get<std::string>();
        if (!j["window"].is_number_integer() || j["window"].get<int>() < 1)
            throw DataError(where + ": window must be a positive integer");
        const int window = j["window"].get<int>();

        const auto orientation_text = j["orientation"].get<std::string>();
        if (orientation_text == "forward")
            s.orientation = Orientation::Forward;
        else if (orientation_text == "reverse")
            s.orientation = Orientation::Reverse;
        else
            throw DataError(where + ": orientation must be 'forward' or 'reverse'");

        const auto label_text = j["label"].get<std::string>();
        if (label_text == "first")
            s.label = ChoiceLabel::First;
        else if (label_text == "second")
            s.label = ChoiceLabel::Second;
        else
            throw DataError(where + ": label must be 'first' or 'second'");

        const ChoiceLabel expected =
            s.orientation == Orientation::Forward ? ChoiceLabel::Second : ChoiceLabel::First;
        if (s.label != expected)
            throw DataError(where + ": label contradicts orientation");

        Payload a = detail::payload_from_json(j["image_a"], where);
        Payload b = detail::payload_from_json(j["image_b"], where);

        // image_a/image_b are in presentation order; undo the orientation to
        // recover the temporal pair. Raw video indices are not part of the
        // schema, so positions stand in for them.
        Frame earlier{episode_id, 0, Payload{}, std::nullopt};
        Frame later{episode_id, window, Payload{}, std::nullopt};
        if (s.orientation == Orientation::Forward) {
            earlier.payload = std::move(a);
            later.payload = std::move(b);
        } else {
            later.payload = std::move(a);
            earlier.payload = std::move(b);
        }
        s.pair = RawPair{episode_id, std::move(earlier), std::move(later), 0,
                         static_cast<std::size_t>(window), window};

        const auto kind_text = j["kind"].get<std::string>();
        if (kind_text == "cot")
            s.kind = SampleKind::CoT;
        else if (kind_text == "tag")
            s.kind = SampleKind::Tag;
        else
            throw DataError(where + ": kind must be 'cot' or 'tag'");

        if (j.contains("cot")) {
            const auto& cot = j["cot"];
            if (!cot.is_object() || !cot.contains("spatial_details") || !cot.contains("judgment"))
                throw DataError(where + ": cot must carry spatial_details and judgment");
            CoTAnnotation ann;
            for (const auto& d : cot["spatial_details"]) ann.spatial_details.push_back(d.get<std::string>());
            const auto judgment_text = cot["judgment"].get<std::string>();
            if (judgment_text == "first")
                ann.judgment = ChoiceLabel::First;
            else if (judgment_text == "second")
                ann.judgment = ChoiceLabel::Second;
            else
                throw DataError(where + ": cot judgment must be 'first' or 'second'");
            s.cot = std::move(ann);
        }
        set.samples.push_back(std::move(s));
    }
    validate(set);
    return set;
}

SampleSet read_samples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("sample file not found: " + path.string());
    return read_samples(in, path.string());
}

}  // namespace taskprog
