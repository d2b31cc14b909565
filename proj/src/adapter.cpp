#include "taskprog/adapter.hpp"

#include <algorithm>
#include <cctype>

#include "taskprog/errors.hpp"
#include "taskprog/util.hpp"

namespace taskprog {

std::string_view to_string(Choice c) {
    switch (c) {
        case Choice::First: return "first";
        case Choice::Second: return "second";
        case Choice::Unparsable: return "unparsable";
    }
    return "unparsable";
}

namespace {

std::uint64_t payload_hash(const Payload& payload, std::uint64_t h) {
    if (const auto* ref = std::get_if<std::string>(&payload)) return fnv1a(*ref, h);
    return fnv1a_doubles(std::get<FeatureVector>(payload), h);
}

double progress_of(const Payload& payload, const char* adapter_name) {
    const auto* features = std::get_if<FeatureVector>(&payload);
    if (!features || features->empty())
        throw UsageError(std::string(adapter_name) +
                         " adapter needs feature payloads (synthetic data); got a reference payload");
    return (*features)[0];  // synthetic embedding keeps progress in channel 0
}

Choice flip(Choice c) {
    return c == Choice::First ? Choice::Second : Choice::First;
}

class OracleAdapter final : public Adapter {
public:
    std::string name() const override { return "oracle"; }
    Choice query(const AdapterQuery& q) const override {
        const double pa = progress_of(q.image_a, "oracle");
        const double pb = progress_of(q.image_b, "oracle");
        return pa > pb ? Choice::First : Choice::Second;  // ties go to Second
    }
};

class ConstantAdapter final : public Adapter {
public:
    ConstantAdapter(std::string name, Choice choice) : name_(std::move(name)), choice_(choice) {}
    std::string name() const override { return name_; }
    Choice query(const AdapterQuery&) const override { return choice_; }

private:
    std::string name_;
    Choice choice_;
};

class NoisyOracleAdapter final : public Adapter {
public:
    NoisyOracleAdapter(double epsilon, std::uint64_t seed) : epsilon_(epsilon), seed_(seed) {
        if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("noisy_oracle: epsilon must lie in [0,1]");
    }
    std::string name() const override { return "noisy_oracle"; }
    Choice query(const AdapterQuery& q) const override {
        const Choice base = oracle_.query(q);
        const double u = unit_interval(splitmix64(seed_ ^ query_fingerprint(q)));
        return u < epsilon_ ? flip(base) : base;
    }

private:
    OracleAdapter oracle_;
    double epsilon_;
    std::uint64_t seed_;
};

class BiasProfileAdapter final : public Adapter {
public:
    explicit BiasProfileAdapter(const BiasProfile& profile) : profile_(profile) {
        if (profile.forward_acc < 0.0 || profile.forward_acc > 1.0 || profile.reverse_acc < 0.0 ||
            profile.reverse_acc > 1.0)
            throw UsageError("bias_profile: accuracies must lie in [0,1]");
    }
    std::string name() const override { return "bias_profile"; }
    Choice query(const AdapterQuery& q) const override {
        if (!q.orientation)
            throw UsageError("bias_profile adapter requires orientation in the evaluation context");
        // Orientation determines the ground truth: Forward pairs are labelled
        // Second, Reverse pairs First.
        const bool fwd = *q.orientation == Orientation::Forward;
        const Choice correct = fwd ? Choice::Second : Choice::First;
        const double acc = fwd ? profile_.forward_acc : profile_.reverse_acc;
        const double u = unit_interval(splitmix64(profile_.seed ^ query_fingerprint(q)));
        return u < acc ? correct : flip(correct);
    }

private:
    BiasProfile profile_;
};

}  // namespace

std::uint64_t query_fingerprint(const AdapterQuery& q) {
    std::uint64_t h = fnv1a(q.id);
    h = fnv1a(q.prompt, h);
    h = fnv1a(q.orientation ? to_string(*q.orientation) : "none", h);
    h = payload_hash(q.image_a, h);
    h = payload_hash(q.image_b, h);
    return h;
}

Choice parse_choice_text(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

    const auto first_pos = lowered.find("first");
    const auto second_pos = lowered.find("second");
    if (first_pos != std::string::npos && second_pos == std::string::npos) return Choice::First;
    if (second_pos != std::string::npos && first_pos == std::string::npos) return Choice::Second;
    return Choice::Unparsable;
}

std::unique_ptr<Adapter> make_oracle() {
    return std::make_unique<OracleAdapter>();
}

std::unique_ptr<Adapter> make_always_second() {
    return std::make_unique<ConstantAdapter>("always_second", Choice::Second);
}

std::unique_ptr<Adapter> make_always_first() {
    return std::make_unique<ConstantAdapter>("always_first", Choice::First);
}

std::unique_ptr<Adapter> make_noisy_oracle(double epsilon, std::uint64_t seed) {
    return std::make_unique<NoisyOracleAdapter>(epsilon, seed);
}

std::unique_ptr<Adapter> make_bias_profile(const BiasProfile& profile) {
    return std::make_unique<BiasProfileAdapter>(profile);
}

}  // namespace taskprog
