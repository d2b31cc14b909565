#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskprog/adapter.hpp"
#include "taskprog/corpus.hpp"
#include "taskprog/errors.hpp"

namespace taskprog {

// A fixed-length encoding of one state-action observation.
struct Observation {
    FeatureVector features;
};

struct Trajectory {
    std::vector<Observation> observations;  // non-empty
};

// y = 1 means tau0 is preferred.
struct PreferenceRecord {
    Trajectory tau0;
    Trajectory tau1;
    int y = 1;
};

// Append-only store of labelled trajectory pairs. When a capacity is set the
// oldest records are evicted to keep size <= capacity.
class PreferenceBuffer {
public:
    PreferenceBuffer() = default;
    explicit PreferenceBuffer(std::optional<std::size_t> capacity) : capacity_(capacity) {}

    void append(PreferenceRecord record);
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const PreferenceRecord& operator[](std::size_t i) const { return records_[i]; }
    std::optional<std::size_t> capacity() const { return capacity_; }

private:
    std::deque<PreferenceRecord> records_;
    std::optional<std::size_t> capacity_;
};

// One-hidden-layer scorer r(o) = w2 . tanh(W1 o + b1) + b2, with manual
// analytic gradients. The flat parameter order is w1 (row-major hidden x
// input), b1, w2, b2.
struct RewardModelParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;

    static RewardModelParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    static RewardModelParams random_init(std::size_t input_dim, std::size_t hidden_dim,
                                         std::uint64_t seed);

    std::size_t size() const { return w1.size() + b1.size() + w2.size() + 1; }
    std::vector<double> to_vector() const;
    static RewardModelParams from_vector(std::size_t input_dim, std::size_t hidden_dim,
                                         std::span<const double> flat);
};

double reward_value(const RewardModelParams& params, std::span<const double> features);

// Sum of per-observation rewards over the trajectory.
double trajectory_score(const RewardModelParams& params, const Trajectory& tau);

/// P[tau0 > tau1] = exp(S0) / (exp(S0) + exp(S1)) with S_i the trajectory
/// scores, evaluated as a logistic of S0 - S1 so large scores cannot
/// overflow. Satisfies P(a,b) + P(b,a) = 1.
double preference_prob(const RewardModelParams& params, const Trajectory& tau0,
                       const Trajectory& tau1);

inline constexpr double kProbClamp = 1e-7;

/// Mean cross-entropy between predicted preference probabilities and the
/// labels: -[y log P(tau0 > tau1) + (1-y) log P(tau1 > tau0)], with
/// probabilities clamped to [kProbClamp, 1 - kProbClamp] for finiteness.
double pref_loss(const RewardModelParams& params, std::span<const PreferenceRecord> batch);

/// Analytic gradient of pref_loss in the flat parameter order. The gradient
/// uses the exact smooth expression; the probability clamp only guards the
/// reported loss value in saturated regions.
std::vector<double> grad_pref_loss(const RewardModelParams& params,
                                   std::span<const PreferenceRecord> batch);

struct LabelContext {
    std::string prompt = "Which of the two images is closer to task completion?";
    std::string id_prefix;  // makes per-query mock draws distinct and reproducible
};

struct LabelingResult {
    std::vector<PreferenceRecord> records;
    std::size_t skipped = 0;  // unparsable adapter answers
};

// Raised when the adapter fails at the transport layer mid-batch; carries the
// records labelled so far.
struct LabelingError : TransportError {
    LabelingError(const std::string& what, LabelingResult partial_result)
        : TransportError(what), partial(std::move(partial_result)) {}
    LabelingResult partial;
};

/// Asks the adapter which observation of each pair is closer to completion
/// and converts the answers to preference records (First -> y=1). Unparsable
/// answers are skipped and counted.
LabelingResult label_with_adapter(const std::vector<std::pair<Observation, Observation>>& pairs,
                                  const Adapter& adapter, const LabelContext& context);

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t steps = 2000;
    std::size_t batch_size = 32;
    std::size_t label_period = 64;  // K
    std::uint64_t seed = 7;
    double penalty = 0.1;  // counterproductive-step penalty for emitted curves
    std::size_t hidden_dim = 32;
    std::optional<std::size_t> buffer_capacity;
    std::string prompt = "Which of the two images is closer to task completion?";
};

struct TrainLogEntry {
    std::size_t step = 0;
    std::optional<double> loss;  // absent before the first labelled batch
    std::size_t buffer_size = 0;
};

struct TrainResult {
    RewardModelParams params;
    std::vector<TrainLogEntry> log;
    std::size_t labeling_rounds = 0;
    std::size_t labeled = 0;
    std::size_t skipped = 0;
    double final_loss = 0.0;  // median over the last 50 logged losses
};

// Yields the next unlabelled observation pair, or nullopt when exhausted.
using PairStream = std::function<std::optional<std::pair<Observation, Observation>>()>;

/// The online loop: each step pulls one pair from the stream into a replay
/// buffer; every K steps (and once more when the stream runs dry) the
/// accumulated pairs are labelled through the adapter and appended to the
/// preference buffer; each step with a non-empty buffer takes one
/// gradient-descent step on a sampled minibatch. Deterministic under seed.
/// Aborts with DataError if the loss turns non-finite.
TrainResult train(const TrainConfig& config, const PairStream& stream, const Adapter& adapter);

void write_train_log(const std::vector<TrainLogEntry>& log, std::ostream& out);

struct RewardCurve {
    std::vector<double> raw;
    std::vector<double> penalized;
};

/// Per-frame reward over an episode, plus the emitted curve where every step
/// whose raw reward regressed below the previous frame's is charged
/// `penalty`. Frames must carry feature payloads.
RewardCurve reward_curve(const RewardModelParams& params, const Episode& episode, double penalty);

// Field-tagged text checkpoint with hexfloat values; reload is bit-exact.
void save_checkpoint(const RewardModelParams& params, std::ostream& out);
void save_checkpoint(const RewardModelParams& params, const std::filesystem::path& path);
RewardModelParams load_checkpoint(std::istream& in);
RewardModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace taskprog
