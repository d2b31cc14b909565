#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "taskprog/adapter.hpp"
#include "taskprog/reward.hpp"
#include "taskprog/safety.hpp"
#include "taskprog/sampler.hpp"

namespace taskprog {

inline constexpr std::string_view kDefaultPrompt =
    "Which of the two images is closer to task completion? Answer 'first' or 'second'.";

struct SyntheticSpec {
    std::size_t episodes = 4;
    std::size_t frames = 30;
    double noise = 0.3;
    std::size_t feature_dim = 8;
    std::vector<std::string> categories;  // empty -> default category cycle
};

struct GenConfig {
    std::optional<std::string> manifest;  // absent -> synthesize
    SyntheticSpec synthetic;
    int downsample_factor = 1;
    int downsample_phase = 0;
    WindowSpec windows = WindowSpec::defaults();
    double cot_fraction = 0.0;
    bool interleave = true;
};

struct AdapterConfig {
    std::string kind = "oracle";  // oracle | always_second | always_first |
                                  // noisy_oracle | bias_profile | http
    double epsilon = 0.0;
    BiasProfile profile;
    HttpOptions http;
    std::uint64_t adapter_seed = 0;
};

struct EvalConfig {
    std::string samples;  // sample file written by gen
    AdapterConfig adapter;
    std::string prompt = std::string(kDefaultPrompt);
    int concurrency = 1;
    std::optional<int> aggregate_from = 12;
};

struct RewardTrainCliConfig {
    SyntheticSpec task{8, 40, 0.3, 8, {}};
    std::size_t pairs = 4000;  // length of the simulated rollout stream
    AdapterConfig labeler;     // defaults to the oracle
    TrainConfig train;
};

struct RolloutConfig {
    std::size_t threshold = 3;
    StreakMode mode = StreakMode::Consecutive;
    std::string script;  // e.g. "NNPNNN"; empty -> derive from a reward curve
    std::optional<std::string> checkpoint;
    std::size_t episode_frames = 40;
    double episode_noise = 0.3;
    std::size_t feature_dim = 8;
};

struct Config {
    std::uint64_t seed = 0;
    std::string out = "out";
    GenConfig gen;
    EvalConfig eval;
    RewardTrainCliConfig reward;
    RolloutConfig rollout;
};

// Strict parse: unknown keys anywhere are rejected, values are range-checked.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& json_text);

std::unique_ptr<Adapter> make_adapter(const AdapterConfig& config);

// Synthesizes spec.episodes monotone-progress episodes with seeds base_seed,
// base_seed+1, ...
std::vector<Episode> make_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t base_seed);

// A simulated rollout: yields `pairs` random within-episode frame pairs in
// random presentation order, then runs dry. Owns a copy of the corpus.
PairStream synthetic_pair_stream(std::vector<Episode> episodes, std::size_t pairs,
                                 std::uint64_t seed);

// Subcommand bodies. Each validates its inputs, computes everything in
// memory, then writes outputs atomically, so failures leave no partial files.
// Errors surface as exceptions; the binary maps them to exit codes.
void cmd_gen(const Config& config);
void cmd_stats(const std::string& samples_path, const std::optional<std::string>& manifest_path,
               const std::optional<std::string>& out_path,
               std::optional<int> aggregate_from = std::nullopt);
void cmd_eval(const Config& config);
void cmd_reward_train(const Config& config);
void cmd_rollout_sim(const Config& config);

}  // namespace taskprog
