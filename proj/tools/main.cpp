#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "taskprog/cli.hpp"
#include "taskprog/errors.hpp"

using namespace taskprog;

namespace {

// Flag values land here first; only flags the user actually passed override
// the config file, which in turn overrides the built-in defaults.
struct FlagValues {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out;

    // gen
    std::string manifest;
    std::size_t episodes = 0, frames = 0, feature_dim = 0;
    double noise = 0.0, cot_fraction = 0.0;
    int factor = 1, phase = 0, stride = 1;
    std::string windows;
    bool shuffle = false;

    // eval
    std::string samples, adapter, prompt, endpoint;
    double epsilon = 0.0, forward_acc = 0.0, reverse_acc = 0.0;
    std::uint64_t adapter_seed = 0;
    int concurrency = 1, timeout_ms = 0, retries = 0, max_in_flight = 0, aggregate_from = 0;
    bool no_aggregate = false;

    // reward-train
    std::size_t steps = 0, batch_size = 0, label_period = 0, hidden_dim = 0, pairs = 0;
    double learning_rate = 0.0, penalty = 0.0;
    std::string labeler;

    // rollout-sim
    std::size_t threshold = 0;
    std::string mode, script, checkpoint;

    // stats
    std::string stats_manifest, stats_out;
};

int run(int argc, char** argv) {
    CLI::App app{"temporal pair dataset engine, order-bias evaluation harness and preference "
                 "reward trainer"};
    app.require_subcommand(1);

    FlagValues f;
    Config cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", f.seed, "master seed");
        sub->add_option("--config", f.config_path, "JSON config file");
        sub->add_option("--out", f.out, "output directory");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a contrastive sample dataset + stats");
    add_common(gen);
    gen->add_option("--manifest", f.manifest, "episode manifest (JSONL); omit to synthesize");
    gen->add_option("--episodes", f.episodes, "synthetic episode count");
    gen->add_option("--frames", f.frames, "frames per synthetic episode");
    gen->add_option("--noise", f.noise, "synthetic noise magnitude");
    gen->add_option("--feature-dim", f.feature_dim, "synthetic feature dimension");
    gen->add_option("--factor", f.factor, "temporal downsample factor");
    gen->add_option("--phase", f.phase, "downsample phase offset");
    gen->add_option("--windows", f.windows, "window sizes, e.g. 5-16 or 5,10,12");
    gen->add_option("--stride", f.stride, "sliding-window stride");
    gen->add_option("--cot-fraction", f.cot_fraction, "fraction of blocks annotated as CoT");
    gen->add_flag("--shuffle", f.shuffle, "block-level shuffle (twins stay adjacent)");

    CLI::App* stats = app.add_subcommand("stats", "recompute statistics from a sample file");
    add_common(stats);
    stats->add_option("--samples", f.samples, "sample file")->required();
    stats->add_option("--manifest", f.stats_manifest, "manifest to join categories from");
    stats->add_option("--aggregate-from", f.aggregate_from, "fold windows >= N into one row");

    CLI::App* eval = app.add_subcommand("eval", "run the forward/reverse accuracy harness");
    add_common(eval);
    eval->add_option("--samples", f.samples, "sample file to evaluate");
    eval->add_option("--adapter", f.adapter,
                     "oracle|always_second|always_first|noisy_oracle|bias_profile|http");
    eval->add_option("--epsilon", f.epsilon, "noisy_oracle flip probability");
    eval->add_option("--forward-acc", f.forward_acc, "bias_profile forward accuracy");
    eval->add_option("--reverse-acc", f.reverse_acc, "bias_profile reverse accuracy");
    eval->add_option("--adapter-seed", f.adapter_seed, "seed for mock adapter draws");
    eval->add_option("--endpoint", f.endpoint, "http adapter endpoint");
    eval->add_option("--timeout-ms", f.timeout_ms, "http request timeout");
    eval->add_option("--retries", f.retries, "http retry count");
    eval->add_option("--max-in-flight", f.max_in_flight, "http concurrent request bound");
    eval->add_option("--prompt", f.prompt, "evaluation prompt");
    eval->add_option("--concurrency", f.concurrency, "harness fan-out bound");
    eval->add_option("--aggregate-from", f.aggregate_from, "fold windows >= N into one row");
    eval->add_flag("--no-aggregate", f.no_aggregate, "list every window individually");

    CLI::App* rt = app.add_subcommand("reward-train", "train the preference reward model");
    add_common(rt);
    rt->add_option("--episodes", f.episodes, "synthetic task episode count");
    rt->add_option("--frames", f.frames, "frames per synthetic episode");
    rt->add_option("--noise", f.noise, "synthetic noise magnitude");
    rt->add_option("--feature-dim", f.feature_dim, "synthetic feature dimension");
    rt->add_option("--pairs", f.pairs, "rollout stream length (observation pairs)");
    rt->add_option("--labeler", f.labeler, "labeling adapter kind");
    rt->add_option("--lr", f.learning_rate, "learning rate");
    rt->add_option("--steps", f.steps, "training steps");
    rt->add_option("--batch-size", f.batch_size, "minibatch size");
    rt->add_option("--label-period", f.label_period, "labeling period K");
    rt->add_option("--hidden", f.hidden_dim, "hidden layer width");
    rt->add_option("--penalty", f.penalty, "counterproductive-step penalty");

    CLI::App* rs = app.add_subcommand("rollout-sim", "simulate a safety-monitored rollout");
    add_common(rs);
    rs->add_option("--threshold", f.threshold, "negative-streak termination threshold");
    rs->add_option("--mode", f.mode, "consecutive|cumulative");
    rs->add_option("--script", f.script, "scripted feedback, e.g. NNPNNN");
    rs->add_option("--checkpoint", f.checkpoint, "derive feedback from this reward checkpoint");
    rs->add_option("--frames", f.frames, "synthetic rollout episode length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // uniform usage exit code
    }

    CLI::App* sub = app.get_subcommands().front();
    auto passed = [&](const std::string& flag) { return sub->count(flag) > 0; };

    if (passed("--config")) cfg = load_config(f.config_path);
    if (passed("--seed")) cfg.seed = f.seed;
    if (passed("--out")) cfg.out = f.out;

    if (sub == gen) {
        if (passed("--manifest")) cfg.gen.manifest = f.manifest;
        if (passed("--episodes")) cfg.gen.synthetic.episodes = f.episodes;
        if (passed("--frames")) cfg.gen.synthetic.frames = f.frames;
        if (passed("--noise")) cfg.gen.synthetic.noise = f.noise;
        if (passed("--feature-dim")) cfg.gen.synthetic.feature_dim = f.feature_dim;
        if (passed("--factor")) cfg.gen.downsample_factor = f.factor;
        if (passed("--phase")) cfg.gen.downsample_phase = f.phase;
        if (passed("--stride")) cfg.gen.windows.stride = f.stride;
        if (passed("--windows")) cfg.gen.windows = WindowSpec::parse(f.windows, cfg.gen.windows.stride);
        if (passed("--cot-fraction")) cfg.gen.cot_fraction = f.cot_fraction;
        if (passed("--shuffle")) cfg.gen.interleave = false;
        if (cfg.gen.downsample_factor < 1) throw UsageError("--factor must be >= 1");
        if (cfg.gen.downsample_phase < 0 || cfg.gen.downsample_phase >= cfg.gen.downsample_factor)
            throw UsageError("--phase must satisfy 0 <= phase < factor");
        if (cfg.gen.cot_fraction < 0.0 || cfg.gen.cot_fraction > 1.0)
            throw UsageError("--cot-fraction must lie in [0,1]");
        validate_spec(cfg.gen.windows);
        cmd_gen(cfg);
    } else if (sub == stats) {
        std::optional<std::string> manifest, out_path;
        if (passed("--manifest")) manifest = f.stats_manifest;
        if (passed("--out")) out_path = (std::filesystem::path(cfg.out) / "stats.json").string();
        std::optional<int> aggregate;
        if (passed("--aggregate-from")) aggregate = f.aggregate_from;
        cmd_stats(f.samples, manifest, out_path, aggregate);
    } else if (sub == eval) {
        if (passed("--samples")) cfg.eval.samples = f.samples;
        if (passed("--adapter")) cfg.eval.adapter.kind = f.adapter;
        if (passed("--epsilon")) cfg.eval.adapter.epsilon = f.epsilon;
        if (passed("--forward-acc")) cfg.eval.adapter.profile.forward_acc = f.forward_acc;
        if (passed("--reverse-acc")) cfg.eval.adapter.profile.reverse_acc = f.reverse_acc;
        if (passed("--adapter-seed")) {
            cfg.eval.adapter.adapter_seed = f.adapter_seed;
            cfg.eval.adapter.profile.seed = f.adapter_seed;
        }
        if (passed("--endpoint")) cfg.eval.adapter.http.endpoint = f.endpoint;
        if (passed("--timeout-ms")) cfg.eval.adapter.http.timeout_ms = f.timeout_ms;
        if (passed("--retries")) cfg.eval.adapter.http.retries = f.retries;
        if (passed("--max-in-flight")) cfg.eval.adapter.http.max_in_flight = f.max_in_flight;
        if (passed("--prompt")) cfg.eval.prompt = f.prompt;
        if (passed("--concurrency")) cfg.eval.concurrency = f.concurrency;
        if (passed("--aggregate-from")) cfg.eval.aggregate_from = f.aggregate_from;
        if (passed("--no-aggregate")) cfg.eval.aggregate_from.reset();
        cmd_eval(cfg);
    } else if (sub == rt) {
        if (passed("--episodes")) cfg.reward.task.episodes = f.episodes;
        if (passed("--frames")) cfg.reward.task.frames = f.frames;
        if (passed("--noise")) cfg.reward.task.noise = f.noise;
        if (passed("--feature-dim")) cfg.reward.task.feature_dim = f.feature_dim;
        if (passed("--pairs")) cfg.reward.pairs = f.pairs;
        if (passed("--labeler")) cfg.reward.labeler.kind = f.labeler;
        if (passed("--lr")) cfg.reward.train.learning_rate = f.learning_rate;
        if (passed("--steps")) cfg.reward.train.steps = f.steps;
        if (passed("--batch-size")) cfg.reward.train.batch_size = f.batch_size;
        if (passed("--label-period")) cfg.reward.train.label_period = f.label_period;
        if (passed("--hidden")) cfg.reward.train.hidden_dim = f.hidden_dim;
        if (passed("--penalty")) cfg.reward.train.penalty = f.penalty;
        cmd_reward_train(cfg);
    } else if (sub == rs) {
        if (passed("--threshold")) cfg.rollout.threshold = f.threshold;
        if (passed("--mode")) {
            if (f.mode == "consecutive")
                cfg.rollout.mode = StreakMode::Consecutive;
            else if (f.mode == "cumulative")
                cfg.rollout.mode = StreakMode::Cumulative;
            else
                throw UsageError("--mode must be 'consecutive' or 'cumulative'");
        }
        if (passed("--script")) cfg.rollout.script = f.script;
        if (passed("--checkpoint")) cfg.rollout.checkpoint = f.checkpoint;
        if (passed("--frames")) cfg.rollout.episode_frames = f.frames;
        cmd_rollout_sim(cfg);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
