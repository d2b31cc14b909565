#include <cctype>
#include <cstdio>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "taskprog/cli.hpp"
#include "taskprog/errors.hpp"
#include "taskprog/eval.hpp"
#include "taskprog/stats.hpp"
#include "taskprog/util.hpp"

namespace taskprog {

using ordered_json = nlohmann::ordered_json;

std::vector<Episode> make_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t base_seed) {
    std::vector<TaskCategory> categories;
    if (spec.categories.empty()) {
        categories = default_categories();
    } else {
        for (const auto& name : spec.categories) categories.emplace_back(name);
    }
    std::vector<Episode> episodes;
    episodes.reserve(spec.episodes);
    for (std::size_t i = 0; i < spec.episodes; ++i) {
        episodes.push_back(synthesize_episode(base_seed + i, spec.frames, spec.noise,
                                              categories[i % categories.size()], spec.feature_dim));
    }
    return episodes;
}

PairStream synthetic_pair_stream(std::vector<Episode> episodes, std::size_t pairs,
                                 std::uint64_t seed) {
    if (episodes.empty()) throw UsageError("synthetic_pair_stream: need at least one episode");
    auto state = std::make_shared<std::pair<std::mt19937_64, std::size_t>>(
        std::mt19937_64(splitmix64(seed ^ 0x9a17011ULL)), pairs);
    return [state, episodes = std::move(episodes)]()
               -> std::optional<std::pair<Observation, Observation>> {
        auto& [rng, remaining] = *state;
        if (remaining == 0) return std::nullopt;
        --remaining;
        const Episode& ep = episodes[rng() % episodes.size()];
        const std::size_t n = ep.frames.size();
        std::size_t i = rng() % n;
        std::size_t j = rng() % n;
        while (j == i) j = rng() % n;
        if (rng() & 1u) std::swap(i, j);
        const auto& fi = std::get<FeatureVector>(ep.frames[i].payload);
        const auto& fj = std::get<FeatureVector>(ep.frames[j].payload);
        return std::make_pair(Observation{fi}, Observation{fj});
    };
}

void cmd_gen(const Config& config) {
    std::vector<Episode> episodes;
    if (config.gen.manifest)
        episodes = load_manifest(*config.gen.manifest);
    else
        episodes = make_synthetic_corpus(config.gen.synthetic, config.seed);

    std::vector<Episode> processed;
    processed.reserve(episodes.size());
    for (const Episode& ep : episodes)
        processed.push_back(preprocess(ep, config.gen.downsample_factor, config.gen.downsample_phase));

    SampleSet set = build_dataset(processed, config.gen.windows,
                                  KindPolicy{config.gen.cot_fraction}, config.gen.interleave,
                                  config.seed);
    DatasetStats stats = compute_stats(set);

    std::ostringstream samples_buf;
    write_samples(set, samples_buf);
    const std::string stats_json = render_report(stats, ReportFormat::Json);

    const std::filesystem::path out_dir(config.out);
    write_file_atomic(out_dir / "samples.jsonl", samples_buf.str());
    write_file_atomic(out_dir / "stats.json", stats_json);

    std::cout << render_report(stats, ReportFormat::Table) << "wrote "
              << (out_dir / "samples.jsonl").string() << " (" << set.samples.size()
              << " samples)\n";
}

void cmd_stats(const std::string& samples_path, const std::optional<std::string>& manifest_path,
               const std::optional<std::string>& out_path, std::optional<int> aggregate_from) {
    SampleSet set = read_samples(std::filesystem::path(samples_path));
    if (manifest_path) {
        for (const Episode& ep : load_manifest(*manifest_path))
            set.episode_categories[ep.id] = ep.category.name;
    }
    DatasetStats stats = compute_stats(set);
    if (out_path) write_file_atomic(*out_path, render_report(stats, ReportFormat::Json));
    std::cout << render_report(stats, ReportFormat::Table, aggregate_from);
}

void cmd_eval(const Config& config) {
    if (config.eval.samples.empty())
        throw UsageError("eval: no sample file configured (eval.samples)");
    SampleSet set = read_samples(std::filesystem::path(config.eval.samples));
    auto adapter = make_adapter(config.eval.adapter);

    EvalResult result = evaluate(*adapter, set, config.eval.prompt, config.eval.concurrency);

    std::ostringstream journal_buf;
    write_journal(result.journal, journal_buf);
    const std::string report_json = render_eval_json(result.report);
    const std::string report_table = stratify(result.report, config.eval.aggregate_from);

    const std::filesystem::path out_dir(config.out);
    write_file_atomic(out_dir / "journal.jsonl", journal_buf.str());
    write_file_atomic(out_dir / "report.json", report_json);
    write_file_atomic(out_dir / "report.txt", report_table);

    std::cout << report_table << "wrote " << (out_dir / "report.json").string() << "\n";
}

void cmd_reward_train(const Config& config) {
    const SyntheticSpec& task = config.reward.task;
    std::vector<Episode> episodes = make_synthetic_corpus(task, config.seed);
    PairStream stream = synthetic_pair_stream(episodes, config.reward.pairs, config.seed);

    auto labeler = make_adapter(config.reward.labeler);
    TrainConfig train_config = config.reward.train;
    train_config.seed = config.seed;
    TrainResult result = train(train_config, stream, *labeler);

    // Held-out episode for a quick ranking check of the learned curve.
    Episode held_out = synthesize_episode(config.seed + task.episodes, task.frames, task.noise,
                                          default_categories()[0], task.feature_dim);
    RewardCurve curve = reward_curve(result.params, held_out, train_config.penalty);
    std::vector<double> progress;
    for (const Frame& f : held_out.frames) progress.push_back(*f.progress);
    const double rank_corr = spearman(progress, curve.raw);

    std::ostringstream ckpt_buf;
    save_checkpoint(result.params, ckpt_buf);
    std::ostringstream log_buf;
    write_train_log(result.log, log_buf);

    const std::filesystem::path out_dir(config.out);
    write_file_atomic(out_dir / "reward.ckpt", ckpt_buf.str());
    write_file_atomic(out_dir / "train_log.jsonl", log_buf.str());

    char line[256];
    std::snprintf(line, sizeof(line),
                  "final loss %.6f | labeling rounds %zu | labeled %zu (skipped %zu) | held-out "
                  "spearman %.4f\n",
                  result.final_loss, result.labeling_rounds, result.labeled, result.skipped,
                  rank_corr);
    std::cout << line << "wrote " << (out_dir / "reward.ckpt").string() << "\n";
}

namespace {

std::vector<Feedback> feedback_from_script(const std::string& script) {
    std::vector<Feedback> feedback;
    feedback.reserve(script.size());
    for (char c : script) {
        const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (u == 'P')
            feedback.push_back(Feedback::Positive);
        else if (u == 'N')
            feedback.push_back(Feedback::Negative);
        else
            throw UsageError(std::string("rollout script: bad character '") + c + "' (want P or N)");
    }
    if (feedback.empty()) throw UsageError("rollout script: empty");
    return feedback;
}

}  // namespace

void cmd_rollout_sim(const Config& config) {
    std::vector<Feedback> feedback;
    if (!config.rollout.script.empty()) {
        feedback = feedback_from_script(config.rollout.script);
    } else if (config.rollout.checkpoint) {
        // Derive per-step feedback from the learned reward: a step whose raw
        // reward regresses is a negative preference signal.
        RewardModelParams params = load_checkpoint(std::filesystem::path(*config.rollout.checkpoint));
        Episode episode = synthesize_episode(config.seed, config.rollout.episode_frames,
                                             config.rollout.episode_noise, default_categories()[0],
                                             config.rollout.feature_dim);
        RewardCurve curve = reward_curve(params, episode, 0.0);
        for (std::size_t t = 1; t < curve.raw.size(); ++t)
            feedback.push_back(curve.raw[t] >= curve.raw[t - 1] ? Feedback::Positive
                                                                : Feedback::Negative);
    } else {
        throw UsageError("rollout: need either a script or a checkpoint");
    }

    SafetyMonitor monitor(config.rollout.threshold, config.rollout.mode);
    std::ostringstream log_buf;
    std::size_t step = 0;
    for (const Feedback f : feedback) {
        ++step;
        const MonitorStatus status = monitor.observe(f, step);
        ordered_json j;
        j["step"] = step;
        j["feedback"] = to_string(f);
        j["streak"] = monitor.streak();
        j["status"] = to_string(status);
        log_buf << j.dump() << '\n';
        if (status == MonitorStatus::Terminated) {
            ordered_json event;
            event["event"] = "termination";
            event["step"] = step;
            event["streak_mode"] = to_string(monitor.mode());
            event["threshold"] = monitor.threshold();
            log_buf << event.dump() << '\n';
            break;
        }
    }

    const std::filesystem::path out_dir(config.out);
    write_file_atomic(out_dir / "rollout_log.jsonl", log_buf.str());

    if (monitor.status() == MonitorStatus::Terminated)
        std::cout << "terminated at step " << *monitor.terminated_at() << " (threshold "
                  << monitor.threshold() << ", " << to_string(monitor.mode()) << ")\n";
    else
        std::cout << "rollout completed " << step << " steps without termination\n";
    std::cout << "wrote " << (out_dir / "rollout_log.jsonl").string() << "\n";
}

}  // namespace taskprog
