// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 9 exercises the CLI binary whose path arrives as argv[1].

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "taskprog/cli.hpp"
#include "taskprog/errors.hpp"
#include "taskprog/eval.hpp"
#include "taskprog/reward.hpp"
#include "taskprog/safety.hpp"
#include "taskprog/stats.hpp"
#include "taskprog/util.hpp"

using namespace taskprog;
namespace fs = std::filesystem;

namespace {

std::string g_binary_path;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// Balanced synthetic set built from single-window extraction so the sample
// count lands exactly on target: episodes * (frames - window) * 2.
SampleSet balanced_set(std::size_t episodes, std::size_t frames, int window, std::uint64_t seed) {
    std::vector<Episode> corpus;
    for (std::size_t i = 0; i < episodes; ++i)
        corpus.push_back(synthesize_episode(seed * 1000 + i, frames, 0.3,
                                            default_categories()[i % default_categories().size()],
                                            4));
    WindowSpec spec;
    spec.sizes = {window};
    return build_dataset(corpus, spec, KindPolicy{}, true, seed);
}

Outcome criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    SampleSet set = balanced_set(20, 505, 5, 1);  // exactly 20,000 samples
    if (set.samples.size() != 20000)
        return {false, fmt("expected 20000 samples, built %zu", set.samples.size())};

    auto adapter = make_bias_profile(BiasProfile{0.8380, 0.9033, 42});
    EvalResult result = evaluate(*adapter, set, "prompt", 4);
    const double average = 100.0 * result.report.overall_average;
    const double gap = result.report.gap;
    const double elapsed = seconds_since(start);

    const bool pass = std::fabs(average - 87.07) <= 0.6 && std::fabs(gap - 6.53) <= 0.8 &&
                      elapsed < 30.0;
    return {pass, fmt("average %.2f%% (target 87.07 +- 0.6), gap %.2f pts (target 6.53 +- 0.8), "
                      "%.1f s (< 30)",
                      average, gap, elapsed)};
}

Outcome criterion_2() {
    auto adapter = make_always_second();

    SampleSet small = balanced_set(1, 8, 5, 2);  // 6 samples
    if (small.samples.size() != 6) return {false, "small set is not 6 samples"};
    EvalResult small_result = evaluate(*adapter, small, "prompt", 1);

    SampleSet large = balanced_set(20, 505, 5, 1);  // 20,000 samples
    EvalResult large_result = evaluate(*adapter, large, "prompt", 4);

    for (const EvalResult* r : {&small_result, &large_result}) {
        if (r->report.overall_forward != 1.0 || r->report.overall_reverse != 0.0 ||
            r->report.gap != 100.0)
            return {false, fmt("got forward %.4f, reverse %.4f, gap %.4f (want 1 / 0 / 100 exact)",
                               r->report.overall_forward, r->report.overall_reverse,
                               r->report.gap)};
    }
    return {true, "forward 100%, reverse 0%, gap 100 points exactly, at n=6 and n=20000"};
}

Outcome criterion_3() {
    SampleSet set = balanced_set(10, 505, 5, 3);  // exactly 10,000 samples
    if (set.samples.size() != 10000)
        return {false, fmt("expected 10000 samples, built %zu", set.samples.size())};

    const BiasProfile profile{0.8373, 0.2321, 7};
    auto adapter = make_bias_profile(profile);
    EvalResult result = evaluate(*adapter, set, "prompt", 4);

    const double df = 100.0 * std::fabs(result.report.overall_forward - profile.forward_acc);
    const double dr = 100.0 * std::fabs(result.report.overall_reverse - profile.reverse_acc);
    const bool pass = df <= 1.5 && dr <= 1.5;
    return {pass, fmt("forward %.2f%% (target 83.73 +- 1.5), reverse %.2f%% (target 23.21 +- 1.5)",
                      100.0 * result.report.overall_forward,
                      100.0 * result.report.overall_reverse)};
}

Outcome criterion_4() {
    std::mt19937_64 rng(20250810);
    int built = 0;
    while (built < 100) {
        const std::size_t episodes = 1 + rng() % 4;
        const std::size_t frames = 2 + rng() % 50;
        WindowSpec spec;
        std::set<int> sizes;
        const std::size_t k = 1 + rng() % 4;
        while (sizes.size() < k) sizes.insert(1 + static_cast<int>(rng() % 20));
        spec.sizes.assign(sizes.begin(), sizes.end());
        spec.stride = 1 + static_cast<int>(rng() % 3);
        const KindPolicy policy{(rng() % 4) * 0.25};
        const bool interleave = rng() & 1;

        std::vector<Episode> corpus;
        for (std::size_t i = 0; i < episodes; ++i)
            corpus.push_back(synthesize_episode(rng(), frames, 0.2, default_categories()[0], 3));

        SampleSet set;
        try {
            set = build_dataset(corpus, spec, policy, interleave, rng());
        } catch (const DataError&) {
            continue;  // zero extractable pairs; config does not count
        }
        ++built;

        std::size_t forward = 0;
        std::map<std::string, std::pair<int, int>> blocks;
        for (const Sample& s : set.samples) {
            if (s.orientation == Orientation::Forward) {
                ++forward;
                blocks[s.block_id].first += 1;
            } else {
                blocks[s.block_id].second += 1;
            }
        }
        if (2 * forward != set.samples.size())
            return {false, fmt("config %d: forward %zu of %zu samples", built, forward,
                               set.samples.size())};
        for (const auto& [id, counts] : blocks)
            if (counts.first != 1 || counts.second != 1)
                return {false, fmt("config %d: block %s appears (%d,%d) times", built, id.c_str(),
                                   counts.first, counts.second)};
    }
    return {true, "100 randomized configs: exact 50/50 balance, every block_id exactly twice"};
}

Outcome criterion_5() {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t n = 2; n <= 50; ++n) {
        Episode ep = synthesize_episode(9000 + n, n, 0.0, default_categories()[0], 1);
        for (int w = 1; w <= 20; ++w) {
            for (int stride = 1; stride <= 3; ++stride) {
                WindowSpec spec;
                spec.sizes = {w};
                spec.stride = stride;
                const std::size_t got = extract_pairs(ep, spec).size();

                std::size_t expected = 0;  // independent double-loop enumeration
                for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(stride))
                    for (std::size_t j = i + 1; j < n; ++j)
                        if (j - i == static_cast<std::size_t>(w)) ++expected;

                if (got != expected)
                    return {false, fmt("N=%zu w=%d stride=%d: got %zu, oracle %zu", n, w, stride,
                                       got, expected)};
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {elapsed < 5.0,
            fmt("all N<=50, w in 1..20, stride in 1..3 match enumeration; %.2f s (< 5)", elapsed)};
}

Outcome criterion_6() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(606);

    auto random_params = [&](std::size_t d, std::size_t h, double scale) {
        RewardModelParams p = RewardModelParams::zeros(d, h);
        for (double& v : p.w1) v = scale * (2.0 * unit_interval(rng()) - 1.0);
        for (double& v : p.b1) v = scale * (2.0 * unit_interval(rng()) - 1.0);
        for (double& v : p.w2) v = scale * (2.0 * unit_interval(rng()) - 1.0);
        p.b2 = scale * (2.0 * unit_interval(rng()) - 1.0);
        return p;
    };
    auto random_traj = [&](std::size_t d, std::size_t len) {
        Trajectory t;
        for (std::size_t i = 0; i < len; ++i) {
            FeatureVector f(d);
            for (double& v : f) v = 2.0 * unit_interval(rng()) - 1.0;
            t.observations.push_back(Observation{std::move(f)});
        }
        return t;
    };

    // symmetry
    for (int i = 0; i < 1000; ++i) {
        auto p = random_params(3, 4, 2.0);
        auto t0 = random_traj(3, 1 + rng() % 4);
        auto t1 = random_traj(3, 1 + rng() % 4);
        const double sum = preference_prob(p, t0, t1) + preference_prob(p, t1, t0);
        if (std::fabs(sum - 1.0) >= 1e-12)
            return {false, fmt("symmetry violation: |P+P'-1| = %.3e", std::fabs(sum - 1.0))};
    }

    // ln 2 at zero parameters
    auto zero = RewardModelParams::zeros(4, 8);
    for (int i = 0; i < 50; ++i) {
        std::vector<PreferenceRecord> batch{{random_traj(4, 1 + rng() % 3),
                                             random_traj(4, 1 + rng() % 3),
                                             static_cast<int>(rng() & 1)}};
        if (std::fabs(pref_loss(zero, batch) - std::log(2.0)) >= 1e-12)
            return {false, "loss at zero parameters differs from ln 2"};
    }

    // analytic gradient vs central finite differences
    for (int it = 0; it < 100; ++it) {
        const std::size_t d = 2 + rng() % 4;
        const std::size_t h = 2 + rng() % 6;
        auto p = random_params(d, h, 1.0);
        std::vector<PreferenceRecord> batch;
        const std::size_t nb = 1 + rng() % 4;
        for (std::size_t b = 0; b < nb; ++b)
            batch.push_back(PreferenceRecord{random_traj(d, 1 + rng() % 3),
                                             random_traj(d, 1 + rng() % 3),
                                             static_cast<int>(rng() & 1)});

        const auto analytic = grad_pref_loss(p, batch);
        std::vector<double> flat = p.to_vector();
        std::vector<double> numeric(flat.size());
        const double step = 1e-5;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double saved = flat[i];
            flat[i] = saved + step;
            const double up = pref_loss(RewardModelParams::from_vector(d, h, flat), batch);
            flat[i] = saved - step;
            const double down = pref_loss(RewardModelParams::from_vector(d, h, flat), batch);
            flat[i] = saved;
            numeric[i] = (up - down) / (2.0 * step);
        }
        double diff = 0.0, na = 0.0, nb2 = 0.0;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
            na += analytic[i] * analytic[i];
            nb2 += numeric[i] * numeric[i];
        }
        const double rel = std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb2), 1e-300);
        if (rel >= 1e-5) return {false, fmt("gradient case %d: relative error %.3e", it, rel)};
    }

    const double elapsed = seconds_since(start);
    return {elapsed < 10.0, fmt("symmetry < 1e-12 (1000 cases), ln2 exact, grad rel err < 1e-5 "
                                "(100 cases); %.2f s (< 10)",
                                elapsed)};
}

Outcome criterion_7() {
    const auto start = std::chrono::steady_clock::now();
    RewardTrainCliConfig cfg;  // default config
    auto stream = synthetic_pair_stream(make_synthetic_corpus(cfg.task, 7), cfg.pairs, 7);
    auto oracle = make_oracle();
    TrainConfig tc = cfg.train;
    tc.seed = 7;
    tc.steps = 2000;
    TrainResult result = train(tc, stream, *oracle);

    Episode held_out = synthesize_episode(7 + cfg.task.episodes, cfg.task.frames, cfg.task.noise,
                                          default_categories()[0], cfg.task.feature_dim);
    RewardCurve curve = reward_curve(result.params, held_out, tc.penalty);
    std::vector<double> progress;
    for (const Frame& f : held_out.frames) progress.push_back(*f.progress);
    const double rank_corr = spearman(progress, curve.raw);
    const double elapsed = seconds_since(start);

    const bool pass = result.final_loss < 0.2 && rank_corr >= 0.9 && elapsed < 60.0;
    return {pass, fmt("final loss %.4f (< 0.2), held-out Spearman %.4f (>= 0.9), %.1f s (< 60)",
                      result.final_loss, rank_corr, elapsed)};
}

Outcome criterion_8() {
    std::mt19937_64 rng(808);
    for (int it = 0; it < 1000; ++it) {
        std::vector<Feedback> seq(rng() % 60);
        for (auto& f : seq) f = (rng() & 1) ? Feedback::Negative : Feedback::Positive;

        for (std::size_t threshold = 1; threshold <= 5; ++threshold) {
            for (StreakMode mode : {StreakMode::Consecutive, StreakMode::Cumulative}) {
                // brute-force prefix scanner
                std::optional<std::size_t> expected;
                std::size_t streak = 0;
                for (std::size_t s = 0; s < seq.size() && !expected; ++s) {
                    if (seq[s] == Feedback::Negative)
                        ++streak;
                    else if (mode == StreakMode::Consecutive)
                        streak = 0;
                    if (streak >= threshold) expected = s + 1;
                }

                SafetyMonitor monitor(threshold, mode);
                std::optional<std::size_t> got;
                for (std::size_t s = 0; s < seq.size() && !got; ++s)
                    if (monitor.observe(seq[s], s + 1) == MonitorStatus::Terminated)
                        got = monitor.terminated_at();

                if (got != expected)
                    return {false, fmt("sequence %d, T=%zu, %s mode: monitor %ld vs scanner %ld",
                                       it, threshold,
                                       mode == StreakMode::Consecutive ? "consecutive" : "cumulative",
                                       got ? static_cast<long>(*got) : -1L,
                                       expected ? static_cast<long>(*expected) : -1L)};
            }
        }
    }
    return {true, "1000 random sequences, T in 1..5, both modes match the prefix scanner"};
}

Outcome criterion_9() {
    if (g_binary_path.empty()) return {false, "CLI binary path not supplied (argv[1])"};

    const fs::path dir = fs::temp_directory_path() / "taskprog_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);

    auto run = [&](const std::string& args) {
        const std::string cmd = g_binary_path + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    auto same = [&](const char* a, const char* b, const char* file) {
        return read_file(dir / a / file) == read_file(dir / b / file);
    };

    const std::string gen_args = "gen --seed 13 --episodes 4 --frames 30 ";
    if (!run(gen_args + "--out " + (dir / "gen1").string()) ||
        !run(gen_args + "--out " + (dir / "gen2").string()))
        return {false, "gen invocation failed"};
    if (!same("gen1", "gen2", "samples.jsonl") || !same("gen1", "gen2", "stats.json"))
        return {false, "gen outputs differ across identical runs"};

    const std::string train_args = "reward-train --seed 13 --steps 400 --pairs 600 ";
    if (!run(train_args + "--out " + (dir / "rt1").string()) ||
        !run(train_args + "--out " + (dir / "rt2").string()))
        return {false, "reward-train invocation failed"};
    if (!same("rt1", "rt2", "reward.ckpt") || !same("rt1", "rt2", "train_log.jsonl"))
        return {false, "reward-train outputs differ across identical runs"};

    const std::string eval_args = "eval --samples " + (dir / "gen1" / "samples.jsonl").string() +
                                  " --adapter bias_profile --forward-acc 0.8 --reverse-acc 0.4 "
                                  "--adapter-seed 5 --concurrency 4 ";
    if (!run(eval_args + "--out " + (dir / "ev1").string()) ||
        !run(eval_args + "--out " + (dir / "ev2").string()))
        return {false, "eval invocation failed"};
    if (!same("ev1", "ev2", "report.json") || !same("ev1", "ev2", "report.txt") ||
        !same("ev1", "ev2", "journal.jsonl"))
        return {false, "eval outputs differ across identical runs"};

    fs::remove_all(dir);
    return {true, "gen, reward-train and mock eval byte-identical across reruns"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_binary_path = argv[1];

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"C1 eval-table arithmetic (83.80/90.33 -> 87.07 avg, 6.53 gap)", criterion_1},
        {"C2 bias collapse (always_second: 100/0, gap 100 exact)", criterion_2},
        {"C3 bias profile shape (83.73/23.21 within 1.5 pts at n=10000)", criterion_3},
        {"C4 balance invariant (100 randomized configs)", criterion_4},
        {"C5 pair-count oracle equivalence", criterion_5},
        {"C6 preference numerics (symmetry, ln2, gradient check)", criterion_6},
        {"C7 reward learnability (loss < 0.2, Spearman >= 0.9)", criterion_7},
        {"C8 safety monitor vs brute-force scanner", criterion_8},
        {"C9 determinism of gen / reward-train / eval", criterion_9},
    };

    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome outcome;
        try {
            outcome = fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                    outcome.detail.c_str());
        if (!outcome.pass) ++failures;
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
