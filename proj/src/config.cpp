#include <set>

#include <json.hpp>

#include "taskprog/cli.hpp"
#include "taskprog/errors.hpp"
#include "taskprog/util.hpp"

namespace taskprog {

using ordered_json = nlohmann::ordered_json;

namespace {

void reject_unknown(const ordered_json& j, const std::set<std::string>& known,
                    const std::string& where) {
    if (!j.is_object()) throw UsageError("config: " + where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw UsageError("config: unknown key '" + where + "." + key + "'");
}

WindowSpec windows_from_json(const ordered_json& j, int stride) {
    if (j.is_string()) return WindowSpec::parse(j.get<std::string>(), stride);
    if (j.is_array()) {
        WindowSpec spec;
        spec.stride = stride;
        for (const auto& v : j) {
            if (!v.is_number_integer()) throw UsageError("config: window sizes must be integers");
            spec.sizes.push_back(v.get<int>());
        }
        validate_spec(spec);
        return spec;
    }
    throw UsageError("config: windows must be a string spec or an integer array");
}

SyntheticSpec synthetic_from_json(const ordered_json& j, const std::string& where,
                                  const SyntheticSpec& defaults) {
    reject_unknown(j, {"episodes", "frames", "noise", "feature_dim", "categories"}, where);
    SyntheticSpec spec = defaults;
    if (j.contains("episodes")) spec.episodes = j["episodes"].get<std::size_t>();
    if (j.contains("frames")) spec.frames = j["frames"].get<std::size_t>();
    if (j.contains("noise")) spec.noise = j["noise"].get<double>();
    if (j.contains("feature_dim")) spec.feature_dim = j["feature_dim"].get<std::size_t>();
    if (j.contains("categories")) {
        spec.categories.clear();
        for (const auto& c : j["categories"]) spec.categories.push_back(c.get<std::string>());
    }
    if (spec.episodes < 1) throw UsageError("config: " + where + ".episodes must be >= 1");
    if (spec.frames < 2) throw UsageError("config: " + where + ".frames must be >= 2");
    if (spec.noise < 0.0) throw UsageError("config: " + where + ".noise must be >= 0");
    if (spec.feature_dim < 1) throw UsageError("config: " + where + ".feature_dim must be >= 1");
    for (const auto& c : spec.categories)
        if (c.empty()) throw UsageError("config: " + where + ".categories entries must be non-empty");
    return spec;
}

AdapterConfig adapter_from_json(const ordered_json& j, const std::string& where) {
    reject_unknown(j,
                   {"kind", "epsilon", "forward_acc", "reverse_acc", "adapter_seed", "endpoint",
                    "timeout_ms", "retries", "max_in_flight"},
                   where);
    AdapterConfig cfg;
    if (j.contains("kind")) cfg.kind = j["kind"].get<std::string>();
    static const std::set<std::string> kinds = {"oracle",       "always_second", "always_first",
                                                "noisy_oracle", "bias_profile",  "http"};
    if (!kinds.count(cfg.kind)) throw UsageError("config: " + where + ".kind '" + cfg.kind + "' unknown");
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("forward_acc")) cfg.profile.forward_acc = j["forward_acc"].get<double>();
    if (j.contains("reverse_acc")) cfg.profile.reverse_acc = j["reverse_acc"].get<double>();
    if (j.contains("adapter_seed")) {
        cfg.adapter_seed = j["adapter_seed"].get<std::uint64_t>();
        cfg.profile.seed = cfg.adapter_seed;
    }
    if (j.contains("endpoint")) cfg.http.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("timeout_ms")) cfg.http.timeout_ms = j["timeout_ms"].get<int>();
    if (j.contains("retries")) cfg.http.retries = j["retries"].get<int>();
    if (j.contains("max_in_flight")) cfg.http.max_in_flight = j["max_in_flight"].get<int>();
    if (cfg.kind == "http" && cfg.http.endpoint.empty())
        throw UsageError("config: " + where + ": http adapter needs an endpoint");
    if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0)
        throw UsageError("config: " + where + ".epsilon must lie in [0,1]");
    return cfg;
}

}  // namespace

Config parse_config(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: malformed JSON: ") + e.what());
    }
    reject_unknown(j, {"seed", "out", "gen", "eval", "reward_train", "rollout"}, "<root>");

    Config cfg;
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();

    if (j.contains("gen")) {
        const auto& g = j["gen"];
        reject_unknown(g,
                       {"manifest", "synthetic", "downsample_factor", "downsample_phase", "windows",
                        "stride", "cot_fraction", "interleave"},
                       "gen");
        if (g.contains("manifest") && !g["manifest"].is_null())
            cfg.gen.manifest = g["manifest"].get<std::string>();
        if (g.contains("synthetic"))
            cfg.gen.synthetic = synthetic_from_json(g["synthetic"], "gen.synthetic", cfg.gen.synthetic);
        if (g.contains("downsample_factor")) cfg.gen.downsample_factor = g["downsample_factor"].get<int>();
        if (g.contains("downsample_phase")) cfg.gen.downsample_phase = g["downsample_phase"].get<int>();
        const int stride = g.contains("stride") ? g["stride"].get<int>() : cfg.gen.windows.stride;
        if (g.contains("windows"))
            cfg.gen.windows = windows_from_json(g["windows"], stride);
        else
            cfg.gen.windows.stride = stride;
        validate_spec(cfg.gen.windows);
        if (g.contains("cot_fraction")) cfg.gen.cot_fraction = g["cot_fraction"].get<double>();
        if (g.contains("interleave")) cfg.gen.interleave = g["interleave"].get<bool>();
        if (cfg.gen.downsample_factor < 1) throw UsageError("config: gen.downsample_factor must be >= 1");
        if (cfg.gen.downsample_phase < 0 || cfg.gen.downsample_phase >= cfg.gen.downsample_factor)
            throw UsageError("config: gen.downsample_phase must satisfy 0 <= phase < factor");
        if (cfg.gen.cot_fraction < 0.0 || cfg.gen.cot_fraction > 1.0)
            throw UsageError("config: gen.cot_fraction must lie in [0,1]");
    }

    if (j.contains("eval")) {
        const auto& e = j["eval"];
        reject_unknown(e, {"samples", "adapter", "prompt", "concurrency", "aggregate_from"}, "eval");
        if (e.contains("samples")) cfg.eval.samples = e["samples"].get<std::string>();
        if (e.contains("adapter")) cfg.eval.adapter = adapter_from_json(e["adapter"], "eval.adapter");
        if (e.contains("prompt")) cfg.eval.prompt = e["prompt"].get<std::string>();
        if (e.contains("concurrency")) cfg.eval.concurrency = e["concurrency"].get<int>();
        if (e.contains("aggregate_from")) {
            if (e["aggregate_from"].is_null())
                cfg.eval.aggregate_from.reset();
            else
                cfg.eval.aggregate_from = e["aggregate_from"].get<int>();
        }
        if (cfg.eval.concurrency < 1) throw UsageError("config: eval.concurrency must be >= 1");
    }

    if (j.contains("reward_train")) {
        const auto& r = j["reward_train"];
        reject_unknown(r,
                       {"task", "pairs", "labeler", "learning_rate", "steps", "batch_size",
                        "label_period", "hidden_dim", "penalty", "buffer_capacity", "prompt"},
                       "reward_train");
        if (r.contains("task"))
            cfg.reward.task = synthetic_from_json(r["task"], "reward_train.task", cfg.reward.task);
        if (r.contains("pairs")) cfg.reward.pairs = r["pairs"].get<std::size_t>();
        if (r.contains("labeler")) cfg.reward.labeler = adapter_from_json(r["labeler"], "reward_train.labeler");
        if (r.contains("learning_rate")) cfg.reward.train.learning_rate = r["learning_rate"].get<double>();
        if (r.contains("steps")) cfg.reward.train.steps = r["steps"].get<std::size_t>();
        if (r.contains("batch_size")) cfg.reward.train.batch_size = r["batch_size"].get<std::size_t>();
        if (r.contains("label_period")) cfg.reward.train.label_period = r["label_period"].get<std::size_t>();
        if (r.contains("hidden_dim")) cfg.reward.train.hidden_dim = r["hidden_dim"].get<std::size_t>();
        if (r.contains("penalty")) cfg.reward.train.penalty = r["penalty"].get<double>();
        if (r.contains("buffer_capacity") && !r["buffer_capacity"].is_null())
            cfg.reward.train.buffer_capacity = r["buffer_capacity"].get<std::size_t>();
        if (r.contains("prompt")) cfg.reward.train.prompt = r["prompt"].get<std::string>();
        if (cfg.reward.pairs < 1) throw UsageError("config: reward_train.pairs must be >= 1");
        if (cfg.reward.train.learning_rate <= 0.0)
            throw UsageError("config: reward_train.learning_rate must be positive");
        if (cfg.reward.train.penalty < 0.0)
            throw UsageError("config: reward_train.penalty must be >= 0");
    }

    if (j.contains("rollout")) {
        const auto& r = j["rollout"];
        reject_unknown(r,
                       {"threshold", "mode", "script", "checkpoint", "episode_frames",
                        "episode_noise", "feature_dim"},
                       "rollout");
        if (r.contains("threshold")) cfg.rollout.threshold = r["threshold"].get<std::size_t>();
        if (r.contains("mode")) {
            const auto mode = r["mode"].get<std::string>();
            if (mode == "consecutive")
                cfg.rollout.mode = StreakMode::Consecutive;
            else if (mode == "cumulative")
                cfg.rollout.mode = StreakMode::Cumulative;
            else
                throw UsageError("config: rollout.mode must be 'consecutive' or 'cumulative'");
        }
        if (r.contains("script")) cfg.rollout.script = r["script"].get<std::string>();
        if (r.contains("checkpoint") && !r["checkpoint"].is_null())
            cfg.rollout.checkpoint = r["checkpoint"].get<std::string>();
        if (r.contains("episode_frames")) cfg.rollout.episode_frames = r["episode_frames"].get<std::size_t>();
        if (r.contains("episode_noise")) cfg.rollout.episode_noise = r["episode_noise"].get<double>();
        if (r.contains("feature_dim")) cfg.rollout.feature_dim = r["feature_dim"].get<std::size_t>();
        if (cfg.rollout.threshold < 1) throw UsageError("config: rollout.threshold must be >= 1");
        if (cfg.rollout.episode_frames < 2)
            throw UsageError("config: rollout.episode_frames must be >= 2");
    }

    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return parse_config(text);
}

std::unique_ptr<Adapter> make_adapter(const AdapterConfig& config) {
    if (config.kind == "oracle") return make_oracle();
    if (config.kind == "always_second") return make_always_second();
    if (config.kind == "always_first") return make_always_first();
    if (config.kind == "noisy_oracle") return make_noisy_oracle(config.epsilon, config.adapter_seed);
    if (config.kind == "bias_profile") return make_bias_profile(config.profile);
    if (config.kind == "http") return make_http_adapter(config.http);
    throw UsageError("unknown adapter kind '" + config.kind + "'");
}

}  // namespace taskprog
