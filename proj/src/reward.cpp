#include "taskprog/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "taskprog/errors.hpp"
#include "taskprog/util.hpp"

namespace taskprog {

void PreferenceBuffer::append(PreferenceRecord record) {
    records_.push_back(std::move(record));
    if (capacity_ && records_.size() > *capacity_) records_.pop_front();
}

RewardModelParams RewardModelParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    if (input_dim < 1 || hidden_dim < 1)
        throw UsageError("reward model: input_dim and hidden_dim must be >= 1");
    RewardModelParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w1.assign(input_dim * hidden_dim, 0.0);
    p.b1.assign(hidden_dim, 0.0);
    p.w2.assign(hidden_dim, 0.0);
    p.b2 = 0.0;
    return p;
}

RewardModelParams RewardModelParams::random_init(std::size_t input_dim, std::size_t hidden_dim,
                                                 std::uint64_t seed) {
    RewardModelParams p = zeros(input_dim, hidden_dim);
    std::mt19937_64 rng(seed);
    const double scale = 0.5 / std::sqrt(static_cast<double>(input_dim));
    for (double& v : p.w1) v = scale * (2.0 * unit_interval(rng()) - 1.0);
    for (double& v : p.w2) v = scale * (2.0 * unit_interval(rng()) - 1.0);
    return p;
}

std::vector<double> RewardModelParams::to_vector() const {
    std::vector<double> flat;
    flat.reserve(size());
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.push_back(b2);
    return flat;
}

RewardModelParams RewardModelParams::from_vector(std::size_t input_dim, std::size_t hidden_dim,
                                                 std::span<const double> flat) {
    RewardModelParams p = zeros(input_dim, hidden_dim);
    if (flat.size() != p.size()) throw UsageError("reward model: flat vector size mismatch");
    auto it = flat.begin();
    std::copy(it, it + static_cast<std::ptrdiff_t>(p.w1.size()), p.w1.begin());
    it += static_cast<std::ptrdiff_t>(p.w1.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(p.b1.size()), p.b1.begin());
    it += static_cast<std::ptrdiff_t>(p.b1.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(p.w2.size()), p.w2.begin());
    it += static_cast<std::ptrdiff_t>(p.w2.size());
    p.b2 = *it;
    return p;
}

double reward_value(const RewardModelParams& params, std::span<const double> features) {
    if (features.size() != params.input_dim)
        throw UsageError("reward model: feature dimension mismatch (" +
                         std::to_string(features.size()) + " vs " +
                         std::to_string(params.input_dim) + ")");
    double out = params.b2;
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
        double pre = params.b1[j];
        const double* row = params.w1.data() + j * params.input_dim;
        for (std::size_t k = 0; k < params.input_dim; ++k) pre += row[k] * features[k];
        out += params.w2[j] * std::tanh(pre);
    }
    return out;
}

double trajectory_score(const RewardModelParams& params, const Trajectory& tau) {
    if (tau.observations.empty()) throw UsageError("trajectory must be non-empty");
    double score = 0.0;
    for (const Observation& o : tau.observations) score += reward_value(params, o.features);
    return score;
}

namespace {

// Logistic of the score difference; never overflows.
double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double preference_prob(const RewardModelParams& params, const Trajectory& tau0,
                       const Trajectory& tau1) {
    const double s0 = trajectory_score(params, tau0);
    const double s1 = trajectory_score(params, tau1);
    if (!std::isfinite(s0) || !std::isfinite(s1))
        throw DataError("preference_prob: non-finite trajectory score");
    return stable_sigmoid(s0 - s1);
}

double pref_loss(const RewardModelParams& params, std::span<const PreferenceRecord> batch) {
    if (batch.empty()) throw UsageError("pref_loss: empty batch");
    double total = 0.0;
    for (const PreferenceRecord& rec : batch) {
        if (rec.y != 0 && rec.y != 1) throw UsageError("pref_loss: y must be 0 or 1");
        const double s0 = trajectory_score(params, rec.tau0);
        const double s1 = trajectory_score(params, rec.tau1);
        if (!std::isfinite(s0) || !std::isfinite(s1))
            throw DataError("pref_loss: non-finite trajectory score");
        const double z = s0 - s1;
        // P(tau1 > tau0) = sigmoid(-z); computing both sides directly keeps
        // the complement exact.
        const double p = rec.y == 1 ? stable_sigmoid(z) : stable_sigmoid(-z);
        total += -std::log(std::clamp(p, kProbClamp, 1.0 - kProbClamp));
    }
    return total / static_cast<double>(batch.size());
}

namespace {

// Adds scale * d r(o) / d psi into the flat gradient (layout: w1, b1, w2, b2).
void accumulate_reward_grad(const RewardModelParams& params, std::span<const double> features,
                            double scale, std::vector<double>& grad) {
    const std::size_t d = params.input_dim;
    const std::size_t h = params.hidden_dim;
    if (features.size() != d) throw UsageError("reward model: feature dimension mismatch");

    double* gw1 = grad.data();
    double* gb1 = grad.data() + h * d;
    double* gw2 = grad.data() + h * d + h;
    double* gb2 = grad.data() + h * d + 2 * h;

    for (std::size_t j = 0; j < h; ++j) {
        double pre = params.b1[j];
        const double* row = params.w1.data() + j * d;
        for (std::size_t k = 0; k < d; ++k) pre += row[k] * features[k];
        const double t = std::tanh(pre);
        gw2[j] += scale * t;
        const double back = scale * params.w2[j] * (1.0 - t * t);
        gb1[j] += back;
        double* grow = gw1 + j * d;
        for (std::size_t k = 0; k < d; ++k) grow[k] += back * features[k];
    }
    *gb2 += scale;
}

}  // namespace

std::vector<double> grad_pref_loss(const RewardModelParams& params,
                                   std::span<const PreferenceRecord> batch) {
    if (batch.empty()) throw UsageError("grad_pref_loss: empty batch");
    std::vector<double> grad(params.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (const PreferenceRecord& rec : batch) {
        const double s0 = trajectory_score(params, rec.tau0);
        const double s1 = trajectory_score(params, rec.tau1);
        if (!std::isfinite(s0) || !std::isfinite(s1))
            throw DataError("grad_pref_loss: non-finite trajectory score");
        // d/dz of -[y log sigmoid(z) + (1-y) log sigmoid(-z)] is sigmoid(z) - y.
        const double coeff = inv_n * (stable_sigmoid(s0 - s1) - static_cast<double>(rec.y));
        for (const Observation& o : rec.tau0.observations)
            accumulate_reward_grad(params, o.features, coeff, grad);
        for (const Observation& o : rec.tau1.observations)
            accumulate_reward_grad(params, o.features, -coeff, grad);
    }
    return grad;
}

LabelingResult label_with_adapter(const std::vector<std::pair<Observation, Observation>>& pairs,
                                  const Adapter& adapter, const LabelContext& context) {
    LabelingResult result;
    result.records.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        AdapterQuery q;
        q.image_a = pairs[i].first.features;
        q.image_b = pairs[i].second.features;
        q.prompt = context.prompt;
        q.id = context.id_prefix + ":" + std::to_string(i);

        Choice choice;
        try {
            choice = adapter.query(q);
        } catch (const TransportError& e) {
            throw LabelingError(std::string("label_with_adapter: ") + e.what(), std::move(result));
        }
        if (choice == Choice::Unparsable) {
            ++result.skipped;
            continue;
        }
        PreferenceRecord rec;
        rec.tau0 = Trajectory{{pairs[i].first}};
        rec.tau1 = Trajectory{{pairs[i].second}};
        rec.y = choice == Choice::First ? 1 : 0;
        result.records.push_back(std::move(rec));
    }
    return result;
}

namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

TrainResult train(const TrainConfig& config, const PairStream& stream, const Adapter& adapter) {
    if (config.learning_rate <= 0.0) throw UsageError("train: learning_rate must be positive");
    if (config.steps == 0) throw UsageError("train: steps must be positive");
    if (config.batch_size == 0) throw UsageError("train: batch_size must be positive");
    if (config.label_period == 0) throw UsageError("train: label_period must be positive");
    if (config.hidden_dim == 0) throw UsageError("train: hidden_dim must be positive");

    TrainResult result;
    std::mt19937_64 rng(config.seed);
    PreferenceBuffer buffer(config.buffer_capacity);
    std::vector<std::pair<Observation, Observation>> replay;
    bool stream_done = false;
    bool initialized = false;
    std::vector<double> recent_losses;

    for (std::size_t step = 1; step <= config.steps; ++step) {
        if (!stream_done) {
            if (auto pair = stream())
                replay.push_back(std::move(*pair));
            else
                stream_done = true;
        }

        // Periodic labeling round, plus a final flush once the stream is dry.
        if (!replay.empty() && (step % config.label_period == 0 || stream_done)) {
            LabelContext ctx;
            ctx.prompt = config.prompt;
            ctx.id_prefix = "train:" + std::to_string(result.labeling_rounds);
            LabelingResult labeled = label_with_adapter(replay, adapter, ctx);
            for (auto& rec : labeled.records) buffer.append(std::move(rec));
            result.labeled += labeled.records.size();
            result.skipped += labeled.skipped;
            result.labeling_rounds += 1;
            replay.clear();
        }

        std::optional<double> loss;
        if (!buffer.empty()) {
            if (!initialized) {
                const std::size_t d = buffer[0].tau0.observations.front().features.size();
                result.params = RewardModelParams::random_init(d, config.hidden_dim,
                                                               splitmix64(config.seed ^ 0x5eedULL));
                initialized = true;
            }
            std::vector<PreferenceRecord> batch;
            batch.reserve(config.batch_size);
            for (std::size_t b = 0; b < config.batch_size; ++b)
                batch.push_back(buffer[rng() % buffer.size()]);

            const double batch_loss = pref_loss(result.params, batch);
            if (!std::isfinite(batch_loss)) throw DataError("train: loss diverged (non-finite)");
            const std::vector<double> grad = grad_pref_loss(result.params, batch);

            std::vector<double> flat = result.params.to_vector();
            for (std::size_t i = 0; i < flat.size(); ++i)
                flat[i] -= config.learning_rate * grad[i];
            result.params = RewardModelParams::from_vector(result.params.input_dim,
                                                           result.params.hidden_dim, flat);
            loss = batch_loss;
            recent_losses.push_back(batch_loss);
        }
        result.log.push_back(TrainLogEntry{step, loss, buffer.size()});
    }

    if (!initialized)
        throw DataError("train: no preference records were ever labelled; nothing to fit");

    const std::size_t tail = std::min<std::size_t>(50, recent_losses.size());
    result.final_loss = median_of(std::vector<double>(recent_losses.end() - static_cast<std::ptrdiff_t>(tail),
                                                      recent_losses.end()));
    return result;
}

void write_train_log(const std::vector<TrainLogEntry>& log, std::ostream& out) {
    for (const TrainLogEntry& e : log) {
        nlohmann::ordered_json j;
        j["step"] = e.step;
        if (e.loss)
            j["loss"] = *e.loss;
        else
            j["loss"] = nullptr;
        j["buffer_size"] = e.buffer_size;
        out << j.dump() << '\n';
    }
}

RewardCurve reward_curve(const RewardModelParams& params, const Episode& episode, double penalty) {
    if (penalty < 0.0) throw UsageError("reward_curve: penalty must be >= 0");
    if (episode.frames.empty()) throw DataError("reward_curve: episode has no frames");

    RewardCurve curve;
    curve.raw.reserve(episode.frames.size());
    for (const Frame& f : episode.frames) {
        const auto* features = std::get_if<FeatureVector>(&f.payload);
        if (!features)
            throw DataError("reward_curve: frame " + std::to_string(f.index) +
                            " carries no feature payload");
        curve.raw.push_back(reward_value(params, *features));
    }

    curve.penalized = curve.raw;
    for (std::size_t t = 1; t < curve.raw.size(); ++t)
        if (curve.raw[t] < curve.raw[t - 1]) curve.penalized[t] -= penalty;
    return curve;
}

namespace {

constexpr std::string_view kCheckpointMagic = "taskprog-reward-checkpoint v1";

std::string hexfloat(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

std::vector<double> parse_values(std::istringstream& line, std::size_t expected,
                                 const std::string& tag) {
    std::vector<double> values;
    values.reserve(expected);
    std::string token;
    while (line >> token) {
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size())
            throw DataError("checkpoint: bad value in field '" + tag + "'");
        values.push_back(v);
    }
    if (values.size() != expected)
        throw DataError("checkpoint: field '" + tag + "' has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(expected));
    return values;
}

}  // namespace

void save_checkpoint(const RewardModelParams& params, std::ostream& out) {
    out << kCheckpointMagic << '\n';
    out << "input_dim " << params.input_dim << '\n';
    out << "hidden_dim " << params.hidden_dim << '\n';
    out << "w1";
    for (double v : params.w1) out << ' ' << hexfloat(v);
    out << "\nb1";
    for (double v : params.b1) out << ' ' << hexfloat(v);
    out << "\nw2";
    for (double v : params.w2) out << ' ' << hexfloat(v);
    out << "\nb2 " << hexfloat(params.b2) << '\n';
}

void save_checkpoint(const RewardModelParams& params, const std::filesystem::path& path) {
    std::ostringstream buf;
    save_checkpoint(params, buf);
    write_file_atomic(path, buf.str());
}

RewardModelParams load_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic)
        throw DataError("checkpoint: bad or missing header");

    auto read_tagged = [&](const std::string& tag) -> std::istringstream {
        if (!std::getline(in, line)) throw DataError("checkpoint: missing field '" + tag + "'");
        std::istringstream s(line);
        std::string got;
        s >> got;
        if (got != tag) throw DataError("checkpoint: expected field '" + tag + "', got '" + got + "'");
        return s;
    };

    auto dims = read_tagged("input_dim");
    std::size_t input_dim = 0;
    if (!(dims >> input_dim) || input_dim < 1) throw DataError("checkpoint: bad input_dim");
    dims = read_tagged("hidden_dim");
    std::size_t hidden_dim = 0;
    if (!(dims >> hidden_dim) || hidden_dim < 1) throw DataError("checkpoint: bad hidden_dim");

    RewardModelParams p = RewardModelParams::zeros(input_dim, hidden_dim);
    auto w1_line = read_tagged("w1");
    p.w1 = parse_values(w1_line, input_dim * hidden_dim, "w1");
    auto b1_line = read_tagged("b1");
    p.b1 = parse_values(b1_line, hidden_dim, "b1");
    auto w2_line = read_tagged("w2");
    p.w2 = parse_values(w2_line, hidden_dim, "w2");
    auto b2_line = read_tagged("b2");
    p.b2 = parse_values(b2_line, 1, "b2")[0];

    for (double v : p.to_vector())
        if (!std::isfinite(v)) throw DataError("checkpoint: non-finite parameter");
    return p;
}

RewardModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint not found: " + path.string());
    return load_checkpoint(in);
}

}  // namespace taskprog
