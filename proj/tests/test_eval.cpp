#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "taskprog/errors.hpp"
#include "taskprog/eval.hpp"
#include "taskprog/util.hpp"

using namespace taskprog;

namespace {

SampleSet small_set(std::size_t episodes = 1, std::size_t frames = 8, std::vector<int> windows = {5}) {
    std::vector<Episode> corpus;
    for (std::size_t i = 0; i < episodes; ++i)
        corpus.push_back(synthesize_episode(10 + i, frames, 0.2, TaskCategory("Other"), 3));
    WindowSpec spec;
    spec.sizes = std::move(windows);
    return build_dataset(corpus, spec, KindPolicy{}, true, 1);
}

// Returns Unparsable on every third query; otherwise truthful.
class FlakyParseAdapter final : public Adapter {
public:
    std::string name() const override { return "flaky"; }
    Choice query(const AdapterQuery& q) const override {
        if (query_fingerprint(q) % 3 == 0) return Choice::Unparsable;
        const auto& a = std::get<FeatureVector>(q.image_a);
        const auto& b = std::get<FeatureVector>(q.image_b);
        return a[0] > b[0] ? Choice::First : Choice::Second;
    }
};

class DeadAdapter final : public Adapter {
public:
    std::string name() const override { return "dead"; }
    Choice query(const AdapterQuery&) const override {
        throw TransportError("endpoint unreachable");
    }
};

}  // namespace

TEST_CASE("always_second on a balanced 6-sample set: forward 100, reverse 0, gap 100") {
    SampleSet set = small_set();  // 3 blocks -> 6 samples
    REQUIRE(set.samples.size() == 6);
    auto adapter = make_always_second();
    EvalResult result = evaluate(*adapter, set, "prompt", 1);

    CHECK(result.report.overall_forward == 1.0);
    CHECK(result.report.overall_reverse == 0.0);
    CHECK(result.report.overall_average == 0.5);
    CHECK(result.report.gap == 100.0);
    CHECK(result.report.gap_signed == 100.0);
    CHECK(result.report.sample_count == 6);
}

TEST_CASE("oracle adapter is perfect: 100/100, gap 0") {
    SampleSet set = small_set(2, 12, {5, 6});
    EvalResult result = evaluate(*make_oracle(), set, "prompt", 1);
    CHECK(result.report.overall_forward == 1.0);
    CHECK(result.report.overall_reverse == 1.0);
    CHECK(result.report.gap == 0.0);
    for (const auto& [w, s] : result.report.per_window) {
        CHECK(s.forward_acc() == 1.0);
        CHECK(s.reverse_acc() == 1.0);
    }
}

TEST_CASE("always_first and always_second accuracies sum to 100% on every stratum") {
    SampleSet set = small_set(2, 14, {5, 7, 9});
    EvalResult first = evaluate(*make_always_first(), set, "p", 1);
    EvalResult second = evaluate(*make_always_second(), set, "p", 1);
    for (const auto& [w, s1] : first.report.per_window) {
        const auto& s2 = second.report.per_window.at(w);
        CHECK(s1.forward_acc() + s2.forward_acc() == 1.0);
        CHECK(s1.reverse_acc() + s2.reverse_acc() == 1.0);
        CHECK(s1.average() + s2.average() == 1.0);
    }
    CHECK(first.report.overall_average + second.report.overall_average == 1.0);
}

TEST_CASE("overall average is the unweighted mean of forward and reverse on balanced sets") {
    SampleSet set = small_set(3, 20, {5, 8});
    EvalResult result = evaluate(*make_noisy_oracle(0.3, 4), set, "p", 1);
    const EvalReport& r = result.report;
    CHECK(r.overall_average == 0.5 * (r.overall_forward + r.overall_reverse));
    for (const auto& [w, s] : r.per_window)
        CHECK(s.average() == 0.5 * (s.forward_acc() + s.reverse_acc()));
}

TEST_CASE("evaluation is reproducible and concurrency-invariant") {
    SampleSet set = small_set(2, 30, {5, 6, 7, 8});
    auto adapter = make_bias_profile(BiasProfile{0.8, 0.4, 11});

    EvalResult a = evaluate(*adapter, set, "p", 1);
    EvalResult b = evaluate(*adapter, set, "p", 1);
    EvalResult c = evaluate(*adapter, set, "p", 4);

    std::ostringstream ja, jb, jc;
    write_journal(a.journal, ja);
    write_journal(b.journal, jb);
    write_journal(c.journal, jc);
    CHECK(ja.str() == jb.str());
    CHECK(ja.str() == jc.str());
    CHECK(render_eval_json(a.report) == render_eval_json(c.report));
}

TEST_CASE("report exposes sample-weighted and window-averaged overall accuracies") {
    // Windows 2 and 7 have very different stratum sizes on a 10-frame episode
    // (8 pairs vs 3), so the two averaging conventions disagree under an
    // accuracy pattern that varies by window.
    SampleSet set = small_set(1, 10, {2, 7});
    FlakyParseAdapter adapter;
    EvalResult result = evaluate(adapter, set, "p", 1);
    const EvalReport& r = result.report;

    double expected_window_avg = 0.0;
    for (const auto& [w, s] : r.per_window) expected_window_avg += s.forward_acc();
    expected_window_avg /= static_cast<double>(r.per_window.size());
    CHECK(r.window_avg_forward == expected_window_avg);

    const std::string json = render_eval_json(r);
    CHECK(json.find("window_avg_forward") != std::string::npos);
    CHECK(json.find("window_avg_reverse") != std::string::npos);
    CHECK(json.find("gap_signed") != std::string::npos);
}

TEST_CASE("journal recompute reproduces the report") {
    SampleSet set = small_set(2, 16, {5, 6});
    EvalResult result = evaluate(*make_noisy_oracle(0.25, 3), set, "p", 1);
    std::ostringstream out;
    write_journal(result.journal, out);
    std::istringstream in(out.str());
    EvalReport recomputed = recompute_report(in);
    CHECK(render_eval_json(recomputed) == render_eval_json(result.report));
}

TEST_CASE("unparsable answers count as incorrect and are reported separately") {
    SampleSet set = small_set(1, 20, {5});
    FlakyParseAdapter adapter;
    EvalResult result = evaluate(adapter, set, "p", 1);
    CHECK(result.report.parse_failures > 0);
    CHECK(result.report.parse_failure_rate ==
          static_cast<double>(result.report.parse_failures) /
              static_cast<double>(result.report.sample_count));
    // Every unparsable sample is scored incorrect.
    for (const JournalEntry& e : result.journal)
        if (e.choice == Choice::Unparsable) CHECK(!e.correct);
}

TEST_CASE("all-transport-failure raises EvalError with a partial report attached") {
    SampleSet set = small_set();
    DeadAdapter dead;
    try {
        evaluate(dead, set, "p", 2);
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        CHECK(e.partial.sample_count == set.samples.size());
        CHECK(e.partial.transport_failures == set.samples.size());
    }
}

TEST_CASE("stratify: single window report has one row plus overall") {
    SampleSet set = small_set();
    EvalResult result = evaluate(*make_oracle(), set, "p", 1);
    const std::string table = stratify(result.report);
    CHECK(table.find("\n5 ") != std::string::npos);
    CHECK(table.find("overall") != std::string::npos);
    CHECK(table.find(">=12") == std::string::npos);
}

TEST_CASE("stratify: windows 5..16 fold into rows 5..11 plus a >=12 aggregate") {
    SampleSet set = small_set(1, 40, {5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
    EvalResult result = evaluate(*make_oracle(), set, "p", 1);
    const std::string table = stratify(result.report, 12);
    for (int w = 5; w <= 11; ++w)
        CHECK(table.find("\n" + std::to_string(w) + " ") != std::string::npos);
    CHECK(table.find(">=12") != std::string::npos);
    for (int w = 12; w <= 16; ++w)
        CHECK(table.find("\n" + std::to_string(w) + " ") == std::string::npos);
}

TEST_CASE("aggregate row equals the count-weighted mean of windows >= 12") {
    SampleSet set = small_set(1, 40, {10, 12, 14});
    // Flaky adapter gives uneven per-window accuracies.
    FlakyParseAdapter adapter;
    EvalResult result = evaluate(adapter, set, "p", 1);

    std::size_t fn = 0, fc = 0, rn = 0, rc = 0;
    for (const auto& [w, s] : result.report.per_window) {
        if (w < 12) continue;
        fn += s.forward_n;
        fc += s.forward_correct;
        rn += s.reverse_n;
        rc += s.reverse_correct;
    }
    const double expected_fwd = static_cast<double>(fc) / static_cast<double>(fn);
    const double expected_rev = static_cast<double>(rc) / static_cast<double>(rn);

    const std::string table = stratify(result.report, 12);
    char expected_row[160];
    std::snprintf(expected_row, sizeof(expected_row), "%-10s %12.2f %12.2f", ">=12",
                  100.0 * expected_fwd, 100.0 * expected_rev);
    CHECK(table.find(expected_row) != std::string::npos);
}

TEST_CASE("evaluate validates its inputs") {
    SampleSet empty;
    CHECK_THROWS_AS(evaluate(*make_oracle(), empty, "p", 1), DataError);
    SampleSet set = small_set();
    CHECK_THROWS_AS(evaluate(*make_oracle(), set, "p", 0), UsageError);
}
