#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "taskprog/errors.hpp"
#include "taskprog/stats.hpp"

using namespace taskprog;

namespace {

SampleSet make_set(std::size_t episodes, std::size_t frames, std::vector<int> windows,
                   std::uint64_t seed = 1) {
    std::vector<Episode> corpus;
    for (std::size_t i = 0; i < episodes; ++i)
        corpus.push_back(synthesize_episode(seed * 100 + i, frames, 0.1,
                                            default_categories()[i % default_categories().size()],
                                            2));
    WindowSpec spec;
    spec.sizes = std::move(windows);
    return build_dataset(corpus, spec, KindPolicy{}, true, seed);
}

}  // namespace

TEST_CASE("compute_stats: any generated set has forward fraction 0.5") {
    DatasetStats stats = compute_stats(make_set(3, 20, {5, 6, 7}));
    CHECK(stats.forward_fraction == 0.5);
}

TEST_CASE("compute_stats: N=8, w={5,6} counts both orientations per window") {
    DatasetStats stats = compute_stats(make_set(1, 8, {5, 6}));
    CHECK(stats.total == 10);
    REQUIRE(stats.per_window.size() == 2);
    CHECK(stats.per_window.at(5) == 6);   // (8-5) pairs * 2 orientations
    CHECK(stats.per_window.at(6) == 4);   // (8-6) pairs * 2 orientations
    CHECK(stats.unique_episodes == 1);
}

TEST_CASE("compute_stats: single-category corpus puts every sample in one bucket") {
    SampleSet set = make_set(1, 12, {5});
    DatasetStats stats = compute_stats(set);
    REQUIRE(stats.per_category.size() == 1);
    CHECK(stats.per_category.begin()->second == stats.total);
}

TEST_CASE("compute_stats: empty set is an error") {
    CHECK_THROWS_AS(compute_stats(SampleSet{}), DataError);
}

TEST_CASE("sum consistency holds for arbitrary generated sets") {
    std::mt19937_64 rng(77);
    for (int it = 0; it < 20; ++it) {
        const std::size_t episodes = 1 + rng() % 4;
        const std::size_t frames = 8 + rng() % 30;
        std::vector<int> windows;
        for (int w = 2 + static_cast<int>(rng() % 3); w <= 7; w += 2) windows.push_back(w);
        DatasetStats stats = compute_stats(make_set(episodes, frames, windows, rng()));

        std::size_t window_sum = 0, category_sum = 0;
        for (const auto& [w, n] : stats.per_window) window_sum += n;
        for (const auto& [c, n] : stats.per_category) category_sum += n;
        CHECK(window_sum == stats.total);
        CHECK(category_sum == stats.total);
    }
}

TEST_CASE("json report round-trips to an equal DatasetStats") {
    DatasetStats stats = compute_stats(make_set(2, 15, {5, 9}));
    const std::string json = render_report(stats, ReportFormat::Json);
    DatasetStats reloaded = stats_from_json(json);
    CHECK(reloaded.total == stats.total);
    CHECK(reloaded.forward_fraction == stats.forward_fraction);
    CHECK(reloaded.unique_episodes == stats.unique_episodes);
    CHECK(reloaded.per_window == stats.per_window);
    CHECK(reloaded.per_category == stats.per_category);
}

TEST_CASE("table report lists windows ascending and can aggregate") {
    DatasetStats stats = compute_stats(make_set(1, 20, {5, 11, 13, 16}));
    const std::string table = render_report(stats, ReportFormat::Table);
    const auto p5 = table.find("\n  5 ");
    const auto p11 = table.find("\n  11");
    const auto p16 = table.find("\n  16");
    REQUIRE(p5 != std::string::npos);
    REQUIRE(p11 != std::string::npos);
    REQUIRE(p16 != std::string::npos);
    CHECK(p5 < p11);
    CHECK(p11 < p16);

    const std::string aggregated = render_report(stats, ReportFormat::Table, 12);
    CHECK(aggregated.find(">=12") != std::string::npos);
    CHECK(aggregated.find("\n  13") == std::string::npos);
    // aggregate bucket carries the summed counts
    const std::size_t expected = stats.per_window.at(13) + stats.per_window.at(16);
    CHECK(aggregated.find(">=12       " + std::to_string(expected)) != std::string::npos);
}

TEST_CASE("empty category map renders 'none'") {
    DatasetStats stats;
    stats.total = 4;
    stats.per_window[5] = 4;
    const std::string table = render_report(stats, ReportFormat::Table);
    CHECK(table.find("(none)") != std::string::npos);
}
