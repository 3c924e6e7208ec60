#include "wavlink/errors.hpp"
#include "wavlink/io.hpp"
#include "wavlink/sweep.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace wavlink;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.model.feat_bins = 4;
    cfg.model.d_model = 8;
    cfg.model.audio_layers = 1;
    cfg.model.text_layers = 1;
    cfg.model.heads = 2;
    cfg.model.ffn_mult = 2;
    cfg.model.vocab_size = 256;
    cfg.model.max_text_len = 8;
    cfg.model.proj_dim = 8;
    cfg.model.matryoshka_dims = {8, 4};
    cfg.train.batch_size = 4;
    cfg.train.epochs = 1;
    cfg.train.seed = 3;
    cfg.train.matryoshka = false;
    return cfg;
}

const std::string& tiny_data_dir() {
    static const std::string dir = [] {
        SyntheticDatasetSpec spec;
        spec.num_classes = 3;
        spec.pairs_per_class = 8;
        spec.feat_bins = 4;
        spec.frames = 8;
        spec.noise_scale = 0.2;
        spec.tokens_per_caption = 6;
        spec.distractor_rate = 0.2;
        spec.seed = 3;
        const std::string d = (fs::temp_directory_path() / "wavlink_harness_data").string();
        fs::remove_all(d);
        generate_dataset(spec, d);
        return d;
    }();
    return dir;
}

} // namespace

TEST_CASE("run config json round-trip, defaults and unknown keys") {
    auto cfg = tiny_config();
    const auto text = cfg.to_json_text();
    auto parsed = RunConfig::from_json_text(text);
    CHECK(parsed.to_json_text() == text);
    CHECK(parsed.hash() == cfg.hash());

    auto sparse = RunConfig::from_json_text("{\"epochs\": 3}");
    CHECK(sparse.train.epochs == 3);
    CHECK(sparse.model.d_model == 64); // default desk config

    CHECK_THROWS_AS(RunConfig::from_json_text("{\"nonsense\": true}"), ValidationError);
    CHECK_THROWS_AS(RunConfig::from_json_text("{\"warmup_fraction\": 2.0}"), ValidationError);
    CHECK_THROWS_AS(RunConfig::from_json_text(
                        "{\"batch_size\": 6, \"simulated_workers\": 4}"),
                    ValidationError);
}

TEST_CASE("full grid enumerates 24 distinct configurations") {
    const auto grid = full_grid(tiny_config());
    CHECK(grid.size() == 24);
    std::set<std::string> ids;
    std::set<uint64_t> hashes;
    for (const auto& e : grid) {
        ids.insert(e.config_id);
        hashes.insert(e.cfg.hash());
    }
    CHECK(ids.size() == 24);
    CHECK(hashes.size() == 24);
}

TEST_CASE("grid of one matches a standalone train and eval run") {
    const auto data = Dataset::load(tiny_data_dir());
    auto cfg = tiny_config();
    SweepEntry entry{sweep_config_id(cfg), cfg};
    const auto cache = (fs::temp_directory_path() / "wavlink_harness_cache1").string();
    fs::remove_all(cache);
    const auto report = run_sweep({entry}, data, cache);
    REQUIRE(report.rows.size() == 1);
    CHECK_FALSE(report.rows[0].failed);

    auto result = train(data, cfg);
    const auto pool = build_pool(result.state.model, data, data.short_pool);
    CHECK(report.rows[0].short_t2a_r1 ==
          doctest::Approx(recall_at_k(pool, Direction::t2a, 1)).epsilon(1e-15));
}

TEST_CASE("sweep caches completed configs and recomputes only missing ones") {
    const auto data = Dataset::load(tiny_data_dir());
    auto cfg1 = tiny_config();
    auto cfg2 = tiny_config();
    cfg2.train.loss = LossKind::siglip;
    std::vector<SweepEntry> grid = {{sweep_config_id(cfg1), cfg1},
                                    {sweep_config_id(cfg2), cfg2}};
    const auto cache = (fs::temp_directory_path() / "wavlink_harness_cache2").string();
    fs::remove_all(cache);

    const auto first = run_sweep(grid, data, cache);
    CHECK(first.rows.size() == 2);
    for (const auto& r : first.rows) CHECK_FALSE(r.from_cache);

    // delete one cache entry; only that config is recomputed
    fs::remove(fs::path(cache) / (grid[1].config_id + ".json"));
    const auto second = run_sweep(grid, data, cache);
    int cached = 0, fresh = 0;
    for (const auto& r : second.rows) {
        if (r.from_cache) {
            ++cached;
        } else {
            ++fresh;
        }
    }
    CHECK(cached == 1);
    CHECK(fresh == 1);
    // values identical either way
    CHECK(sweep_report_values_csv(first) == sweep_report_values_csv(second));
}

TEST_CASE("a failing config is recorded and the sweep continues") {
    const auto data = Dataset::load(tiny_data_dir());
    auto good = tiny_config();
    auto bad = tiny_config();
    bad.train.batch_size = 4096; // larger than the training split
    std::vector<SweepEntry> grid = {{"good", good}, {"bad", bad}};
    const auto report = run_sweep(grid, data, "");
    REQUIRE(report.rows.size() == 2);
    int failures = 0;
    for (const auto& r : report.rows) {
        if (r.failed) {
            ++failures;
            CHECK(!r.error.empty());
        }
    }
    CHECK(failures == 1);
}

TEST_CASE("empty grids and empty reports are input errors") {
    const auto data = Dataset::load(tiny_data_dir());
    CHECK_THROWS_AS(run_sweep({}, data, ""), ValidationError);
    CHECK_THROWS_AS(sweep_report_csv(SweepReport{}), ValidationError);
    CHECK_THROWS_AS(eval_report_csv({}), ValidationError);
}

TEST_CASE("eval csv round-trips through parse") {
    const auto data = Dataset::load(tiny_data_dir());
    auto result = train(data, tiny_config());
    const auto rows = evaluate_model(result.state.model, data, {8, 4}, {1, 5});
    const auto csv = eval_report_csv(rows);
    const auto parsed = parse_eval_csv(csv);
    REQUIRE(parsed.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].benchmark == rows[i].benchmark);
        CHECK(parsed[i].direction == rows[i].direction);
        CHECK(parsed[i].k == rows[i].k);
        CHECK(parsed[i].dim_level == rows[i].dim_level);
        CHECK(parsed[i].value == rows[i].value);
        CHECK(parsed[i].delta_vs_full == rows[i].delta_vs_full);
    }
}

TEST_CASE("eval deltas equal truncated minus full recomputed independently") {
    const auto data = Dataset::load(tiny_data_dir());
    auto result = train(data, tiny_config());
    const std::vector<int> ladder = {8, 4};
    const auto rows = evaluate_model(result.state.model, data, ladder, {1});
    const auto pool = build_pool(result.state.model, data, data.short_pool);
    for (const auto& r : rows) {
        if (r.benchmark != "short" || r.dim_level == 1) continue;
        const auto direct = truncated_eval(pool, ladder, r.dim_level, {r.k});
        bool found = false;
        for (const auto& tm : direct) {
            if (to_string(tm.dir) == r.direction && tm.k == r.k) {
                CHECK(std::abs(r.delta_vs_full - tm.delta_vs_full) <= 1e-12);
                found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("markdown report carries truncation sub-rows") {
    const auto data = Dataset::load(tiny_data_dir());
    auto result = train(data, tiny_config());
    const auto rows = evaluate_model(result.state.model, data, {8, 4}, {1, 5});
    const auto md = eval_report_markdown(rows, {8, 4});
    CHECK(md.find("M-1/2") != std::string::npos);
    CHECK(md.find("| short |") != std::string::npos);
    CHECK(md.find("| long |") != std::string::npos);
}

TEST_CASE("sweep reports are deterministic across runs") {
    const auto data = Dataset::load(tiny_data_dir());
    auto cfg = tiny_config();
    std::vector<SweepEntry> grid = {{sweep_config_id(cfg), cfg}};
    const auto r1 = run_sweep(grid, data, "");
    const auto r2 = run_sweep(grid, data, "");
    CHECK(sweep_report_values_csv(r1) == sweep_report_values_csv(r2));
}
