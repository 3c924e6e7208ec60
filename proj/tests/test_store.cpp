#include "wavlink/errors.hpp"
#include "wavlink/rng.hpp"
#include "wavlink/store.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace wavlink;

namespace {

std::vector<double> unit_vector(Rng& rng, int d) {
    auto v = rng.gaussian_vector(d, 1.0);
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double n = std::sqrt(sq);
    for (double& x : v) x /= n;
    return v;
}

std::vector<EmbeddingRecord> make_records(Rng& rng, int n, int d) {
    std::vector<EmbeddingRecord> recs;
    for (int i = 0; i < n; ++i) {
        EmbeddingRecord r;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "vec-%04d", i);
        r.id = buf;
        r.vector = unit_vector(rng, d);
        r.metadata["class"] = std::to_string(i % 7);
        recs.push_back(std::move(r));
    }
    return recs;
}

} // namespace

TEST_CASE("empty ingest stores nothing") {
    EmbeddingStore store(8, {8, 4});
    CHECK(store.ingest({}) == 0);
}

TEST_CASE("duplicate ids overwrite") {
    EmbeddingStore store(2, {2});
    EmbeddingRecord a{"x", {1.0, 0.0}, {}};
    EmbeddingRecord b{"x", {0.0, 1.0}, {}};
    CHECK(store.ingest({a}) == 1);
    CHECK(store.ingest({b}) == 1);
    CHECK(store.by_id("x").vector == std::vector<double>{0.0, 1.0});
}

TEST_CASE("ingest validates dim and unit norm") {
    EmbeddingStore store(4, {4, 2});
    EmbeddingRecord wrong_dim{"a", {1.0, 0.0}, {}};
    CHECK_THROWS_AS(store.ingest({wrong_dim}), ValidationError);
    EmbeddingRecord not_unit{"b", {1.0, 1.0, 0.0, 0.0}, {}};
    CHECK_THROWS_AS(store.ingest({not_unit}), ValidationError);
}

TEST_CASE("1000 random unit vectors round-trip bit-exactly") {
    Rng rng(81);
    const int d = 16;
    auto recs = make_records(rng, 1000, d);
    EmbeddingStore store(d, {16, 8, 4, 2});
    CHECK(store.ingest(recs) == 1000);

    const std::string path = (std::filesystem::temp_directory_path() /
                              "wavlink_test_store.wles").string();
    store.save(path);
    auto loaded = EmbeddingStore::load(path);
    REQUIRE(loaded.size() == 1000);
    for (const auto& r : recs) {
        const auto& got = loaded.by_id(r.id);
        CHECK(got.vector == r.vector);
        CHECK(got.metadata == r.metadata);
    }
    std::filesystem::remove(path);
}

TEST_CASE("exact query returns itself first with score 1") {
    Rng rng(82);
    auto recs = make_records(rng, 50, 8);
    EmbeddingStore store(8, {8, 4});
    store.ingest(recs);
    const auto res = store.search(recs[17].vector, 8, 3);
    CHECK(res.hits[0].id == recs[17].id);
    CHECK(res.hits[0].score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mac count scales exactly with the sliced dimension") {
    Rng rng(83);
    auto recs = make_records(rng, 64, 32);
    EmbeddingStore store(32, {32, 16, 8, 4});
    store.ingest(recs);
    const auto full = store.search(recs[0].vector, 32, 5);
    const auto eighth = store.search(recs[0].vector, 4, 5);
    CHECK(full.stats.multiply_accumulate_count == 32 * 64);
    CHECK(eighth.stats.multiply_accumulate_count * 8 == full.stats.multiply_accumulate_count);
    CHECK(full.stats.dims_used == 32);
    CHECK(eighth.stats.dims_used == 4);
    CHECK(full.stats.bytes_scanned == 32 * 64 * 8);
}

TEST_CASE("stats accounting identity holds for every query") {
    Rng rng(84);
    auto recs = make_records(rng, 33, 8);
    EmbeddingStore store(8, {8, 4, 2});
    store.ingest(recs);
    for (int dim : {8, 4, 2}) {
        const auto res = store.search(recs[1].vector, dim, 4);
        CHECK(res.stats.multiply_accumulate_count ==
              static_cast<int64_t>(res.stats.dims_used) * 33);
    }
}

TEST_CASE("top-k matches a brute-force oracle on 1000 vectors") {
    Rng rng(85);
    const int d = 16;
    auto recs = make_records(rng, 1000, d);
    EmbeddingStore store(d, {16, 8, 4, 2});
    store.ingest(recs);
    const auto query = unit_vector(rng, d);
    for (int dim : {16, 8, 2}) {
        const auto res = store.search(query, dim, 10);
        // oracle: renormalized slice cosine, stable sort by (score, id)
        std::vector<std::pair<double, std::string>> scored;
        for (const auto& r : recs) {
            double dot = 0.0, nq = 0.0, nv = 0.0;
            for (int j = 0; j < dim; ++j) {
                dot += query[j] * r.vector[j];
                nq += query[j] * query[j];
                nv += r.vector[j] * r.vector[j];
            }
            scored.emplace_back(dot / std::sqrt(nq * nv), r.id);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(res.hits.size() == 10);
        for (int i = 0; i < 10; ++i) {
            CHECK(res.hits[i].id == scored[i].second);
            CHECK(res.hits[i].score == doctest::Approx(scored[i].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("search at full dim with top_k = size gives a total cosine order") {
    Rng rng(86);
    auto recs = make_records(rng, 40, 8);
    EmbeddingStore store(8, {8});
    store.ingest(recs);
    const auto query = unit_vector(rng, 8);
    const auto res = store.search(query, 8, 40);
    REQUIRE(res.hits.size() == 40);
    for (size_t i = 1; i < res.hits.size(); ++i) {
        CHECK(res.hits[i - 1].score >= res.hits[i].score);
    }
}

TEST_CASE("ties break by id order") {
    EmbeddingStore store(2, {2});
    store.ingest({{"bb", {1.0, 0.0}, {}},
                  {"aa", {1.0, 0.0}, {}},
                  {"cc", {0.0, 1.0}, {}}});
    const auto res = store.search({1.0, 0.0}, 2, 3);
    CHECK(res.hits[0].id == "aa");
    CHECK(res.hits[1].id == "bb");
}

TEST_CASE("search rejects a dim outside the ladder and empty stores") {
    Rng rng(87);
    auto recs = make_records(rng, 4, 8);
    EmbeddingStore store(8, {8, 4});
    store.ingest(recs);
    CHECK_THROWS_AS(store.search(recs[0].vector, 3, 1), ValidationError);
    EmbeddingStore empty(8, {8});
    CHECK_THROWS_AS(empty.search(recs[0].vector, 8, 1), ValidationError);
}
