#include "wavlink/store.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/io.hpp"

#include <algorithm>
#include <cmath>

namespace wavlink {

namespace {
constexpr double kUnitNormTolerance = 1e-6;
constexpr uint16_t kStoreVersion = 1;
} // namespace

EmbeddingStore::EmbeddingStore(int dim, std::vector<int> ladder)
    : dim_(dim), ladder_(std::move(ladder)) {
    if (dim_ < 1) throw ValidationError("store: dim must be >= 1");
    if (ladder_.empty() || ladder_.front() != dim_) {
        throw ValidationError("store: ladder must start at the full dim");
    }
    for (size_t i = 1; i < ladder_.size(); ++i) {
        if (ladder_[i] <= 0 || ladder_[i] >= ladder_[i - 1]) {
            throw ValidationError("store: ladder must be strictly descending");
        }
    }
}

size_t EmbeddingStore::ingest(const std::vector<EmbeddingRecord>& records) {
    for (const auto& r : records) {
        if (r.id.empty()) throw ValidationError("store ingest: empty id");
        if (static_cast<int>(r.vector.size()) != dim_) {
            throw ValidationError("store ingest: record '" + r.id + "' has dim " +
                                  std::to_string(r.vector.size()) + ", store dim is " +
                                  std::to_string(dim_));
        }
        double sq = 0.0;
        for (double x : r.vector) {
            if (!std::isfinite(x)) {
                throw ValidationError("store ingest: non-finite value in '" + r.id + "'");
            }
            sq += x * x;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
            throw ValidationError("store ingest: record '" + r.id +
                                  "' is not unit-norm (|v| = " + std::to_string(std::sqrt(sq)) + ")");
        }
        auto it = std::lower_bound(records_.begin(), records_.end(), r.id,
                                   [](const EmbeddingRecord& a, const std::string& id) {
                                       return a.id < id;
                                   });
        if (it != records_.end() && it->id == r.id) {
            *it = r;
        } else {
            records_.insert(it, r);
        }
    }
    return records_.size();
}

SearchResult EmbeddingStore::search(const std::vector<double>& query, int dim_level,
                                    int top_k) const {
    if (top_k < 1) throw ValidationError("store search: top_k must be >= 1");
    if (records_.empty()) throw ValidationError("store search: store is empty");
    if (std::find(ladder_.begin(), ladder_.end(), dim_level) == ladder_.end()) {
        throw ValidationError("store search: dim " + std::to_string(dim_level) +
                              " not in the ladder");
    }
    if (static_cast<int>(query.size()) < dim_level) {
        throw ValidationError("store search: query shorter than requested dim");
    }
    const int d = dim_level;

    double qsq = 0.0;
    for (int j = 0; j < d; ++j) qsq += query[j] * query[j];
    const double qnorm = std::sqrt(qsq);
    if (qnorm == 0.0) throw NumericError("store search: zero-norm query slice");

    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(records_.size());
    for (size_t i = 0; i < records_.size(); ++i) {
        const auto& v = records_[i].vector;
        double dot = 0.0, vsq = 0.0;
        for (int j = 0; j < d; ++j) {
            dot += query[j] * v[j];
            vsq += v[j] * v[j];
        }
        const double vnorm = std::sqrt(vsq);
        const double score = vnorm == 0.0 ? -1.0 : dot / (qnorm * vnorm);
        scored.emplace_back(score, i);
    }
    const int k = std::min<int>(top_k, static_cast<int>(scored.size()));
    // records_ is id-sorted, so index order is id order for tie-breaks
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });

    SearchResult res;
    res.hits.reserve(k);
    for (int i = 0; i < k; ++i) {
        res.hits.push_back({records_[scored[i].second].id, scored[i].first});
    }
    res.stats.dims_used = d;
    res.stats.multiply_accumulate_count =
        static_cast<int64_t>(d) * static_cast<int64_t>(records_.size());
    res.stats.bytes_scanned = static_cast<int64_t>(d) *
                              static_cast<int64_t>(records_.size()) *
                              static_cast<int64_t>(sizeof(double));
    return res;
}

const EmbeddingRecord& EmbeddingStore::by_id(const std::string& id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), id,
                               [](const EmbeddingRecord& a, const std::string& key) {
                                   return a.id < key;
                               });
    if (it == records_.end() || it->id != id) {
        throw ValidationError("store: unknown id '" + id + "'");
    }
    return *it;
}

void EmbeddingStore::save(const std::string& path) const {
    auto os = io::open_out(path);
    os.write("WLES", 4);
    io::write_u16(os, kStoreVersion);
    io::write_u32(os, static_cast<uint32_t>(dim_));
    io::write_u32(os, static_cast<uint32_t>(ladder_.size()));
    for (int d : ladder_) io::write_u32(os, static_cast<uint32_t>(d));
    io::write_u64(os, records_.size());
    for (const auto& r : records_) {
        io::write_string(os, r.id);
        io::write_f64_array(os, r.vector);
        io::write_u32(os, static_cast<uint32_t>(r.metadata.size()));
        for (const auto& [k, v] : r.metadata) {
            io::write_string(os, k);
            io::write_string(os, v);
        }
    }
    if (!os) throw IoError("failed writing store " + path);
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "WLES", "store " + path);
    const uint16_t version = io::read_u16(is);
    if (version != kStoreVersion) {
        throw IoError("store " + path + ": unsupported version " + std::to_string(version));
    }
    const int dim = static_cast<int>(io::read_u32(is));
    const uint32_t ladder_len = io::read_u32(is);
    std::vector<int> ladder(ladder_len);
    for (auto& d : ladder) d = static_cast<int>(io::read_u32(is));
    EmbeddingStore store(dim, std::move(ladder));
    const uint64_t count = io::read_u64(is);
    store.records_.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        EmbeddingRecord r;
        r.id = io::read_string(is);
        r.vector = io::read_f64_array(is, static_cast<size_t>(dim));
        const uint32_t meta_count = io::read_u32(is);
        for (uint32_t mi = 0; mi < meta_count; ++mi) {
            const std::string k = io::read_string(is);
            r.metadata[k] = io::read_string(is);
        }
        store.records_.push_back(std::move(r));
    }
    // file is written id-sorted; enforce on load in case of tampering
    for (size_t i = 1; i < store.records_.size(); ++i) {
        if (store.records_[i - 1].id >= store.records_[i].id) {
            throw IoError("store " + path + ": records not in id order");
        }
    }
    return store;
}

} // namespace wavlink
