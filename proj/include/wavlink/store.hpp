#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wavlink {

// Persistent nested-embedding store. Full vectors are stored once; truncated
// views are sliced at query time since prefixes of a nested embedding are
// valid embeddings themselves.
struct EmbeddingRecord {
    std::string id;
    std::vector<double> vector;
    std::map<std::string, std::string> metadata;
};

struct SearchStats {
    int dims_used{0};
    int64_t multiply_accumulate_count{0};
    int64_t bytes_scanned{0};
};

struct SearchHit {
    std::string id;
    double score{0.0};
};

struct SearchResult {
    std::vector<SearchHit> hits;
    SearchStats stats;
};

class EmbeddingStore {
public:
    EmbeddingStore(int dim, std::vector<int> ladder);

    // Unit-norm (within 1e-6) records; re-ingesting an id overwrites.
    // Returns the number of records now stored.
    size_t ingest(const std::vector<EmbeddingRecord>& records);

    // Exhaustive cosine scan over vectors sliced to the first ladder[level]
    // dims matching dim_level; ties break by id order.
    SearchResult search(const std::vector<double>& query, int dim_level, int top_k) const;

    size_t size() const { return records_.size(); }
    int dim() const { return dim_; }
    const std::vector<int>& ladder() const { return ladder_; }
    const EmbeddingRecord& by_id(const std::string& id) const;

    void save(const std::string& path) const;
    static EmbeddingStore load(const std::string& path);

private:
    int dim_;
    std::vector<int> ladder_;
    std::vector<EmbeddingRecord> records_; // sorted by id
};

} // namespace wavlink
