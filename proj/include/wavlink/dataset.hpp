#pragma once

#include "wavlink/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace wavlink {

struct SyntheticDatasetSpec {
    int num_classes{32};
    int pairs_per_class{64};
    int feat_bins{8};
    int frames{64};
    double noise_scale{0.3};
    int tokens_per_caption{12};
    double distractor_rate{0.2};
    uint64_t seed{7};

    void validate() const;
    static SyntheticDatasetSpec from_file(const std::string& path);
    static SyntheticDatasetSpec from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// eval-set sizing conventions (per class): two disjoint retrieval pools and
// a probe set reused for zero-shot and MCQ evaluation
constexpr int kPoolPairsPerClass = 8;
constexpr int kProbePairsPerClass = 4;
constexpr int kMcqChoices = 4;

struct DatasetItem {
    std::string id;
    std::string feature_file;
    FeatureSequence features;
    std::vector<int> tokens; // raw caption tokens, markers not yet inserted
    int class_id{0};
    std::string pool; // train | short | long | probe
};

struct McqRecord {
    std::string audio_id;
    std::string question;
    std::vector<std::string> choices; // class names
    int answer{0};
};

struct Dataset {
    std::vector<DatasetItem> items;
    std::vector<int> train_indices;
    std::vector<int> short_pool;
    std::vector<int> long_pool;
    std::vector<int> probe_indices;
    std::vector<std::string> class_names; // index = class id
    std::vector<McqRecord> mcq;

    const DatasetItem& by_id(const std::string& id) const;

    static Dataset load(const std::string& dir);
};

// Writes manifest.jsonl, features/*.wlft, classes.json, mcq.jsonl and a copy
// of the generating spec into out_dir. Fully deterministic from the spec.
void generate_dataset(const SyntheticDatasetSpec& spec, const std::string& out_dir);

void write_feature_file(const std::string& path, const FeatureSequence& f);
FeatureSequence read_feature_file(const std::string& path);

} // namespace wavlink
