#pragma once

#include "wavlink/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace wavlink {

enum class Direction { t2a, a2t };
std::string to_string(Direction d);

// Unit-norm embedding pools with a ground-truth map in both directions;
// one-to-many is allowed.
struct RetrievalPool {
    std::vector<std::vector<double>> audio;
    std::vector<std::vector<double>> text;
    std::vector<std::vector<int>> audio_to_text;
    std::vector<std::vector<int>> text_to_audio;

    void validate() const;
};

// Fraction of queries whose ground truth lands in the cosine top-k of the
// full candidate set. Ties rank the lower candidate index first.
double recall_at_k(const RetrievalPool& pool, Direction dir, int k);

struct TruncatedMetric {
    Direction dir;
    int k;
    double value;
    double delta_vs_full;
};

// Recall over embeddings sliced to ladder[level-1] dims (1-based level),
// ranked by cosine of the slices, with signed deltas against full-dim.
std::vector<TruncatedMetric> truncated_eval(const RetrievalPool& pool,
                                            const std::vector<int>& ladder,
                                            int level,
                                            const std::vector<int>& ks);

using TextEmbedder = std::function<std::vector<double>(const std::string&)>;
using TokenEmbedder = std::function<std::vector<double>(const std::vector<int>&)>;

struct ZscResult {
    std::vector<int> predicted;
    double accuracy;
};

// Renders each label through the prompt template, embeds it, and assigns
// every audio item to its nearest label embedding (lowest index on ties).
ZscResult zero_shot_classify(const std::vector<std::vector<double>>& audio_embeddings,
                             const std::vector<int>& gold,
                             const std::vector<std::string>& labels,
                             const std::string& prompt_template,
                             const TextEmbedder& embed);

struct McqItem {
    std::vector<double> audio_embedding;
    std::vector<int> question_tokens;
    std::vector<std::vector<int>> choice_tokens;
    int answer{0};
};

// Embeds question ++ SEP ++ choice per option (question truncated from the
// left when the joint text exceeds the budget) and returns the argmax-cosine
// choice index.
int mcq_answer(const McqItem& item, const TokenEmbedder& embed_tokens, int max_text_len);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

std::string render_prompt(const std::string& prompt_template, const std::string& label);

} // namespace wavlink
