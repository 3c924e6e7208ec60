#include "wavlink/eval.hpp"

#include "wavlink/errors.hpp"

#include <algorithm>
#include <cmath>

namespace wavlink {

std::string to_string(Direction d) {
    return d == Direction::t2a ? "t2a" : "a2t";
}

void RetrievalPool::validate() const {
    if (audio.empty() || text.empty()) {
        throw ValidationError("retrieval pool: empty pool");
    }
    if (audio_to_text.size() != audio.size() || text_to_audio.size() != text.size()) {
        throw ValidationError("retrieval pool: ground-truth map size mismatch");
    }
    for (const auto& g : audio_to_text) {
        if (g.empty()) throw ValidationError("retrieval pool: audio item without ground truth");
        for (int j : g) {
            if (j < 0 || j >= static_cast<int>(text.size())) {
                throw ValidationError("retrieval pool: ground-truth text index out of range");
            }
        }
    }
    for (const auto& g : text_to_audio) {
        if (g.empty()) throw ValidationError("retrieval pool: text item without ground truth");
        for (int j : g) {
            if (j < 0 || j >= static_cast<int>(audio.size())) {
                throw ValidationError("retrieval pool: ground-truth audio index out of range");
            }
        }
    }
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ValidationError("cosine: dimension mismatch " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom == 0.0) throw DegenerateEmbeddingError("cosine: zero-norm vector");
    return dot / denom;
}

namespace {

// candidate indices ordered by (score desc, index asc), truncated to k
std::vector<int> top_k_by_score(const std::vector<double>& scores, int k) {
    std::vector<int> idx(scores.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    const int kk = std::min<int>(k, static_cast<int>(scores.size()));
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    idx.resize(kk);
    return idx;
}

std::vector<double> unit_slice(const std::vector<double>& v, size_t dims) {
    std::vector<double> s(v.begin(), v.begin() + dims);
    double sq = 0.0;
    for (double x : s) sq += x * x;
    const double n = std::sqrt(sq);
    if (n == 0.0) throw DegenerateEmbeddingError("unit_slice: zero-norm slice");
    for (double& x : s) x /= n;
    return s;
}

double recall_on_slices(const std::vector<std::vector<double>>& queries,
                        const std::vector<std::vector<double>>& candidates,
                        const std::vector<std::vector<int>>& gt, int k, size_t dims) {
    std::vector<std::vector<double>> cand_units;
    cand_units.reserve(candidates.size());
    for (const auto& c : candidates) cand_units.push_back(unit_slice(c, dims));

    size_t hits = 0;
    std::vector<double> scores(candidates.size());
    for (size_t q = 0; q < queries.size(); ++q) {
        const auto qs = unit_slice(queries[q], dims);
        for (size_t c = 0; c < cand_units.size(); ++c) {
            double dot = 0.0;
            for (size_t j = 0; j < dims; ++j) dot += qs[j] * cand_units[c][j];
            scores[c] = dot;
        }
        auto top = top_k_by_score(scores, k);
        bool hit = false;
        for (int t : top) {
            if (std::find(gt[q].begin(), gt[q].end(), t) != gt[q].end()) {
                hit = true;
                break;
            }
        }
        if (hit) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

} // namespace

double recall_at_k(const RetrievalPool& pool, Direction dir, int k) {
    pool.validate();
    if (k < 1) throw ValidationError("recall_at_k: k must be >= 1");
    if (dir == Direction::t2a) {
        return recall_on_slices(pool.text, pool.audio, pool.text_to_audio, k,
                                pool.text.empty() ? 0 : pool.text[0].size());
    }
    return recall_on_slices(pool.audio, pool.text, pool.audio_to_text, k,
                            pool.audio.empty() ? 0 : pool.audio[0].size());
}

std::vector<TruncatedMetric> truncated_eval(const RetrievalPool& pool,
                                            const std::vector<int>& ladder,
                                            int level,
                                            const std::vector<int>& ks) {
    pool.validate();
    if (level < 1 || level > static_cast<int>(ladder.size())) {
        throw ValidationError("truncated_eval: level " + std::to_string(level) +
                              " outside ladder of size " + std::to_string(ladder.size()));
    }
    const size_t full_dim = pool.audio[0].size();
    if (ladder.empty() || static_cast<size_t>(ladder[0]) != full_dim) {
        throw ValidationError("truncated_eval: ladder must start at the embedding dim");
    }
    const size_t dims = static_cast<size_t>(ladder[level - 1]);

    std::vector<TruncatedMetric> out;
    for (Direction dir : {Direction::t2a, Direction::a2t}) {
        const auto& queries = dir == Direction::t2a ? pool.text : pool.audio;
        const auto& cands = dir == Direction::t2a ? pool.audio : pool.text;
        const auto& gt = dir == Direction::t2a ? pool.text_to_audio : pool.audio_to_text;
        for (int k : ks) {
            if (k < 1) throw ValidationError("truncated_eval: k must be >= 1");
            const double value = recall_on_slices(queries, cands, gt, k, dims);
            // level 1 is the full dimension; its delta is 0 by definition and
            // the slice path reuses the full vectors, so values match bitwise
            const double full = dims == full_dim
                                    ? value
                                    : recall_on_slices(queries, cands, gt, k, full_dim);
            out.push_back({dir, k, value, value - full});
        }
    }
    return out;
}

ZscResult zero_shot_classify(const std::vector<std::vector<double>>& audio_embeddings,
                             const std::vector<int>& gold,
                             const std::vector<std::string>& labels,
                             const std::string& prompt_template,
                             const TextEmbedder& embed) {
    if (labels.size() < 2) {
        throw ValidationError("zero_shot_classify: need at least 2 class labels");
    }
    if (audio_embeddings.empty()) {
        throw ValidationError("zero_shot_classify: empty audio set");
    }
    std::vector<std::vector<double>> label_embs;
    label_embs.reserve(labels.size());
    for (const auto& label : labels) {
        label_embs.push_back(embed(render_prompt(prompt_template, label)));
    }

    ZscResult res;
    res.predicted.reserve(audio_embeddings.size());
    size_t correct = 0;
    for (size_t i = 0; i < audio_embeddings.size(); ++i) {
        int best = 0;
        double best_score = cosine(audio_embeddings[i], label_embs[0]);
        for (size_t c = 1; c < label_embs.size(); ++c) {
            const double s = cosine(audio_embeddings[i], label_embs[c]);
            if (s > best_score) {
                best_score = s;
                best = static_cast<int>(c);
            }
        }
        res.predicted.push_back(best);
        if (!gold.empty() && gold[i] == best) ++correct;
    }
    res.accuracy = gold.empty() ? 0.0
                                : static_cast<double>(correct) / audio_embeddings.size();
    return res;
}

int mcq_answer(const McqItem& item, const TokenEmbedder& embed_tokens, int max_text_len) {
    if (item.choice_tokens.size() < 2) {
        throw ValidationError("mcq_answer: need at least 2 choices");
    }
    // one slot goes to the pooling marker added during preparation
    const int budget = max_text_len - 1;
    int best = -1;
    double best_score = 0.0;
    for (size_t c = 0; c < item.choice_tokens.size(); ++c) {
        const auto& choice = item.choice_tokens[c];
        const int q_keep = budget - 1 - static_cast<int>(choice.size());
        if (q_keep < 0) {
            throw ValidationError("mcq_answer: joint text empty after truncation");
        }
        std::vector<int> joint;
        const int q_len = static_cast<int>(item.question_tokens.size());
        const int keep = std::min(q_keep, q_len);
        joint.insert(joint.end(), item.question_tokens.end() - keep,
                     item.question_tokens.end());
        joint.push_back(kSepToken);
        joint.insert(joint.end(), choice.begin(), choice.end());
        if (keep == 0 && choice.empty()) {
            throw ValidationError("mcq_answer: joint text empty after truncation");
        }
        const double s = cosine(item.audio_embedding, embed_tokens(joint));
        if (best < 0 || s > best_score) {
            best_score = s;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::string render_prompt(const std::string& prompt_template, const std::string& label) {
    const std::string placeholder = "{label}";
    std::string out = prompt_template;
    const auto pos = out.find(placeholder);
    if (pos == std::string::npos) {
        throw ValidationError("prompt template must contain {label}");
    }
    out.replace(pos, placeholder.size(), label);
    return out;
}

} // namespace wavlink
