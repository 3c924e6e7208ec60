#pragma once

#include "wavlink/params.hpp"
#include "wavlink/rng.hpp"
#include "wavlink/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wavlink {

// reserved token ids; data tokens live in [kFirstDataToken, vocab_size)
constexpr int kPadToken = 0;
constexpr int kClsToken = 1;
constexpr int kEosToken = 2;
constexpr int kSepToken = 3;
constexpr int kFirstDataToken = 4;

constexpr double kLayerNormEps = 1e-5;

enum class TextStyle { clip_style, bert_style };

TextStyle text_style_from_string(const std::string& s);
std::string to_string(TextStyle s);

struct ModelConfig {
    int feat_bins{8};
    int d_model{64};
    int audio_layers{2};
    int text_layers{2};
    int heads{4};
    int ffn_mult{4};
    int vocab_size{256};
    int max_text_len{32};
    int proj_dim{64};
    std::vector<int> matryoshka_dims{64, 32, 16, 8};

    void validate() const;
    int head_dim() const { return d_model / heads; }
};

// Stand-in for a log-Mel feature matrix, bins-major (F rows, T columns).
struct FeatureSequence {
    int bins{0};
    int frames{0};
    std::vector<double> values;

    double at(int f, int t) const { return values[static_cast<size_t>(f) * frames + t]; }
    void validate() const;
};

struct TokenSequence {
    std::vector<int> ids;
};

// Inserts the pooling marker (CLS prepended for bert_style, EOS appended for
// clip_style) and truncates raw tokens so the result fits max_text_len.
TokenSequence prepare_tokens(const std::vector<int>& raw, TextStyle style,
                             const ModelConfig& cfg);

// Byte-level tokenization for label prompts and questions; bytes below
// kFirstDataToken are remapped so marker ids stay reserved.
std::vector<int> tokenize_bytes(const std::string& text);

struct LoraPair {
    TensorPtr a; // [in, rank]
    TensorPtr b; // [rank, out]
    double scale{1.0};
};

struct LinearParams {
    TensorPtr w; // [in, out]
    TensorPtr b; // [out]
    std::optional<LoraPair> lora;
};

struct BlockParams {
    TensorPtr ln1_g, ln1_b;
    LinearParams q, k, v, o;
    TensorPtr ln2_g, ln2_b;
    LinearParams ffn1, ffn2;
};

struct TowerParams {
    bool is_audio{false};
    // audio front-end
    TensorPtr conv1_w, conv1_b; // [D,F,3], [D]
    TensorPtr conv2_w, conv2_b; // [D,D,3], [D]
    TensorPtr a_cls;            // [1,D]
    // text embedding
    TensorPtr tok_emb; // [V,D]
    TensorPtr pos_emb; // [max_text_len,D]
    std::vector<BlockParams> blocks;
    TensorPtr final_ln_g, final_ln_b;
    TensorPtr projector; // [D,d]
};

struct Model {
    ModelConfig cfg;
    TextStyle text_style{TextStyle::clip_style};
    TowerParams audio;
    TowerParams text;
    ParamStore params;
};

// Fresh towers, weights ~ N(0, 0.02), biases 0, layernorm affine identity.
Model build_model(const ModelConfig& cfg, TextStyle style, uint64_t seed);

// y = x*W + b (+ scaled low-rank path when a LoRA pair is attached)
TensorPtr linear(const TensorPtr& x, const LinearParams& lp);

// Conv front-end: kernel-3 convolutions with strides 1 then 2, GELU after
// each, mapping F channels to D. Output [ceil(T/2), D].
TensorPtr conv_frontend(const FeatureSequence& x, const TowerParams& p,
                        const ModelConfig& cfg);

// Pooled audio state: sinusoidal positions on the frame tokens, the global
// token appended without one, bidirectional blocks, final layernorm, last
// position read out. Returns [1,D].
TensorPtr audio_encode(const FeatureSequence& x, const TowerParams& p,
                       const ModelConfig& cfg);

// Pooled text state: causal attention with EOS pooling (clip_style) or
// bidirectional with CLS pooling (bert_style); PAD positions are masked out
// of attention. Returns [1,D].
TensorPtr text_encode(const TokenSequence& t, const TowerParams& p,
                      const ModelConfig& cfg, TextStyle style);

// Linear projection to the shared space followed by l2 normalization.
TensorPtr project_normalize(const TensorPtr& z, const TensorPtr& projector);

// Convenience no-grad paths returning plain unit vectors.
std::vector<double> embed_audio(const Model& m, const FeatureSequence& x);
std::vector<double> embed_text(const Model& m, const TokenSequence& t);
std::vector<double> embed_text_raw(const Model& m, const std::vector<int>& raw_tokens);

std::vector<double> sinusoid_positions(int positions, int dim);

} // namespace wavlink
