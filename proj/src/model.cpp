#include "wavlink/model.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/ops.hpp"

#include <algorithm>
#include <cmath>

namespace wavlink {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kMaskValue = -1e9;

TensorPtr randn_param(Rng& rng, std::vector<int> shape, double stddev) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return make_tensor(std::move(shape), rng.gaussian_vector(n, stddev), true);
}

TensorPtr zeros_param(std::vector<int> shape) {
    return zeros(std::move(shape), true);
}

TensorPtr ones_param(std::vector<int> shape) {
    return full(std::move(shape), 1.0, true);
}

LinearParams make_linear(Rng& rng, int in, int out) {
    LinearParams lp;
    lp.w = randn_param(rng, {in, out}, kInitStd);
    lp.b = zeros_param({out});
    return lp;
}

void register_linear(ParamStore& ps, const std::string& prefix, const LinearParams& lp) {
    ps.add(prefix + ".w", lp.w);
    ps.add(prefix + ".b", lp.b);
}

void register_block(ParamStore& ps, const std::string& prefix, const BlockParams& b) {
    ps.add(prefix + ".ln1.g", b.ln1_g);
    ps.add(prefix + ".ln1.b", b.ln1_b);
    register_linear(ps, prefix + ".attn.q", b.q);
    register_linear(ps, prefix + ".attn.k", b.k);
    register_linear(ps, prefix + ".attn.v", b.v);
    register_linear(ps, prefix + ".attn.o", b.o);
    ps.add(prefix + ".ln2.g", b.ln2_g);
    ps.add(prefix + ".ln2.b", b.ln2_b);
    register_linear(ps, prefix + ".ffn.1", b.ffn1);
    register_linear(ps, prefix + ".ffn.2", b.ffn2);
}

BlockParams make_block(Rng& rng, const ModelConfig& cfg) {
    BlockParams b;
    const int d = cfg.d_model;
    b.ln1_g = ones_param({d});
    b.ln1_b = zeros_param({d});
    b.q = make_linear(rng, d, d);
    b.k = make_linear(rng, d, d);
    b.v = make_linear(rng, d, d);
    b.o = make_linear(rng, d, d);
    b.ln2_g = ones_param({d});
    b.ln2_b = zeros_param({d});
    b.ffn1 = make_linear(rng, d, d * cfg.ffn_mult);
    b.ffn2 = make_linear(rng, d * cfg.ffn_mult, d);
    return b;
}

// Additive [L,L] attention mask: blocked entries get a large negative.
TensorPtr build_text_mask(const std::vector<int>& ids, bool causal) {
    const int l = static_cast<int>(ids.size());
    std::vector<double> m(static_cast<size_t>(l) * l, 0.0);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
            const bool blocked = (ids[j] == kPadToken) || (causal && j > i);
            if (blocked) m[static_cast<size_t>(i) * l + j] = kMaskValue;
        }
    }
    return make_tensor({l, l}, std::move(m), false);
}

TensorPtr transformer_block(const TensorPtr& x, const BlockParams& blk,
                            const ModelConfig& cfg, const TensorPtr& mask) {
    const int heads = cfg.heads;
    const int hd = cfg.head_dim();

    auto a = ops::layernorm(x, blk.ln1_g, blk.ln1_b, kLayerNormEps);
    auto q = linear(a, blk.q);
    auto k = linear(a, blk.k);
    auto v = linear(a, blk.v);

    std::vector<TensorPtr> head_outs;
    head_outs.reserve(heads);
    const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
    for (int h = 0; h < heads; ++h) {
        auto qh = ops::slice_cols(q, h * hd, hd);
        auto kh = ops::slice_cols(k, h * hd, hd);
        auto vh = ops::slice_cols(v, h * hd, hd);
        auto scores = ops::scale(ops::matmul(qh, ops::transpose(kh)), inv_sqrt_hd);
        auto probs = ops::softmax_rows(scores, mask);
        head_outs.push_back(ops::matmul(probs, vh));
    }
    auto attn = linear(ops::concat_cols(head_outs), blk.o);
    auto x1 = ops::add(x, attn);

    auto f = ops::layernorm(x1, blk.ln2_g, blk.ln2_b, kLayerNormEps);
    auto hmid = ops::gelu(linear(f, blk.ffn1));
    return ops::add(x1, linear(hmid, blk.ffn2));
}

} // namespace

TextStyle text_style_from_string(const std::string& s) {
    if (s == "clip_style") return TextStyle::clip_style;
    if (s == "bert_style") return TextStyle::bert_style;
    throw ValidationError("unknown text style '" + s + "' (expected clip_style|bert_style)");
}

std::string to_string(TextStyle s) {
    return s == TextStyle::clip_style ? "clip_style" : "bert_style";
}

void ModelConfig::validate() const {
    if (feat_bins < 1 || d_model < 1 || audio_layers < 1 || text_layers < 1 ||
        heads < 1 || ffn_mult < 1 || proj_dim < 1) {
        throw ValidationError("model config: all dimensions must be positive");
    }
    if (d_model % heads != 0) {
        throw ValidationError("model config: d_model " + std::to_string(d_model) +
                              " not divisible by heads " + std::to_string(heads));
    }
    if (vocab_size <= kFirstDataToken) {
        throw ValidationError("model config: vocab_size must exceed the reserved token range");
    }
    if (max_text_len < 2) {
        throw ValidationError("model config: max_text_len must be >= 2");
    }
    if (matryoshka_dims.empty()) {
        throw ValidationError("model config: matryoshka_dims must be nonempty");
    }
    if (matryoshka_dims.front() != proj_dim) {
        throw ValidationError("model config: matryoshka ladder must start at proj_dim " +
                              std::to_string(proj_dim));
    }
    for (size_t i = 1; i < matryoshka_dims.size(); ++i) {
        const int prev = matryoshka_dims[i - 1];
        const int cur = matryoshka_dims[i];
        if (cur <= 0 || cur >= prev || prev % cur != 0) {
            throw ValidationError("model config: matryoshka ladder must be strictly "
                                  "descending with each entry dividing the previous");
        }
    }
}

void FeatureSequence::validate() const {
    if (bins < 1) throw ValidationError("feature sequence: bins must be >= 1");
    if (frames < 2) {
        throw ValidationError("feature sequence: needs at least 2 frames, got " +
                              std::to_string(frames));
    }
    if (values.size() != static_cast<size_t>(bins) * frames) {
        throw ValidationError("feature sequence: value count does not match bins*frames");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("feature sequence: non-finite value");
    }
}

TokenSequence prepare_tokens(const std::vector<int>& raw, TextStyle style,
                             const ModelConfig& cfg) {
    const int budget = cfg.max_text_len - 1;
    std::vector<int> body(raw.begin(),
                          raw.begin() + std::min<size_t>(raw.size(), budget));
    TokenSequence out;
    if (style == TextStyle::bert_style) {
        out.ids.push_back(kClsToken);
        out.ids.insert(out.ids.end(), body.begin(), body.end());
    } else {
        out.ids = body;
        out.ids.push_back(kEosToken);
    }
    return out;
}

std::vector<int> tokenize_bytes(const std::string& text) {
    std::vector<int> out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        out.push_back(c < kFirstDataToken ? kFirstDataToken : static_cast<int>(c));
    }
    return out;
}

Model build_model(const ModelConfig& cfg, TextStyle style, uint64_t seed) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.text_style = style;

    {
        Rng rng(seed, 1);
        TowerParams& a = m.audio;
        a.is_audio = true;
        a.conv1_w = randn_param(rng, {cfg.d_model, cfg.feat_bins, 3}, kInitStd);
        a.conv1_b = zeros_param({cfg.d_model});
        a.conv2_w = randn_param(rng, {cfg.d_model, cfg.d_model, 3}, kInitStd);
        a.conv2_b = zeros_param({cfg.d_model});
        a.a_cls = randn_param(rng, {1, cfg.d_model}, kInitStd);
        for (int i = 0; i < cfg.audio_layers; ++i) a.blocks.push_back(make_block(rng, cfg));
        a.final_ln_g = ones_param({cfg.d_model});
        a.final_ln_b = zeros_param({cfg.d_model});
        a.projector = randn_param(rng, {cfg.d_model, cfg.proj_dim}, kInitStd);

        m.params.add("audio.conv1.w", a.conv1_w);
        m.params.add("audio.conv1.b", a.conv1_b);
        m.params.add("audio.conv2.w", a.conv2_w);
        m.params.add("audio.conv2.b", a.conv2_b);
        m.params.add("audio.a_cls", a.a_cls);
        for (int i = 0; i < cfg.audio_layers; ++i) {
            register_block(m.params, "audio.blocks." + std::to_string(i), a.blocks[i]);
        }
        m.params.add("audio.final_ln.g", a.final_ln_g);
        m.params.add("audio.final_ln.b", a.final_ln_b);
        m.params.add("audio.proj", a.projector);
    }
    {
        Rng rng(seed, 2);
        TowerParams& t = m.text;
        t.is_audio = false;
        t.tok_emb = randn_param(rng, {cfg.vocab_size, cfg.d_model}, kInitStd);
        t.pos_emb = randn_param(rng, {cfg.max_text_len, cfg.d_model}, kInitStd);
        for (int i = 0; i < cfg.text_layers; ++i) t.blocks.push_back(make_block(rng, cfg));
        t.final_ln_g = ones_param({cfg.d_model});
        t.final_ln_b = zeros_param({cfg.d_model});
        t.projector = randn_param(rng, {cfg.d_model, cfg.proj_dim}, kInitStd);

        m.params.add("text.tok_emb", t.tok_emb);
        m.params.add("text.pos_emb", t.pos_emb);
        for (int i = 0; i < cfg.text_layers; ++i) {
            register_block(m.params, "text.blocks." + std::to_string(i), t.blocks[i]);
        }
        m.params.add("text.final_ln.g", t.final_ln_g);
        m.params.add("text.final_ln.b", t.final_ln_b);
        m.params.add("text.proj", t.projector);
    }
    return m;
}

TensorPtr linear(const TensorPtr& x, const LinearParams& lp) {
    auto y = ops::add(ops::matmul(x, lp.w), lp.b);
    if (lp.lora) {
        auto low = ops::matmul(ops::matmul(x, lp.lora->a), lp.lora->b);
        y = ops::add(y, ops::scale(low, lp.lora->scale));
    }
    return y;
}

std::vector<double> sinusoid_positions(int positions, int dim) {
    // Whisper-style: sin for the first half of channels, cos for the second
    std::vector<double> pe(static_cast<size_t>(positions) * dim, 0.0);
    const int half = dim / 2;
    const double lti = half > 1 ? std::log(10000.0) / (half - 1) : 0.0;
    for (int t = 0; t < positions; ++t) {
        for (int j = 0; j < half; ++j) {
            const double angle = t * std::exp(-lti * j);
            pe[static_cast<size_t>(t) * dim + j] = std::sin(angle);
            pe[static_cast<size_t>(t) * dim + half + j] = std::cos(angle);
        }
    }
    return pe;
}

TensorPtr conv_frontend(const FeatureSequence& x, const TowerParams& p,
                        const ModelConfig& cfg) {
    x.validate();
    if (x.bins != cfg.feat_bins) {
        throw ValidationError("conv_frontend: feature bins " + std::to_string(x.bins) +
                              " do not match configured " + std::to_string(cfg.feat_bins));
    }
    // bins-major input flipped to time-major [T,F] for convolution over time
    std::vector<double> tm(static_cast<size_t>(x.frames) * x.bins);
    for (int f = 0; f < x.bins; ++f) {
        for (int t = 0; t < x.frames; ++t) {
            tm[static_cast<size_t>(t) * x.bins + f] = x.at(f, t);
        }
    }
    auto input = make_tensor({x.frames, x.bins}, std::move(tm), false);
    auto h1 = ops::gelu(ops::conv1d(input, p.conv1_w, p.conv1_b, 1));
    return ops::gelu(ops::conv1d(h1, p.conv2_w, p.conv2_b, 2));
}

TensorPtr audio_encode(const FeatureSequence& x, const TowerParams& p,
                       const ModelConfig& cfg) {
    auto h = conv_frontend(x, p, cfg);
    const int t_prime = h->shape[0];
    auto pos = make_tensor({t_prime, cfg.d_model},
                           sinusoid_positions(t_prime, cfg.d_model), false);
    h = ops::add(h, pos);
    // global token appended last, no positional embedding
    auto seq = ops::concat_rows({h, p.a_cls});
    for (const auto& blk : p.blocks) {
        seq = transformer_block(seq, blk, cfg, nullptr);
    }
    seq = ops::layernorm(seq, p.final_ln_g, p.final_ln_b, kLayerNormEps);
    return ops::select_row(seq, t_prime);
}

TensorPtr text_encode(const TokenSequence& t, const TowerParams& p,
                      const ModelConfig& cfg, TextStyle style) {
    const int l = static_cast<int>(t.ids.size());
    if (l < 1) throw ValidationError("text_encode: empty token sequence");
    if (l > cfg.max_text_len) {
        throw ValidationError("text_encode: sequence length " + std::to_string(l) +
                              " exceeds max_text_len " + std::to_string(cfg.max_text_len));
    }

    int pool_pos = -1;
    if (style == TextStyle::bert_style) {
        if (t.ids[0] != kClsToken) {
            throw ValidationError("text_encode: bert_style sequence must start with CLS");
        }
        pool_pos = 0;
    } else {
        for (int i = 0; i < l; ++i) {
            if (t.ids[i] == kEosToken) {
                pool_pos = i;
                break;
            }
        }
        if (pool_pos < 0) {
            throw ValidationError("text_encode: clip_style sequence has no EOS");
        }
    }

    auto emb = ops::embedding_lookup(p.tok_emb, t.ids);
    std::vector<int> positions(l);
    for (int i = 0; i < l; ++i) positions[i] = i;
    auto x = ops::add(emb, ops::embedding_lookup(p.pos_emb, positions));

    auto mask = build_text_mask(t.ids, style == TextStyle::clip_style);
    for (const auto& blk : p.blocks) {
        x = transformer_block(x, blk, cfg, mask);
    }
    x = ops::layernorm(x, p.final_ln_g, p.final_ln_b, kLayerNormEps);
    return ops::select_row(x, pool_pos);
}

TensorPtr project_normalize(const TensorPtr& z, const TensorPtr& projector) {
    return ops::l2_normalize_rows(ops::matmul(z, projector));
}

std::vector<double> embed_audio(const Model& m, const FeatureSequence& x) {
    NoGradGuard ng;
    return project_normalize(audio_encode(x, m.audio, m.cfg), m.audio.projector)->data;
}

std::vector<double> embed_text(const Model& m, const TokenSequence& t) {
    NoGradGuard ng;
    return project_normalize(text_encode(t, m.text, m.cfg, m.text_style),
                             m.text.projector)->data;
}

std::vector<double> embed_text_raw(const Model& m, const std::vector<int>& raw_tokens) {
    return embed_text(m, prepare_tokens(raw_tokens, m.text_style, m.cfg));
}

} // namespace wavlink
