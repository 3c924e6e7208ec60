#include "wavlink/adapt.hpp"

#include "wavlink/errors.hpp"

#include <algorithm>

namespace wavlink {

Regime regime_from_string(const std::string& s) {
    if (s == "projector_only") return Regime::projector_only;
    if (s == "lora") return Regime::lora;
    if (s == "full") return Regime::full;
    throw ValidationError("unknown regime '" + s + "' (expected projector_only|lora|full)");
}

Scope scope_from_string(const std::string& s) {
    if (s == "audio_only") return Scope::audio_only;
    if (s == "both") return Scope::both_towers;
    throw ValidationError("unknown scope '" + s + "' (expected audio_only|both)");
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::projector_only: return "projector_only";
        case Regime::lora: return "lora";
        default: return "full";
    }
}

std::string to_string(Scope s) {
    return s == Scope::audio_only ? "audio_only" : "both";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "clip") return LossKind::clip;
    if (s == "siglip") return LossKind::siglip;
    throw ValidationError("unknown loss '" + s + "' (expected clip|siglip)");
}

std::string to_string(LossKind k) {
    return k == LossKind::clip ? "clip" : "siglip";
}

TrainableMask build_mask(const Model& m, Regime regime, Scope scope, LossKind loss) {
    TrainableMask mask;
    mask.insert("audio.a_cls");
    mask.insert("loss.log_temperature");
    if (loss == LossKind::siglip) mask.insert("loss.siglip_bias");

    const bool text_trainable = scope == Scope::both_towers;

    auto tower_active = [&](const std::string& name) {
        if (name.rfind("audio.", 0) == 0) return true;
        if (name.rfind("text.", 0) == 0) return text_trainable;
        return false;
    };

    for (const auto& [name, _] : m.params.items()) {
        if (!tower_active(name)) continue;
        switch (regime) {
            case Regime::projector_only:
                if (name == "audio.proj" || name == "text.proj") mask.insert(name);
                break;
            case Regime::lora:
                if (name == "audio.proj" || name == "text.proj") mask.insert(name);
                if (name.find(".lora_a") != std::string::npos ||
                    name.find(".lora_b") != std::string::npos) {
                    mask.insert(name);
                }
                break;
            case Regime::full:
                mask.insert(name);
                break;
        }
    }
    return mask;
}

void apply_lora(Model& m, TowerParams& tower, int rank, double alpha, uint64_t seed) {
    if (rank < 1) throw ValidationError("apply_lora: rank must be >= 1");
    const std::string tower_name = tower.is_audio ? "audio" : "text";
    Rng rng(seed, tower.is_audio ? 11 : 12);

    for (size_t li = 0; li < tower.blocks.size(); ++li) {
        BlockParams& blk = tower.blocks[li];
        const std::string prefix = tower_name + ".blocks." + std::to_string(li) + ".attn.";
        struct Target {
            const char* key;
            LinearParams* lp;
        };
        Target targets[] = {{"q", &blk.q}, {"k", &blk.k}, {"v", &blk.v}, {"o", &blk.o}};
        for (auto& tgt : targets) {
            const int in = tgt.lp->w->shape[0];
            const int out = tgt.lp->w->shape[1];
            if (rank > std::min(in, out)) {
                throw ValidationError("apply_lora: rank " + std::to_string(rank) +
                                      " exceeds min(in,out) of " + tgt.lp->w->shape_str());
            }
            LoraPair lora;
            lora.a = make_tensor({in, rank}, rng.gaussian_vector(
                                     static_cast<size_t>(in) * rank, 0.02), true);
            lora.b = zeros({rank, out}, true);
            lora.scale = alpha / rank;
            tgt.lp->lora = lora;
            m.params.add(prefix + tgt.key + ".lora_a", lora.a);
            m.params.add(prefix + tgt.key + ".lora_b", lora.b);
        }
    }
}

} // namespace wavlink
