#include "wavlink/config.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace wavlink {

using nlohmann::json;

void TrainConfig::validate() const {
    if (lr_peak <= 0.0) throw ValidationError("train config: lr_peak must be > 0");
    if (weight_decay < 0.0) throw ValidationError("train config: weight_decay must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ValidationError("train config: betas must be in [0, 1)");
    }
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (epochs < 0) throw ValidationError("train config: epochs must be >= 0");
    if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0) {
        throw ValidationError("train config: warmup_fraction must be in (0, 1)");
    }
    if (simulated_workers < 1) {
        throw ValidationError("train config: simulated_workers must be >= 1");
    }
    if (batch_size % simulated_workers != 0) {
        throw ValidationError("train config: batch_size " + std::to_string(batch_size) +
                              " not divisible by simulated_workers " +
                              std::to_string(simulated_workers));
    }
    if (lora_rank < 1) throw ValidationError("train config: lora_rank must be >= 1");
    if (grad_clip < 0.0) throw ValidationError("train config: grad_clip must be >= 0");
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "feat_bins", "d_model", "audio_layers", "text_layers", "heads", "ffn_mult",
        "vocab_size", "max_text_len", "proj_dim", "matryoshka_dims",
        "lr_peak", "weight_decay", "beta1", "beta2", "adam_eps", "batch_size",
        "epochs", "warmup_fraction", "seed", "regime", "scope", "loss",
        "matryoshka", "renormalize_slices", "simulated_workers", "lora_rank",
        "lora_alpha", "grad_clip", "text_style"};
    return keys;
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known_keys().count(key)) {
            throw ValidationError("config: unknown key '" + key + "'");
        }
    }

    RunConfig cfg;
    try {
        read_key(j, "feat_bins", cfg.model.feat_bins);
        read_key(j, "d_model", cfg.model.d_model);
        read_key(j, "audio_layers", cfg.model.audio_layers);
        read_key(j, "text_layers", cfg.model.text_layers);
        read_key(j, "heads", cfg.model.heads);
        read_key(j, "ffn_mult", cfg.model.ffn_mult);
        read_key(j, "vocab_size", cfg.model.vocab_size);
        read_key(j, "max_text_len", cfg.model.max_text_len);
        read_key(j, "proj_dim", cfg.model.proj_dim);
        read_key(j, "matryoshka_dims", cfg.model.matryoshka_dims);

        read_key(j, "lr_peak", cfg.train.lr_peak);
        read_key(j, "weight_decay", cfg.train.weight_decay);
        read_key(j, "beta1", cfg.train.beta1);
        read_key(j, "beta2", cfg.train.beta2);
        read_key(j, "adam_eps", cfg.train.adam_eps);
        read_key(j, "batch_size", cfg.train.batch_size);
        read_key(j, "epochs", cfg.train.epochs);
        read_key(j, "warmup_fraction", cfg.train.warmup_fraction);
        read_key(j, "seed", cfg.train.seed);
        read_key(j, "matryoshka", cfg.train.matryoshka);
        read_key(j, "renormalize_slices", cfg.train.renormalize_slices);
        read_key(j, "simulated_workers", cfg.train.simulated_workers);
        read_key(j, "lora_rank", cfg.train.lora_rank);
        read_key(j, "lora_alpha", cfg.train.lora_alpha);
        read_key(j, "grad_clip", cfg.train.grad_clip);
        if (j.contains("regime")) cfg.train.regime = regime_from_string(j.at("regime"));
        if (j.contains("scope")) cfg.train.scope = scope_from_string(j.at("scope"));
        if (j.contains("loss")) cfg.train.loss = loss_kind_from_string(j.at("loss"));
        if (j.contains("text_style")) {
            cfg.train.text_style = text_style_from_string(j.at("text_style"));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: bad value type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string RunConfig::to_json_text() const {
    json j;
    j["feat_bins"] = model.feat_bins;
    j["d_model"] = model.d_model;
    j["audio_layers"] = model.audio_layers;
    j["text_layers"] = model.text_layers;
    j["heads"] = model.heads;
    j["ffn_mult"] = model.ffn_mult;
    j["vocab_size"] = model.vocab_size;
    j["max_text_len"] = model.max_text_len;
    j["proj_dim"] = model.proj_dim;
    j["matryoshka_dims"] = model.matryoshka_dims;
    j["lr_peak"] = train.lr_peak;
    j["weight_decay"] = train.weight_decay;
    j["beta1"] = train.beta1;
    j["beta2"] = train.beta2;
    j["adam_eps"] = train.adam_eps;
    j["batch_size"] = train.batch_size;
    j["epochs"] = train.epochs;
    j["warmup_fraction"] = train.warmup_fraction;
    j["seed"] = train.seed;
    j["regime"] = to_string(train.regime);
    j["scope"] = to_string(train.scope);
    j["loss"] = to_string(train.loss);
    j["matryoshka"] = train.matryoshka;
    j["renormalize_slices"] = train.renormalize_slices;
    j["simulated_workers"] = train.simulated_workers;
    j["lora_rank"] = train.lora_rank;
    j["lora_alpha"] = train.lora_alpha;
    j["grad_clip"] = train.grad_clip;
    j["text_style"] = to_string(train.text_style);
    return j.dump();
}

uint64_t RunConfig::hash() const {
    return fnv1a64(to_json_text());
}

RunConfig default_desk_config() {
    return RunConfig{};
}

RunConfig micro_sweep_config() {
    RunConfig cfg;
    cfg.model.feat_bins = 8;
    cfg.model.d_model = 32;
    cfg.model.audio_layers = 1;
    cfg.model.text_layers = 1;
    cfg.model.heads = 2;
    cfg.model.ffn_mult = 2;
    cfg.model.vocab_size = 256;
    cfg.model.max_text_len = 16;
    cfg.model.proj_dim = 32;
    cfg.model.matryoshka_dims = {32, 16, 8, 4};
    cfg.train.batch_size = 8;
    cfg.train.epochs = 10;
    cfg.train.matryoshka = false;
    return cfg;
}

} // namespace wavlink
