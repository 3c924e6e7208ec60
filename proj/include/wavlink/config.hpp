#pragma once

#include "wavlink/adapt.hpp"
#include "wavlink/model.hpp"

#include <cstdint>
#include <string>

namespace wavlink {

struct TrainConfig {
    double lr_peak{1e-4};
    double weight_decay{0.01};
    double beta1{0.9};
    double beta2{0.999};
    double adam_eps{1e-8};
    // desk-scale default: small batches buy enough optimizer steps for the
    // fixed 1e-4 peak learning rate within a 10-epoch budget
    int batch_size{8};
    int epochs{10};
    double warmup_fraction{0.05};
    uint64_t seed{7};
    Regime regime{Regime::full};
    Scope scope{Scope::both_towers};
    LossKind loss{LossKind::clip};
    bool matryoshka{true};
    bool renormalize_slices{false};
    int simulated_workers{1};
    int lora_rank{8};
    double lora_alpha{8.0};
    double grad_clip{0.0}; // 0 disables clipping
    TextStyle text_style{TextStyle::clip_style};

    void validate() const;
};

// Flat-key JSON config covering both the model and the training run.
// Unknown keys are rejected.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_text() const; // canonical: sorted keys
    uint64_t hash() const;

    void validate() const {
        model.validate();
        train.validate();
    }
};

// Desk-scale default used by the training criteria.
RunConfig default_desk_config();

// Reduced size used by the design sweep so the full grid stays cheap.
RunConfig micro_sweep_config();

} // namespace wavlink
