#pragma once

#include "wavlink/model.hpp"

#include <set>
#include <string>

namespace wavlink {

enum class Regime { projector_only, lora, full };
enum class Scope { audio_only, both_towers };

Regime regime_from_string(const std::string& s);
Scope scope_from_string(const std::string& s);
std::string to_string(Regime r);
std::string to_string(Scope s);

enum class LossKind { clip, siglip };
LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

// Names of the tensors one optimizer step is allowed to touch.
using TrainableMask = std::set<std::string>;

// Regime x scope -> trainable set over the model's registry. The global
// audio token and the loss temperature are trainable under every pair; the
// SigLIP bias joins only when that loss is selected. audio_only freezes the
// whole text tower, projector included.
TrainableMask build_mask(const Model& m, Regime regime, Scope scope, LossKind loss);

// Attaches zero-initialized low-rank adapters to the attention q/k/v/output
// projections of the given tower and registers the factors. Forward output
// is unchanged until the factors train away from B=0.
void apply_lora(Model& m, TowerParams& tower, int rank, double alpha, uint64_t seed);

} // namespace wavlink
