#pragma once

#include "wavlink/config.hpp"
#include "wavlink/dataset.hpp"
#include "wavlink/eval.hpp"
#include "wavlink/loss.hpp"
#include "wavlink/optim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wavlink {

// Simulated cross-worker gather: per-worker embedding shards are
// concatenated into the full batch before the loss sees them, so the loss
// covers the full BxB pair matrix and gradients reach every shard.
TensorPtr gather_and_loss(const std::vector<TensorPtr>& audio_shards,
                          const std::vector<TensorPtr>& text_shards,
                          const TrainConfig& cfg,
                          const MatryoshkaSpec& mspec,
                          const LossParams& params);

struct EpochMetrics {
    int epoch{0};
    double mean_loss{0.0};
    double val_t2a_r1{0.0};
    double val_a2t_r1{0.0};
};

struct TrainState {
    Model model;
    LossParams loss_params;
    AdamState opt;
    int64_t steps_done{0};
};

struct TrainResult {
    TrainState state;
    std::vector<EpochMetrics> epochs;
    std::vector<double> step_losses;
    int skipped_steps{0};
};

using LogFn = std::function<void(const std::string&)>;

// Builds the model for cfg (fresh or from a resumed state), runs the epoch
// loop with a fresh schedule, and returns the final state plus metrics.
// Deterministic given cfg.train.seed.
TrainResult train(const Dataset& data, const RunConfig& cfg,
                  std::optional<TrainState> resume_from = std::nullopt,
                  const LogFn& log = nullptr);

// Constructs towers + adapters + loss params for cfg with everything
// registered in the model's ParamStore.
TrainState init_train_state(const RunConfig& cfg);

RetrievalPool build_pool(const Model& m, const Dataset& data,
                         const std::vector<int>& indices);

// checkpoint file: magic WLCK, version, config hash, config JSON, step
// counter, then length-prefixed named tensors (params then optimizer
// moments) as little-endian 64-bit floats
void save_checkpoint(const std::string& path, const TrainState& state,
                     const RunConfig& cfg);

struct LoadedCheckpoint {
    RunConfig cfg;
    TrainState state;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace wavlink
