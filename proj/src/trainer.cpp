#include "wavlink/trainer.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/io.hpp"
#include "wavlink/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wavlink {

TensorPtr gather_and_loss(const std::vector<TensorPtr>& audio_shards,
                          const std::vector<TensorPtr>& text_shards,
                          const TrainConfig& cfg,
                          const MatryoshkaSpec& mspec,
                          const LossParams& params) {
    if (audio_shards.empty() || audio_shards.size() != text_shards.size()) {
        throw ValidationError("gather_and_loss: shard lists must be nonempty and equal-sized");
    }
    const int d = audio_shards[0]->cols();
    for (const auto& s : audio_shards) {
        if (s->shape.size() != 2 || s->shape[1] != d) {
            throw ValidationError("gather_and_loss: audio shard dim mismatch: expected " +
                                  std::to_string(d) + " got " + s->shape_str());
        }
    }
    for (const auto& s : text_shards) {
        if (s->shape.size() != 2 || s->shape[1] != d) {
            throw ValidationError("gather_and_loss: text shard dim mismatch: expected " +
                                  std::to_string(d) + " got " + s->shape_str());
        }
    }
    const auto ua = audio_shards.size() == 1 ? audio_shards[0] : ops::concat_rows(audio_shards);
    const auto ut = text_shards.size() == 1 ? text_shards[0] : ops::concat_rows(text_shards);
    if (cfg.matryoshka) {
        return matryoshka_loss(ua, ut, mspec, cfg.loss, params, cfg.renormalize_slices);
    }
    return cfg.loss == LossKind::clip ? clip_loss(ua, ut, params)
                                      : siglip_loss(ua, ut, params);
}

TrainState init_train_state(const RunConfig& cfg) {
    cfg.validate();
    TrainState st;
    st.model = build_model(cfg.model, cfg.train.text_style, cfg.train.seed);
    if (cfg.train.regime == Regime::lora) {
        apply_lora(st.model, st.model.audio, cfg.train.lora_rank, cfg.train.lora_alpha,
                   cfg.train.seed);
        if (cfg.train.scope == Scope::both_towers) {
            apply_lora(st.model, st.model.text, cfg.train.lora_rank, cfg.train.lora_alpha,
                       cfg.train.seed);
        }
    }
    st.loss_params = LossParams::init_for(cfg.train.loss);
    st.model.params.add("loss.log_temperature", st.loss_params.log_temperature);
    st.model.params.add("loss.siglip_bias", st.loss_params.siglip_bias);
    return st;
}

RetrievalPool build_pool(const Model& m, const Dataset& data,
                         const std::vector<int>& indices) {
    RetrievalPool pool;
    const int n = static_cast<int>(indices.size());
    pool.audio.reserve(n);
    pool.text.reserve(n);
    for (int i = 0; i < n; ++i) {
        const auto& item = data.items[indices[i]];
        pool.audio.push_back(embed_audio(m, item.features));
        pool.text.push_back(embed_text_raw(m, item.tokens));
        pool.audio_to_text.push_back({i});
        pool.text_to_audio.push_back({i});
    }
    return pool;
}

namespace {

struct BatchEmbeddings {
    std::vector<TensorPtr> audio_shards;
    std::vector<TensorPtr> text_shards;
};

BatchEmbeddings forward_batch(const Model& m, const Dataset& data,
                              const std::vector<int>& batch_indices, int workers) {
    const int b = static_cast<int>(batch_indices.size());
    const int per_worker = b / workers;
    std::vector<TensorPtr> audio_rows, text_rows;
    audio_rows.reserve(b);
    text_rows.reserve(b);
    for (int idx : batch_indices) {
        const auto& item = data.items[idx];
        auto za = audio_encode(item.features, m.audio, m.cfg);
        audio_rows.push_back(project_normalize(za, m.audio.projector));
        auto prepared = prepare_tokens(item.tokens, m.text_style, m.cfg);
        auto zt = text_encode(prepared, m.text, m.cfg, m.text_style);
        text_rows.push_back(project_normalize(zt, m.text.projector));
    }
    BatchEmbeddings out;
    for (int w = 0; w < workers; ++w) {
        std::vector<TensorPtr> arows(audio_rows.begin() + w * per_worker,
                                     audio_rows.begin() + (w + 1) * per_worker);
        std::vector<TensorPtr> trows(text_rows.begin() + w * per_worker,
                                     text_rows.begin() + (w + 1) * per_worker);
        out.audio_shards.push_back(arows.size() == 1 ? arows[0] : ops::concat_rows(arows));
        out.text_shards.push_back(trows.size() == 1 ? trows[0] : ops::concat_rows(trows));
    }
    return out;
}

} // namespace

TrainResult train(const Dataset& data, const RunConfig& cfg,
                  std::optional<TrainState> resume_from, const LogFn& log) {
    cfg.validate();
    if (data.train_indices.empty()) {
        throw ValidationError("train: dataset has no training pairs");
    }
    for (int idx : data.train_indices) {
        data.items[idx].features.validate();
    }

    TrainResult result;
    if (resume_from) {
        result.state = std::move(*resume_from);
    } else {
        result.state = init_train_state(cfg);
    }
    TrainState& st = result.state;
    Model& model = st.model;

    const auto mask = build_mask(model, cfg.train.regime, cfg.train.scope, cfg.train.loss);
    MatryoshkaSpec mspec{cfg.model.matryoshka_dims};

    // frozen tensors stay out of the recorded graph entirely
    for (const auto& [name, t] : model.params.items()) {
        t->requires_grad = mask.count(name) != 0;
        if (t->requires_grad) t->ensure_grad();
    }

    // fixed 10% validation split drawn from a dedicated seed stream
    std::vector<int> order = data.train_indices;
    {
        std::vector<int> perm(order.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
        Rng split_rng(cfg.train.seed, 999);
        split_rng.shuffle(perm);
        std::vector<int> shuffled(order.size());
        for (size_t i = 0; i < perm.size(); ++i) shuffled[i] = order[perm[i]];
        order = std::move(shuffled);
    }
    const size_t val_count = order.size() / 10;
    std::vector<int> val_indices(order.begin(), order.begin() + val_count);
    std::vector<int> train_indices(order.begin() + val_count, order.end());

    const int batch = cfg.train.batch_size;
    if (static_cast<size_t>(batch) > train_indices.size()) {
        throw ValidationError("train: batch_size exceeds training split size " +
                              std::to_string(train_indices.size()));
    }
    const int64_t steps_per_epoch = static_cast<int64_t>(train_indices.size() / batch);
    const int64_t total_steps = steps_per_epoch * cfg.train.epochs;

    const double max_log_temp = std::log(kMaxTemperature);

    int64_t sched_step = 0;
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        Rng epoch_rng(cfg.train.seed, 2000 + static_cast<uint64_t>(epoch));
        std::vector<int> epoch_order = train_indices;
        epoch_rng.shuffle(epoch_order);

        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (int64_t s = 0; s < steps_per_epoch; ++s) {
            std::vector<int> batch_indices(epoch_order.begin() + s * batch,
                                           epoch_order.begin() + (s + 1) * batch);
            try {
                auto shards = forward_batch(model, data, batch_indices,
                                            cfg.train.simulated_workers);
                auto loss = gather_and_loss(shards.audio_shards, shards.text_shards,
                                            cfg.train, mspec, st.loss_params);
                backward(loss);
                clip_gradients(model.params, mask, cfg.train.grad_clip);
                ++sched_step;
                const double lr = cosine_warmup_lr(sched_step, total_steps, cfg.train);
                adamw_step(model.params, mask, st.opt, lr, cfg.train);
                st.loss_params.log_temperature->data[0] =
                    std::min(st.loss_params.log_temperature->data[0], max_log_temp);
                loss_sum += loss->data[0];
                ++loss_count;
                result.step_losses.push_back(loss->data[0]);
                ++st.steps_done;
            } catch (const DegenerateEmbeddingError& e) {
                ++result.skipped_steps;
                if (log) log(std::string("step skipped: ") + e.what());
            }
            model.params.zero_grads();
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        if (!val_indices.empty()) {
            const auto pool = build_pool(model, data, val_indices);
            em.val_t2a_r1 = recall_at_k(pool, Direction::t2a, 1);
            em.val_a2t_r1 = recall_at_k(pool, Direction::a2t, 1);
        }
        result.epochs.push_back(em);
        if (log) {
            std::ostringstream os;
            os << "epoch " << epoch << " loss " << em.mean_loss
               << " val t2a R@1 " << em.val_t2a_r1 << " a2t R@1 " << em.val_a2t_r1
               << " tau " << st.loss_params.temperature();
            log(os.str());
        }
    }
    return result;
}

namespace {
constexpr uint16_t kCheckpointVersion = 1;
}

void save_checkpoint(const std::string& path, const TrainState& state,
                     const RunConfig& cfg) {
    auto os = io::open_out(path);
    os.write("WLCK", 4);
    io::write_u16(os, kCheckpointVersion);
    const std::string cfg_text = cfg.to_json_text();
    io::write_u64(os, fnv1a64(cfg_text));
    io::write_string(os, cfg_text);
    io::write_u64(os, static_cast<uint64_t>(state.steps_done));
    io::write_u64(os, static_cast<uint64_t>(state.opt.step));

    const auto& items = state.model.params.items();
    // params + adam moments, all as named tensors
    uint32_t count = static_cast<uint32_t>(items.size());
    count += static_cast<uint32_t>(state.opt.m.size() + state.opt.v.size());
    io::write_u32(os, count);
    auto write_named = [&os](const std::string& name, const std::vector<int>& shape,
                             const std::vector<double>& data) {
        io::write_string(os, name);
        io::write_u32(os, static_cast<uint32_t>(shape.size()));
        for (int d : shape) io::write_u32(os, static_cast<uint32_t>(d));
        io::write_f64_array(os, data);
    };
    for (const auto& [name, t] : items) {
        write_named(name, t->shape, t->data);
    }
    for (const auto& [name, m] : state.opt.m) {
        write_named("opt.m." + name, {static_cast<int>(m.size())}, m);
    }
    for (const auto& [name, v] : state.opt.v) {
        write_named("opt.v." + name, {static_cast<int>(v.size())}, v);
    }
    if (!os) throw IoError("failed writing checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "WLCK", "checkpoint " + path);
    const uint16_t version = io::read_u16(is);
    if (version != kCheckpointVersion) {
        throw IoError("checkpoint " + path + ": unsupported version " +
                      std::to_string(version));
    }
    const uint64_t hash = io::read_u64(is);
    const std::string cfg_text = io::read_string(is);
    if (fnv1a64(cfg_text) != hash) {
        throw IoError("checkpoint " + path + ": config hash mismatch");
    }

    LoadedCheckpoint out;
    out.cfg = RunConfig::from_json_text(cfg_text);
    out.state = init_train_state(out.cfg);
    out.state.steps_done = static_cast<int64_t>(io::read_u64(is));
    out.state.opt.step = static_cast<int64_t>(io::read_u64(is));

    const uint32_t count = io::read_u32(is);
    for (uint32_t i = 0; i < count; ++i) {
        const std::string name = io::read_string(is);
        const uint32_t ndim = io::read_u32(is);
        size_t numel = 1;
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) {
            shape[d] = static_cast<int>(io::read_u32(is));
            numel *= static_cast<size_t>(shape[d]);
        }
        auto data = io::read_f64_array(is, numel);
        if (name.rfind("opt.m.", 0) == 0) {
            out.state.opt.m[name.substr(6)] = std::move(data);
        } else if (name.rfind("opt.v.", 0) == 0) {
            out.state.opt.v[name.substr(6)] = std::move(data);
        } else {
            const auto& t = out.state.model.params.get(name);
            if (t->shape != shape) {
                throw IoError("checkpoint " + path + ": shape mismatch for " + name);
            }
            t->data = std::move(data);
        }
    }
    return out;
}

} // namespace wavlink
