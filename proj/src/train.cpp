#include "treid/train.hpp"

#include "treid/errors.hpp"
#include "treid/loss.hpp"
#include "treid/parallel.hpp"

namespace treid {

template <typename Encoder>
double contrastive_batch_gradients(Encoder& encoder, const ContrastiveBatch& batch,
                                   double temperature) {
    const std::size_t total = batch.samples.size();
    const std::size_t embed_dim = encoder.config().embed_dim;

    std::vector<Embedding> embeddings(total);
    parallel_for_with<Encoder>(
        total, [&]() { return encoder; },
        [&](Encoder& clone, std::size_t i) {
            embeddings[i] = clone.forward(batch.samples[i].features).row_copy(0);
        });

    Tensor2D stacked(total, embed_dim);
    for (std::size_t i = 0; i < total; ++i) stacked.set_row(i, embeddings[i]);
    const NtXentResult loss = nt_xent_loss(stacked, LossConfig{temperature});

    // Per-sample gradient snapshots, reduced in sample order.
    std::vector<std::vector<Tensor2D>> slots(total);
    parallel_for_with<Encoder>(
        total, [&]() { return encoder; },
        [&](Encoder& clone, std::size_t i) {
            clone.zero_grad();
            clone.forward(batch.samples[i].features);
            Tensor2D upstream(1, embed_dim);
            upstream.set_row(0, loss.grad.row_copy(i));
            clone.backward(upstream);
            auto clone_params = clone.params();
            slots[i].reserve(clone_params.size());
            for (const auto& p : clone_params) slots[i].push_back(*p.grad);
        });

    encoder.zero_grad();
    auto params = encoder.params();
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t p = 0; p < params.size(); ++p) {
            add_inplace(*params[p].grad, slots[i][p]);
        }
    }
    return loss.loss;
}

template double contrastive_batch_gradients<FrameEncoder>(FrameEncoder&,
                                                          const ContrastiveBatch&, double);
template double contrastive_batch_gradients<JointEncoder>(JointEncoder&,
                                                          const ContrastiveBatch&, double);

TrainResult train_reid(const std::vector<TrackletRecord>& dataset, const TrainConfig& cfg) {
    cfg.encoder.validate();
    cfg.lars.validate();
    if (cfg.temperature <= 0.0) throw ConfigError("train: temperature must be positive");
    if (cfg.views_per_sample == 0 || cfg.views_per_sample > cfg.encoder.max_views) {
        throw ConfigError("train: views_per_sample must be in [1, max_views]");
    }

    const TrackletStore store(filter_tracklets(dataset, cfg.fps, cfg.min_duration_s,
                                               cfg.min_high_conf, cfg.conf_threshold));

    Rng rng(cfg.seed);
    TrainResult result{FrameEncoder(cfg.encoder), JointEncoder(cfg.encoder), {}, {}};
    result.frame.init(rng);
    result.joint.init(rng);

    OptimizerState frame_state;
    result.phase1_loss.reserve(cfg.phase1_steps);
    for (std::size_t step = 0; step < cfg.phase1_steps; ++step) {
        const ContrastiveBatch batch =
            build_batch(store, cfg.batch_pairs, SamplingMode::kSingleFrame, 1, rng,
                        cfg.head_fraction, cfg.tail_fraction);
        result.phase1_loss.push_back(
            contrastive_batch_gradients(result.frame, batch, cfg.temperature));
        lars_step(result.frame.params(), frame_state, cfg.lars);
    }

    if (cfg.phase2_steps > 0) result.joint.init_backbone_from(result.frame);

    OptimizerState joint_state;
    result.phase2_loss.reserve(cfg.phase2_steps);
    for (std::size_t step = 0; step < cfg.phase2_steps; ++step) {
        const ContrastiveBatch batch =
            build_batch(store, cfg.batch_pairs, SamplingMode::kMultiView, cfg.views_per_sample,
                        rng, cfg.head_fraction, cfg.tail_fraction);
        result.phase2_loss.push_back(
            contrastive_batch_gradients(result.joint, batch, cfg.temperature));

        std::vector<NamedParam> trainable;
        for (auto& p : result.joint.params()) {
            if (cfg.freeze_backbone_phase2 && p.name.starts_with("backbone.")) continue;
            trainable.push_back(p);
        }
        lars_step(trainable, joint_state, cfg.lars);
    }
    return result;
}

}  // namespace treid
