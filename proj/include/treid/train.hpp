#pragma once

#include <cstdint>
#include <vector>

#include "treid/encoders.hpp"
#include "treid/optim.hpp"
#include "treid/sampling.hpp"
#include "treid/tracklet.hpp"

namespace treid {

struct TrainConfig {
    std::uint64_t seed = 0;
    std::size_t batch_pairs = 16;  // N tracklets per batch, one per procedure
    std::size_t phase1_steps = 400;
    std::size_t phase2_steps = 600;
    std::size_t views_per_sample = 8;
    double temperature = 0.1;
    LarsConfig lars;
    double head_fraction = 1.0 / 3.0;
    double tail_fraction = 1.0 / 3.0;
    bool freeze_backbone_phase2 = false;
    EncoderConfig encoder;

    // Dataset hygiene applied before training.
    double fps = 30.0;
    double min_duration_s = 1.0;
    std::size_t min_high_conf = 15;
    double conf_threshold = 0.5;
};

struct TrainResult {
    FrameEncoder frame;
    JointEncoder joint;
    std::vector<double> phase1_loss;
    std::vector<double> phase2_loss;
};

// Two-phase contrastive training: the single-frame encoder first
// (within-tracklet positives), then the joint encoder with its backbone
// initialized from phase 1 (pseudo-positive segment pairs). Deterministic
// given the seed, independent of worker count.
TrainResult train_reid(const std::vector<TrackletRecord>& dataset, const TrainConfig& cfg);

// Forwards every batch sample through `encoder`, computes the contrastive
// loss, backpropagates per sample and accumulates parameter gradients on
// `encoder` (which is zeroed first). Sample work runs in parallel on
// per-worker clones; per-sample gradients are reduced in sample order, so
// the result does not depend on the worker count. Returns the loss.
// Instantiated for FrameEncoder and JointEncoder.
template <typename Encoder>
double contrastive_batch_gradients(Encoder& encoder, const ContrastiveBatch& batch,
                                   double temperature);

}  // namespace treid
