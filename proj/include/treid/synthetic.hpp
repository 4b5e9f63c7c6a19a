#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "treid/tracklet.hpp"

namespace treid {

// Latent-factor benchmark: entities emit fragmented, noisy tracklet
// observations with ground-truth identities.
struct SyntheticConfig {
    std::size_t procedures = 200;
    std::size_t entities_min = 2, entities_max = 2;      // per procedure
    std::size_t tracklets_min = 2, tracklets_max = 4;    // per entity (injected fragmentation)
    std::size_t frames_min = 20, frames_max = 40;        // per tracklet
    std::size_t feature_dim = 32;                        // F
    std::size_t identity_dim = 8;                        // k
    std::size_t nuisance_dim = 8;
    double view_noise = 0.6;        // sigma_v, scales the smoothed nuisance
    double observation_noise = 0.1; // sigma_eps, iid per feature
    double fps = 30.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticDataset {
    std::vector<TrackletRecord> tracklets;
    std::map<std::int64_t, std::int64_t> entity_of_tracklet;
};

// Per entity: identity z ~ N(0, I_k). Per frame: nuisance u follows an
// AR(1) chain (coefficient 0.9, unit stationary variance) within each
// tracklet, and
//   features = tanh(A z + sigma_v * B u) + eps,  eps ~ N(0, sigma_eps^2 I)
// with A, B fixed per-dataset mixing maps. Entity ids are unique across
// procedures. Deterministic given the seed.
SyntheticDataset generate_dataset(const SyntheticConfig& cfg);

struct FrameScore {
    std::int64_t tracklet_id = 0;
    std::int64_t frame_index = 0;
    double score = 0.0;
};

// Stand-in per-frame classifier: score ~ clamp(N(mu_label, noise), 0, 1)
// with mu_1 = 0.5 + separability/2 and mu_0 = 0.5 - separability/2.
// Throws DataError when a tracklet's entity has no class label.
std::vector<FrameScore> inject_frame_scores(const std::vector<TrackletRecord>& tracklets,
                                            const std::map<std::int64_t, int>& class_of_entity,
                                            double separability, double noise,
                                            std::uint64_t seed);

}  // namespace treid
