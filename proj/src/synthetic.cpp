#include "treid/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "treid/errors.hpp"
#include "treid/rng.hpp"
#include "treid/tensor.hpp"

namespace treid {

void SyntheticConfig::validate() const {
    if (procedures == 0 || entities_min == 0 || tracklets_min == 0 || frames_min == 0 ||
        feature_dim == 0 || identity_dim == 0) {
        throw ConfigError("synthetic config: counts must be at least 1");
    }
    if (entities_max < entities_min || tracklets_max < tracklets_min ||
        frames_max < frames_min) {
        throw ConfigError("synthetic config: range maxima must be >= minima");
    }
    if (view_noise < 0.0 || observation_noise < 0.0) {
        throw ConfigError("synthetic config: noise levels must be non-negative");
    }
    if (fps <= 0.0) throw ConfigError("synthetic config: fps must be positive");
}

namespace {

std::size_t draw_in_range(std::size_t lo, std::size_t hi, Rng& rng) {
    return lo + static_cast<std::size_t>(rng.uniform_int(hi - lo + 1));
}

constexpr double kArCoefficient = 0.9;

}  // namespace

SyntheticDataset generate_dataset(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    // Fixed per-dataset mixing maps, scaled for O(1) tanh inputs.
    Tensor2D identity_map(cfg.feature_dim, cfg.identity_dim);
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(cfg.identity_dim));
    for (double& v : identity_map.data()) v = rng.normal() * a_scale;
    Tensor2D nuisance_map(cfg.feature_dim, std::max<std::size_t>(cfg.nuisance_dim, 1));
    const double b_scale =
        cfg.nuisance_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(cfg.nuisance_dim)) : 0.0;
    for (double& v : nuisance_map.data()) v = rng.normal() * b_scale;

    SyntheticDataset out;
    std::int64_t next_entity = 0;
    std::int64_t next_tracklet = 0;
    const double ar_innovation = std::sqrt(1.0 - kArCoefficient * kArCoefficient);

    for (std::size_t proc = 0; proc < cfg.procedures; ++proc) {
        const std::size_t entities = draw_in_range(cfg.entities_min, cfg.entities_max, rng);

        // Identities and their tracklet counts for this procedure.
        struct PendingTracklet {
            std::int64_t entity;
            std::vector<double> identity_mix;  // A z, precomputed per entity
        };
        std::vector<PendingTracklet> pending;
        for (std::size_t e = 0; e < entities; ++e) {
            const std::int64_t entity_id = next_entity++;
            std::vector<double> z(cfg.identity_dim);
            for (double& v : z) v = rng.normal();
            std::vector<double> mixed(cfg.feature_dim, 0.0);
            for (std::size_t f = 0; f < cfg.feature_dim; ++f) {
                for (std::size_t j = 0; j < cfg.identity_dim; ++j) {
                    mixed[f] += identity_map(f, j) * z[j];
                }
            }
            const std::size_t count = draw_in_range(cfg.tracklets_min, cfg.tracklets_max, rng);
            for (std::size_t t = 0; t < count; ++t) pending.push_back({entity_id, mixed});
        }
        // Lay tracklets out sequentially in time in shuffled entity order,
        // so fragments of different entities interleave.
        rng.shuffle(pending);

        std::int64_t frame_cursor = 0;
        for (const auto& item : pending) {
            const std::size_t frames = draw_in_range(cfg.frames_min, cfg.frames_max, rng);
            frame_cursor += static_cast<std::int64_t>(draw_in_range(5, 50, rng));  // gap

            TrackletRecord rec;
            rec.tracklet_id = next_tracklet++;
            rec.procedure_id = static_cast<std::int64_t>(proc);
            rec.entity_id = item.entity;
            rec.frames.reserve(frames);

            std::vector<double> nuisance(cfg.nuisance_dim);
            for (double& v : nuisance) v = rng.normal();
            for (std::size_t fi = 0; fi < frames; ++fi) {
                if (fi > 0) {
                    for (double& v : nuisance) {
                        v = kArCoefficient * v + ar_innovation * rng.normal();
                    }
                }
                FrameObservation obs;
                obs.frame_index = frame_cursor;
                obs.timestamp = static_cast<double>(frame_cursor) / cfg.fps;
                obs.confidence = rng.uniform(0.3, 1.0);
                obs.features.resize(cfg.feature_dim);
                for (std::size_t f = 0; f < cfg.feature_dim; ++f) {
                    double nuis = 0.0;
                    for (std::size_t j = 0; j < cfg.nuisance_dim; ++j) {
                        nuis += nuisance_map(f, j) * nuisance[j];
                    }
                    obs.features[f] = std::tanh(item.identity_mix[f] + cfg.view_noise * nuis) +
                                      cfg.observation_noise * rng.normal();
                }
                rec.frames.push_back(std::move(obs));
                ++frame_cursor;
            }
            out.entity_of_tracklet[rec.tracklet_id] = item.entity;
            out.tracklets.push_back(std::move(rec));
        }
    }
    return out;
}

std::vector<FrameScore> inject_frame_scores(const std::vector<TrackletRecord>& tracklets,
                                            const std::map<std::int64_t, int>& class_of_entity,
                                            double separability, double noise,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FrameScore> scores;
    for (const auto& t : tracklets) {
        if (!t.entity_id) {
            throw DataError("inject_frame_scores: tracklet " + std::to_string(t.tracklet_id) +
                            " has no entity label");
        }
        auto it = class_of_entity.find(*t.entity_id);
        if (it == class_of_entity.end()) {
            throw DataError("inject_frame_scores: entity " + std::to_string(*t.entity_id) +
                            " has no class label");
        }
        const double mu = it->second != 0 ? 0.5 + separability / 2.0 : 0.5 - separability / 2.0;
        for (const auto& f : t.frames) {
            const double raw = rng.normal(mu, noise);
            scores.push_back({t.tracklet_id, f.frame_index, std::clamp(raw, 0.0, 1.0)});
        }
    }
    return scores;
}

}  // namespace treid
