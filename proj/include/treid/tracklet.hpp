#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace treid {

// One detection inside a tracklet.
struct FrameObservation {
    std::int64_t frame_index = 0;
    double timestamp = 0.0;   // seconds
    double confidence = 0.0;  // detector confidence in [0, 1]
    std::vector<double> features;
};

// A maximal run of same-target detections from one procedure, as produced
// by a short-term tracker. entity_id is the ground-truth identity when
// known (synthetic data or annotated evaluation sets).
struct TrackletRecord {
    std::int64_t tracklet_id = 0;
    std::int64_t procedure_id = 0;
    std::optional<std::int64_t> entity_id;
    std::vector<FrameObservation> frames;

    std::size_t length() const { return frames.size(); }
    double start_time() const { return frames.empty() ? 0.0 : frames.front().timestamp; }
};

}  // namespace treid
