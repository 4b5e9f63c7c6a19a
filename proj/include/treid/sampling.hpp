#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "treid/rng.hpp"
#include "treid/tensor.hpp"
#include "treid/tracklet.hpp"

namespace treid {

// Training-set hygiene: drops tracklets shorter than min_duration_s
// (duration = frame count / fps) or with fewer than min_high_conf
// detections above conf_threshold, then keeps only the longest tracklet
// per procedure (ties broken by lowest tracklet id).
std::vector<TrackletRecord> filter_tracklets(const std::vector<TrackletRecord>& tracklets,
                                             double fps, double min_duration_s = 1.0,
                                             std::size_t min_high_conf = 15,
                                             double conf_threshold = 0.5);

// Half-open frame-index ranges of the two pseudo-positive segments.
struct SplitSegments {
    std::size_t head_begin = 0, head_end = 0;  // [0, floor(a*n))
    std::size_t tail_begin = 0, tail_end = 0;  // [n - floor(b*n), n)
};

// Splits a tracklet of n frames into three disjoint segments; the middle
// one is discarded and the outer two form a positive pair. Throws
// DataError when floor(a*n) or floor(b*n) is zero.
SplitSegments pseudo_positive_split(std::size_t frame_count, double head_fraction = 1.0 / 3.0,
                                    double tail_fraction = 1.0 / 3.0);

enum class SamplingMode {
    kSingleFrame,  // positives are two distinct frames of one tracklet
    kMultiView,    // positives are view sets from the two split segments
};

// One side of a positive pair: the sampled views of one tracklet.
struct BatchSample {
    std::int64_t procedure_id = 0;
    std::int64_t tracklet_id = 0;
    std::vector<std::size_t> view_indices;  // frame positions within the tracklet
    Tensor2D features;                      // views x F
};

// 2N view samples; samples k and k+N are the positive pair and the N
// tracklets come from N distinct procedures.
struct ContrastiveBatch {
    std::size_t pair_count = 0;
    std::vector<BatchSample> samples;
};

// Index over a tracklet list, grouped by procedure.
class TrackletStore {
public:
    explicit TrackletStore(std::vector<TrackletRecord> tracklets);

    const std::vector<TrackletRecord>& tracklets() const { return tracklets_; }
    const TrackletRecord& by_index(std::size_t i) const { return tracklets_[i]; }
    std::size_t size() const { return tracklets_.size(); }

    const std::vector<std::int64_t>& procedure_ids() const { return procedure_ids_; }
    const std::vector<std::size_t>& tracklets_of(std::int64_t procedure_id) const;

private:
    std::vector<TrackletRecord> tracklets_;
    std::vector<std::int64_t> procedure_ids_;                 // sorted
    std::map<std::int64_t, std::vector<std::size_t>> by_procedure_;
};

// Samples one tracklet from each of N distinct procedures and two views
// (or view sets) per tracklet. Throws DataError when fewer than N
// procedures have an eligible tracklet.
ContrastiveBatch build_batch(const TrackletStore& store, std::size_t pair_count,
                             SamplingMode mode, std::size_t views_per_sample, Rng& rng,
                             double head_fraction = 1.0 / 3.0,
                             double tail_fraction = 1.0 / 3.0);

}  // namespace treid
