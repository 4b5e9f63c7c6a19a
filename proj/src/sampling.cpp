#include "treid/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "treid/errors.hpp"

namespace treid {

std::vector<TrackletRecord> filter_tracklets(const std::vector<TrackletRecord>& tracklets,
                                             double fps, double min_duration_s,
                                             std::size_t min_high_conf,
                                             double conf_threshold) {
    if (fps <= 0.0) throw ConfigError("filter_tracklets: fps must be positive");

    std::vector<TrackletRecord> surviving;
    for (const auto& t : tracklets) {
        const double duration = static_cast<double>(t.frames.size()) / fps;
        if (duration < min_duration_s) continue;
        std::size_t high_conf = 0;
        for (const auto& f : t.frames) {
            if (f.confidence > conf_threshold) ++high_conf;
        }
        if (high_conf < min_high_conf) continue;
        surviving.push_back(t);
    }

    // Longest per procedure; ties go to the lowest tracklet id.
    std::map<std::int64_t, const TrackletRecord*> best;
    for (const auto& t : surviving) {
        auto [it, inserted] = best.try_emplace(t.procedure_id, &t);
        if (!inserted) {
            const TrackletRecord* cur = it->second;
            if (t.frames.size() > cur->frames.size() ||
                (t.frames.size() == cur->frames.size() && t.tracklet_id < cur->tracklet_id)) {
                it->second = &t;
            }
        }
    }
    std::vector<TrackletRecord> out;
    out.reserve(best.size());
    for (const auto& [proc, t] : best) out.push_back(*t);
    return out;
}

SplitSegments pseudo_positive_split(std::size_t frame_count, double head_fraction,
                                    double tail_fraction) {
    if (head_fraction <= 0.0 || tail_fraction <= 0.0 || head_fraction + tail_fraction > 1.0) {
        throw ConfigError("pseudo_positive_split: fractions must be positive and sum to at most 1");
    }
    const auto head = static_cast<std::size_t>(
        std::floor(head_fraction * static_cast<double>(frame_count)));
    const auto tail = static_cast<std::size_t>(
        std::floor(tail_fraction * static_cast<double>(frame_count)));
    if (head < 1 || tail < 1) {
        throw DataError("pseudo_positive_split: tracklet of " + std::to_string(frame_count) +
                        " frames is too short to split");
    }
    SplitSegments s;
    s.head_begin = 0;
    s.head_end = head;
    s.tail_begin = frame_count - tail;
    s.tail_end = frame_count;
    return s;
}

TrackletStore::TrackletStore(std::vector<TrackletRecord> tracklets)
    : tracklets_(std::move(tracklets)) {
    for (std::size_t i = 0; i < tracklets_.size(); ++i) {
        by_procedure_[tracklets_[i].procedure_id].push_back(i);
    }
    procedure_ids_.reserve(by_procedure_.size());
    for (const auto& [proc, idx] : by_procedure_) procedure_ids_.push_back(proc);
}

const std::vector<std::size_t>& TrackletStore::tracklets_of(std::int64_t procedure_id) const {
    static const std::vector<std::size_t> kEmpty;
    auto it = by_procedure_.find(procedure_id);
    return it == by_procedure_.end() ? kEmpty : it->second;
}

namespace {

bool eligible(const TrackletRecord& t, SamplingMode mode, double head_fraction,
              double tail_fraction) {
    if (mode == SamplingMode::kSingleFrame) return t.frames.size() >= 2;
    const std::size_t n = t.frames.size();
    return static_cast<std::size_t>(std::floor(head_fraction * static_cast<double>(n))) >= 1 &&
           static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(n))) >= 1;
}

Tensor2D gather_views(const TrackletRecord& t, const std::vector<std::size_t>& indices) {
    Tensor2D views(indices.size(), t.frames.front().features.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        views.set_row(i, t.frames[indices[i]].features);
    }
    return views;
}

// views_per_sample positions from [begin, end): without replacement when
// the segment is long enough, with replacement otherwise (keeps shapes
// fixed, no padding). Ascending order.
std::vector<std::size_t> sample_segment(std::size_t begin, std::size_t end,
                                        std::size_t views_per_sample, Rng& rng) {
    const std::size_t len = end - begin;
    std::vector<std::size_t> picked;
    if (len >= views_per_sample) {
        picked = rng.sample_without_replacement(len, views_per_sample);
    } else {
        picked.resize(views_per_sample);
        for (auto& p : picked) p = static_cast<std::size_t>(rng.uniform_int(len));
        std::sort(picked.begin(), picked.end());
    }
    for (auto& p : picked) p += begin;
    return picked;
}

}  // namespace

ContrastiveBatch build_batch(const TrackletStore& store, std::size_t pair_count,
                             SamplingMode mode, std::size_t views_per_sample, Rng& rng,
                             double head_fraction, double tail_fraction) {
    if (pair_count < 2) throw ConfigError("build_batch: need at least 2 pairs");

    // Procedures that own at least one eligible tracklet.
    std::vector<std::int64_t> procedures;
    for (std::int64_t proc : store.procedure_ids()) {
        for (std::size_t idx : store.tracklets_of(proc)) {
            if (eligible(store.by_index(idx), mode, head_fraction, tail_fraction)) {
                procedures.push_back(proc);
                break;
            }
        }
    }
    if (procedures.size() < pair_count) {
        throw DataError("build_batch: need " + std::to_string(pair_count) +
                        " procedures with eligible tracklets, have " +
                        std::to_string(procedures.size()));
    }
    rng.shuffle(procedures);
    procedures.resize(pair_count);

    ContrastiveBatch batch;
    batch.pair_count = pair_count;
    batch.samples.resize(2 * pair_count);
    for (std::size_t k = 0; k < pair_count; ++k) {
        const auto& candidates = store.tracklets_of(procedures[k]);
        std::vector<std::size_t> pool;
        for (std::size_t idx : candidates) {
            if (eligible(store.by_index(idx), mode, head_fraction, tail_fraction)) {
                pool.push_back(idx);
            }
        }
        const TrackletRecord& t =
            store.by_index(pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))]);

        std::vector<std::size_t> first, second;
        if (mode == SamplingMode::kSingleFrame) {
            auto pair = rng.sample_without_replacement(t.frames.size(), 2);
            if (rng.uniform() < 0.5) std::swap(pair[0], pair[1]);
            first = {pair[0]};
            second = {pair[1]};
        } else {
            const SplitSegments seg =
                pseudo_positive_split(t.frames.size(), head_fraction, tail_fraction);
            first = sample_segment(seg.head_begin, seg.head_end, views_per_sample, rng);
            second = sample_segment(seg.tail_begin, seg.tail_end, views_per_sample, rng);
        }

        batch.samples[k] = {t.procedure_id, t.tracklet_id, first, gather_views(t, first)};
        batch.samples[k + pair_count] = {t.procedure_id, t.tracklet_id, second,
                                         gather_views(t, second)};
    }
    return batch;
}

}  // namespace treid
