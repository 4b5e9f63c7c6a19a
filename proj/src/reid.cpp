#include "treid/reid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treid/errors.hpp"
#include "treid/parallel.hpp"

namespace treid {

Tensor2D pairwise_similarity_matrix(const Tensor2D& a, const Tensor2D& b) {
    if (a.rows() == 0 || b.rows() == 0) {
        throw DataError("pairwise_similarity_matrix: empty input");
    }
    return matmul_nt(a, b);
}

double late_fusion_score(const Tensor2D& m, Aggregate agg) {
    if (m.rows() == 0 || m.cols() == 0) throw DataError("late_fusion_score: empty matrix");
    switch (agg) {
        case Aggregate::kMin:
            return *std::min_element(m.data().begin(), m.data().end());
        case Aggregate::kMax:
            return *std::max_element(m.data().begin(), m.data().end());
        case Aggregate::kMean:
            return std::accumulate(m.data().begin(), m.data().end(), 0.0) /
                   static_cast<double>(m.size());
    }
    throw ConfigError("late_fusion_score: unknown aggregate");
}

double joint_score(const Embedding& a, const Embedding& b) { return dot(a, b); }

std::string scorer_id(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::kLateMin: return "late_min";
        case ScorerKind::kLateMax: return "late_max";
        case ScorerKind::kLateMean: return "late_mean";
        case ScorerKind::kMvAverage: return "mv_average";
        case ScorerKind::kMvJoint: return "mv_joint";
    }
    throw ConfigError("scorer_id: unknown scorer");
}

ScorerKind scorer_from_id(const std::string& id) {
    if (id == "late_min") return ScorerKind::kLateMin;
    if (id == "late_max") return ScorerKind::kLateMax;
    if (id == "late_mean") return ScorerKind::kLateMean;
    if (id == "mv_average") return ScorerKind::kMvAverage;
    if (id == "mv_joint") return ScorerKind::kMvJoint;
    throw ConfigError("unknown scorer id: " + id);
}

double calibrate_threshold(const std::vector<PairScore>& scored_pairs, double target_fpr) {
    if (target_fpr < 0.0) throw ConfigError("calibrate_threshold: negative target FPR");
    std::vector<double> negatives;
    for (const auto& p : scored_pairs) {
        if (p.label == PairLabel::kDifferent) negatives.push_back(p.score);
    }
    if (negatives.empty()) {
        throw DataError("calibrate_threshold: no negative pairs to calibrate on");
    }
    std::sort(negatives.begin(), negatives.end());

    // Candidate thresholds are the distinct negative scores plus the value
    // just above the largest one (the zero-false-positive operating point).
    std::vector<double> candidates = negatives;
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(std::nextafter(candidates.back(), INFINITY));

    const auto total = static_cast<double>(negatives.size());
    for (double t : candidates) {
        const auto passing = negatives.end() -
                             std::lower_bound(negatives.begin(), negatives.end(), t);
        if (static_cast<double>(passing) / total <= target_fpr) return t;
    }
    return candidates.back();  // unreachable: the sentinel always satisfies
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void merge(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

GroupingPartition group_tracklets(const std::vector<TrackletRecord>& tracklets,
                                  const std::vector<PairScore>& scores, double threshold,
                                  GroupingMethod method, const std::string& scorer) {
    std::map<std::int64_t, std::size_t> index_of;
    for (std::size_t i = 0; i < tracklets.size(); ++i) {
        index_of[tracklets[i].tracklet_id] = i;
    }
    auto lookup = [&](std::int64_t id) {
        auto it = index_of.find(id);
        if (it == index_of.end()) {
            throw DataError("group_tracklets: pair references unknown tracklet " +
                            std::to_string(id));
        }
        return it->second;
    };
    for (const auto& p : scores) {
        const auto a = lookup(p.tracklet_a);
        const auto b = lookup(p.tracklet_b);
        if (tracklets[a].procedure_id != tracklets[b].procedure_id) {
            throw DataError("group_tracklets: pair (" + std::to_string(p.tracklet_a) + ", " +
                            std::to_string(p.tracklet_b) + ") spans two procedures");
        }
    }

    DisjointSets sets(tracklets.size());
    if (method == GroupingMethod::kComponents) {
        for (const auto& p : scores) {
            if (p.score >= threshold) sets.merge(lookup(p.tracklet_a), lookup(p.tracklet_b));
        }
    } else {
        // Greedy in start-time order: each tracklet joins the earlier group
        // with the best single-link score, when that score clears the
        // threshold.
        std::map<std::pair<std::size_t, std::size_t>, double> score_of;
        for (const auto& p : scores) {
            const auto a = lookup(p.tracklet_a);
            const auto b = lookup(p.tracklet_b);
            score_of[{std::min(a, b), std::max(a, b)}] = p.score;
        }
        std::vector<std::size_t> order(tracklets.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& ta = tracklets[a];
            const auto& tb = tracklets[b];
            if (ta.start_time() != tb.start_time()) return ta.start_time() < tb.start_time();
            return ta.tracklet_id < tb.tracklet_id;
        });
        std::vector<std::size_t> placed;
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const std::size_t cur = order[oi];
            double best = -INFINITY;
            std::size_t best_prev = 0;
            bool found = false;
            for (std::size_t prev : placed) {
                if (tracklets[prev].procedure_id != tracklets[cur].procedure_id) continue;
                auto it = score_of.find({std::min(prev, cur), std::max(prev, cur)});
                if (it == score_of.end()) continue;
                if (it->second > best) {
                    best = it->second;
                    best_prev = prev;
                    found = true;
                }
            }
            if (found && best >= threshold) sets.merge(cur, sets.find(best_prev));
            placed.push_back(cur);
        }
    }

    std::map<std::size_t, std::vector<std::int64_t>> by_root;
    for (std::size_t i = 0; i < tracklets.size(); ++i) {
        by_root[sets.find(i)].push_back(tracklets[i].tracklet_id);
    }
    GroupingPartition partition;
    partition.threshold = threshold;
    partition.scorer = scorer;
    for (auto& [root, members] : by_root) {
        std::sort(members.begin(), members.end());
        partition.groups.push_back(std::move(members));
    }
    std::sort(partition.groups.begin(), partition.groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return partition;
}

std::vector<std::size_t> select_views(std::size_t frame_count, std::size_t max_views) {
    std::vector<std::size_t> idx;
    if (frame_count <= max_views) {
        idx.resize(frame_count);
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }
    idx.reserve(max_views);
    for (std::size_t i = 0; i < max_views; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(frame_count - 1) /
                           static_cast<double>(max_views - 1);
        idx.push_back(static_cast<std::size_t>(std::llround(pos)));
    }
    return idx;
}

std::map<std::int64_t, TrackletEmbeddings> embed_tracklets(
    const std::vector<TrackletRecord>& tracklets, const FrameEncoder& frame,
    const JointEncoder& joint, std::size_t max_views) {
    struct Ctx {
        FrameEncoder frame;
        JointEncoder joint;
    };
    std::vector<TrackletEmbeddings> slots(tracklets.size());
    parallel_for_with<Ctx>(
        tracklets.size(), [&]() { return Ctx{frame, joint}; },
        [&](Ctx& ctx, std::size_t i) {
            const TrackletRecord& t = tracklets[i];
            if (t.frames.empty()) {
                throw DataError("embed_tracklets: tracklet " + std::to_string(t.tracklet_id) +
                                " has no frames");
            }
            const auto views = select_views(t.frames.size(), max_views);
            Tensor2D features(views.size(), t.frames.front().features.size());
            for (std::size_t v = 0; v < views.size(); ++v) {
                features.set_row(v, t.frames[views[v]].features);
            }
            TrackletEmbeddings& out = slots[i];
            out.per_view = ctx.frame.forward(features);
            out.average = encode_tracklet_average(features, ctx.frame);
            out.joint = encode_tracklet_joint(features, ctx.joint);
        });

    std::map<std::int64_t, TrackletEmbeddings> result;
    for (std::size_t i = 0; i < tracklets.size(); ++i) {
        result[tracklets[i].tracklet_id] = std::move(slots[i]);
    }
    return result;
}

std::vector<PairScore> score_pairs(const std::vector<TrackletRecord>& tracklets,
                                   const std::map<std::int64_t, TrackletEmbeddings>& embeddings,
                                   ScorerKind scorer) {
    // Same-procedure unordered pairs, ordered by (procedure, id_a, id_b).
    std::map<std::int64_t, std::vector<const TrackletRecord*>> by_procedure;
    for (const auto& t : tracklets) by_procedure[t.procedure_id].push_back(&t);

    std::vector<std::pair<const TrackletRecord*, const TrackletRecord*>> pairs;
    for (auto& [proc, members] : by_procedure) {
        std::sort(members.begin(), members.end(),
                  [](const auto* a, const auto* b) { return a->tracklet_id < b->tracklet_id; });
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                pairs.emplace_back(members[i], members[j]);
            }
        }
    }

    std::vector<PairScore> scores(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        const TrackletRecord& a = *pairs[i].first;
        const TrackletRecord& b = *pairs[i].second;
        const TrackletEmbeddings& ea = embeddings.at(a.tracklet_id);
        const TrackletEmbeddings& eb = embeddings.at(b.tracklet_id);

        double value = 0.0;
        switch (scorer) {
            case ScorerKind::kLateMin:
                value = late_fusion_score(pairwise_similarity_matrix(ea.per_view, eb.per_view),
                                          Aggregate::kMin);
                break;
            case ScorerKind::kLateMax:
                value = late_fusion_score(pairwise_similarity_matrix(ea.per_view, eb.per_view),
                                          Aggregate::kMax);
                break;
            case ScorerKind::kLateMean:
                value = late_fusion_score(pairwise_similarity_matrix(ea.per_view, eb.per_view),
                                          Aggregate::kMean);
                break;
            case ScorerKind::kMvAverage:
                value = joint_score(ea.average, eb.average);
                break;
            case ScorerKind::kMvJoint:
                value = joint_score(ea.joint, eb.joint);
                break;
        }

        PairScore& out = scores[i];
        out.tracklet_a = a.tracklet_id;
        out.tracklet_b = b.tracklet_id;
        out.score = value;
        if (a.entity_id && b.entity_id) {
            out.label = *a.entity_id == *b.entity_id ? PairLabel::kSame : PairLabel::kDifferent;
        } else {
            out.label = PairLabel::kUnknown;
        }
    });
    return scores;
}

}  // namespace treid
