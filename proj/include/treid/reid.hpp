#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "treid/encoders.hpp"
#include "treid/tensor.hpp"
#include "treid/tracklet.hpp"

namespace treid {

// M[p][q] = dot(A[p], B[q]) over unit-norm embedding rows.
// Throws DataError on empty inputs.
Tensor2D pairwise_similarity_matrix(const Tensor2D& a, const Tensor2D& b);

enum class Aggregate { kMin, kMax, kMean };

// Late fusion: one aggregate over all entries of a frame-pair similarity
// matrix.
double late_fusion_score(const Tensor2D& m, Aggregate agg);

// Early fusion: similarity of two tracklet-level embeddings.
double joint_score(const Embedding& a, const Embedding& b);

enum class ScorerKind { kLateMin, kLateMax, kLateMean, kMvAverage, kMvJoint };

std::string scorer_id(ScorerKind kind);
ScorerKind scorer_from_id(const std::string& id);

// Pair labels as stored in the pair CSV.
enum class PairLabel : int { kDifferent = 0, kSame = 1, kUnknown = -1 };

struct PairScore {
    std::int64_t tracklet_a = 0;
    std::int64_t tracklet_b = 0;
    PairLabel label = PairLabel::kUnknown;
    double score = 0.0;
};

// Smallest threshold t (among the distinct negative scores, plus the value
// just above the largest one) whose false-positive rate under the decision
// rule "same iff score >= t" is at most target_fpr. Throws DataError when
// no negative pairs are present.
double calibrate_threshold(const std::vector<PairScore>& scored_pairs, double target_fpr = 0.05);

// Disjoint groups of tracklet ids covering the input tracklet set.
struct GroupingPartition {
    std::vector<std::vector<std::int64_t>> groups;
    double threshold = 0.0;
    std::string scorer;
};

enum class GroupingMethod {
    kComponents,        // connected components of the >= threshold graph
    kGreedyTimeOrdered  // sequential best-match merging in start-time order
};

// Groups tracklets whose pair score clears the threshold. Pairs must stay
// within one procedure; a cross-procedure pair raises DataError.
GroupingPartition group_tracklets(const std::vector<TrackletRecord>& tracklets,
                                  const std::vector<PairScore>& scores, double threshold,
                                  GroupingMethod method = GroupingMethod::kComponents,
                                  const std::string& scorer = "");

// Up to max_views frame positions, uniformly spaced along a tracklet of
// length n.
std::vector<std::size_t> select_views(std::size_t frame_count, std::size_t max_views);

// Everything pair scoring needs about one tracklet, precomputed once.
struct TrackletEmbeddings {
    Tensor2D per_view;  // views x D, one frame embedding per selected view
    Embedding average;  // normalized mean of per-view rows
    Embedding joint;    // joint multi-view embedding
};

// Embeds every tracklet (parallel over tracklets; encoders are cloned per
// worker thread).
std::map<std::int64_t, TrackletEmbeddings> embed_tracklets(
    const std::vector<TrackletRecord>& tracklets, const FrameEncoder& frame,
    const JointEncoder& joint, std::size_t max_views);

// Scores every unordered same-procedure tracklet pair. Labels come from
// ground-truth entity ids when both sides carry one.
std::vector<PairScore> score_pairs(const std::vector<TrackletRecord>& tracklets,
                                   const std::map<std::int64_t, TrackletEmbeddings>& embeddings,
                                   ScorerKind scorer);

}  // namespace treid
