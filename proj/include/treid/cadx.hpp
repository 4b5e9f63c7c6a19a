#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "treid/metrics.hpp"
#include "treid/reid.hpp"
#include "treid/synthetic.hpp"
#include "treid/tracklet.hpp"

namespace treid {

// Soft voting: the arithmetic mean of per-frame class scores.
// Throws DataError on an empty list.
double soft_vote(const std::vector<double>& frame_scores);

// One classification unit after grouping: pooled frames of the member
// tracklets. Impure groups (members from more than one entity) inherit the
// label of the entity contributing the most frames and carry a flag.
struct GroupedSequence {
    std::int64_t group_id = 0;
    std::vector<std::int64_t> members;
    std::vector<double> scores;
    int label = 0;
    bool impure = false;
};

struct ClassBreakdown {
    std::size_t groups = 0;
    double fr = 0.0;
};

struct CadxGroupingReport {
    std::string grouping;
    std::size_t groups = 0;
    MetricReport metrics;
    std::map<int, ClassBreakdown> per_class;  // keyed by class label
};

// Builds the grouped sequences for one partition.
std::vector<GroupedSequence> build_grouped_sequences(
    const std::vector<TrackletRecord>& tracklets, const std::vector<FrameScore>& frame_scores,
    const GroupingPartition& partition, const std::map<std::int64_t, int>& class_of_entity);

// Evaluates classification quality per grouping: soft-voted group scores,
// inherited labels, then AUC / F1 / sensitivity-at-specificity plus group
// counts and fragmentation per class. Every grouping must partition
// exactly the given tracklet set; mismatches raise DataError naming the
// missing or extra tracklets. Every frame needs a score.
std::vector<CadxGroupingReport> evaluate_groupings(
    const std::vector<TrackletRecord>& tracklets, const std::vector<FrameScore>& frame_scores,
    const std::vector<std::pair<std::string, GroupingPartition>>& groupings,
    const std::map<std::int64_t, int>& class_of_entity, double min_specificity = 0.9,
    double decision_threshold = 0.5);

// Convenience partitions: every tracklet alone, and grouped by
// ground-truth entity.
GroupingPartition fragmented_partition(const std::vector<TrackletRecord>& tracklets);
GroupingPartition oracle_partition(const std::vector<TrackletRecord>& tracklets);

}  // namespace treid
