#include "treid/cadx.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "treid/errors.hpp"

namespace treid {

double soft_vote(const std::vector<double>& frame_scores) {
    if (frame_scores.empty()) throw DataError("soft_vote: empty score list");
    return std::accumulate(frame_scores.begin(), frame_scores.end(), 0.0) /
           static_cast<double>(frame_scores.size());
}

namespace {

void require_partition_matches(const std::vector<TrackletRecord>& tracklets,
                               const GroupingPartition& partition, const std::string& name) {
    std::set<std::int64_t> expected;
    for (const auto& t : tracklets) expected.insert(t.tracklet_id);
    std::set<std::int64_t> actual;
    for (const auto& g : partition.groups) {
        for (std::int64_t id : g) {
            if (!actual.insert(id).second) {
                throw DataError("grouping '" + name + "': tracklet " + std::to_string(id) +
                                " appears in more than one group");
            }
        }
    }
    if (expected == actual) return;
    std::ostringstream msg;
    msg << "grouping '" << name << "' does not partition the tracklet set;";
    for (std::int64_t id : expected) {
        if (!actual.count(id)) msg << " missing " << id;
    }
    for (std::int64_t id : actual) {
        if (!expected.count(id)) msg << " extra " << id;
    }
    throw DataError(msg.str());
}

}  // namespace

std::vector<GroupedSequence> build_grouped_sequences(
    const std::vector<TrackletRecord>& tracklets, const std::vector<FrameScore>& frame_scores,
    const GroupingPartition& partition, const std::map<std::int64_t, int>& class_of_entity) {
    std::map<std::int64_t, const TrackletRecord*> record_of;
    for (const auto& t : tracklets) record_of[t.tracklet_id] = &t;

    // frame scores indexed by (tracklet, frame).
    std::map<std::pair<std::int64_t, std::int64_t>, double> score_of;
    for (const auto& fs : frame_scores) score_of[{fs.tracklet_id, fs.frame_index}] = fs.score;

    std::vector<GroupedSequence> sequences;
    sequences.reserve(partition.groups.size());
    for (std::size_t g = 0; g < partition.groups.size(); ++g) {
        GroupedSequence seq;
        seq.group_id = static_cast<std::int64_t>(g);
        seq.members = partition.groups[g];

        std::map<std::int64_t, std::size_t> frames_per_entity;
        for (std::int64_t tid : seq.members) {
            auto rit = record_of.find(tid);
            if (rit == record_of.end()) {
                throw DataError("build_grouped_sequences: unknown tracklet " +
                                std::to_string(tid));
            }
            const TrackletRecord& rec = *rit->second;
            if (!rec.entity_id) {
                throw DataError("build_grouped_sequences: tracklet " + std::to_string(tid) +
                                " has no entity label");
            }
            frames_per_entity[*rec.entity_id] += rec.frames.size();
            for (const auto& f : rec.frames) {
                auto sit = score_of.find({tid, f.frame_index});
                if (sit == score_of.end()) {
                    throw DataError("build_grouped_sequences: no score for tracklet " +
                                    std::to_string(tid) + " frame " +
                                    std::to_string(f.frame_index));
                }
                seq.scores.push_back(sit->second);
            }
        }

        // Majority entity by frame count; ties go to the lower entity id.
        std::int64_t majority = frames_per_entity.begin()->first;
        std::size_t majority_frames = frames_per_entity.begin()->second;
        for (const auto& [entity, count] : frames_per_entity) {
            if (count > majority_frames) {
                majority = entity;
                majority_frames = count;
            }
        }
        auto cit = class_of_entity.find(majority);
        if (cit == class_of_entity.end()) {
            throw DataError("build_grouped_sequences: entity " + std::to_string(majority) +
                            " has no class label");
        }
        seq.label = cit->second;
        seq.impure = frames_per_entity.size() > 1;
        sequences.push_back(std::move(seq));
    }
    return sequences;
}

std::vector<CadxGroupingReport> evaluate_groupings(
    const std::vector<TrackletRecord>& tracklets, const std::vector<FrameScore>& frame_scores,
    const std::vector<std::pair<std::string, GroupingPartition>>& groupings,
    const std::map<std::int64_t, int>& class_of_entity, double min_specificity,
    double decision_threshold) {
    std::map<std::int64_t, std::int64_t> entity_of;
    for (const auto& t : tracklets) {
        if (!t.entity_id) {
            throw DataError("evaluate_groupings: tracklet " + std::to_string(t.tracklet_id) +
                            " has no entity label");
        }
        entity_of[t.tracklet_id] = *t.entity_id;
    }

    std::vector<CadxGroupingReport> reports;
    for (const auto& [name, partition] : groupings) {
        require_partition_matches(tracklets, partition, name);
        const auto sequences =
            build_grouped_sequences(tracklets, frame_scores, partition, class_of_entity);

        std::vector<double> votes;
        std::vector<int> labels, predictions;
        votes.reserve(sequences.size());
        for (const auto& seq : sequences) {
            const double v = soft_vote(seq.scores);
            votes.push_back(v);
            labels.push_back(seq.label);
            predictions.push_back(v >= decision_threshold ? 1 : 0);
        }

        CadxGroupingReport report;
        report.grouping = name;
        report.groups = sequences.size();
        report.metrics.auroc = roc_auc(votes, labels);
        report.metrics.auprc = pr_auc(votes, labels);
        const F1Scores f1 = f1_scores(predictions, labels);
        report.metrics.f1_macro = f1.macro;
        report.metrics.f1_micro = f1.micro;
        const SensitivityResult sens = sensitivity_at_specificity(votes, labels, min_specificity);
        report.metrics.sens_at_spec = sens.sensitivity;
        report.metrics.threshold = sens.threshold;

        const FragmentationReport frag = fragmentation_report(partition, entity_of);
        report.metrics.fr = frag.fr;
        report.metrics.fr_std = frag.fr_std;
        report.metrics.fragmented_ratio = frag.fragmented_ratio;
        report.metrics.impurity = frag.impurity;

        // Per-class group counts and fragmentation (Table-style breakdown).
        for (const auto& [entity, klass] : class_of_entity) {
            (void)entity;
            report.per_class.try_emplace(klass);
        }
        for (const auto& seq : sequences) report.per_class[seq.label].groups += 1;
        std::map<int, std::pair<double, std::size_t>> frag_sums;  // class -> (sum, entities)
        for (const auto& [entity, count] : frag.per_entity) {
            const int klass = class_of_entity.at(entity);
            frag_sums[klass].first += static_cast<double>(count);
            frag_sums[klass].second += 1;
        }
        for (auto& [klass, breakdown] : report.per_class) {
            const auto it = frag_sums.find(klass);
            if (it != frag_sums.end() && it->second.second > 0) {
                breakdown.fr = it->second.first / static_cast<double>(it->second.second);
            }
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

GroupingPartition fragmented_partition(const std::vector<TrackletRecord>& tracklets) {
    GroupingPartition p;
    p.scorer = "none";
    for (const auto& t : tracklets) p.groups.push_back({t.tracklet_id});
    std::sort(p.groups.begin(), p.groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return p;
}

GroupingPartition oracle_partition(const std::vector<TrackletRecord>& tracklets) {
    std::map<std::int64_t, std::vector<std::int64_t>> by_entity;
    for (const auto& t : tracklets) {
        if (!t.entity_id) {
            throw DataError("oracle_partition: tracklet " + std::to_string(t.tracklet_id) +
                            " has no entity label");
        }
        by_entity[*t.entity_id].push_back(t.tracklet_id);
    }
    GroupingPartition p;
    p.scorer = "oracle";
    for (auto& [entity, members] : by_entity) {
        std::sort(members.begin(), members.end());
        p.groups.push_back(std::move(members));
    }
    std::sort(p.groups.begin(), p.groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return p;
}

}  // namespace treid
