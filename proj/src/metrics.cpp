#include "treid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "treid/errors.hpp"
#include "treid/reid.hpp"

namespace treid {

namespace {

void require_scores_labels(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("metrics: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) throw DataError("metrics: empty input");
}

std::pair<std::size_t, std::size_t> class_counts(const std::vector<int>& labels) {
    std::size_t pos = 0, neg = 0;
    for (int l : labels) (l != 0 ? pos : neg) += 1;
    return {pos, neg};
}

}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require_scores_labels(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) {
        throw DataError("roc_auc: needs both classes, got " + std::to_string(pos) +
                        " positives and " + std::to_string(neg) + " negatives");
    }

    // Rank sum with average ranks over ties.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

double roc_auc_trapezoid(const std::vector<double>& scores, const std::vector<int>& labels) {
    require_scores_labels(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) {
        throw DataError("roc_auc_trapezoid: needs both classes");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double auc = 0.0;
    double tp = 0.0, fp = 0.0, prev_tp = 0.0, prev_fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        // Tied scores move the operating point in one step, which turns the
        // tie block into one diagonal (half-credit) segment.
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] != 0) tp += 1.0;
            else fp += 1.0;
            ++j;
        }
        auc += (fp - prev_fp) * (tp + prev_tp) / 2.0;
        prev_tp = tp;
        prev_fp = fp;
        i = j;
    }
    return auc / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require_scores_labels(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    (void)neg;
    if (pos == 0) throw DataError("pr_auc: needs at least one positive");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    double tp = 0.0, fp = 0.0, prev_recall = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] != 0) tp += 1.0;
            else fp += 1.0;
            ++j;
        }
        const double recall = tp / static_cast<double>(pos);
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

FragmentationReport fragmentation_report(
    const GroupingPartition& partition,
    const std::map<std::int64_t, std::int64_t>& entity_of_tracklet) {
    FragmentationReport report;

    std::map<std::int64_t, std::set<std::size_t>> groups_of_entity;
    for (std::size_t g = 0; g < partition.groups.size(); ++g) {
        std::set<std::int64_t> entities_here;
        for (std::int64_t tid : partition.groups[g]) {
            auto it = entity_of_tracklet.find(tid);
            if (it == entity_of_tracklet.end()) {
                throw DataError("fragmentation_report: tracklet " + std::to_string(tid) +
                                " has no ground-truth entity");
            }
            groups_of_entity[it->second].insert(g);
            entities_here.insert(it->second);
        }
        if (entities_here.size() > 1) report.impurity += 1;
    }
    if (groups_of_entity.empty()) throw DataError("fragmentation_report: empty partition");

    double sum = 0.0;
    std::size_t fragmented = 0;
    for (const auto& [entity, groups] : groups_of_entity) {
        report.per_entity[entity] = groups.size();
        sum += static_cast<double>(groups.size());
        if (groups.size() > 1) ++fragmented;
    }
    const double n = static_cast<double>(groups_of_entity.size());
    report.fr = sum / n;
    double sq = 0.0;
    for (const auto& [entity, count] : report.per_entity) {
        const double d = static_cast<double>(count) - report.fr;
        sq += d * d;
    }
    report.fr_std = std::sqrt(sq / n);
    report.fragmented_ratio = static_cast<double>(fragmented) / n;
    return report;
}

SensitivityResult sensitivity_at_specificity(const std::vector<double>& scores,
                                             const std::vector<int>& labels,
                                             double min_specificity) {
    require_scores_labels(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) {
        throw DataError("sensitivity_at_specificity: needs both classes");
    }

    // Candidate thresholds: every distinct score, plus one above the
    // maximum (predict-nothing, specificity 1).
    std::vector<double> candidates = scores;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(std::nextafter(candidates.back(), INFINITY));

    SensitivityResult best{-1.0, candidates.back()};
    for (double t : candidates) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) (labels[i] != 0 ? tp : fp) += 1;
        }
        const double specificity = static_cast<double>(neg - fp) / static_cast<double>(neg);
        if (specificity < min_specificity) continue;
        const double sensitivity = static_cast<double>(tp) / static_cast<double>(pos);
        if (sensitivity > best.sensitivity) best = {sensitivity, t};
    }
    return best;
}

F1Scores f1_scores(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("f1_scores: prediction/label length mismatch");
    }
    if (predictions.empty()) throw DataError("f1_scores: empty input");

    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool p = predictions[i] != 0;
        const bool l = labels[i] != 0;
        if (p && l) ++tp;
        else if (p && !l) ++fp;
        else if (!p && l) ++fn;
        else ++tn;
    }
    auto f1 = [](std::size_t tp_, std::size_t fp_, std::size_t fn_) {
        const double denom = static_cast<double>(2 * tp_ + fp_ + fn_);
        return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp_) / denom;
    };
    F1Scores out;
    // Positive class as-is; negative class with roles flipped.
    out.macro = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
    out.micro = f1(tp + tn, fp + fn, fn + fp);
    return out;
}

}  // namespace treid
