#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace treid {

struct GroupingPartition;  // reid.hpp

// AUC of the ROC curve: the probability that a random positive outscores a
// random negative, ties counting one half (Mann-Whitney). Throws DataError
// unless both classes are present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Same quantity by trapezoidal integration of the ROC curve; agrees with
// roc_auc up to rounding.
double roc_auc_trapezoid(const std::vector<double>& scores, const std::vector<int>& labels);

// Area under the precision-recall curve in average-precision form:
// sum_i (R_i - R_{i-1}) * P_i over score-sorted thresholds. Throws
// DataError when no positives are present.
double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct FragmentationReport {
    double fr = 0.0;                // mean fragments per entity
    double fr_std = 0.0;            // population standard deviation
    double fragmented_ratio = 0.0;  // entities split into > 1 fragment
    std::size_t impurity = 0;       // groups mixing more than one entity
    std::map<std::int64_t, std::size_t> per_entity;
};

// Fragment count per entity = number of partition groups holding at least
// one of its tracklets. Throws DataError when a tracklet in the partition
// has no ground-truth entity.
FragmentationReport fragmentation_report(
    const GroupingPartition& partition,
    const std::map<std::int64_t, std::int64_t>& entity_of_tracklet);

struct SensitivityResult {
    double sensitivity = 0.0;
    double threshold = 0.0;
};

// Maximum sensitivity over thresholds (positive iff score >= t) whose
// specificity is at least min_specificity. Throws DataError on
// single-class input.
SensitivityResult sensitivity_at_specificity(const std::vector<double>& scores,
                                             const std::vector<int>& labels,
                                             double min_specificity = 0.9);

struct F1Scores {
    double macro = 0.0;
    double micro = 0.0;
};

// Per-class F1 with the 0-when-undefined convention; macro is the
// unweighted mean over the two classes, micro pools the counts.
F1Scores f1_scores(const std::vector<int>& predictions, const std::vector<int>& labels);

// The metric-report JSON shape shared by eval subcommands; unset fields
// serialize as null.
struct MetricReport {
    std::optional<double> auroc, auprc;
    std::optional<double> fr, fr_std, fragmented_ratio;
    std::optional<std::size_t> impurity;
    std::optional<double> f1_macro, f1_micro, sens_at_spec, threshold;
};

}  // namespace treid
