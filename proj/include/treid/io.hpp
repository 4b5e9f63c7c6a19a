#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "treid/encoders.hpp"
#include "treid/metrics.hpp"
#include "treid/reid.hpp"
#include "treid/synthetic.hpp"
#include "treid/tracklet.hpp"
#include "treid/train.hpp"

namespace treid {

// --- dataset manifest (JSON Lines, one tracklet per line) ------------------

void write_manifest(const std::string& path, const std::vector<TrackletRecord>& tracklets,
                    bool include_labels = true);
std::vector<TrackletRecord> read_manifest(const std::string& path);

// --- model weights ("TRW1": named tensors as 32-bit LE floats, CRC32) ------

struct LoadedModel {
    EncoderConfig config;
    FrameEncoder frame;
    JointEncoder joint;
};

void save_model(const std::string& path, FrameEncoder& frame, JointEncoder& joint);
LoadedModel load_model(const std::string& path);

// Rounds every parameter to its nearest 32-bit float, the precision the
// weight file stores; save(load(save(x))) is then byte-stable and a loaded
// model reproduces the rounded model's forward passes bit for bit.
void quantize_params_to_f32(const std::vector<NamedParam>& params);

// --- embeddings ("EMB1": count x dim floats + tracklet ids, CRC32) ---------

void write_embeddings(const std::string& path, const std::vector<std::int64_t>& tracklet_ids,
                      const Tensor2D& embeddings);
std::pair<std::vector<std::int64_t>, Tensor2D> read_embeddings(const std::string& path);

// --- CSV artifacts ----------------------------------------------------------

// Header: tracklet_a,tracklet_b,label,score with label in {same,diff,unknown}.
void write_pair_csv(const std::string& path, const std::vector<PairScore>& pairs);
std::vector<PairScore> read_pair_csv(const std::string& path);

// Header: tracklet_id,frame_index,score
void write_frame_scores_csv(const std::string& path, const std::vector<FrameScore>& scores);
std::vector<FrameScore> read_frame_scores_csv(const std::string& path);

// Header: step,loss — phase-1 rows first, then phase-2, step numbering
// continuous across phases.
void write_loss_curve_csv(const std::string& path, const std::vector<double>& phase1,
                          const std::vector<double>& phase2);

// --- JSON artifacts ---------------------------------------------------------

void write_partition_json(const std::string& path, const GroupingPartition& partition);
GroupingPartition read_partition_json(const std::string& path);

// {"threshold": ..., "target_fpr": ..., "achieved_fpr": ..., counts}
void write_calibration_json(const std::string& path, double threshold, double target_fpr,
                            double achieved_fpr, std::size_t positives, std::size_t negatives);
double read_calibration_threshold(const std::string& path);

std::string metric_report_to_json(const MetricReport& report);
void write_metric_json(const std::string& path, const MetricReport& report);

// entity id -> binary class label
void write_class_map_json(const std::string& path,
                          const std::map<std::int64_t, int>& class_of_entity);
std::map<std::int64_t, int> read_class_map_json(const std::string& path);

// Training configuration with explicit keys for every default.
std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& json_text);
void write_train_config_json(const std::string& path, const TrainConfig& cfg);
TrainConfig read_train_config_json(const std::string& path);

}  // namespace treid
