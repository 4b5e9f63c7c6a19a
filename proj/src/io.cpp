#include "treid/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "treid/errors.hpp"

namespace treid {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

void append_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(buf, bits);
}

class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string label)
        : bytes_(bytes), label_(std::move(label)) {}

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string str(std::size_t n) {
        require(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void require(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw IoError(label_ + ": truncated file");
    }

    const std::string& bytes_;
    std::string label_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& bytes, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

// Verifies the 4-byte CRC32 trailer over everything before it and returns
// the payload length.
std::size_t check_crc_trailer(const std::string& bytes, const std::string& label) {
    if (bytes.size() < 4) throw IoError(label + ": truncated file");
    const std::size_t payload = bytes.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[payload + i]))
                  << (8 * i);
    }
    if (stored != crc_of(bytes, payload)) throw IoError(label + ": checksum mismatch");
    return payload;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

void write_manifest(const std::string& path, const std::vector<TrackletRecord>& tracklets,
                    bool include_labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& t : tracklets) {
        json rec;
        rec["tracklet_id"] = t.tracklet_id;
        rec["procedure_id"] = t.procedure_id;
        if (include_labels && t.entity_id) rec["entity_id"] = *t.entity_id;
        json frames = json::array();
        for (const auto& f : t.frames) {
            frames.push_back({{"frame_index", f.frame_index},
                              {"timestamp", f.timestamp},
                              {"confidence", f.confidence},
                              {"features", f.features}});
        }
        rec["frames"] = std::move(frames);
        out << rec.dump() << "\n";
    }
    if (!out) throw IoError("short write to " + path);
}

std::vector<TrackletRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<TrackletRecord> tracklets;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        TrackletRecord t;
        t.tracklet_id = rec.at("tracklet_id").get<std::int64_t>();
        t.procedure_id = rec.at("procedure_id").get<std::int64_t>();
        if (rec.contains("entity_id") && !rec["entity_id"].is_null()) {
            t.entity_id = rec["entity_id"].get<std::int64_t>();
        }
        for (const auto& f : rec.at("frames")) {
            FrameObservation obs;
            obs.frame_index = f.at("frame_index").get<std::int64_t>();
            obs.timestamp = f.at("timestamp").get<double>();
            obs.confidence = f.at("confidence").get<double>();
            obs.features = f.at("features").get<std::vector<double>>();
            t.frames.push_back(std::move(obs));
        }
        tracklets.push_back(std::move(t));
    }
    return tracklets;
}

// ---------------------------------------------------------------------------
// Weights

namespace {

constexpr std::uint32_t kWeightsVersion = 1;

void append_named_tensor(std::string& buf, const std::string& name, const Tensor2D& t) {
    append_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    append_u32(buf, static_cast<std::uint32_t>(t.rows()));
    append_u32(buf, static_cast<std::uint32_t>(t.cols()));
    for (double v : t.data()) append_f32(buf, static_cast<float>(v));
}

}  // namespace

void quantize_params_to_f32(const std::vector<NamedParam>& params) {
    for (const auto& p : params) {
        for (double& v : p.value->data()) v = static_cast<double>(static_cast<float>(v));
    }
}

void save_model(const std::string& path, FrameEncoder& frame, JointEncoder& joint) {
    const EncoderConfig& cfg = frame.config();
    std::string buf = "TRW1";
    append_u32(buf, kWeightsVersion);

    Tensor2D meta(1, 7);
    meta(0, 0) = static_cast<double>(cfg.feature_dim);
    meta(0, 1) = static_cast<double>(cfg.hidden_dim);
    meta(0, 2) = static_cast<double>(cfg.embed_dim);
    meta(0, 3) = static_cast<double>(cfg.blocks);
    meta(0, 4) = static_cast<double>(cfg.heads);
    meta(0, 5) = static_cast<double>(cfg.ffn_mult);
    meta(0, 6) = static_cast<double>(cfg.max_views);
    append_named_tensor(buf, "config", meta);

    for (const auto& p : frame.params()) append_named_tensor(buf, "frame." + p.name, *p.value);
    for (const auto& p : joint.params()) append_named_tensor(buf, "joint." + p.name, *p.value);

    append_u32(buf, crc_of(buf, buf.size()));
    write_file(path, buf);
}

LoadedModel load_model(const std::string& path) {
    const std::string bytes = read_file(path);
    const std::size_t payload = check_crc_trailer(bytes, path);
    ByteReader reader(bytes, path);
    if (reader.str(4) != "TRW1") throw IoError(path + ": bad magic, expected TRW1");
    const std::uint32_t version = reader.u32();
    if (version != kWeightsVersion) {
        throw IoError(path + ": unsupported weights version " + std::to_string(version));
    }

    std::map<std::string, Tensor2D> tensors;
    while (reader.pos() < payload) {
        const std::uint32_t name_len = reader.u32();
        const std::string name = reader.str(name_len);
        const std::uint32_t rows = reader.u32();
        const std::uint32_t cols = reader.u32();
        Tensor2D t(rows, cols);
        for (double& v : t.data()) v = static_cast<double>(reader.f32());
        tensors.emplace(name, std::move(t));
    }

    auto meta_it = tensors.find("config");
    if (meta_it == tensors.end() || meta_it->second.size() != 7) {
        throw IoError(path + ": missing config tensor");
    }
    const Tensor2D& meta = meta_it->second;
    EncoderConfig cfg;
    cfg.feature_dim = static_cast<std::size_t>(meta(0, 0));
    cfg.hidden_dim = static_cast<std::size_t>(meta(0, 1));
    cfg.embed_dim = static_cast<std::size_t>(meta(0, 2));
    cfg.blocks = static_cast<std::size_t>(meta(0, 3));
    cfg.heads = static_cast<std::size_t>(meta(0, 4));
    cfg.ffn_mult = static_cast<std::size_t>(meta(0, 5));
    cfg.max_views = static_cast<std::size_t>(meta(0, 6));
    cfg.validate();

    LoadedModel model{cfg, FrameEncoder(cfg), JointEncoder(cfg)};
    auto load_into = [&](const std::string& prefix, std::vector<NamedParam> params) {
        for (auto& p : params) {
            auto it = tensors.find(prefix + p.name);
            if (it == tensors.end()) {
                throw IoError(path + ": missing tensor " + prefix + p.name);
            }
            require_same_shape(*p.value, it->second, path + ": " + prefix + p.name);
            *p.value = it->second;
        }
    };
    load_into("frame.", model.frame.params());
    load_into("joint.", model.joint.params());
    return model;
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {
constexpr std::uint32_t kEmbeddingsVersion = 1;
}

void write_embeddings(const std::string& path, const std::vector<std::int64_t>& tracklet_ids,
                      const Tensor2D& embeddings) {
    if (tracklet_ids.size() != embeddings.rows()) {
        throw DimensionError("write_embeddings: " + std::to_string(tracklet_ids.size()) +
                             " ids vs " + std::to_string(embeddings.rows()) + " rows");
    }
    std::string buf = "EMB1";
    append_u32(buf, kEmbeddingsVersion);
    append_u32(buf, static_cast<std::uint32_t>(embeddings.rows()));
    append_u32(buf, static_cast<std::uint32_t>(embeddings.cols()));
    for (double v : embeddings.data()) append_f32(buf, static_cast<float>(v));
    for (std::int64_t id : tracklet_ids) {
        const std::string s = std::to_string(id);
        append_u32(buf, static_cast<std::uint32_t>(s.size()));
        buf.append(s);
    }
    append_u32(buf, crc_of(buf, buf.size()));
    write_file(path, buf);
}

std::pair<std::vector<std::int64_t>, Tensor2D> read_embeddings(const std::string& path) {
    const std::string bytes = read_file(path);
    check_crc_trailer(bytes, path);
    ByteReader reader(bytes, path);
    if (reader.str(4) != "EMB1") throw IoError(path + ": bad magic, expected EMB1");
    const std::uint32_t version = reader.u32();
    if (version != kEmbeddingsVersion) {
        throw IoError(path + ": unsupported embeddings version " + std::to_string(version));
    }
    const std::uint32_t count = reader.u32();
    const std::uint32_t dim = reader.u32();
    Tensor2D embs(count, dim);
    for (double& v : embs.data()) v = static_cast<double>(reader.f32());
    std::vector<std::int64_t> ids(count);
    for (auto& id : ids) {
        const std::uint32_t len = reader.u32();
        id = std::stoll(reader.str(len));
    }
    return {std::move(ids), std::move(embs)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string pair_label_str(PairLabel label) {
    switch (label) {
        case PairLabel::kSame: return "same";
        case PairLabel::kDifferent: return "diff";
        case PairLabel::kUnknown: return "unknown";
    }
    throw ConfigError("unknown pair label");
}

PairLabel pair_label_from(const std::string& s) {
    if (s == "same") return PairLabel::kSame;
    if (s == "diff") return PairLabel::kDifferent;
    if (s == "unknown") return PairLabel::kUnknown;
    throw IoError("bad pair label '" + s + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_pair_csv(const std::string& path, const std::vector<PairScore>& pairs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "tracklet_a,tracklet_b,label,score\n";
    for (const auto& p : pairs) {
        out << p.tracklet_a << "," << p.tracklet_b << "," << pair_label_str(p.label) << ","
            << format_double(p.score) << "\n";
    }
    if (!out) throw IoError("short write to " + path);
}

std::vector<PairScore> read_pair_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    std::vector<PairScore> pairs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        }
        PairScore p;
        p.tracklet_a = std::stoll(fields[0]);
        p.tracklet_b = std::stoll(fields[1]);
        p.label = pair_label_from(fields[2]);
        p.score = std::stod(fields[3]);
        pairs.push_back(p);
    }
    return pairs;
}

void write_frame_scores_csv(const std::string& path, const std::vector<FrameScore>& scores) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "tracklet_id,frame_index,score\n";
    for (const auto& s : scores) {
        out << s.tracklet_id << "," << s.frame_index << "," << format_double(s.score) << "\n";
    }
    if (!out) throw IoError("short write to " + path);
}

std::vector<FrameScore> read_frame_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    std::vector<FrameScore> scores;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        }
        scores.push_back({std::stoll(fields[0]), std::stoll(fields[1]), std::stod(fields[2])});
    }
    return scores;
}

void write_loss_curve_csv(const std::string& path, const std::vector<double>& phase1,
                          const std::vector<double>& phase2) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "step,loss\n";
    std::size_t step = 0;
    for (double v : phase1) out << step++ << "," << format_double(v) << "\n";
    for (double v : phase2) out << step++ << "," << format_double(v) << "\n";
    if (!out) throw IoError("short write to " + path);
}

// ---------------------------------------------------------------------------
// JSON artifacts

void write_partition_json(const std::string& path, const GroupingPartition& partition) {
    json groups = json::object();
    for (std::size_t g = 0; g < partition.groups.size(); ++g) {
        groups[std::to_string(g)] = partition.groups[g];
    }
    json doc{{"threshold", partition.threshold},
             {"scorer", partition.scorer},
             {"groups", std::move(groups)}};
    write_file(path, doc.dump(2) + "\n");
}

GroupingPartition read_partition_json(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    GroupingPartition p;
    p.threshold = doc.at("threshold").get<double>();
    p.scorer = doc.at("scorer").get<std::string>();
    const auto& groups = doc.at("groups");
    std::vector<std::pair<long, std::vector<std::int64_t>>> ordered;
    for (auto it = groups.begin(); it != groups.end(); ++it) {
        ordered.emplace_back(std::stol(it.key()), it.value().get<std::vector<std::int64_t>>());
    }
    std::sort(ordered.begin(), ordered.end());
    for (auto& [gid, members] : ordered) p.groups.push_back(std::move(members));
    return p;
}

void write_calibration_json(const std::string& path, double threshold, double target_fpr,
                            double achieved_fpr, std::size_t positives, std::size_t negatives) {
    json doc{{"threshold", threshold},
             {"target_fpr", target_fpr},
             {"achieved_fpr", achieved_fpr},
             {"positives", positives},
             {"negatives", negatives}};
    write_file(path, doc.dump(2) + "\n");
}

double read_calibration_threshold(const std::string& path) {
    try {
        return json::parse(read_file(path)).at("threshold").get<double>();
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

namespace {

json metric_report_json(const MetricReport& r) {
    json doc;
    auto put = [&doc](const char* key, const auto& opt) {
        if (opt) doc[key] = *opt;
        else doc[key] = nullptr;
    };
    put("auroc", r.auroc);
    put("auprc", r.auprc);
    put("fr", r.fr);
    put("fr_std", r.fr_std);
    put("fragmented_ratio", r.fragmented_ratio);
    put("impurity", r.impurity);
    put("f1_macro", r.f1_macro);
    put("f1_micro", r.f1_micro);
    put("sens_at_spec", r.sens_at_spec);
    put("threshold", r.threshold);
    return doc;
}

}  // namespace

std::string metric_report_to_json(const MetricReport& report) {
    return metric_report_json(report).dump(2);
}

void write_metric_json(const std::string& path, const MetricReport& report) {
    write_file(path, metric_report_to_json(report) + "\n");
}

void write_class_map_json(const std::string& path,
                          const std::map<std::int64_t, int>& class_of_entity) {
    json doc = json::object();
    for (const auto& [entity, klass] : class_of_entity) doc[std::to_string(entity)] = klass;
    write_file(path, doc.dump(2) + "\n");
}

std::map<std::int64_t, int> read_class_map_json(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    std::map<std::int64_t, int> out;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        out[std::stoll(it.key())] = it.value().get<int>();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training config

std::string train_config_to_json(const TrainConfig& cfg) {
    json doc{
        {"seed", cfg.seed},
        {"batch_pairs", cfg.batch_pairs},
        {"phase1_steps", cfg.phase1_steps},
        {"phase2_steps", cfg.phase2_steps},
        {"views_per_sample", cfg.views_per_sample},
        {"temperature", cfg.temperature},
        {"lars",
         {{"learning_rate", cfg.lars.learning_rate},
          {"trust_coefficient", cfg.lars.trust_coefficient},
          {"momentum", cfg.lars.momentum},
          {"weight_decay", cfg.lars.weight_decay},
          {"epsilon", cfg.lars.epsilon},
          {"use_trust_ratio", cfg.lars.use_trust_ratio}}},
        {"head_fraction", cfg.head_fraction},
        {"tail_fraction", cfg.tail_fraction},
        {"freeze_backbone_phase2", cfg.freeze_backbone_phase2},
        {"encoder",
         {{"feature_dim", cfg.encoder.feature_dim},
          {"hidden_dim", cfg.encoder.hidden_dim},
          {"embed_dim", cfg.encoder.embed_dim},
          {"blocks", cfg.encoder.blocks},
          {"heads", cfg.encoder.heads},
          {"ffn_mult", cfg.encoder.ffn_mult},
          {"max_views", cfg.encoder.max_views},
          {"cls_init_std", cfg.encoder.cls_init_std}}},
        {"fps", cfg.fps},
        {"min_duration_s", cfg.min_duration_s},
        {"min_high_conf", cfg.min_high_conf},
        {"conf_threshold", cfg.conf_threshold},
    };
    return doc.dump(2);
}

TrainConfig train_config_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("train config: ") + e.what());
    }
    TrainConfig cfg;
    auto get = [](const json& j, const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    get(doc, "seed", cfg.seed);
    get(doc, "batch_pairs", cfg.batch_pairs);
    get(doc, "phase1_steps", cfg.phase1_steps);
    get(doc, "phase2_steps", cfg.phase2_steps);
    get(doc, "views_per_sample", cfg.views_per_sample);
    get(doc, "temperature", cfg.temperature);
    if (doc.contains("lars")) {
        const json& l = doc["lars"];
        get(l, "learning_rate", cfg.lars.learning_rate);
        get(l, "trust_coefficient", cfg.lars.trust_coefficient);
        get(l, "momentum", cfg.lars.momentum);
        get(l, "weight_decay", cfg.lars.weight_decay);
        get(l, "epsilon", cfg.lars.epsilon);
        get(l, "use_trust_ratio", cfg.lars.use_trust_ratio);
    }
    get(doc, "head_fraction", cfg.head_fraction);
    get(doc, "tail_fraction", cfg.tail_fraction);
    get(doc, "freeze_backbone_phase2", cfg.freeze_backbone_phase2);
    if (doc.contains("encoder")) {
        const json& e = doc["encoder"];
        get(e, "feature_dim", cfg.encoder.feature_dim);
        get(e, "hidden_dim", cfg.encoder.hidden_dim);
        get(e, "embed_dim", cfg.encoder.embed_dim);
        get(e, "blocks", cfg.encoder.blocks);
        get(e, "heads", cfg.encoder.heads);
        get(e, "ffn_mult", cfg.encoder.ffn_mult);
        get(e, "max_views", cfg.encoder.max_views);
        get(e, "cls_init_std", cfg.encoder.cls_init_std);
    }
    get(doc, "fps", cfg.fps);
    get(doc, "min_duration_s", cfg.min_duration_s);
    get(doc, "min_high_conf", cfg.min_high_conf);
    get(doc, "conf_threshold", cfg.conf_threshold);
    return cfg;
}

void write_train_config_json(const std::string& path, const TrainConfig& cfg) {
    write_file(path, train_config_to_json(cfg) + "\n");
}

TrainConfig read_train_config_json(const std::string& path) {
    return train_config_from_json(read_file(path));
}

}  // namespace treid
