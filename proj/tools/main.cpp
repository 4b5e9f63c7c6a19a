// treid: synthetic benchmark generation, contrastive ReID training,
// tracklet scoring/grouping, and evaluation, over the file formats the
// pipeline shares.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treid/cadx.hpp"
#include "treid/errors.hpp"
#include "treid/gradcheck.hpp"
#include "treid/io.hpp"
#include "treid/metrics.hpp"
#include "treid/reid.hpp"
#include "treid/sampling.hpp"
#include "treid/synthetic.hpp"
#include "treid/train.hpp"

namespace {

using treid::PairLabel;
using treid::PairScore;

// Separate stream for labels/scores derived from the dataset seed.
constexpr std::uint64_t kSeedSalt = 0x9e3779b97f4a7c15ULL;

struct GenArgs {
    std::uint64_t seed = 0;
    std::string out;
    treid::SyntheticConfig cfg;
    bool no_labels = false;
    std::string frame_scores_path, class_map_path;
    double separability = 0.4;
    double score_noise = 0.25;
};

void run_gen(const GenArgs& args) {
    treid::SyntheticConfig cfg = args.cfg;
    cfg.seed = args.seed;
    const treid::SyntheticDataset dataset = treid::generate_dataset(cfg);
    treid::write_manifest(args.out, dataset.tracklets, !args.no_labels);

    std::size_t frames = 0;
    for (const auto& t : dataset.tracklets) frames += t.frames.size();
    std::set<std::int64_t> entities;
    for (const auto& [tid, eid] : dataset.entity_of_tracklet) entities.insert(eid);
    std::cout << "generated " << dataset.tracklets.size() << " tracklets, " << entities.size()
              << " entities, " << frames << " frames across " << cfg.procedures
              << " procedures -> " << args.out << "\n";

    if (!args.frame_scores_path.empty()) {
        treid::Rng label_rng(args.seed ^ kSeedSalt);
        std::map<std::int64_t, int> class_of_entity;
        for (std::int64_t e : entities) class_of_entity[e] = label_rng.uniform() < 0.5 ? 0 : 1;
        const auto scores =
            treid::inject_frame_scores(dataset.tracklets, class_of_entity, args.separability,
                                       args.score_noise, args.seed ^ (kSeedSalt << 1));
        treid::write_frame_scores_csv(args.frame_scores_path, scores);
        treid::write_class_map_json(args.class_map_path, class_of_entity);
        std::cout << "injected " << scores.size() << " frame scores -> "
                  << args.frame_scores_path << " (classes -> " << args.class_map_path << ")\n";
    }
}

struct TrainArgs {
    std::string data, out, config_path, loss_curve_path;
    std::uint64_t seed = 0;
    treid::TrainConfig overrides;
    bool has_batch = false, has_p1 = false, has_p2 = false, has_views = false,
         has_temp = false, has_lr = false, has_freeze = false;
};

void run_train(const TrainArgs& args) {
    treid::TrainConfig cfg;
    if (!args.config_path.empty()) cfg = treid::read_train_config_json(args.config_path);
    cfg.seed = args.seed;
    if (args.has_batch) cfg.batch_pairs = args.overrides.batch_pairs;
    if (args.has_p1) cfg.phase1_steps = args.overrides.phase1_steps;
    if (args.has_p2) cfg.phase2_steps = args.overrides.phase2_steps;
    if (args.has_views) cfg.views_per_sample = args.overrides.views_per_sample;
    if (args.has_temp) cfg.temperature = args.overrides.temperature;
    if (args.has_lr) cfg.lars.learning_rate = args.overrides.lars.learning_rate;
    if (args.has_freeze) cfg.freeze_backbone_phase2 = args.overrides.freeze_backbone_phase2;

    const auto dataset = treid::read_manifest(args.data);
    if (dataset.empty()) throw treid::DataError("train: empty dataset " + args.data);
    cfg.encoder.feature_dim = dataset.front().frames.at(0).features.size();

    treid::TrainResult result = treid::train_reid(dataset, cfg);
    treid::quantize_params_to_f32(result.frame.params());
    treid::quantize_params_to_f32(result.joint.params());
    treid::save_model(args.out, result.frame, result.joint);
    if (!args.loss_curve_path.empty()) {
        treid::write_loss_curve_csv(args.loss_curve_path, result.phase1_loss,
                                    result.phase2_loss);
    }

    auto tail = [](const std::vector<double>& v) {
        return v.empty() ? std::nan("") : v.back();
    };
    std::cout << "trained " << cfg.phase1_steps << "+" << cfg.phase2_steps << " steps (N="
              << cfg.batch_pairs << "); final loss phase1=" << tail(result.phase1_loss)
              << " phase2=" << tail(result.phase2_loss) << " -> " << args.out << "\n";
}

struct EmbedArgs {
    std::string data, weights, out, encoder = "joint";
    std::size_t max_views = 0;  // 0: from model config
};

void run_embed(const EmbedArgs& args) {
    const auto dataset = treid::read_manifest(args.data);
    treid::LoadedModel model = treid::load_model(args.weights);
    const std::size_t max_views =
        args.max_views > 0 ? args.max_views : model.config.max_views;

    const auto embeddings =
        treid::embed_tracklets(dataset, model.frame, model.joint, max_views);
    std::vector<std::int64_t> ids;
    ids.reserve(dataset.size());
    for (const auto& t : dataset) ids.push_back(t.tracklet_id);

    treid::Tensor2D rows(ids.size(), model.config.embed_dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& e = embeddings.at(ids[i]);
        rows.set_row(i, args.encoder == "average" ? e.average : e.joint);
    }
    treid::write_embeddings(args.out, ids, rows);
    std::cout << "embedded " << ids.size() << " tracklets (" << args.encoder << ", up to "
              << max_views << " views) -> " << args.out << "\n";
}

struct ScoreArgs {
    std::string data, weights, out, scorer = "mv_joint";
    std::size_t max_views = 0;
};

void run_score(const ScoreArgs& args) {
    const auto dataset = treid::read_manifest(args.data);
    treid::LoadedModel model = treid::load_model(args.weights);
    const std::size_t max_views =
        args.max_views > 0 ? args.max_views : model.config.max_views;

    const auto embeddings =
        treid::embed_tracklets(dataset, model.frame, model.joint, max_views);
    const auto pairs =
        treid::score_pairs(dataset, embeddings, treid::scorer_from_id(args.scorer));
    treid::write_pair_csv(args.out, pairs);

    std::size_t same = 0, diff = 0, unknown = 0;
    for (const auto& p : pairs) {
        if (p.label == PairLabel::kSame) ++same;
        else if (p.label == PairLabel::kDifferent) ++diff;
        else ++unknown;
    }
    std::cout << "scored " << pairs.size() << " same-procedure pairs with " << args.scorer
              << " (" << same << " same, " << diff << " diff, " << unknown << " unknown) -> "
              << args.out << "\n";
}

struct CalibrateArgs {
    std::string pairs, out;
    double target_fpr = 0.05;
};

void run_calibrate(const CalibrateArgs& args) {
    const auto pairs = treid::read_pair_csv(args.pairs);
    const double threshold = treid::calibrate_threshold(pairs, args.target_fpr);
    std::size_t pos = 0, neg = 0, neg_passing = 0;
    for (const auto& p : pairs) {
        if (p.label == PairLabel::kSame) ++pos;
        if (p.label == PairLabel::kDifferent) {
            ++neg;
            if (p.score >= threshold) ++neg_passing;
        }
    }
    const double achieved = static_cast<double>(neg_passing) / static_cast<double>(neg);
    treid::write_calibration_json(args.out, threshold, args.target_fpr, achieved, pos, neg);
    std::cout << "threshold " << threshold << " for target FPR " << args.target_fpr
              << " (achieved " << achieved << " on " << neg << " negatives) -> " << args.out
              << "\n";
}

struct GroupArgs {
    std::string data, pairs, out, calibration, method = "components", scorer = "unspecified";
    double threshold = std::nan("");
    bool has_threshold = false;
};

void run_group(const GroupArgs& args) {
    if (args.has_threshold == !args.calibration.empty()) {
        throw treid::ConfigError("group: provide exactly one of --threshold / --calibration");
    }
    const double threshold = args.has_threshold
                                 ? args.threshold
                                 : treid::read_calibration_threshold(args.calibration);
    const auto dataset = treid::read_manifest(args.data);
    const auto pairs = treid::read_pair_csv(args.pairs);
    const auto method = args.method == "greedy" ? treid::GroupingMethod::kGreedyTimeOrdered
                                                : treid::GroupingMethod::kComponents;
    const auto partition =
        treid::group_tracklets(dataset, pairs, threshold, method, args.scorer);
    treid::write_partition_json(args.out, partition);
    std::cout << "grouped " << dataset.size() << " tracklets into " << partition.groups.size()
              << " groups at threshold " << threshold << " (" << args.method << ") -> "
              << args.out << "\n";
}

struct EvalReidArgs {
    std::string pairs, out, partition, data;
    double threshold = std::nan("");
    bool has_threshold = false;
    double min_specificity = 0.9;
};

void run_eval_reid(const EvalReidArgs& args) {
    const auto pairs = treid::read_pair_csv(args.pairs);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : pairs) {
        if (p.label == PairLabel::kUnknown) continue;
        scores.push_back(p.score);
        labels.push_back(p.label == PairLabel::kSame ? 1 : 0);
    }
    if (scores.empty()) throw treid::DataError("eval-reid: no labeled pairs in " + args.pairs);

    treid::MetricReport report;
    report.auroc = treid::roc_auc(scores, labels);
    report.auprc = treid::pr_auc(scores, labels);
    const auto sens = treid::sensitivity_at_specificity(scores, labels, args.min_specificity);
    report.sens_at_spec = sens.sensitivity;

    if (args.has_threshold) {
        std::vector<int> preds;
        preds.reserve(scores.size());
        for (double s : scores) preds.push_back(s >= args.threshold ? 1 : 0);
        const auto f1 = treid::f1_scores(preds, labels);
        report.f1_macro = f1.macro;
        report.f1_micro = f1.micro;
        report.threshold = args.threshold;
    }

    if (!args.partition.empty()) {
        if (args.data.empty()) {
            throw treid::ConfigError("eval-reid: --partition requires --data for ground truth");
        }
        const auto dataset = treid::read_manifest(args.data);
        std::map<std::int64_t, std::int64_t> entity_of;
        for (const auto& t : dataset) {
            if (t.entity_id) entity_of[t.tracklet_id] = *t.entity_id;
        }
        const auto frag =
            treid::fragmentation_report(treid::read_partition_json(args.partition), entity_of);
        report.fr = frag.fr;
        report.fr_std = frag.fr_std;
        report.fragmented_ratio = frag.fragmented_ratio;
        report.impurity = frag.impurity;
    }

    treid::write_metric_json(args.out, report);
    std::cout << "auroc " << *report.auroc << ", auprc " << *report.auprc;
    if (report.fr) std::cout << ", fr " << *report.fr;
    std::cout << " over " << scores.size() << " labeled pairs -> " << args.out << "\n";
}

struct EvalCadxArgs {
    std::string data, frame_scores, partition, class_map, out;
    double min_specificity = 0.9;
    double decision_threshold = 0.5;
};

void run_eval_cadx(const EvalCadxArgs& args) {
    const auto dataset = treid::read_manifest(args.data);
    const auto frame_scores = treid::read_frame_scores_csv(args.frame_scores);
    const auto class_of_entity = treid::read_class_map_json(args.class_map);

    std::vector<std::pair<std::string, treid::GroupingPartition>> groupings;
    groupings.emplace_back("fragmented", treid::fragmented_partition(dataset));
    groupings.emplace_back("reid", treid::read_partition_json(args.partition));
    groupings.emplace_back("oracle", treid::oracle_partition(dataset));

    const auto reports =
        treid::evaluate_groupings(dataset, frame_scores, groupings, class_of_entity,
                                  args.min_specificity, args.decision_threshold);

    nlohmann::json doc = nlohmann::json::object();
    for (const auto& r : reports) {
        nlohmann::json entry = nlohmann::json::parse(treid::metric_report_to_json(r.metrics));
        entry["groups"] = r.groups;
        nlohmann::json per_class = nlohmann::json::object();
        for (const auto& [klass, breakdown] : r.per_class) {
            per_class[std::to_string(klass)] = {{"groups", breakdown.groups},
                                                {"fr", breakdown.fr}};
        }
        entry["per_class"] = std::move(per_class);
        doc[r.grouping] = std::move(entry);

        std::cout << r.grouping << ": groups " << r.groups << ", fr " << *r.metrics.fr
                  << ", auc " << *r.metrics.auroc << ", f1_macro " << *r.metrics.f1_macro
                  << ", sens@spec " << *r.metrics.sens_at_spec << "\n";
    }
    std::ofstream out(args.out, std::ios::trunc);
    if (!out) throw treid::IoError("cannot write " + args.out);
    out << doc.dump(2) << "\n";
}

struct GradcheckArgs {
    std::size_t seeds = 5;
    std::string out;
};

int run_gradcheck(const GradcheckArgs& args) {
    std::map<std::string, double> worst;
    for (std::uint64_t seed = 1; seed <= args.seeds; ++seed) {
        for (const auto& r : treid::run_gradient_suite(seed)) {
            auto [it, inserted] = worst.try_emplace(r.layer, r.max_rel_err);
            if (!inserted) it->second = std::max(it->second, r.max_rel_err);
        }
    }
    bool pass = true;
    for (const auto& [layer, err] : worst) {
        const bool ok = err < 1e-6;
        pass = pass && ok;
        std::cout << (ok ? "ok   " : "FAIL ") << layer << " max_rel_err " << err << "\n";
    }
    if (!args.out.empty()) {
        nlohmann::json doc{{"seeds", args.seeds}, {"pass", pass}};
        for (const auto& [layer, err] : worst) doc["layers"][layer] = err;
        std::ofstream out(args.out, std::ios::trunc);
        out << doc.dump(2) << "\n";
    }
    std::cout << (pass ? "all gradients within 1e-6" : "gradient check FAILED") << "\n";
    return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tracklet re-identification pipeline"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen", "generate a synthetic tracklet benchmark");
    cgen->add_option("--seed", gen.seed, "RNG seed")->required();
    cgen->add_option("--out", gen.out, "output manifest (JSON Lines)")->required();
    cgen->add_option("--procedures", gen.cfg.procedures);
    cgen->add_option("--entities-min", gen.cfg.entities_min);
    cgen->add_option("--entities-max", gen.cfg.entities_max);
    cgen->add_option("--tracklets-min", gen.cfg.tracklets_min);
    cgen->add_option("--tracklets-max", gen.cfg.tracklets_max);
    cgen->add_option("--frames-min", gen.cfg.frames_min);
    cgen->add_option("--frames-max", gen.cfg.frames_max);
    cgen->add_option("--feature-dim", gen.cfg.feature_dim);
    cgen->add_option("--identity-dim", gen.cfg.identity_dim);
    cgen->add_option("--nuisance-dim", gen.cfg.nuisance_dim);
    cgen->add_option("--view-noise", gen.cfg.view_noise);
    cgen->add_option("--obs-noise", gen.cfg.observation_noise);
    cgen->add_option("--fps", gen.cfg.fps);
    cgen->add_flag("--no-labels", gen.no_labels, "strip ground-truth entity ids");
    cgen->add_option("--frame-scores", gen.frame_scores_path,
                     "also inject per-frame classifier scores (CSV)");
    cgen->add_option("--class-map", gen.class_map_path, "entity class labels (JSON)");
    cgen->add_option("--separability", gen.separability);
    cgen->add_option("--score-noise", gen.score_noise);

    TrainArgs train;
    auto* ctrain = app.add_subcommand("train", "two-phase contrastive ReID training");
    ctrain->add_option("--data", train.data, "dataset manifest")->required();
    ctrain->add_option("--seed", train.seed, "RNG seed")->required();
    ctrain->add_option("--out", train.out, "output weights (TRW1)")->required();
    ctrain->add_option("--config", train.config_path, "training config (JSON)");
    ctrain->add_option("--loss-curve", train.loss_curve_path, "loss curve CSV");
    auto* obatch = ctrain->add_option("--batch-pairs", train.overrides.batch_pairs);
    auto* op1 = ctrain->add_option("--phase1-steps", train.overrides.phase1_steps);
    auto* op2 = ctrain->add_option("--phase2-steps", train.overrides.phase2_steps);
    auto* oviews = ctrain->add_option("--views", train.overrides.views_per_sample);
    auto* otemp = ctrain->add_option("--temperature", train.overrides.temperature);
    auto* olr = ctrain->add_option("--lr", train.overrides.lars.learning_rate);
    auto* ofreeze = ctrain->add_flag("--freeze-backbone",
                                     train.overrides.freeze_backbone_phase2);

    EmbedArgs embed;
    auto* cembed = app.add_subcommand("embed", "embed tracklets with trained weights");
    cembed->add_option("--data", embed.data)->required();
    cembed->add_option("--weights", embed.weights)->required();
    cembed->add_option("--out", embed.out, "output embeddings (EMB1)")->required();
    cembed->add_option("--encoder", embed.encoder)
        ->check(CLI::IsMember({"joint", "average"}));
    cembed->add_option("--max-views", embed.max_views);

    ScoreArgs score;
    auto* cscore = app.add_subcommand("score", "score same-procedure tracklet pairs");
    cscore->add_option("--data", score.data)->required();
    cscore->add_option("--weights", score.weights)->required();
    cscore->add_option("--out", score.out, "output pair CSV")->required();
    cscore->add_option("--scorer", score.scorer)
        ->check(CLI::IsMember({"late_min", "late_max", "late_mean", "mv_average", "mv_joint"}));
    cscore->add_option("--max-views", score.max_views);

    CalibrateArgs calibrate;
    auto* ccal = app.add_subcommand("calibrate", "pick the operating threshold at a target FPR");
    ccal->add_option("--pairs", calibrate.pairs)->required();
    ccal->add_option("--out", calibrate.out)->required();
    ccal->add_option("--target-fpr", calibrate.target_fpr);

    GroupArgs group;
    auto* cgroup = app.add_subcommand("group", "group tracklets above a similarity threshold");
    cgroup->add_option("--data", group.data)->required();
    cgroup->add_option("--pairs", group.pairs)->required();
    cgroup->add_option("--out", group.out, "output partition JSON")->required();
    auto* othr = cgroup->add_option("--threshold", group.threshold);
    cgroup->add_option("--calibration", group.calibration, "calibration JSON with threshold");
    cgroup->add_option("--method", group.method)->check(CLI::IsMember({"components", "greedy"}));
    cgroup->add_option("--scorer-id", group.scorer, "scorer label stored in the partition");

    EvalReidArgs eval_reid;
    auto* cereid = app.add_subcommand("eval-reid", "pair-level ReID metrics");
    cereid->add_option("--pairs", eval_reid.pairs)->required();
    cereid->add_option("--out", eval_reid.out)->required();
    cereid->add_option("--partition", eval_reid.partition, "partition for fragmentation stats");
    cereid->add_option("--data", eval_reid.data, "manifest with ground truth");
    auto* oethr = cereid->add_option("--threshold", eval_reid.threshold);
    cereid->add_option("--min-specificity", eval_reid.min_specificity);

    EvalCadxArgs eval_cadx;
    auto* cecadx = app.add_subcommand("eval-cadx", "classification quality per grouping method");
    cecadx->add_option("--data", eval_cadx.data)->required();
    cecadx->add_option("--frame-scores", eval_cadx.frame_scores)->required();
    cecadx->add_option("--partition", eval_cadx.partition, "ReID partition JSON")->required();
    cecadx->add_option("--class-map", eval_cadx.class_map)->required();
    cecadx->add_option("--out", eval_cadx.out)->required();
    cecadx->add_option("--min-specificity", eval_cadx.min_specificity);
    cecadx->add_option("--decision-threshold", eval_cadx.decision_threshold);

    GradcheckArgs gradcheck;
    auto* cgrad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    cgrad->add_option("--seeds", gradcheck.seeds, "number of seeds per layer");
    cgrad->add_option("--out", gradcheck.out, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cgen->parsed()) {
            if (!gen.frame_scores_path.empty() && gen.class_map_path.empty()) {
                throw treid::ConfigError("gen: --frame-scores requires --class-map");
            }
            run_gen(gen);
        } else if (ctrain->parsed()) {
            train.has_batch = obatch->count() > 0;
            train.has_p1 = op1->count() > 0;
            train.has_p2 = op2->count() > 0;
            train.has_views = oviews->count() > 0;
            train.has_temp = otemp->count() > 0;
            train.has_lr = olr->count() > 0;
            train.has_freeze = ofreeze->count() > 0;
            run_train(train);
        } else if (cembed->parsed()) {
            run_embed(embed);
        } else if (cscore->parsed()) {
            run_score(score);
        } else if (ccal->parsed()) {
            run_calibrate(calibrate);
        } else if (cgroup->parsed()) {
            group.has_threshold = othr->count() > 0;
            run_group(group);
        } else if (cereid->parsed()) {
            eval_reid.has_threshold = oethr->count() > 0;
            run_eval_reid(eval_reid);
        } else if (cecadx->parsed()) {
            run_eval_cadx(eval_cadx);
        } else if (cgrad->parsed()) {
            return run_gradcheck(gradcheck);
        }
    } catch (const treid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
