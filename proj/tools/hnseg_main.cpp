#include "CLI11.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hnseg/cases.hpp"
#include "hnseg/crossval.hpp"
#include "hnseg/model_io.hpp"

namespace {

using namespace hnseg;

std::uint64_t parse_seed_text(const std::string& text, const std::string& what) {
    require(!text.empty(), what + ": empty seed");
    for (char ch : text)
        require(std::isdigit(static_cast<unsigned char>(ch)) != 0,
                what + ": seed must be an unsigned integer, got '" + text + "'");
    try {
        return std::stoull(text);
    } catch (const std::exception&) {
        throw validation_error(what + ": seed out of range: " + text);
    }
}

// --seed beats HNSEG_SEED beats 0.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
    if (opt->count() > 0) return flag_value;
    if (const char* env = std::getenv("HNSEG_SEED"))
        return parse_seed_text(env, "HNSEG_SEED");
    return 0;
}

PixelCombine parse_combine(const std::string& name) {
    return name == "mean" ? PixelCombine::mean : PixelCombine::max;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw io_error("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct PrepFlags {
    double window_lo = -160.0;
    double window_hi = 240.0;
    std::size_t margin = 8;
    std::size_t jitter = 4;

    void bind(CLI::App* cmd) {
        cmd->add_option("--window-lo", window_lo, "intensity window low (HU)")
            ->capture_default_str();
        cmd->add_option("--window-hi", window_hi, "intensity window high (HU)")
            ->capture_default_str();
        cmd->add_option("--box-margin", margin, "candidate box margin (voxels)")
            ->capture_default_str();
        cmd->add_option("--box-jitter", jitter, "candidate box jitter (voxels)")
            ->capture_default_str();
    }

    void apply(PipelineConfig& cfg) const {
        cfg.window_lo = window_lo;
        cfg.window_hi = window_hi;
        cfg.box_margin = margin;
        cfg.box_jitter = jitter;
    }
};

struct PhantomFlags {
    std::size_t distractors = 3;
    double distractor_scale = 0.7;
    double organ_scale = 1.0;
    double min_volume = 0.005;

    void bind(CLI::App* cmd) {
        cmd->add_option("--distractors", distractors, "organ-like clutter blobs per case")
            ->capture_default_str();
        cmd->add_option("--distractor-scale", distractor_scale,
                        "clutter radius relative to the organ blobs")
            ->capture_default_str();
        cmd->add_option("--organ-scale", organ_scale, "organ ellipsoid radius scale")
            ->capture_default_str();
        cmd->add_option("--min-volume", min_volume, "minimum organ volume fraction")
            ->capture_default_str();
    }

    void apply(PhantomSpec& spec) const {
        spec.distractor_blobs = distractors;
        spec.distractor_radius_scale = distractor_scale;
        spec.organ_radius_scale = organ_scale;
        spec.min_volume_fraction = min_volume;
    }
};

struct HnnFlags {
    std::size_t stages = 3;
    std::size_t convs = 2;
    std::size_t base_channels = 8;
    std::size_t epochs = 30;
    std::size_t batch = 1;
    double lr = 0.001;
    std::vector<double> side_weights;
    bool unbalanced_fusion = false;

    void bind(CLI::App* cmd) {
        cmd->add_option("--stages", stages, "network stages")->capture_default_str();
        cmd->add_option("--convs-per-stage", convs, "convolutions per stage")
            ->capture_default_str();
        cmd->add_option("--base-channels", base_channels, "channels of the first stage")
            ->capture_default_str();
        cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
        cmd->add_option("--batch-size", batch, "slices per gradient step")
            ->capture_default_str();
        cmd->add_option("--learning-rate", lr, "SGD learning rate")->capture_default_str();
        cmd->add_option("--side-weights", side_weights,
                        "per-stage side loss weights (default: all ones)");
        cmd->add_flag("--unbalanced-fusion", unbalanced_fusion,
                      "fusion loss without class balancing");
    }

    HnnConfig config() const {
        HnnConfig h;
        h.num_stages = stages;
        h.convs_per_stage = convs;
        h.base_channels = base_channels;
        h.stage_strides.clear();
        std::size_t s = 1;
        for (std::size_t m = 0; m < stages; ++m, s *= 2) h.stage_strides.push_back(s);
        h.side_loss_weights = side_weights;
        h.learning_rate = lr;
        h.epochs = epochs;
        h.batch_size = batch;
        h.balanced_fusion = !unbalanced_fusion;
        return h;
    }
};

// ---------------------------------------------------------------------------
// Subcommands

int run_synth(const std::string& out_dir, std::size_t n_cases,
              const std::vector<std::size_t>& dims, const std::vector<double>& spacing,
              const PhantomFlags& phantom, std::uint64_t seed) {
    PhantomSpec spec;
    spec.dims = {dims[0], dims[1], dims[2]};
    spec.spacing = {spacing[0], spacing[1], spacing[2]};
    phantom.apply(spec);
    const auto cases = make_synthetic_corpus(n_cases, spec, seed);
    for (const CaseData& c : cases) {
        save_case(c, std::filesystem::path(out_dir) / c.id);
        std::cout << c.id << ": " << c.mask.foreground_count() << " foreground voxels\n";
    }
    std::cout << "wrote " << cases.size() << " cases under " << out_dir << "\n";
    return 0;
}

int run_train(const std::string& data_dir, const std::string& out_interior,
              const std::string& out_boundary, const PipelineConfig& cfg) {
    validate_pipeline_config(cfg);
    const auto cases = load_corpus(data_dir);
    write_config_echo(std::cout, cfg);

    std::vector<PreparedCase> prepared;
    prepared.reserve(cases.size());
    std::vector<std::size_t> members;
    for (const CaseData& c : cases) {
        members.push_back(prepared.size());
        prepared.push_back(prepare_case(c, cfg));
    }
    const std::vector<SlicePair> slices = pooled_training_slices(prepared, members, cfg);
    std::cout << "# training on " << cases.size() << " cases, " << slices.size()
              << " slices\n";

    // Same seed streams as cross-validation fold 0, so a standalone training
    // run is reproducible from the master seed alone.
    HnnConfig cfg_i = cfg.hnn;
    cfg_i.seed = seed_hnn_interior(cfg.seed, 0);
    const TrainResult net_i = train(cfg_i, slices, Target::interior);
    HnnConfig cfg_b = cfg.hnn;
    cfg_b.seed = seed_hnn_boundary(cfg.seed, 0);
    const TrainResult net_b = train(cfg_b, slices, Target::boundary);

    for (std::size_t e = 0; e < net_i.epoch_losses.size(); ++e)
        std::cout << "epoch " << e << " interior " << detail::fmt(net_i.epoch_losses[e])
                  << " boundary " << detail::fmt(net_b.epoch_losses[e]) << "\n";
    save_network(net_i.params, out_interior);
    save_network(net_b.params, out_boundary);
    std::cout << "saved interior model to " << out_interior << "\n";
    std::cout << "saved boundary model to " << out_boundary << "\n";
    return 0;
}

struct PredictOpts {
    std::string image, mask, interior, boundary, forest, out;
    std::string case_id = "case_000";
    std::string combine = "max";
    double threshold = -1.0;  // < 0: probabilities only
    double min_prob = 0.10;
};

int run_predict(const PredictOpts& o, const PipelineConfig& cfg) {
    CaseData c;
    c.id = o.case_id;
    c.image = load_volume(o.image);
    c.mask = load_mask(o.mask);
    require(c.mask.dims == c.image.dims, "predict: image/mask dimension mismatch");
    require(c.mask.foreground_count() > 0,
            "predict: mask is empty; cannot place a candidate box");
    const NetworkParams net_i = load_network(o.interior);
    const NetworkParams net_b = load_network(o.boundary);

    const PreparedCase prepared = prepare_case(c, cfg);
    const CaseInference inf = infer_case(net_i, net_b, prepared, cfg.watershed_min_prob);
    std::cout << "case " << c.id << " box x[" << prepared.box.min[0] << ","
              << prepared.box.max[0] << "] y[" << prepared.box.min[1] << ","
              << prepared.box.max[1] << "] z[" << prepared.box.min[2] << ","
              << prepared.box.max[2] << "] slices " << prepared.slices.size() << "\n";

    const Volume prob_i = interior_prob_volume(prepared, inf);
    save_volume(prob_i, o.out + "_interior");
    {
        std::vector<Grid2D> maps;
        for (const auto& s : inf.slices) maps.push_back(s.boundary_prob);
        const Volume prob_b = stack_probs_to_volume(maps, prepared.box, c.image.dims,
                                                    c.image.spacing);
        save_volume(prob_b, o.out + "_boundary");
    }
    if (o.threshold >= 0.0)
        save_mask(threshold_volume(prob_i, o.threshold), o.out + "_interior_mask");

    if (!o.forest.empty()) {
        const ForestModel forest = load_forest(o.forest);
        const Volume prob_rf = rf_prob_volume(prepared, inf, forest, parse_combine(o.combine));
        save_volume(prob_rf, o.out + "_rf");
        if (o.threshold >= 0.0)
            save_mask(threshold_volume(prob_rf, o.threshold), o.out + "_rf_mask");
    }
    std::cout << "wrote volumes under " << o.out << "_*\n";
    return 0;
}

struct ProposalsOpts {
    std::string image, mask, boundary, out_prefix;
    std::string case_id = "case_000";
    std::size_t slice = 0;
    double min_prob = 0.10;
};

int run_proposals(const ProposalsOpts& o, const PipelineConfig& cfg) {
    CaseData c;
    c.id = o.case_id;
    c.image = load_volume(o.image);
    c.mask = load_mask(o.mask);
    require(c.mask.dims == c.image.dims, "proposals: image/mask dimension mismatch");
    require(c.mask.foreground_count() > 0,
            "proposals: mask is empty; cannot place a candidate box");
    const NetworkParams net = load_network(o.boundary);
    require(net.num_stages() >= 3, "proposals: boundary model needs at least 3 stages");

    const PreparedCase prepared = prepare_case(c, cfg);
    const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(o.slice);
    require(z >= prepared.box.min[2] && z <= prepared.box.max[2],
            "proposals: slice " + std::to_string(o.slice) + " outside candidate box z[" +
                std::to_string(prepared.box.min[2]) + "," +
                std::to_string(prepared.box.max[2]) + "]");
    const SlicePair& sp = prepared.slices[static_cast<std::size_t>(z - prepared.box.min[2])];

    const auto [bundle, cache] = forward(net, sp.image);
    (void)cache;
    std::vector<SuperpixelPartition> parts;
    parts.push_back(watershed(bundle.side_maps[1], o.min_prob, "side2"));
    parts.push_back(watershed(bundle.side_maps[2], o.min_prob, "side3"));
    parts.push_back(watershed(bundle.fused_map, o.min_prob, "fused"));
    for (const SuperpixelPartition& p : parts) {
        const std::string path = o.out_prefix + "_" + p.scale_tag + ".pgm";
        write_partition_pgm(p, path);
        std::cout << p.scale_tag << " regions " << p.num_regions << " -> " << path << "\n";
    }
    const ProposalSet set = build_hierarchy(parts, bundle.fused_map);
    std::cout << "proposals " << set.proposals.size() << " (level1 " << set.num_level1
              << ")\n";
    return 0;
}

struct AggregateOpts {
    std::string data, interior, boundary, out_forest, emit_features;
    std::size_t trees = 50;
    std::size_t mtry = 6;
    double positive_fraction = 0.5;
};

int run_aggregate(const AggregateOpts& o, const PipelineConfig& cfg) {
    validate_pipeline_config(cfg);
    const auto cases = load_corpus(o.data);
    const NetworkParams net_i = load_network(o.interior);
    const NetworkParams net_b = load_network(o.boundary);

    std::ofstream feat;
    if (!o.emit_features.empty()) {
        feat = open_output(o.emit_features);
        feat << "case_id,slice_index,proposal,level,label";
        for (const std::string& name : feature_names()) feat << "," << name;
        feat << "\n";
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (const CaseData& c : cases) {
        const PreparedCase prepared = prepare_case(c, cfg);
        const CaseInference inf =
            infer_case(net_i, net_b, prepared, cfg.watershed_min_prob);
        for (std::size_t k = 0; k < inf.slices.size(); ++k) {
            const SliceInference& s = inf.slices[k];
            for (std::size_t p = 0; p < s.proposals.proposals.size(); ++p) {
                const int label =
                    label_proposal(s.proposals.proposals[p], prepared.slices[k].interior_gt,
                                   cfg.positive_fraction);
                rows.emplace_back(s.features[p].begin(), s.features[p].end());
                labels.push_back(label);
                if (feat.is_open()) {
                    feat << c.id << "," << prepared.slices[k].slice_index << "," << p << ","
                         << s.proposals.proposals[p].level << "," << label;
                    for (double v : s.features[p]) feat << "," << detail::fmt(v);
                    feat << "\n";
                }
            }
        }
    }
    std::size_t positives = 0;
    for (int l : labels) positives += (l == 1);
    std::cout << "rows " << rows.size() << " positives " << positives << " negatives "
              << labels.size() - positives << "\n";

    ForestConfig fc;
    fc.trees = cfg.forest_trees;
    fc.mtry = cfg.forest_mtry;
    fc.seed = seed_forest(cfg.seed, 0);
    std::cout << "# forest seed = " << fc.seed << "\n";
    const ForestModel forest = rf_train(rows, labels, fc);
    save_forest(forest, o.out_forest);
    std::cout << "saved forest model to " << o.out_forest << " (" << forest.trees.size()
              << " trees)\n";
    if (feat.is_open()) {
        finish_output(feat, o.emit_features);
        std::cout << "wrote feature table to " << o.emit_features << "\n";
    }
    return 0;
}

int run_evaluate(const std::vector<std::string>& preds, const std::vector<std::string>& gts,
                 const std::string& curve_path) {
    require(preds.size() == gts.size(), "evaluate: need one --gt per --pred");
    require(!preds.empty(), "evaluate: need at least one --pred/--gt pair");
    std::vector<double> dscs;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const MaskVolume pred = load_mask(preds[i]);
        const MaskVolume gt = load_mask(gts[i]);
        const double d = dsc(pred, gt);
        dscs.push_back(d);
        std::cout << "pair " << i << " dsc " << detail::fmt(d) << " dist_mm ";
        if (pred.foreground_count() > 0 && gt.foreground_count() > 0)
            std::cout << detail::fmt(avg_min_distance(pred, gt));
        else
            std::cout << "n/a";
        std::cout << "\n";
    }
    const Summary s = summarize(dscs);
    std::cout << "dsc mean " << detail::fmt(s.mean) << " std " << detail::fmt(s.stddev)
              << " min " << detail::fmt(s.min) << " max " << detail::fmt(s.max) << "\n";
    if (!curve_path.empty()) {
        const auto curve = dsc_coverage_curve(dscs);
        std::ofstream out = open_output(curve_path);
        for (const auto& [level, fraction] : curve)
            out << detail::fmt(level) << " " << detail::fmt(fraction) << "\n";
        finish_output(out, curve_path);
        std::cout << "wrote coverage curve (" << curve.size() << " levels) to "
                  << curve_path << "\n";
    }
    return 0;
}

struct CrossvalOpts {
    std::string data;
    std::size_t cases = 0;
    std::vector<std::size_t> dims{32, 32, 24};
    PhantomFlags phantom;
    std::string report, csv, audit;
};

int run_crossval_cmd(const CrossvalOpts& o, const PipelineConfig& cfg) {
    validate_pipeline_config(cfg);
    std::vector<CaseData> corpus;
    if (!o.data.empty()) {
        corpus = load_corpus(o.data);
    } else {
        PhantomSpec spec;
        spec.dims = {o.dims[0], o.dims[1], o.dims[2]};
        o.phantom.apply(spec);
        corpus = make_synthetic_corpus(o.cases, spec, cfg.seed);
    }
    const CrossvalResult result = run_crossval(corpus, cfg);
    write_crossval_report(std::cout, result);
    if (!o.report.empty()) {
        std::ofstream out = open_output(o.report);
        write_crossval_report(out, result);
        finish_output(out, o.report);
    }
    if (!o.csv.empty()) {
        std::ofstream out = open_output(o.csv);
        write_crossval_csv(out, result);
        finish_output(out, o.csv);
    }
    if (!o.audit.empty()) {
        std::ofstream out = open_output(o.audit);
        write_audit_log(out, result);
        finish_output(out, o.audit);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hnseg: nested-network organ segmentation pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hnseg 1.0.0");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic phantom corpus");
    std::string synth_out;
    std::size_t synth_cases = 4;
    std::vector<std::size_t> synth_dims{32, 32, 24};
    std::vector<double> synth_spacing{1.0, 1.0, 1.0};
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "output corpus directory")->required();
    synth->add_option("--cases", synth_cases, "number of cases")->capture_default_str();
    synth->add_option("--dims", synth_dims, "volume dimensions (nx ny nz)")->expected(3);
    synth->add_option("--spacing", synth_spacing, "voxel spacing in mm (sx sy sz)")
        ->expected(3);
    PhantomFlags synth_phantom;
    synth_phantom.bind(synth);
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "master seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train interior and boundary networks");
    std::string train_data, train_out_i, train_out_b;
    std::uint64_t train_seed = 0;
    PrepFlags train_prep;
    HnnFlags train_hnn;
    train_cmd->add_option("--data", train_data, "corpus directory")->required();
    train_cmd->add_option("--out-interior", train_out_i, "interior model file")->required();
    train_cmd->add_option("--out-boundary", train_out_b, "boundary model file")->required();
    auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "master seed");
    train_prep.bind(train_cmd);
    train_hnn.bind(train_cmd);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "run trained models on one case");
    PredictOpts predict_opts;
    std::uint64_t predict_seed = 0;
    PrepFlags predict_prep;
    predict_cmd->add_option("--image", predict_opts.image, "image volume base path")
        ->required();
    predict_cmd->add_option("--mask", predict_opts.mask, "mask base path (defines the box)")
        ->required();
    predict_cmd->add_option("--interior", predict_opts.interior, "interior model file")
        ->required();
    predict_cmd->add_option("--boundary", predict_opts.boundary, "boundary model file")
        ->required();
    predict_cmd->add_option("--out", predict_opts.out, "output base path")->required();
    predict_cmd->add_option("--forest", predict_opts.forest, "optional forest model file");
    predict_cmd->add_option("--case-id", predict_opts.case_id, "case id (seeds the box)")
        ->capture_default_str();
    predict_cmd->add_option("--threshold", predict_opts.threshold,
                            "also write binary masks at this probability");
    predict_cmd
        ->add_option("--combine", predict_opts.combine, "proposal-to-pixel combine rule")
        ->check(CLI::IsMember({"max", "mean"}))
        ->capture_default_str();
    predict_cmd->add_option("--min-prob", predict_opts.min_prob, "watershed floor")
        ->capture_default_str();
    auto* predict_seed_opt =
        predict_cmd->add_option("--master-seed", predict_seed, "master seed (seeds the box)");
    predict_prep.bind(predict_cmd);

    // proposals
    auto* prop_cmd =
        app.add_subcommand("proposals", "export superpixel partitions of one slice");
    ProposalsOpts prop_opts;
    std::uint64_t prop_seed = 0;
    PrepFlags prop_prep;
    prop_cmd->add_option("--image", prop_opts.image, "image volume base path")->required();
    prop_cmd->add_option("--mask", prop_opts.mask, "mask base path (defines the box)")
        ->required();
    prop_cmd->add_option("--boundary", prop_opts.boundary, "boundary model file")->required();
    prop_cmd->add_option("--slice", prop_opts.slice, "absolute z index")->required();
    prop_cmd->add_option("--out-prefix", prop_opts.out_prefix, "PGM path prefix")->required();
    prop_cmd->add_option("--case-id", prop_opts.case_id, "case id (seeds the box)")
        ->capture_default_str();
    prop_cmd->add_option("--min-prob", prop_opts.min_prob, "watershed floor")
        ->capture_default_str();
    auto* prop_seed_opt =
        prop_cmd->add_option("--master-seed", prop_seed, "master seed (seeds the box)");
    prop_prep.bind(prop_cmd);

    // aggregate
    auto* agg_cmd = app.add_subcommand(
        "aggregate", "fit the proposal forest from a corpus and trained networks");
    AggregateOpts agg_opts;
    std::uint64_t agg_seed = 0;
    double agg_min_prob = 0.10;
    PrepFlags agg_prep;
    agg_cmd->add_option("--data", agg_opts.data, "corpus directory")->required();
    agg_cmd->add_option("--interior", agg_opts.interior, "interior model file")->required();
    agg_cmd->add_option("--boundary", agg_opts.boundary, "boundary model file")->required();
    agg_cmd->add_option("--out-forest", agg_opts.out_forest, "forest model file")->required();
    agg_cmd->add_option("--emit-features", agg_opts.emit_features,
                        "write the proposal feature table as CSV");
    agg_cmd->add_option("--trees", agg_opts.trees, "trees in the forest")
        ->capture_default_str();
    agg_cmd->add_option("--mtry", agg_opts.mtry, "features per split (0 = sqrt)")
        ->capture_default_str();
    agg_cmd
        ->add_option("--positive-fraction", agg_opts.positive_fraction,
                     "inside fraction that makes a proposal positive")
        ->capture_default_str();
    agg_cmd->add_option("--min-prob", agg_min_prob, "watershed floor")->capture_default_str();
    auto* agg_seed_opt = agg_cmd->add_option("--master-seed", agg_seed, "master seed");
    agg_prep.bind(agg_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score predicted masks against ground truth");
    std::vector<std::string> eval_preds, eval_gts;
    std::string eval_curve;
    eval_cmd->add_option("--pred", eval_preds, "predicted mask base path (repeatable)")
        ->required();
    eval_cmd->add_option("--gt", eval_gts, "ground-truth mask base path (repeatable)")
        ->required();
    eval_cmd->add_option("--emit-curve", eval_curve,
                         "write the coverage-vs-threshold curve to a file");

    // crossval
    auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross-validation");
    CrossvalOpts cv_opts;
    std::size_t cv_folds = 4, cv_jobs = 1, cv_trees = 50, cv_mtry = 6, cv_box_views = 1;
    double cv_pos_frac = 0.5, cv_min_prob = 0.10;
    std::string cv_combine = "max";
    std::uint64_t cv_seed = 0;
    PrepFlags cv_prep;
    HnnFlags cv_hnn;
    auto* cv_data = cv_cmd->add_option("--data", cv_opts.data, "corpus directory");
    auto* cv_cases =
        cv_cmd->add_option("--cases", cv_opts.cases, "synthesize this many phantom cases");
    cv_data->excludes(cv_cases);
    cv_cmd->add_option("--dims", cv_opts.dims, "phantom dimensions for --cases")->expected(3);
    cv_opts.phantom.bind(cv_cmd);
    cv_cmd->add_option("--folds", cv_folds, "number of folds")->capture_default_str();
    cv_cmd->add_option("--jobs", cv_jobs, "worker threads across folds")
        ->capture_default_str();
    cv_cmd->add_option("--trees", cv_trees, "trees in the forest")->capture_default_str();
    cv_cmd->add_option("--mtry", cv_mtry, "features per split (0 = sqrt)")
        ->capture_default_str();
    cv_cmd
        ->add_option("--box-views", cv_box_views,
                     "re-jittered training crops per case feeding the forest")
        ->capture_default_str();
    cv_cmd
        ->add_option("--positive-fraction", cv_pos_frac,
                     "inside fraction that makes a proposal positive")
        ->capture_default_str();
    cv_cmd->add_option("--min-prob", cv_min_prob, "watershed floor")->capture_default_str();
    cv_cmd->add_option("--combine", cv_combine, "proposal-to-pixel combine rule")
        ->check(CLI::IsMember({"max", "mean"}))
        ->capture_default_str();
    cv_cmd->add_option("--report", cv_opts.report, "also write the report to a file");
    cv_cmd->add_option("--csv", cv_opts.csv, "write per-case scores as CSV");
    cv_cmd->add_option("--audit", cv_opts.audit, "write the data-handling audit log");
    auto* cv_seed_opt = cv_cmd->add_option("--seed", cv_seed, "master seed");
    cv_prep.bind(cv_cmd);
    cv_hnn.bind(cv_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return run_synth(synth_out, synth_cases, synth_dims, synth_spacing,
                             synth_phantom, resolve_seed(synth_seed_opt, synth_seed));
        if (train_cmd->parsed()) {
            PipelineConfig cfg;
            train_prep.apply(cfg);
            cfg.hnn = train_hnn.config();
            cfg.seed = resolve_seed(train_seed_opt, train_seed);
            return run_train(train_data, train_out_i, train_out_b, cfg);
        }
        if (predict_cmd->parsed()) {
            PipelineConfig cfg;
            predict_prep.apply(cfg);
            cfg.watershed_min_prob = predict_opts.min_prob;
            cfg.seed = resolve_seed(predict_seed_opt, predict_seed);
            require(predict_opts.min_prob >= 0.0 && predict_opts.min_prob <= 1.0,
                    "predict: min-prob must lie in [0,1]");
            return run_predict(predict_opts, cfg);
        }
        if (prop_cmd->parsed()) {
            PipelineConfig cfg;
            prop_prep.apply(cfg);
            cfg.seed = resolve_seed(prop_seed_opt, prop_seed);
            require(prop_opts.min_prob >= 0.0 && prop_opts.min_prob <= 1.0,
                    "proposals: min-prob must lie in [0,1]");
            return run_proposals(prop_opts, cfg);
        }
        if (agg_cmd->parsed()) {
            PipelineConfig cfg;
            agg_prep.apply(cfg);
            cfg.forest_trees = agg_opts.trees;
            cfg.forest_mtry = agg_opts.mtry;
            cfg.positive_fraction = agg_opts.positive_fraction;
            cfg.watershed_min_prob = agg_min_prob;
            cfg.seed = resolve_seed(agg_seed_opt, agg_seed);
            return run_aggregate(agg_opts, cfg);
        }
        if (eval_cmd->parsed()) return run_evaluate(eval_preds, eval_gts, eval_curve);
        if (cv_cmd->parsed()) {
            if (cv_opts.data.empty() && cv_opts.cases == 0) {
                std::cerr << "crossval: pass --data DIR or --cases N\n";
                return 2;
            }
            PipelineConfig cfg;
            cv_prep.apply(cfg);
            cfg.hnn = cv_hnn.config();
            cfg.folds = cv_folds;
            cfg.jobs = cv_jobs;
            cfg.forest_trees = cv_trees;
            cfg.forest_mtry = cv_mtry;
            cfg.forest_box_views = cv_box_views;
            cfg.positive_fraction = cv_pos_frac;
            cfg.watershed_min_prob = cv_min_prob;
            cfg.combine = parse_combine(cv_combine);
            cfg.seed = resolve_seed(cv_seed_opt, cv_seed);
            return run_crossval_cmd(cv_opts, cfg);
        }
    } catch (const divergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
