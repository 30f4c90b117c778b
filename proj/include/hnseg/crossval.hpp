#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hnseg/aggregate.hpp"
#include "hnseg/cases.hpp"
#include "hnseg/features.hpp"
#include "hnseg/forest.hpp"
#include "hnseg/hnn.hpp"
#include "hnseg/metrics.hpp"
#include "hnseg/phantom.hpp"
#include "hnseg/preprocess.hpp"
#include "hnseg/proposals.hpp"
#include "hnseg/watershed.hpp"

namespace hnseg {

// Every knob of the end-to-end pipeline. The master seed is the only source
// of randomness: all stage seeds are derived from it through fixed streams.
struct PipelineConfig {
    double window_lo = -160.0;
    double window_hi = 240.0;
    std::size_t box_margin = 8;
    std::size_t box_jitter = 4;
    HnnConfig hnn;  // hnn.seed is ignored; per-fold seeds are derived
    double watershed_min_prob = 0.10;
    std::size_t forest_trees = 50;
    std::size_t forest_mtry = 6;
    std::size_t forest_box_views = 1;  // re-jittered training crops per case feeding forest rows
    double positive_fraction = 0.5;
    PixelCombine combine = PixelCombine::max;
    ThresholdGrid thresholds;
    std::size_t folds = 4;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

inline void validate_pipeline_config(const PipelineConfig& c) {
    require(c.window_lo < c.window_hi, "config: window_lo must be below window_hi");
    validate_config(c.hnn);
    require(c.hnn.num_stages >= 3,
            "config: proposals need at least 3 stages (side outputs 2-3 plus fusion)");
    require(c.folds >= 2, "config: need at least 2 folds");
    require(c.jobs >= 1, "config: jobs must be positive");
    require(c.positive_fraction > 0.0 && c.positive_fraction <= 1.0,
            "config: positive_fraction must lie in (0,1]");
    require(c.forest_trees >= 1, "config: need at least one tree");
    require(c.forest_box_views >= 1, "config: need at least one box view");
    require(c.watershed_min_prob >= 0.0 && c.watershed_min_prob <= 1.0,
            "config: watershed min_prob must lie in [0,1]");
}

// Seed streams. Per-case streams hash the case id so they do not depend on
// corpus composition.
inline std::uint64_t seed_fold_plan(std::uint64_t master) { return derive_seed(master, 0x4000); }
inline std::uint64_t seed_hnn_interior(std::uint64_t master, std::size_t fold) {
    return derive_seed(master, 0x1000 + fold);
}
inline std::uint64_t seed_hnn_boundary(std::uint64_t master, std::size_t fold) {
    return derive_seed(master, 0x2000 + fold);
}
inline std::uint64_t seed_forest(std::uint64_t master, std::size_t fold) {
    return derive_seed(master, 0x3000 + fold);
}
inline std::uint64_t seed_case_box(std::uint64_t master, const std::string& case_id) {
    return derive_seed(derive_seed(master, 0x5000), hash_string(case_id));
}
inline std::uint64_t seed_case_box_view(std::uint64_t master, const std::string& case_id,
                                        std::size_t view) {
    const std::uint64_t base = seed_case_box(master, case_id);
    return view == 0 ? base : derive_seed(base, 0x7000 + view);
}
inline std::uint64_t seed_phantom(std::uint64_t master, std::size_t index) {
    return derive_seed(master, 0x6000 + index);
}

// Deterministic synthetic corpus with ids case_000, case_001, ...
inline std::vector<CaseData> make_synthetic_corpus(std::size_t n_cases, PhantomSpec spec,
                                                   std::uint64_t master_seed) {
    require(n_cases >= 1, "make_synthetic_corpus: need at least one case");
    std::vector<CaseData> cases;
    for (std::size_t i = 0; i < n_cases; ++i) {
        spec.seed = seed_phantom(master_seed, i);
        auto [image, mask] = generate_phantom(spec);
        char name[32];
        std::snprintf(name, sizeof(name), "case_%03zu", i);
        cases.push_back({name, std::move(image), std::move(mask)});
    }
    return cases;
}

// Round-robin assignment of a seeded shuffle; folds are disjoint and cover
// every case.
struct FoldPlan {
    std::size_t folds = 0;
    std::vector<std::vector<std::size_t>> test_cases;  // per fold, ascending
};

inline FoldPlan make_fold_plan(std::size_t n_cases, std::size_t folds,
                               std::uint64_t master_seed) {
    require(folds >= 2, "make_fold_plan: need at least 2 folds");
    require(n_cases >= folds, "make_fold_plan: need at least one case per fold");
    Rng rng(seed_fold_plan(master_seed));
    const std::vector<std::size_t> order = rng.permutation(n_cases);
    FoldPlan plan;
    plan.folds = folds;
    plan.test_cases.resize(folds);
    for (std::size_t i = 0; i < n_cases; ++i)
        plan.test_cases[i % folds].push_back(order[i]);
    for (auto& fold : plan.test_cases) std::sort(fold.begin(), fold.end());
    return plan;
}

// ---------------------------------------------------------------------------
// Per-case preprocessing and inference

struct PreparedCase {
    const CaseData* data = nullptr;
    BoundingBox box;
    std::vector<SlicePair> slices;
};

inline PreparedCase prepare_case_view(const CaseData& c, const PipelineConfig& cfg,
                                      std::size_t view) {
    PreparedCase p;
    p.data = &c;
    p.box = candidate_box(c.mask, cfg.box_margin, cfg.box_jitter,
                          seed_case_box_view(cfg.seed, c.id, view));
    const Volume windowed = hu_window(c.image, cfg.window_lo, cfg.window_hi);
    p.slices = extract_axial_slices(windowed, c.mask, p.box);
    return p;
}

inline PreparedCase prepare_case(const CaseData& c, const PipelineConfig& cfg) {
    return prepare_case_view(c, cfg, 0);
}

// Grows a box in-plane (x and y only) until it reaches the target extents,
// staying inside the volume. Growth never shrinks, so ground-truth containment
// is preserved.
inline BoundingBox grow_box_xy(BoundingBox box, std::size_t target_x, std::size_t target_y,
                               const std::array<std::size_t, 3>& dims) {
    const std::size_t targets[2] = {target_x, target_y};
    for (int a = 0; a < 2; ++a) {
        std::ptrdiff_t need =
            static_cast<std::ptrdiff_t>(targets[a]) - static_cast<std::ptrdiff_t>(box.extent(a));
        if (need <= 0) continue;
        const std::ptrdiff_t up =
            std::min(need, static_cast<std::ptrdiff_t>(dims[a]) - 1 - box.max[a]);
        box.max[a] += up;
        need -= up;
        const std::ptrdiff_t down = std::min(need, box.min[a]);
        box.min[a] -= down;
        need -= down;
        require(need == 0, "grow_box_xy: volume too small for the requested crop extent");
    }
    return box;
}

// Shared-size training crops for a set of cases. Candidate boxes are jittered
// per case, so their in-plane extents differ, but train() needs one slice
// size. Every member's box is grown to the pool's maximum extent and its
// slices re-cut; inference elsewhere keeps each case's own box.
inline std::vector<SlicePair> pooled_training_slices(const std::vector<PreparedCase>& prepared,
                                                     const std::vector<std::size_t>& members,
                                                     const PipelineConfig& cfg) {
    require(!members.empty(), "pooled_training_slices: empty pool");
    std::size_t target_x = 0, target_y = 0;
    for (std::size_t i : members) {
        target_x = std::max(target_x, prepared[i].box.extent(0));
        target_y = std::max(target_y, prepared[i].box.extent(1));
    }
    std::vector<SlicePair> pool;
    for (std::size_t i : members) {
        const PreparedCase& pc = prepared[i];
        if (pc.box.extent(0) == target_x && pc.box.extent(1) == target_y) {
            pool.insert(pool.end(), pc.slices.begin(), pc.slices.end());
            continue;
        }
        const BoundingBox grown =
            grow_box_xy(pc.box, target_x, target_y, pc.data->image.dims);
        const Volume windowed = hu_window(pc.data->image, cfg.window_lo, cfg.window_hi);
        const auto slices = extract_axial_slices(windowed, pc.data->mask, grown);
        pool.insert(pool.end(), slices.begin(), slices.end());
    }
    return pool;
}

// Everything derived from one slice by the two networks.
struct SliceInference {
    Grid2D interior_prob;  // fused interior map
    Grid2D boundary_prob;  // fused boundary map
    ProposalSet proposals;
    std::vector<FeatureVector> features;  // one per proposal
};

inline SliceInference infer_slice(const NetworkParams& params_interior,
                                  const NetworkParams& params_boundary,
                                  const SlicePair& slice, const BoundingBox& box,
                                  double min_prob) {
    auto [interior, boundary] = predict(params_interior, params_boundary, slice.image);
    SliceInference out;
    out.interior_prob = std::move(interior.fused_map);
    // Partitions at three boundary scales: side outputs 2-3 plus the fusion.
    std::vector<SuperpixelPartition> parts;
    parts.push_back(watershed(boundary.side_maps[1], min_prob, "side2"));
    parts.push_back(watershed(boundary.side_maps[2], min_prob, "side3"));
    parts.push_back(watershed(boundary.fused_map, min_prob, "fused"));
    out.proposals = build_hierarchy(parts, boundary.fused_map);
    out.boundary_prob = std::move(boundary.fused_map);
    out.features.reserve(out.proposals.proposals.size());
    for (const Proposal& prop : out.proposals.proposals)
        out.features.push_back(extract_features(prop.pixels, slice.image,
                                                out.interior_prob, out.boundary_prob,
                                                slice.slice_index, box));
    return out;
}

struct CaseInference {
    std::vector<SliceInference> slices;
};

inline CaseInference infer_case(const NetworkParams& params_interior,
                                const NetworkParams& params_boundary,
                                const PreparedCase& prepared, double min_prob) {
    CaseInference out;
    out.slices.reserve(prepared.slices.size());
    for (const SlicePair& slice : prepared.slices)
        out.slices.push_back(
            infer_slice(params_interior, params_boundary, slice, prepared.box, min_prob));
    return out;
}

inline Volume interior_prob_volume(const PreparedCase& prepared, const CaseInference& inf) {
    std::vector<Grid2D> maps;
    maps.reserve(inf.slices.size());
    for (const auto& s : inf.slices) maps.push_back(s.interior_prob);
    return stack_probs_to_volume(maps, prepared.box, prepared.data->image.dims,
                                 prepared.data->image.spacing);
}

inline Volume rf_prob_volume(const PreparedCase& prepared, const CaseInference& inf,
                             const ForestModel& forest, PixelCombine combine) {
    std::vector<Grid2D> maps;
    maps.reserve(inf.slices.size());
    for (const auto& s : inf.slices) {
        std::vector<double> probs;
        probs.reserve(s.features.size());
        for (const auto& f : s.features)
            probs.push_back(rf_predict(forest, {f.begin(), f.end()}));
        maps.push_back(rf_probability_map(s.proposals, probs, combine));
    }
    return stack_probs_to_volume(maps, prepared.box, prepared.data->image.dims,
                                 prepared.data->image.spacing);
}

// Best achievable case-level mask from the superpixel pool. Level-1 cells
// across all slices are pairwise disjoint in 3D, so the greedy ratio prefix
// (same rule as optimal_labeling, one slice at a time would NOT be optimal
// for the case-level Dice) is the exhaustive subset optimum of the volume
// score. Every proposal is a union of level-1 cells, so this mask dominates
// any thresholded proposal combination of the same pool.
inline MaskVolume opt_mask_volume(const PreparedCase& prepared, const CaseInference& inf) {
    struct Cell {
        double ratio;
        std::size_t slice, region, size, inter;
    };
    std::vector<Cell> cells;
    for (std::size_t k = 0; k < inf.slices.size(); ++k) {
        const ProposalSet& set = inf.slices[k].proposals;
        const Grid2D& gt = prepared.slices[k].interior_gt;
        for (std::size_t r = 0; r < set.num_level1; ++r) {
            const auto& pixels = set.proposals[r].pixels;
            std::size_t in_gt = 0;
            for (int idx : pixels) in_gt += (gt.values[idx] == 1.0);
            cells.push_back({static_cast<double>(in_gt) / pixels.size(), k, r,
                             pixels.size(), in_gt});
        }
    }
    std::stable_sort(cells.begin(), cells.end(),
                     [](const Cell& a, const Cell& b) { return a.ratio > b.ratio; });

    const std::size_t gt_count = prepared.data->mask.foreground_count();
    std::size_t area = 0, intersection = 0;
    auto dsc_of = [&](std::size_t i, std::size_t a) {
        if (a + gt_count == 0) return 1.0;
        return 2.0 * static_cast<double>(i) / static_cast<double>(a + gt_count);
    };
    double best = dsc_of(0, 0);
    std::vector<Grid2D> masks(inf.slices.size());
    for (std::size_t k = 0; k < masks.size(); ++k)
        masks[k] = Grid2D(inf.slices[k].proposals.height, inf.slices[k].proposals.width, 1);
    for (const Cell& c : cells) {
        const double candidate = dsc_of(intersection + c.inter, area + c.size);
        if (candidate > best) {
            best = candidate;
            intersection += c.inter;
            area += c.size;
            for (int idx : inf.slices[c.slice].proposals.proposals[c.region].pixels)
                masks[c.slice].values[idx] = 1.0;
        }
    }
    return stack_to_volume(masks, prepared.box, prepared.data->image.dims,
                           prepared.data->image.spacing);
}

// ---------------------------------------------------------------------------
// Cross-validation

struct AuditRecord {
    std::size_t fold = 0;
    std::string phase;  // train-hnn | fit-forest | calibrate | evaluate
    std::vector<std::string> case_ids;
};

struct CaseScore {
    std::string case_id;
    std::size_t fold = 0;
    double dsc = 0.0;
    double dist_mm = 0.0;
    bool dist_defined = false;
};

struct FoldInfo {
    std::vector<std::string> train_ids, test_ids;
    std::uint64_t seed_interior = 0, seed_boundary = 0, seed_forest = 0;
    double threshold_interior = 0.0, threshold_rf = 0.0;
    double calib_dsc_interior = 0.0, calib_dsc_rf = 0.0;
    std::vector<double> loss_interior, loss_boundary;  // per-epoch training loss
};

inline constexpr const char* kMethods[3] = {"opt", "hnn-i", "hnn-rf"};

struct CrossvalResult {
    PipelineConfig config;
    std::size_t n_cases = 0;
    FoldPlan plan;
    std::vector<FoldInfo> folds;
    std::map<std::string, std::vector<CaseScore>> scores;  // per method
    std::vector<AuditRecord> audit;
};

namespace detail {

struct FoldOutput {
    FoldInfo info;
    std::map<std::string, std::vector<CaseScore>> scores;
    std::vector<AuditRecord> audit;
};

inline CaseScore score_case(const std::string& id, std::size_t fold,
                            const MaskVolume& pred, const MaskVolume& gt) {
    CaseScore s;
    s.case_id = id;
    s.fold = fold;
    s.dsc = dsc(pred, gt);
    if (pred.foreground_count() > 0 && gt.foreground_count() > 0) {
        s.dist_mm = avg_min_distance(pred, gt);
        s.dist_defined = true;
    }
    return s;
}

inline FoldOutput run_fold(const PipelineConfig& cfg,
                           const std::vector<PreparedCase>& prepared,
                           const FoldPlan& plan, std::size_t fold) {
    FoldOutput out;
    const std::size_t n = prepared.size();
    std::vector<char> is_test(n, 0);
    for (std::size_t idx : plan.test_cases[fold]) is_test[idx] = 1;
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? test_idx : train_idx).push_back(i);
    for (std::size_t i : train_idx) out.info.train_ids.push_back(prepared[i].data->id);
    for (std::size_t i : test_idx) out.info.test_ids.push_back(prepared[i].data->id);

    // Train both networks on the training folds only. The shared-size crops
    // are derived from training-fold boxes alone, so nothing about a test
    // case (not even its extent) reaches the optimizer.
    out.audit.push_back({fold, "train-hnn", out.info.train_ids});
    const std::vector<SlicePair> train_slices = pooled_training_slices(prepared, train_idx, cfg);

    HnnConfig cfg_i = cfg.hnn;
    cfg_i.seed = seed_hnn_interior(cfg.seed, fold);
    out.info.seed_interior = cfg_i.seed;
    TrainResult net_i = train(cfg_i, train_slices, Target::interior);
    out.info.loss_interior = net_i.epoch_losses;

    HnnConfig cfg_b = cfg.hnn;
    cfg_b.seed = seed_hnn_boundary(cfg.seed, fold);
    out.info.seed_boundary = cfg_b.seed;
    TrainResult net_b = train(cfg_b, train_slices, Target::boundary);
    out.info.loss_boundary = net_b.epoch_losses;

    // Training-fold inference: forest rows plus calibration volumes.
    out.audit.push_back({fold, "fit-forest", out.info.train_ids});
    std::vector<CaseInference> train_inf;
    train_inf.reserve(train_idx.size());
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i : train_idx) {
        CaseInference inf =
            infer_case(net_i.params, net_b.params, prepared[i], cfg.watershed_min_prob);
        for (std::size_t k = 0; k < inf.slices.size(); ++k) {
            const auto& s = inf.slices[k];
            for (std::size_t p = 0; p < s.proposals.proposals.size(); ++p) {
                rows.emplace_back(s.features[p].begin(), s.features[p].end());
                labels.push_back(label_proposal(s.proposals.proposals[p],
                                                prepared[i].slices[k].interior_gt,
                                                cfg.positive_fraction));
            }
        }
        train_inf.push_back(std::move(inf));
    }

    // Extra re-jittered crops of the training cases widen the positional
    // envelope the forest sees; the box a held-out case draws at test time
    // then lands inside it. Test cases contribute nothing here.
    for (std::size_t v = 1; v < cfg.forest_box_views; ++v) {
        for (std::size_t i : train_idx) {
            const PreparedCase view = prepare_case_view(*prepared[i].data, cfg, v);
            CaseInference inf =
                infer_case(net_i.params, net_b.params, view, cfg.watershed_min_prob);
            for (std::size_t k = 0; k < inf.slices.size(); ++k) {
                const auto& s = inf.slices[k];
                for (std::size_t p = 0; p < s.proposals.proposals.size(); ++p) {
                    rows.emplace_back(s.features[p].begin(), s.features[p].end());
                    labels.push_back(label_proposal(s.proposals.proposals[p],
                                                    view.slices[k].interior_gt,
                                                    cfg.positive_fraction));
                }
            }
        }
    }

    ForestConfig fc;
    fc.trees = cfg.forest_trees;
    fc.mtry = cfg.forest_mtry;
    fc.seed = seed_forest(cfg.seed, fold);
    out.info.seed_forest = fc.seed;
    ForestModel forest;
    try {
        forest = rf_train(rows, labels, fc);
    } catch (const validation_error& e) {
        throw validation_error("fold " + std::to_string(fold) + ": " + e.what());
    }

    // Thresholds come from training folds only.
    out.audit.push_back({fold, "calibrate", out.info.train_ids});
    std::vector<Volume> probs_i, probs_rf;
    std::vector<MaskVolume> gts;
    for (std::size_t j = 0; j < train_idx.size(); ++j) {
        const PreparedCase& pc = prepared[train_idx[j]];
        probs_i.push_back(interior_prob_volume(pc, train_inf[j]));
        probs_rf.push_back(rf_prob_volume(pc, train_inf[j], forest, cfg.combine));
        gts.push_back(pc.data->mask);
    }
    const CalibratedThreshold th_i = calibrate_threshold(probs_i, gts, cfg.thresholds);
    const CalibratedThreshold th_rf = calibrate_threshold(probs_rf, gts, cfg.thresholds);
    out.info.threshold_interior = th_i.threshold;
    out.info.threshold_rf = th_rf.threshold;
    out.info.calib_dsc_interior = th_i.train_mean_dsc;
    out.info.calib_dsc_rf = th_rf.train_mean_dsc;

    // Held-out evaluation.
    out.audit.push_back({fold, "evaluate", out.info.test_ids});
    for (std::size_t i : test_idx) {
        const PreparedCase& pc = prepared[i];
        CaseInference inf =
            infer_case(net_i.params, net_b.params, pc, cfg.watershed_min_prob);
        const MaskVolume& gt = pc.data->mask;
        const MaskVolume mask_i =
            threshold_volume(interior_prob_volume(pc, inf), th_i.threshold);
        const MaskVolume mask_rf = threshold_volume(
            rf_prob_volume(pc, inf, forest, cfg.combine), th_rf.threshold);
        const MaskVolume mask_opt = opt_mask_volume(pc, inf);
        out.scores["opt"].push_back(score_case(pc.data->id, fold, mask_opt, gt));
        out.scores["hnn-i"].push_back(score_case(pc.data->id, fold, mask_i, gt));
        out.scores["hnn-rf"].push_back(score_case(pc.data->id, fold, mask_rf, gt));
    }
    return out;
}

}  // namespace detail

inline CrossvalResult run_crossval(const std::vector<CaseData>& cases,
                                   const PipelineConfig& cfg) {
    validate_pipeline_config(cfg);
    require(cases.size() >= cfg.folds, "run_crossval: fewer cases than folds");
    for (const CaseData& c : cases) {
        require(c.mask.dims == c.image.dims,
                "run_crossval: image/mask dimension mismatch in " + c.id);
        require(c.mask.foreground_count() > 0,
                "run_crossval: empty ground truth in " + c.id);
    }

    CrossvalResult result;
    result.config = cfg;
    result.n_cases = cases.size();
    result.plan = make_fold_plan(cases.size(), cfg.folds, cfg.seed);

    std::vector<PreparedCase> prepared;
    prepared.reserve(cases.size());
    for (const CaseData& c : cases) prepared.push_back(prepare_case(c, cfg));

    std::vector<detail::FoldOutput> outputs(cfg.folds);
    if (cfg.jobs <= 1) {
        for (std::size_t f = 0; f < cfg.folds; ++f)
            outputs[f] = detail::run_fold(cfg, prepared, result.plan, f);
    } else {
        // Folds are independent; workers own disjoint output slots, so the
        // merged result is identical to the sequential one.
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(cfg.jobs);
        const std::size_t n_workers = std::min(cfg.jobs, cfg.folds);
        for (std::size_t w = 0; w < n_workers; ++w)
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t f = w; f < cfg.folds; f += n_workers)
                        outputs[f] = detail::run_fold(cfg, prepared, result.plan, f);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : workers) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (std::size_t f = 0; f < cfg.folds; ++f) {
        detail::FoldOutput& out = outputs[f];
        result.folds.push_back(std::move(out.info));
        for (const char* method : kMethods) {
            auto& dst = result.scores[method];
            auto& src = out.scores[method];
            dst.insert(dst.end(), src.begin(), src.end());
        }
        result.audit.insert(result.audit.end(), out.audit.begin(), out.audit.end());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reports. All floats go through fixed-width formatting so a fixed seed
// yields byte-identical output.

namespace detail {

inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ",";
        out += ids[i];
    }
    return out;
}

inline std::vector<double> method_dscs(const CrossvalResult& r, const std::string& m) {
    std::vector<double> v;
    for (const CaseScore& s : r.scores.at(m)) v.push_back(s.dsc);
    return v;
}

}  // namespace detail

inline void write_config_echo(std::ostream& out, const PipelineConfig& cfg,
                              const char* prefix = "# ") {
    const HnnConfig& h = cfg.hnn;
    out << prefix << "seed = " << cfg.seed << "\n";
    out << prefix << "folds = " << cfg.folds << "\n";
    out << prefix << "jobs = " << cfg.jobs << "\n";
    out << prefix << "window = [" << detail::fmt(cfg.window_lo) << ", "
        << detail::fmt(cfg.window_hi) << "]\n";
    out << prefix << "box_margin = " << cfg.box_margin << "\n";
    out << prefix << "box_jitter = " << cfg.box_jitter << "\n";
    out << prefix << "hnn.num_stages = " << h.num_stages << "\n";
    out << prefix << "hnn.convs_per_stage = " << h.convs_per_stage << "\n";
    out << prefix << "hnn.base_channels = " << h.base_channels << "\n";
    out << prefix << "hnn.stage_strides = ";
    for (std::size_t i = 0; i < h.stage_strides.size(); ++i)
        out << (i ? "," : "") << h.stage_strides[i];
    out << "\n";
    out << prefix << "hnn.side_loss_weights = ";
    {
        const auto alphas = h.alphas();
        for (std::size_t i = 0; i < alphas.size(); ++i)
            out << (i ? "," : "") << detail::fmt(alphas[i]);
    }
    out << "\n";
    out << prefix << "hnn.learning_rate = " << detail::fmt(h.learning_rate) << "\n";
    out << prefix << "hnn.epochs = " << h.epochs << "\n";
    out << prefix << "hnn.batch_size = " << h.batch_size << "\n";
    out << prefix << "hnn.balanced_fusion = " << (h.balanced_fusion ? 1 : 0) << "\n";
    out << prefix << "watershed_min_prob = " << detail::fmt(cfg.watershed_min_prob) << "\n";
    out << prefix << "forest_trees = " << cfg.forest_trees << "\n";
    out << prefix << "forest_mtry = " << cfg.forest_mtry << "\n";
    out << prefix << "forest_box_views = " << cfg.forest_box_views << "\n";
    out << prefix << "positive_fraction = " << detail::fmt(cfg.positive_fraction) << "\n";
    out << prefix << "combine = " << (cfg.combine == PixelCombine::max ? "max" : "mean")
        << "\n";
    out << prefix << "threshold_grid = start " << detail::fmt(cfg.thresholds.start)
        << " step " << detail::fmt(cfg.thresholds.step) << " count "
        << cfg.thresholds.count << "\n";
}

inline void write_crossval_report(std::ostream& out, const CrossvalResult& r) {
    out << "# cross-validation report\n";
    out << "# cases = " << r.n_cases << "\n";
    write_config_echo(out, r.config);
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        const FoldInfo& fi = r.folds[f];
        out << "# fold " << f << " test = " << detail::join_ids(fi.test_ids) << "\n";
        out << "# fold " << f << " seeds: hnn-i " << fi.seed_interior << " hnn-b "
            << fi.seed_boundary << " forest " << fi.seed_forest << "\n";
        out << "# fold " << f << " thresholds: hnn-i "
            << detail::fmt(fi.threshold_interior) << " (train dsc "
            << detail::fmt(fi.calib_dsc_interior) << ") hnn-rf "
            << detail::fmt(fi.threshold_rf) << " (train dsc "
            << detail::fmt(fi.calib_dsc_rf) << ")\n";
    }

    out << "\ndsc summary\n";
    out << "method      mean      std       min       max\n";
    for (const char* m : kMethods) {
        const Summary s = summarize(detail::method_dscs(r, m));
        char line[160];
        std::snprintf(line, sizeof(line), "%-10s  %s  %s  %s  %s\n", m,
                      detail::fmt(s.mean).c_str(), detail::fmt(s.stddev).c_str(),
                      detail::fmt(s.min).c_str(), detail::fmt(s.max).c_str());
        out << line;
    }

    out << "\ndistance summary (mm)\n";
    out << "method      mean      std       min       max     undefined\n";
    for (const char* m : kMethods) {
        std::vector<double> dists;
        std::size_t undefined = 0;
        for (const CaseScore& s : r.scores.at(m))
            s.dist_defined ? dists.push_back(s.dist_mm) : void(++undefined);
        char line[192];
        if (dists.empty()) {
            std::snprintf(line, sizeof(line), "%-10s  n/a       n/a       n/a       n/a     %zu\n",
                          m, undefined);
        } else {
            const Summary s = summarize(dists);
            std::snprintf(line, sizeof(line), "%-10s  %s  %s  %s  %s  %zu\n", m,
                          detail::fmt(s.mean).c_str(), detail::fmt(s.stddev).c_str(),
                          detail::fmt(s.min).c_str(), detail::fmt(s.max).c_str(),
                          undefined);
        }
        out << line;
    }

    out << "\nper-fold mean dsc\n";
    out << "fold";
    for (const char* m : kMethods) out << "  " << m;
    out << "\n";
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        out << f;
        for (const char* m : kMethods) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const CaseScore& s : r.scores.at(m))
                if (s.fold == f) {
                    sum += s.dsc;
                    ++n;
                }
            out << "  " << detail::fmt(n ? sum / static_cast<double>(n) : 0.0);
        }
        out << "\n";
    }

    out << "\nper-case scores\n";
    out << "case_id  fold  method  dsc  dist_mm\n";
    for (const char* m : kMethods)
        for (const CaseScore& s : r.scores.at(m))
            out << s.case_id << "  " << s.fold << "  " << m << "  " << detail::fmt(s.dsc)
                << "  " << (s.dist_defined ? detail::fmt(s.dist_mm) : "n/a") << "\n";
}

inline void write_crossval_csv(std::ostream& out, const CrossvalResult& r) {
    out << "row,method,case_id,fold,dsc,dist_mm\n";
    for (const char* m : kMethods)
        for (const CaseScore& s : r.scores.at(m))
            out << "case," << m << "," << s.case_id << "," << s.fold << ","
                << detail::fmt(s.dsc) << ","
                << (s.dist_defined ? detail::fmt(s.dist_mm) : "") << "\n";
    for (const char* m : kMethods) {
        const Summary s = summarize(detail::method_dscs(r, m));
        out << "summary_mean," << m << ",,," << detail::fmt(s.mean) << ",\n";
        out << "summary_std," << m << ",,," << detail::fmt(s.stddev) << ",\n";
        out << "summary_min," << m << ",,," << detail::fmt(s.min) << ",\n";
        out << "summary_max," << m << ",,," << detail::fmt(s.max) << ",\n";
    }
}

inline void write_audit_log(std::ostream& out, const CrossvalResult& r) {
    out << "# data handles per phase\n";
    for (const AuditRecord& rec : r.audit)
        out << "fold " << rec.fold << " phase " << rec.phase << " cases "
            << detail::join_ids(rec.case_ids) << "\n";
}

}  // namespace hnseg
