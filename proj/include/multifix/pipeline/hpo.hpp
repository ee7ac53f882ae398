#pragma once

#include "multifix/pipeline/train.hpp"

namespace multifix::pipeline {

// Grid axes for hyper-parameter search. An empty defreeze list means the
// de-freezing epoch is not an axis.
struct HpoGrid {
    std::vector<float> lrs;
    std::vector<float> wds;
    std::vector<int> defreeze;

    int cell_count() const {
        return static_cast<int>(lrs.size() * wds.size() * std::max<size_t>(1, defreeze.size()));
    }

    // LR/WD grid of the multiclass experiments
    static HpoGrid table_multiclass() { return {{1e-2f, 5e-3f, 1e-3f, 5e-4f}, {1e-2f, 1e-3f, 0.0f}, {}}; }
    // LR/WD grid of the multifeature (and melanoma-style) experiments
    static HpoGrid table_multifeature() {
        return {{1e-2f, 1e-3f, 1e-4f, 1e-5f}, {1e-2f, 1e-3f, 1e-4f, 0.0f}, {}};
    }
    // LR/WD/de-freeze grid of the XOR experiments
    static HpoGrid table_xor() {
        return {{1e-2f, 5e-3f, 1e-3f, 5e-4f}, {1e-2f, 1e-3f, 1e-4f, 0.0f}, {20, 30, 40, 50}};
    }

    static HpoGrid for_problem(const std::string& problem) {
        if (problem == "multiclass") return table_multiclass();
        if (problem == "multifeature" || problem == "external") return table_multifeature();
        if (problem == "xor" || problem == "xor3") return table_xor();
        throw ConfigError("no grid defined for problem '" + problem + "'");
    }
};

struct HpoCell {
    float lr = 0.0f, wd = 0.0f;
    int defreeze = -1;
    std::vector<double> fold_loss, fold_bacc;
    MeanStd loss, bacc;
};

struct HpoOutcome {
    HpoCell best;
    PipelineConfig best_config;
    std::vector<HpoCell> cells;
};

// Every cell is evaluated with k-fold CV; the winner has the lowest mean
// validation loss, ties broken by lower std, then by lower learning rate.
inline HpoOutcome hpo_grid_search(const HpoGrid& grid, const synth::MultimodalDataset& ds,
                                  const synth::FoldPlan& plan, const PipelineConfig& base) {
    if (grid.lrs.empty() || grid.wds.empty()) throw ConfigError("hpo: grid must not be empty");
    std::vector<HpoCell> cells;
    std::vector<PipelineConfig> configs;
    std::vector<int> dfs = grid.defreeze.empty() ? std::vector<int>{-1} : grid.defreeze;
    for (float lr : grid.lrs)
        for (float wd : grid.wds)
            for (int df : dfs) {
                HpoCell c;
                c.lr = lr;
                c.wd = wd;
                c.defreeze = df;
                PipelineConfig cfg = base;
                cfg.lr = lr;
                cfg.wd = wd;
                if (df >= 0) {
                    cfg.freeze = FreezeMode::defreeze_at;
                    cfg.defreeze_epoch = df;
                }
                cells.push_back(std::move(c));
                configs.push_back(std::move(cfg));
            }

    int k = plan.k;
    int total = static_cast<int>(cells.size()) * k;
    std::vector<double> losses(static_cast<size_t>(total)), baccs(static_cast<size_t>(total));
    parallel_for(total, base.jobs, [&](int t) {
        int cell = t / k, fold = t % k;
        FoldOutcome fo = train_fusion_fold(ds, plan, fold, configs[static_cast<size_t>(cell)]);
        losses[static_cast<size_t>(t)] = fo.val_loss;
        baccs[static_cast<size_t>(t)] = fo.val_bacc;
    });
    for (size_t c = 0; c < cells.size(); ++c) {
        for (int f = 0; f < k; ++f) {
            cells[c].fold_loss.push_back(losses[c * static_cast<size_t>(k) + static_cast<size_t>(f)]);
            cells[c].fold_bacc.push_back(baccs[c * static_cast<size_t>(k) + static_cast<size_t>(f)]);
        }
        cells[c].loss = mean_std(cells[c].fold_loss);
        cells[c].bacc = mean_std(cells[c].fold_bacc);
    }

    size_t best = 0;
    for (size_t c = 1; c < cells.size(); ++c) {
        const auto& a = cells[c];
        const auto& b = cells[best];
        if (a.loss.mean < b.loss.mean ||
            (a.loss.mean == b.loss.mean &&
             (a.loss.stddev < b.loss.stddev || (a.loss.stddev == b.loss.stddev && a.lr < b.lr))))
            best = c;
    }
    return {cells[best], configs[best], cells};
}

// ---------------------------------------------------------------------------
// fusion-architecture search by exhaustive enumeration
// ---------------------------------------------------------------------------

struct NasSpace {
    std::vector<std::string> activations{"relu", "sigmoid"};
    std::vector<int> hidden_layers{1, 2};
    std::vector<float> dropouts{0.0f, 0.125f, 0.25f};
    std::vector<int> widths{16, 32, 64};
};

// per-layer dropout/width chosen independently per layer
inline std::vector<FusionSpec> enumerate_nas(const NasSpace& space) {
    std::vector<FusionSpec> out;
    // all (width, dropout) pairs for one layer
    std::vector<std::pair<int, float>> layer_choices;
    for (int w : space.widths)
        for (float d : space.dropouts) layer_choices.emplace_back(w, d);
    for (const auto& act : space.activations) {
        for (int layers : space.hidden_layers) {
            std::vector<size_t> pick(static_cast<size_t>(layers), 0);
            for (;;) {
                FusionSpec spec;
                spec.activation = act;
                spec.widths.clear();
                spec.dropouts.clear();
                for (size_t choice : pick) {
                    spec.widths.push_back(layer_choices[choice].first);
                    spec.dropouts.push_back(layer_choices[choice].second);
                }
                out.push_back(spec);
                // odometer increment
                int pos = layers - 1;
                while (pos >= 0 && ++pick[static_cast<size_t>(pos)] == layer_choices.size()) {
                    pick[static_cast<size_t>(pos)] = 0;
                    --pos;
                }
                if (pos < 0) break;
            }
        }
    }
    return out;
}

struct NasCell {
    FusionSpec spec;
    std::vector<double> fold_loss;
    MeanStd loss, bacc;
};

struct NasOutcome {
    FusionSpec best;
    std::vector<NasCell> cells;
};

// Exhaustive evaluation of the fusion architecture space (or a seeded random
// subsample of it); selection matches hpo_grid_search.
inline NasOutcome nas_enumerate(const NasSpace& space, const synth::MultimodalDataset& ds,
                                const synth::FoldPlan& plan, const PipelineConfig& base, int sample_n = 0) {
    std::vector<FusionSpec> specs = enumerate_nas(space);
    if (sample_n > 0 && sample_n < static_cast<int>(specs.size())) {
        Rng rng(rng_stream(base.seed, {0xa55}));
        std::vector<int> order = iota_indices(static_cast<int>(specs.size()));
        rng.shuffle(order);
        std::vector<FusionSpec> subset;
        for (int i = 0; i < sample_n; ++i) subset.push_back(specs[static_cast<size_t>(order[static_cast<size_t>(i)])]);
        specs = std::move(subset);
    }
    int k = plan.k;
    int total = static_cast<int>(specs.size()) * k;
    std::vector<double> losses(static_cast<size_t>(total)), baccs(static_cast<size_t>(total));
    parallel_for(total, base.jobs, [&](int t) {
        int cell = t / k, fold = t % k;
        PipelineConfig cfg = base;
        cfg.fusion = specs[static_cast<size_t>(cell)];
        FoldOutcome fo = train_fusion_fold(ds, plan, fold, cfg);
        losses[static_cast<size_t>(t)] = fo.val_loss;
        baccs[static_cast<size_t>(t)] = fo.val_bacc;
    });
    NasOutcome out;
    out.cells.resize(specs.size());
    for (size_t c = 0; c < specs.size(); ++c) {
        out.cells[c].spec = specs[c];
        for (int f = 0; f < k; ++f) out.cells[c].fold_loss.push_back(losses[c * static_cast<size_t>(k) + static_cast<size_t>(f)]);
        out.cells[c].loss = mean_std(out.cells[c].fold_loss);
    }
    size_t best = 0;
    for (size_t c = 1; c < out.cells.size(); ++c)
        if (out.cells[c].loss.mean < out.cells[best].loss.mean ||
            (out.cells[c].loss.mean == out.cells[best].loss.mean &&
             out.cells[c].loss.stddev < out.cells[best].loss.stddev))
            best = c;
    out.best = out.cells[best].spec;
    return out;
}

}  // namespace multifix::pipeline
