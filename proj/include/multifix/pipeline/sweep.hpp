#pragma once

#include "multifix/pipeline/hpo.hpp"

namespace multifix::pipeline {

struct SweepCell {
    std::string row, col;
    bool defined = false;
    std::vector<double> fold_bacc;
    MeanStd bacc;
};

// Degradation matrix: rows are image inputs (resolutions, then the
// pre-extracted "I" bits, then tabular-only), columns are tabular inputs
// (noise levels, then the pre-extracted "T" bits, then image-only).
struct SweepReport {
    std::vector<std::string> rows, cols;
    std::vector<std::vector<SweepCell>> cells;
    std::vector<int> resolutions;
    std::vector<double> sigmas;

    const SweepCell& at(const std::string& row, const std::string& col) const {
        for (size_t r = 0; r < rows.size(); ++r)
            if (rows[r] == row)
                for (size_t c = 0; c < cols.size(); ++c)
                    if (cols[c] == col) return cells[r][c];
        throw ConfigError("sweep: no cell (" + row + ", " + col + ")");
    }
};

namespace detail {

// label-from-truth-features baseline for the pre-extracted single-modality
// corners of the matrix
inline double truth_head_fold_bacc(const synth::MultimodalDataset& ds, const synth::FoldPlan& plan, int fold,
                                   const PipelineConfig& cfg, bool image_side) {
    auto names = image_side ? synth::image_feature_names(ds.problem) : synth::tabular_feature_names(ds.problem);
    Sequence head = build_fusion_block(cfg.fusion, static_cast<int>(names.size()), cfg.n_classes);
    head.init_params(rng_stream(cfg.seed, {0x74d, static_cast<uint64_t>(fold)}));
    Tensor truth = truth_feature_tensor(ds, iota_indices(ds.size()), image_side);
    nn::Adam opt(head.parameters(), cfg.lr, cfg.wd);
    std::vector<int> order = plan.train(fold);
    Rng shuffle_rng(rng_stream(cfg.seed, {0x74d5, static_cast<uint64_t>(fold)}));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            std::vector<int> idx(order.begin() + static_cast<long>(off),
                                 order.begin() + static_cast<long>(std::min(off + cfg.batch_size, order.size())));
            std::vector<int> labels;
            for (int i : idx) labels.push_back(ds.labels[static_cast<size_t>(i)]);
            Tensor logits = head.forward(gather_rows(truth, idx), Mode::train);
            auto ce = nn::cross_entropy(logits, labels);
            head.backward(ce.grad);
            opt.step();
        }
    }
    std::vector<int> preds, labels;
    for (int i : plan.test[static_cast<size_t>(fold)]) labels.push_back(ds.labels[static_cast<size_t>(i)]);
    Tensor logits = head.forward(gather_rows(truth, plan.test[static_cast<size_t>(fold)]), Mode::eval);
    preds = argmax_rows(logits);
    return balanced_accuracy(preds, labels, cfg.n_classes);
}

}  // namespace detail

struct SweepOptions {
    std::vector<int> resolutions{100, 50, 25, 20, 15, 10, 5};
    std::vector<double> sigmas{0, 2.5, 5, 7.5, 10, 15, 20};
    int n_samples = 200;
    bool include_pre_extracted = true;
    bool include_single_modality = true;
    int k = 5;
};

// Full (resolutions+2) x (sigmas+2) matrix of 5-fold fusion results for the
// multiclass problem. Every cell reuses the same underlying samples; only the
// degradations differ.
inline SweepReport run_degradation_sweep(const SweepOptions& opt, const PipelineConfig& base) {
    if (base.problem != "multiclass")
        throw ConfigError("degradation sweep is defined for the multiclass problem");
    SweepReport rep;
    rep.resolutions = opt.resolutions;
    rep.sigmas = opt.sigmas;
    for (int r : opt.resolutions) rep.rows.push_back(std::to_string(r) + "x" + std::to_string(r));
    if (opt.include_pre_extracted) rep.rows.push_back("I");
    if (opt.include_single_modality) rep.rows.push_back("tabular-only");
    for (double s : opt.sigmas) rep.cols.push_back("sigma" + format_float(static_cast<float>(s)));
    if (opt.include_pre_extracted) rep.cols.push_back("T");
    if (opt.include_single_modality) rep.cols.push_back("image-only");

    size_t nr = rep.rows.size(), nc = rep.cols.size();
    rep.cells.assign(nr, std::vector<SweepCell>(nc));
    for (size_t r = 0; r < nr; ++r)
        for (size_t c = 0; c < nc; ++c) {
            rep.cells[r][c].row = rep.rows[r];
            rep.cells[r][c].col = rep.cols[c];
        }

    // smallest resolution keeps dataset builds cheap when images are unused
    int cheap_res = 10;

    struct Job {
        size_t r, c;
        int res;         // -1: images unused
        double sigma;    // -1: tabular noise irrelevant (truth bits)
        enum Kind { fusion, img_truth, tab_truth, both_truth, image_only, tabular_only, img_truth_head, tab_truth_head } kind;
    };
    std::vector<Job> jobs;
    for (size_t r = 0; r < nr; ++r) {
        for (size_t c = 0; c < nc; ++c) {
            bool row_res = r < opt.resolutions.size();
            bool col_sigma = c < opt.sigmas.size();
            bool row_i = rep.rows[r] == "I";
            bool col_t = rep.cols[c] == "T";
            bool row_single = rep.rows[r] == "tabular-only";
            bool col_single = rep.cols[c] == "image-only";
            Job j{r, c, row_res ? opt.resolutions[r] : cheap_res, col_sigma ? opt.sigmas[c] : 0.0, Job::fusion};
            if (row_res && col_sigma) j.kind = Job::fusion;
            else if (row_res && col_t) j.kind = Job::tab_truth;
            else if (row_res && col_single) j.kind = Job::image_only;
            else if (row_i && col_sigma) j.kind = Job::img_truth;
            else if (row_i && col_t) j.kind = Job::both_truth;
            else if (row_single && col_sigma) j.kind = Job::tabular_only;
            else if (row_single && col_t) j.kind = Job::tab_truth_head;
            else if (row_i && col_single) j.kind = Job::img_truth_head;
            else continue;  // tabular-only x image-only has no meaning
            jobs.push_back(j);
        }
    }

    int k = opt.k;
    std::vector<std::vector<double>> results(jobs.size(), std::vector<double>(static_cast<size_t>(k)));
    parallel_for(static_cast<int>(jobs.size()) * k, base.jobs, [&](int t) {
        int ji = t / k, fold = t % k;
        const Job& j = jobs[static_cast<size_t>(ji)];
        auto ds = synth::make_multiclass_dataset(opt.n_samples, j.res, j.sigma, base.seed);
        auto plan = synth::kfold_split(ds, k, rng_stream(base.seed, {0x5011d}));
        PipelineConfig cfg = base;
        double bacc = 0.0;
        switch (j.kind) {
            case Job::fusion: bacc = train_fusion_fold(ds, plan, fold, cfg).val_bacc; break;
            case Job::img_truth: bacc = train_fusion_fold(ds, plan, fold, cfg, Source::truth, Source::block).val_bacc; break;
            case Job::tab_truth: bacc = train_fusion_fold(ds, plan, fold, cfg, Source::block, Source::truth).val_bacc; break;
            case Job::both_truth: bacc = train_fusion_fold(ds, plan, fold, cfg, Source::truth, Source::truth).val_bacc; break;
            case Job::image_only: bacc = train_single_modality("image", ds, plan, fold, cfg).val_bacc; break;
            case Job::tabular_only: bacc = train_single_modality("tabular", ds, plan, fold, cfg).val_bacc; break;
            case Job::img_truth_head: bacc = detail::truth_head_fold_bacc(ds, plan, fold, cfg, true); break;
            case Job::tab_truth_head: bacc = detail::truth_head_fold_bacc(ds, plan, fold, cfg, false); break;
        }
        results[static_cast<size_t>(ji)][static_cast<size_t>(fold)] = bacc;
    });

    for (size_t ji = 0; ji < jobs.size(); ++ji) {
        SweepCell& cell = rep.cells[jobs[ji].r][jobs[ji].c];
        cell.defined = true;
        cell.fold_bacc = results[ji];
        cell.bacc = mean_std(cell.fold_bacc);
    }
    return rep;
}

}  // namespace multifix::pipeline
