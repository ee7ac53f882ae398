#pragma once

#include "multifix/gp/gomea.hpp"
#include "multifix/pipeline/train.hpp"

namespace multifix::pipeline {

struct DistillConfig {
    gp::ImsConfig ims;
    int n_seeds = 5;
    double theta = 0.5;        // binarization threshold for bottleneck outputs
    bool sweep_theta = false;  // optional sweep over {0.30..0.70 step 0.05}
    uint64_t seed = 1;
};

struct DistilledExpr {
    gp::Expr expr;
    std::string infix, prefix;
    std::vector<std::string> var_names;
    double fidelity_train = 0.0, fidelity_test = 0.0;
    double theta = 0.5;
    bool degenerate = false;
    std::vector<double> per_seed_fit;
};

struct FoldDistillation {
    std::vector<DistilledExpr> tabular;  // one per T_j
    DistilledExpr fusion;
    double teacher_bacc = 0.0;  // NN pipeline on the held-out fold
    double hybrid_bacc = 0.0;   // expressions replacing tabular + fusion blocks
    double theta = 0.5;
    std::vector<std::string> warnings;
};

namespace detail {

// batched eval-mode bottleneck outputs for a whole dataset
inline Tensor block_outputs(Sequence& block, const synth::MultimodalDataset& ds, bool image_side) {
    int n = ds.size();
    int width = block.output_shape(image_side ? std::vector<int>{1, 3, ds.image_h(), ds.image_w()}
                                              : std::vector<int>{1, ds.tab_features()})[1];
    Tensor out({n, width});
    std::vector<int> all = iota_indices(n);
    for (size_t off = 0; off < all.size(); off += 64) {
        std::vector<int> chunk(all.begin() + static_cast<long>(off),
                               all.begin() + static_cast<long>(std::min(off + 64, all.size())));
        Batch b = make_batch(ds, chunk);
        Tensor y = block.forward(image_side ? b.images : b.tabs, Mode::eval);
        std::copy(y.data.begin(), y.data.end(), out.data.begin() + static_cast<size_t>(off) * width);
    }
    return out;
}

inline double agreement(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty()) return 0.0;
    int same = 0;
    for (size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

inline std::vector<int> expr_predictions(const gp::Expr& e, const gp::FeatureMatrix& x, int n_classes) {
    std::vector<int> out;
    std::vector<float> row(static_cast<size_t>(x.cols));
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) row[static_cast<size_t>(j)] = x.at(i, j);
        out.push_back(gp::round_to_class(e.eval(row.data()), n_classes));
    }
    return out;
}

inline gp::FeatureMatrix rows_to_matrix(const Tensor& table, const std::vector<int>& idx) {
    gp::FeatureMatrix m(static_cast<int>(idx.size()), table.shape[1]);
    for (size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < table.shape[1]; ++j)
            m.at(static_cast<int>(i), j) = table.data[static_cast<size_t>(idx[i]) * table.shape[1] + j];
    return m;
}

// fit one binary target with GP-GOMEA (multi-seed); handles the degenerate
// constant-teacher case explicitly
inline DistilledExpr fit_binary_expr(const gp::FeatureMatrix& xtrain, const std::vector<int>& bits_train,
                                     const std::vector<std::string>& var_names, const DistillConfig& cfg,
                                     uint64_t stream, std::vector<std::string>* warnings,
                                     const std::string& what) {
    DistilledExpr de;
    de.var_names = var_names;
    de.theta = cfg.theta;
    bool all_same = true;
    for (int b : bits_train)
        if (b != bits_train[0]) all_same = false;
    if (all_same) {
        if (warnings)
            warnings->push_back(what + ": teacher output is constant " + std::to_string(bits_train[0]) +
                                " on the training folds; emitting a constant expression");
        de.degenerate = true;
        de.expr = gp::Expr{gp::Symbol::make_const(static_cast<float>(bits_train[0])), {}};
    } else {
        gp::GpDataset gds;
        gds.x = xtrain;
        for (int b : bits_train) gds.y.push_back(static_cast<float>(b));
        gds.task = gp::Task::classification;
        gds.n_classes = 2;
        gp::OperatorSet set = gp::OperatorSet::standard(var_names);
        auto res = gp::fit_multiseed(gds, set, cfg.ims, stream, cfg.n_seeds);
        de.expr = gp::simplify(gp::extract_expr(res.best));
        de.per_seed_fit = res.per_seed_fit;
    }
    de.infix = gp::to_infix(de.expr, var_names);
    de.prefix = gp::to_prefix(de.expr, var_names);
    return de;
}

}  // namespace detail

inline std::vector<std::string> fusion_var_names(int nI, int nT) {
    std::vector<std::string> names;
    for (int j = 0; j < nI; ++j) names.push_back("I" + std::to_string(j + 1));
    for (int j = 0; j < nT; ++j) names.push_back("T" + std::to_string(j + 1));
    return names;
}

// Distills the tabular block (one expression per bottleneck feature, teacher
// = binarized block output) and then the fusion block (teacher = the NN
// pipeline's own predicted labels over binarized features), then evaluates
// the fully hybrid model on the held-out fold.
inline FoldDistillation distill_fold(PipelineModel& model, const synth::MultimodalDataset& ds,
                                     const synth::FoldPlan& plan, int fold, const DistillConfig& cfg) {
    FoldDistillation out;
    std::vector<int> train_idx = plan.train(fold);
    const std::vector<int>& test_idx = plan.test[static_cast<size_t>(fold)];

    Tensor tab_cont = detail::block_outputs(model.tabular_block, ds, false);
    Tensor img_cont = detail::block_outputs(model.image_block, ds, true);

    // tabular feature columns as GP inputs
    Tensor tab_features({ds.size(), ds.tab_features()});
    for (int i = 0; i < ds.size(); ++i)
        std::copy(ds.tabs[static_cast<size_t>(i)].features.begin(), ds.tabs[static_cast<size_t>(i)].features.end(),
                  tab_features.data.begin() + static_cast<size_t>(i) * ds.tab_features());
    std::vector<std::string> tab_names;
    for (int j = 0; j < ds.tab_features(); ++j) tab_names.push_back("x" + std::to_string(j));

    auto bits_of = [&](const Tensor& cont, int col, const std::vector<int>& idx, double theta) {
        std::vector<int> bits;
        for (int i : idx)
            bits.push_back(cont.data[static_cast<size_t>(i) * cont.shape[1] + col] > theta ? 1 : 0);
        return bits;
    };

    auto theta_grid = [&]() {
        std::vector<double> g;
        if (!cfg.sweep_theta) return std::vector<double>{cfg.theta};
        for (double t = 0.30; t <= 0.701; t += 0.05) g.push_back(t);
        return g;
    }();

    // teacher labels: the NN pipeline's own predictions
    auto nn_predictions = [&](const std::vector<int>& idx) {
        std::vector<int> preds;
        for (size_t off = 0; off < idx.size(); off += 64) {
            std::vector<int> chunk(idx.begin() + static_cast<long>(off),
                                   idx.begin() + static_cast<long>(std::min(off + 64, idx.size())));
            Batch b = make_batch(ds, chunk);
            Tensor fi = model.image_block.forward(b.images, Mode::eval);
            Tensor ft = model.tabular_block.forward(b.tabs, Mode::eval);
            Tensor logits = model.fusion_block.forward(concat_features(fi, ft), Mode::eval);
            auto am = argmax_rows(logits);
            preds.insert(preds.end(), am.begin(), am.end());
        }
        return preds;
    };
    std::vector<int> teacher_train = nn_predictions(train_idx);
    std::vector<int> teacher_test = nn_predictions(test_idx);
    {
        std::vector<int> labels;
        for (int i : test_idx) labels.push_back(ds.labels[static_cast<size_t>(i)]);
        out.teacher_bacc = balanced_accuracy(teacher_test, labels, model.n_classes);
    }

    gp::FeatureMatrix tab_train = detail::rows_to_matrix(tab_features, train_idx);
    gp::FeatureMatrix tab_test = detail::rows_to_matrix(tab_features, test_idx);

    double best_theta = cfg.theta;
    double best_train_hybrid = -1.0;
    FoldDistillation best;
    for (double theta : theta_grid) {
        FoldDistillation cand;
        cand.theta = theta;
        cand.teacher_bacc = out.teacher_bacc;

        // one expression per tabular bottleneck feature
        for (int j = 0; j < model.nT; ++j) {
            auto bits_train = bits_of(tab_cont, j, train_idx, theta);
            DistilledExpr de = detail::fit_binary_expr(
                tab_train, bits_train, tab_names, cfg,
                rng_stream(cfg.seed, {0xd157, static_cast<uint64_t>(fold), static_cast<uint64_t>(j)}),
                &cand.warnings, "tabular feature T" + std::to_string(j + 1));
            de.theta = theta;
            auto pred_train = detail::expr_predictions(de.expr, tab_train, 2);
            auto pred_test = detail::expr_predictions(de.expr, tab_test, 2);
            de.fidelity_train = detail::agreement(pred_train, bits_train);
            de.fidelity_test = detail::agreement(pred_test, bits_of(tab_cont, j, test_idx, theta));
            cand.tabular.push_back(std::move(de));
        }

        // fusion inputs: binarized image features + expression outputs
        auto fusion_matrix = [&](const std::vector<int>& idx, const gp::FeatureMatrix& tab_m) {
            gp::FeatureMatrix m(static_cast<int>(idx.size()), model.nI + model.nT);
            for (size_t i = 0; i < idx.size(); ++i)
                for (int j = 0; j < model.nI; ++j)
                    m.at(static_cast<int>(i), j) =
                        img_cont.data[static_cast<size_t>(idx[i]) * model.nI + j] > theta ? 1.0f : 0.0f;
            for (int j = 0; j < model.nT; ++j) {
                auto bits = detail::expr_predictions(cand.tabular[static_cast<size_t>(j)].expr, tab_m, 2);
                for (size_t i = 0; i < idx.size(); ++i)
                    m.at(static_cast<int>(i), model.nI + j) = static_cast<float>(bits[i]);
            }
            return m;
        };
        gp::FeatureMatrix fus_train = fusion_matrix(train_idx, tab_train);
        gp::FeatureMatrix fus_test = fusion_matrix(test_idx, tab_test);

        auto fus_names = fusion_var_names(model.nI, model.nT);
        {
            gp::GpDataset gds;
            gds.x = fus_train;
            for (int t : teacher_train) gds.y.push_back(static_cast<float>(t));
            gds.task = gp::Task::classification;
            gds.n_classes = model.n_classes;
            bool all_same = true;
            for (int t : teacher_train)
                if (t != teacher_train[0]) all_same = false;
            if (all_same) {
                cand.warnings.push_back("fusion: teacher predictions are constant on the training folds");
                cand.fusion.degenerate = true;
                cand.fusion.expr = gp::Expr{gp::Symbol::make_const(static_cast<float>(teacher_train[0])), {}};
            } else {
                gp::OperatorSet set = gp::OperatorSet::standard(fus_names);
                auto res = gp::fit_multiseed(
                    gds, set, cfg.ims, rng_stream(cfg.seed, {0xd158, static_cast<uint64_t>(fold)}), cfg.n_seeds);
                cand.fusion.expr = gp::simplify(gp::extract_expr(res.best));
                cand.fusion.per_seed_fit = res.per_seed_fit;
            }
            cand.fusion.var_names = fus_names;
            cand.fusion.theta = theta;
            cand.fusion.infix = gp::to_infix(cand.fusion.expr, fus_names);
            cand.fusion.prefix = gp::to_prefix(cand.fusion.expr, fus_names);
            auto pred_train = detail::expr_predictions(cand.fusion.expr, fus_train, model.n_classes);
            auto pred_test = detail::expr_predictions(cand.fusion.expr, fus_test, model.n_classes);
            cand.fusion.fidelity_train = detail::agreement(pred_train, teacher_train);
            cand.fusion.fidelity_test = detail::agreement(pred_test, teacher_test);

            // hybrid end-to-end: expressions everywhere behind the NN image block
            std::vector<int> train_labels, test_labels;
            for (int i : train_idx) train_labels.push_back(ds.labels[static_cast<size_t>(i)]);
            for (int i : test_idx) test_labels.push_back(ds.labels[static_cast<size_t>(i)]);
            double train_hybrid = balanced_accuracy(pred_train, train_labels, model.n_classes);
            cand.hybrid_bacc = balanced_accuracy(pred_test, test_labels, model.n_classes);
            if (train_hybrid > best_train_hybrid) {
                best_train_hybrid = train_hybrid;
                best_theta = theta;
                best = std::move(cand);
            }
        }
    }
    out = std::move(best);
    out.theta = best_theta;
    return out;
}

}  // namespace multifix::pipeline
