#pragma once

#include <filesystem>
#include <fstream>

#include "multifix/explain/grad_cam.hpp"
#include "multifix/explain/truth_table.hpp"
#include "multifix/pipeline/distill.hpp"
#include "multifix/synth/csv.hpp"
#include "multifix/synth/dataset_io.hpp"

namespace multifix::explain {

// Everything the inference stage produces for one trained+distilled model:
// heatmaps per (sample, image feature), the distilled expressions, the fusion
// truth table, fidelity metrics, and the hybrid model's BAcc.
struct ExplanationBundle {
    std::vector<Heatmap> heatmaps;
    pipeline::FoldDistillation distilled;
    TruthTable truth_table;
    std::vector<std::string> sample_ids;
};

inline ExplanationBundle build_bundle(pipeline::PipelineModel& model, const pipeline::FoldDistillation& distilled,
                                      const synth::MultimodalDataset& ds, const std::vector<int>& samples_to_explain,
                                      int layer = -1) {
    if (distilled.fusion.infix.empty())
        throw DataError("bundle: no distilled fusion expression available");
    ExplanationBundle b;
    b.distilled = distilled;
    b.truth_table =
        extract_truth_table(distilled.fusion.expr, pipeline::fusion_var_names(model.nI, model.nT), model.n_classes);
    for (int idx : samples_to_explain) {
        pipeline::Batch one = pipeline::make_batch(ds, {idx});
        for (int j = 0; j < model.nI; ++j) {
            Heatmap hm = grad_cam(model, one.images, j, layer);
            hm.sample_id = synth::sample_id(idx);
            b.heatmaps.push_back(std::move(hm));
        }
        b.sample_ids.push_back(synth::sample_id(idx));
    }
    return b;
}

// bundle directory: heatmaps/<sample>_<feature>.png (+ overlay), expressions.txt,
// truth_table.csv, fidelity.csv, bundle.json
inline void save_bundle(const ExplanationBundle& b, const synth::MultimodalDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "heatmaps");

    for (const auto& hm : b.heatmaps) {
        std::string base = hm.sample_id + "_I" + std::to_string(hm.feature + 1);
        synth::write_png(heatmap_to_gray(hm), (fs::path(dir) / "heatmaps" / (base + ".png")).string());
        int idx = std::stoi(hm.sample_id.substr(hm.sample_id.find('_') + 1));
        synth::write_png(heatmap_overlay(hm, ds.images[static_cast<size_t>(idx)].img),
                         (fs::path(dir) / "heatmaps" / (base + "_overlay.png")).string());
    }

    {
        std::ofstream os(fs::path(dir) / "expressions.txt");
        for (size_t j = 0; j < b.distilled.tabular.size(); ++j) {
            const auto& de = b.distilled.tabular[j];
            os << "T" << (j + 1) << " (theta " << de.theta << ", fidelity test " << de.fidelity_test << ")\n";
            os << "  infix:  " << de.infix << "\n";
            os << "  prefix: " << de.prefix << "\n";
        }
        os << "fusion (fidelity test " << b.distilled.fusion.fidelity_test << ", hybrid BAcc "
           << b.distilled.hybrid_bacc << ")\n";
        os << "  infix:  " << b.distilled.fusion.infix << "\n";
        os << "  prefix: " << b.distilled.fusion.prefix << "\n";
    }

    {
        synth::CsvWriter csv((fs::path(dir) / "truth_table.csv").string());
        std::vector<std::string> header = b.truth_table.inputs;
        header.push_back("label");
        csv.row(header);
        for (int r = 0; r < b.truth_table.rows(); ++r) {
            std::vector<std::string> row;
            for (int j = 0; j < b.truth_table.arity(); ++j) row.push_back(std::to_string(b.truth_table.bit(r, j)));
            row.push_back(std::to_string(b.truth_table.labels[static_cast<size_t>(r)]));
            csv.row(row);
        }
    }

    {
        synth::CsvWriter csv((fs::path(dir) / "fidelity.csv").string());
        csv.row({"block", "theta", "fidelity_train", "fidelity_test", "degenerate"});
        for (size_t j = 0; j < b.distilled.tabular.size(); ++j) {
            const auto& de = b.distilled.tabular[j];
            csv.row({"T" + std::to_string(j + 1), format_float(static_cast<float>(de.theta)),
                     format_float(static_cast<float>(de.fidelity_train)),
                     format_float(static_cast<float>(de.fidelity_test)), de.degenerate ? "1" : "0"});
        }
        csv.row({"fusion", format_float(static_cast<float>(b.distilled.fusion.theta)),
                 format_float(static_cast<float>(b.distilled.fusion.fidelity_train)),
                 format_float(static_cast<float>(b.distilled.fusion.fidelity_test)),
                 b.distilled.fusion.degenerate ? "1" : "0"});
    }

    {
        nlohmann::json j;
        j["samples"] = b.sample_ids;
        j["n_heatmaps"] = b.heatmaps.size();
        j["hybrid_bacc"] = b.distilled.hybrid_bacc;
        j["teacher_bacc"] = b.distilled.teacher_bacc;
        j["theta"] = b.distilled.theta;
        nlohmann::json exprs = nlohmann::json::array();
        for (size_t t = 0; t < b.distilled.tabular.size(); ++t)
            exprs.push_back({{"name", "T" + std::to_string(t + 1)},
                             {"infix", b.distilled.tabular[t].infix},
                             {"prefix", b.distilled.tabular[t].prefix},
                             {"fidelity_test", b.distilled.tabular[t].fidelity_test}});
        exprs.push_back({{"name", "fusion"},
                         {"infix", b.distilled.fusion.infix},
                         {"prefix", b.distilled.fusion.prefix},
                         {"fidelity_test", b.distilled.fusion.fidelity_test}});
        j["expressions"] = exprs;
        j["warnings"] = b.distilled.warnings;
        std::ofstream os(fs::path(dir) / "bundle.json");
        os << j.dump(2) << "\n";
    }
}

}  // namespace multifix::explain
