#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "multifix/synth/csv.hpp"
#include "multifix/synth/dataset.hpp"

namespace multifix::synth {

// Dataset container on disk:
//   manifest.json        problem id, seed, counts, schema, generator provenance
//   images/sample_N.png
//   tabular.csv          id,f0,f1,...
//   labels.csv           id,label
//   truth_features.csv   id,<boolean truth features> (generator-only)
namespace fs = std::filesystem;

inline std::string sample_id(int i) { return multifix::format("sample_%05d", i); }

inline void save_dataset(const MultimodalDataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    int n = ds.size();

    nlohmann::json manifest;
    manifest["problem"] = ds.problem;
    manifest["n_samples"] = n;
    manifest["n_classes"] = ds.n_classes;
    manifest["image_h"] = ds.image_h();
    manifest["image_w"] = ds.image_w();
    manifest["tab_features"] = ds.tab_features();
    manifest["provenance"] = ds.provenance;
    {
        std::ofstream os(fs::path(dir) / "manifest.json");
        os << manifest.dump(2) << "\n";
    }

    std::vector<std::string> truth_names;
    for (auto& [k, v] : ds.images[0].truth) truth_names.push_back("img_" + k);
    for (auto& [k, v] : ds.tabs[0].truth) truth_names.push_back("tab_" + k);

    CsvWriter tab((fs::path(dir) / "tabular.csv").string());
    CsvWriter lab((fs::path(dir) / "labels.csv").string());
    CsvWriter tru((fs::path(dir) / "truth_features.csv").string());
    std::vector<std::string> h{"id"};
    for (int j = 0; j < ds.tab_features(); ++j) h.push_back("f" + std::to_string(j));
    tab.row(h);
    lab.row({"id", "label"});
    {
        std::vector<std::string> th{"id"};
        th.insert(th.end(), truth_names.begin(), truth_names.end());
        tru.row(th);
    }
    for (int i = 0; i < n; ++i) {
        std::string id = sample_id(i);
        write_png(ds.images[static_cast<size_t>(i)].img, (fs::path(dir) / "images" / (id + ".png")).string());
        std::vector<std::string> row{id};
        for (float v : ds.tabs[static_cast<size_t>(i)].features) row.push_back(format_float(v));
        tab.row(row);
        lab.row({id, std::to_string(ds.labels[static_cast<size_t>(i)])});
        std::vector<std::string> trow{id};
        for (auto& [k, v] : ds.images[static_cast<size_t>(i)].truth) trow.push_back(std::to_string(v));
        for (auto& [k, v] : ds.tabs[static_cast<size_t>(i)].truth) trow.push_back(std::to_string(v));
        tru.row(trow);
    }
}

inline MultimodalDataset load_dataset(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "manifest.json"))
        throw DataError("dataset: '" + dir + "' does not contain a manifest.json");
    nlohmann::json manifest;
    {
        std::ifstream is(fs::path(dir) / "manifest.json");
        is >> manifest;
    }
    MultimodalDataset ds;
    ds.problem = manifest.at("problem");
    ds.n_classes = manifest.at("n_classes");
    ds.provenance = manifest.value("provenance", nlohmann::json::object());
    int n = manifest.at("n_samples");

    CsvTable tab = read_csv((fs::path(dir) / "tabular.csv").string());
    CsvTable lab = read_csv((fs::path(dir) / "labels.csv").string());
    CsvTable tru = read_csv((fs::path(dir) / "truth_features.csv").string());
    if (static_cast<int>(tab.rows.size()) != n || static_cast<int>(lab.rows.size()) != n)
        throw DataError("dataset: sample count mismatch between manifest and CSV files");

    for (int i = 0; i < n; ++i) {
        std::string id = tab.rows[static_cast<size_t>(i)][0];
        ImageSample im;
        im.img = read_png((fs::path(dir) / "images" / (id + ".png")).string());
        TabularSample t;
        for (size_t j = 1; j < tab.rows[static_cast<size_t>(i)].size(); ++j)
            t.features.push_back(static_cast<float>(
                parse_number(tab.rows[static_cast<size_t>(i)][j], i, tab.header[j])));
        for (size_t j = 1; j < tru.header.size(); ++j) {
            const std::string& name = tru.header[j];
            int v = static_cast<int>(parse_number(tru.rows[static_cast<size_t>(i)][j], i, name));
            if (name.rfind("img_", 0) == 0) im.truth[name.substr(4)] = v;
            else if (name.rfind("tab_", 0) == 0) t.truth[name.substr(4)] = v;
        }
        ds.images.push_back(std::move(im));
        ds.tabs.push_back(std::move(t));
        ds.labels.push_back(static_cast<int>(parse_number(lab.rows[static_cast<size_t>(i)][1], i, "label")));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// generic external ingestion (image dir + tabular CSV)
// ---------------------------------------------------------------------------

struct IngestSchema {
    std::string id_column;
    std::string label_column;
    std::vector<std::string> numeric;
    std::vector<std::string> categorical;
    int img_size = 100;
};

// Builds a MultimodalDataset from production-style inputs: a CSV with an id
// column matching image filenames (<id>.png or <id>.ppm) plus declared
// numeric/categorical feature columns. Categorical columns are one-hot
// encoded; images are centre-cropped square and resampled to img_size.
inline MultimodalDataset ingest_external(const std::string& image_dir, const std::string& tabular_file,
                                         const IngestSchema& schema) {
    CsvTable t = read_csv(tabular_file);
    int idc = t.column(schema.id_column);
    int lbc = t.column(schema.label_column);
    if (idc < 0) throw DataError("ingest: id column '" + schema.id_column + "' not found in " + tabular_file);
    if (lbc < 0) throw DataError("ingest: label column '" + schema.label_column + "' not found in " + tabular_file);

    auto find_image = [&](const std::string& id) -> std::string {
        for (const char* ext : {".png", ".ppm"}) {
            fs::path p = fs::path(image_dir) / (id + ext);
            if (fs::exists(p)) return p.string();
        }
        return "";
    };

    // error contract: list every id with a missing image
    std::vector<std::string> missing;
    for (auto& row : t.rows)
        if (find_image(row[static_cast<size_t>(idc)]).empty()) missing.push_back(row[static_cast<size_t>(idc)]);
    if (!missing.empty()) {
        std::string ids;
        for (auto& m : missing) ids += (ids.empty() ? "" : ", ") + m;
        throw DataError("ingest: missing image for id(s): " + ids);
    }

    // category vocabularies (sorted distinct values -> stable one-hot layout)
    std::vector<std::vector<std::string>> vocab(schema.categorical.size());
    for (size_t ci = 0; ci < schema.categorical.size(); ++ci) {
        int col = t.column(schema.categorical[ci]);
        if (col < 0) throw DataError("ingest: categorical column '" + schema.categorical[ci] + "' not found");
        std::set<std::string> vals;
        for (auto& row : t.rows) vals.insert(row[static_cast<size_t>(col)]);
        vocab[ci].assign(vals.begin(), vals.end());
    }

    // labels: distinct values sorted -> class indices
    std::set<std::string> label_vals;
    for (auto& row : t.rows) label_vals.insert(row[static_cast<size_t>(lbc)]);
    std::vector<std::string> label_list(label_vals.begin(), label_vals.end());

    MultimodalDataset ds;
    ds.problem = "external";
    ds.n_classes = static_cast<int>(label_list.size());
    for (size_t r = 0; r < t.rows.size(); ++r) {
        auto& row = t.rows[r];
        ImageSample im;
        Image raw = read_image(find_image(row[static_cast<size_t>(idc)]));
        im.img = resize_bilinear(center_crop_square(raw), schema.img_size, schema.img_size);
        ds.images.push_back(std::move(im));

        TabularSample ts;
        for (auto& nc : schema.numeric) {
            int col = t.column(nc);
            if (col < 0) throw DataError("ingest: numeric column '" + nc + "' not found");
            ts.features.push_back(
                static_cast<float>(parse_number(row[static_cast<size_t>(col)], static_cast<int>(r), nc)));
        }
        for (size_t ci = 0; ci < schema.categorical.size(); ++ci) {
            int col = t.column(schema.categorical[ci]);
            for (auto& v : vocab[ci])
                ts.features.push_back(row[static_cast<size_t>(col)] == v ? 1.0f : 0.0f);
        }
        ds.tabs.push_back(std::move(ts));

        auto it = std::find(label_list.begin(), label_list.end(), row[static_cast<size_t>(lbc)]);
        ds.labels.push_back(static_cast<int>(it - label_list.begin()));
    }
    ds.provenance = {{"problem", "external"},
                     {"tabular_file", tabular_file},
                     {"image_dir", image_dir},
                     {"img_size", schema.img_size},
                     {"labels", label_list}};
    return ds;
}

}  // namespace multifix::synth
