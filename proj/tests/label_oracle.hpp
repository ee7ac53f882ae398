#pragma once

// Independent Boolean label oracle for generated datasets. Recomputes every
// label from the generator's stored truth features using nothing but the
// problem definitions (truth tables / gate formulas), so any disagreement
// with a stored label is a generator bug.

#include <string>

#include "multifix/synth/dataset.hpp"

namespace label_oracle {

inline int recompute(const multifix::synth::MultimodalDataset& ds, int i) {
    const auto& img = ds.images[static_cast<size_t>(i)].truth;
    const auto& tab = ds.tabs[static_cast<size_t>(i)].truth;
    if (ds.problem == "multiclass") {
        // designed table: (square, A): 00->0, 01->1, 10->2, 11->3
        return 2 * img.at("square") + tab.at("A");
    }
    if (ds.problem == "multifeature") {
        bool y = (img.at("circle") == 1 && tab.at("A") == 1) &&
                 (img.at("rectangle") == 1 || tab.at("B") == 1);
        return y ? 1 : 0;
    }
    if (ds.problem == "xor") {
        // 00->0, 01->1, 10->1, 11->0
        return img.at("circle") ^ tab.at("A");
    }
    if (ds.problem == "xor3") {
        return img.at("circle") ^ img.at("triangle") ^ tab.at("A");
    }
    throw std::logic_error("label oracle: unknown problem " + ds.problem);
}

// returns the number of disagreements
inline int check_all(const multifix::synth::MultimodalDataset& ds) {
    int bad = 0;
    for (int i = 0; i < ds.size(); ++i)
        if (recompute(ds, i) != ds.labels[static_cast<size_t>(i)]) ++bad;
    return bad;
}

}  // namespace label_oracle
