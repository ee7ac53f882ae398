#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "multifix/common.hpp"

namespace multifix::pipeline {

struct FusionSpec {
    std::string activation = "relu";  // relu | sigmoid
    std::vector<int> widths{32};      // one entry per hidden layer
    std::vector<float> dropouts{0.0f};

    void validate() const {
        if (widths.empty()) throw ConfigError("fusion block: at least one hidden layer is required");
        if (activation != "relu" && activation != "sigmoid")
            throw ConfigError("fusion block: unknown activation '" + activation + "'");
        if (dropouts.size() != widths.size())
            throw ConfigError("fusion block: dropouts must match hidden layer count");
        for (int w : widths)
            if (w <= 0) throw ConfigError("fusion block: widths must be positive");
        for (float d : dropouts)
            if (d < 0.0f || d >= 1.0f) throw ConfigError("fusion block: dropout must be in [0,1)");
    }
};

enum class FreezeMode { none, defreeze_at, always_frozen };

struct PipelineConfig {
    std::string problem = "multiclass";
    int n_classes = 4;
    int nI = 1, nT = 1;

    std::vector<int> conv_channels{16, 32, 64};  // compact 3-block CNN
    std::vector<int> tab_hidden{32, 32};         // tabular MLP, two hidden layers
    FusionSpec fusion;

    float lr = 1e-3f;
    float wd = 0.0f;
    int epochs = 100;
    int batch_size = 16;

    bool ae_pretrain = false;
    int ae_latent = 16;
    int ae_epochs = 30;
    float ae_lr = 1e-3f;
    FreezeMode freeze = FreezeMode::none;
    int defreeze_epoch = 0;

    uint64_t seed = 1;
    int jobs = 1;

    void validate() const {
        if (nI < 1 || nT < 1) throw ConfigError("pipeline: nI and nT must be at least 1");
        if (n_classes < 2) throw ConfigError("pipeline: need at least 2 classes");
        if (epochs < 1 || batch_size < 1) throw ConfigError("pipeline: epochs and batch size must be positive");
        fusion.validate();
        if (freeze == FreezeMode::defreeze_at) {
            if (!ae_pretrain) throw ConfigError("pipeline: de-freezing requires ae_pretrain");
            if (defreeze_epoch < 0 || defreeze_epoch >= epochs)
                throw ConfigError("pipeline: defreeze epoch " + std::to_string(defreeze_epoch) +
                                  " must lie in [0, epochs)");
        }
        if (freeze == FreezeMode::always_frozen && !ae_pretrain)
            throw ConfigError("pipeline: frozen encoder requires ae_pretrain");
        if (ae_pretrain && ae_latent < nI)
            throw ConfigError("pipeline: autoencoder latent width must be at least nI");
    }

    // problem presets (bottleneck widths per problem, desk-scale training lengths)
    static PipelineConfig preset(const std::string& problem) {
        PipelineConfig c;
        c.problem = problem;
        if (problem == "multiclass") {
            c.n_classes = 4;
            c.nI = 1;
            c.nT = 1;
            c.epochs = 30;
        } else if (problem == "multifeature") {
            c.n_classes = 2;
            c.nI = 2;
            c.nT = 3;  // bottleneck of three nodes; C ends up unused by fusion
            c.epochs = 25;
        } else if (problem == "xor") {
            c.n_classes = 2;
            c.nI = 1;
            c.nT = 1;
            c.epochs = 60;
        } else if (problem == "xor3") {
            c.n_classes = 2;
            c.nI = 2;
            c.nT = 1;
            c.epochs = 60;
        } else if (problem == "external") {
            c.n_classes = 2;
            c.nI = 2;
            c.nT = 2;
            c.epochs = 30;
        } else {
            throw ConfigError("unknown problem '" + problem + "'");
        }
        return c;
    }

    nlohmann::json to_json() const {
        return {{"problem", problem},
                {"n_classes", n_classes},
                {"nI", nI},
                {"nT", nT},
                {"conv_channels", conv_channels},
                {"tab_hidden", tab_hidden},
                {"fusion_activation", fusion.activation},
                {"fusion_widths", fusion.widths},
                {"fusion_dropouts", fusion.dropouts},
                {"lr", lr},
                {"wd", wd},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"ae_pretrain", ae_pretrain},
                {"ae_latent", ae_latent},
                {"ae_epochs", ae_epochs},
                {"ae_lr", ae_lr},
                {"freeze", freeze == FreezeMode::none ? "none"
                           : freeze == FreezeMode::defreeze_at ? "defreeze" : "frozen"},
                {"defreeze_epoch", defreeze_epoch},
                {"seed", seed}};
    }
};

}  // namespace multifix::pipeline
