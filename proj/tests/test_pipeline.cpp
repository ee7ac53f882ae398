#include <catch2/catch_amalgamated.hpp>

#include "multifix/pipeline/hpo.hpp"
#include "multifix/pipeline/sweep.hpp"

using namespace multifix;
using namespace multifix::pipeline;

namespace {

PipelineConfig tiny_cfg(const std::string& problem) {
    PipelineConfig cfg = PipelineConfig::preset(problem);
    cfg.conv_channels = {4, 8};
    cfg.tab_hidden = {16, 16};
    cfg.fusion.widths = {8};
    cfg.fusion.dropouts = {0.0f};
    cfg.epochs = 3;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("assemble widths", "[pipeline]") {
    SECTION("nI=1, nT=1, 4 classes: fusion input 2, output 4") {
        PipelineConfig cfg = PipelineConfig::preset("multiclass");
        PipelineModel m = assemble(cfg, 20, 20, 20);
        auto in_shape = m.fusion_block.output_shape({7, 2});
        REQUIRE(in_shape == std::vector<int>{7, 4});
        REQUIRE(m.image_block.output_shape({3, 3, 20, 20}) == std::vector<int>{3, 1});
        REQUIRE(m.tabular_block.output_shape({3, 20}) == std::vector<int>{3, 1});
    }
    SECTION("nI=2, nT=2: fusion input width 4") {
        PipelineConfig cfg = PipelineConfig::preset("multiclass");
        cfg.nI = 2;
        cfg.nT = 2;
        PipelineModel m = assemble(cfg, 20, 20, 10);
        REQUIRE_THROWS_AS(m.fusion_block.forward(nn::Tensor({1, 3}), nn::Mode::eval), ShapeError);
        REQUIRE(m.fusion_block.output_shape({1, 4})[1] == 4);
    }
    SECTION("zero hidden fusion layers is a config error") {
        PipelineConfig cfg = PipelineConfig::preset("multiclass");
        cfg.fusion.widths.clear();
        cfg.fusion.dropouts.clear();
        REQUIRE_THROWS_AS(assemble(cfg, 20, 20, 20), ConfigError);
    }
    SECTION("defreeze epoch must precede epochs") {
        PipelineConfig cfg = PipelineConfig::preset("xor");
        cfg.ae_pretrain = true;
        cfg.freeze = FreezeMode::defreeze_at;
        cfg.defreeze_epoch = cfg.epochs;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
        cfg.freeze = FreezeMode::always_frozen;  // fully-frozen variant is fine
        REQUIRE_NOTHROW(cfg.validate());
    }
}

TEST_CASE("balanced accuracy", "[pipeline]") {
    REQUIRE(balanced_accuracy({0, 1, 2}, {0, 1, 2}, 3) == 1.0);
    REQUIRE(balanced_accuracy({0, 0, 0, 0}, {0, 0, 1, 1}, 2) == 0.5);
    REQUIRE(balanced_accuracy({0, 0, 1, 0, 2, 2}, {0, 0, 1, 1, 2, 2}, 3) == Catch::Approx(0.833333).epsilon(1e-5));
    // classes absent from labels are excluded
    REQUIRE(balanced_accuracy({0, 1}, {0, 1}, 4) == 1.0);
    REQUIRE_THROWS_AS(balanced_accuracy({}, {}, 2), DataError);
}

TEST_CASE("significance test", "[pipeline]") {
    SECTION("identical scores give p = 1") {
        std::vector<double> a{0.9, 0.8, 0.85, 0.9, 0.7};
        REQUIRE(significance_test(a, a) == 1.0);
    }
    SECTION("constant shift reaches the smallest attainable p for n=5") {
        std::vector<double> a{0.9, 0.8, 0.85, 0.95, 0.7};
        std::vector<double> b;
        for (double v : a) b.push_back(v - 0.1);
        // all 5 differences share a sign: two-sided floor is 2/32, one-sided 1/32
        REQUIRE(significance_test(a, b, Alternative::two_sided) == Catch::Approx(2.0 / 32));
        REQUIRE(significance_test(a, b, Alternative::greater) == Catch::Approx(1.0 / 32));
    }
    SECTION("p always lies in [0,1]") {
        Rng rng(3);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> a, b;
            for (int i = 0; i < 6; ++i) {
                a.push_back(rng.uniform());
                b.push_back(rng.uniform());
            }
            double p = significance_test(a, b);
            REQUIRE(p >= 0.0);
            REQUIRE(p <= 1.0);
        }
    }
    SECTION("fewer than 2 pairs is an error") {
        REQUIRE_THROWS_AS(significance_test({1.0}, {0.5}), DataError);
    }
}

TEST_CASE("spearman", "[pipeline]") {
    REQUIRE(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0));
    REQUIRE(spearman_rho({1, 2, 3, 4}, {4, 3, 2, 1}) == Catch::Approx(-1.0));
    REQUIRE(std::abs(spearman_rho({1, 2, 3, 4, 5}, {3, 1, 4, 1, 5})) < 1.0);
}

TEST_CASE("hpo grids", "[pipeline]") {
    REQUIRE(HpoGrid::table_multiclass().cell_count() == 12);
    REQUIRE(HpoGrid::table_multifeature().cell_count() == 16);
    REQUIRE(HpoGrid::table_xor().cell_count() == 64);
}

TEST_CASE("nas enumeration", "[pipeline]") {
    NasSpace space;
    SECTION("full space has 180 candidates") {
        auto all = enumerate_nas(space);
        REQUIRE(all.size() == 180);
        for (const auto& s : all) {
            REQUIRE_NOTHROW(s.validate());
            for (int w : s.widths) REQUIRE(w > 0);
        }
    }
    SECTION("restricted to one hidden layer: 2 x 9 = 18 candidates") {
        space.hidden_layers = {1};
        REQUIRE(enumerate_nas(space).size() == 18);
    }
}

TEST_CASE("training smoke tests", "[pipeline][slow]") {
    auto ds = synth::make_multiclass_dataset(60, 16, 0.0, 11);
    auto plan = synth::kfold_split(ds, 5, 3);
    PipelineConfig cfg = tiny_cfg("multiclass");

    SECTION("1 epoch with lr=0 leaves parameters at init and BAcc near chance") {
        PipelineConfig zero = cfg;
        zero.lr = 0.0f;
        zero.epochs = 1;
        FoldOutcome fo = train_end_to_end(ds, plan, 0, zero);
        // rebuild the same init and compare a parameter tensor
        FoldOutcome fo2 = train_end_to_end(ds, plan, 0, zero);
        auto pa = fo.model.fusion_block.parameters();
        auto pb = fo2.model.fusion_block.parameters();
        REQUIRE(pa[0].value->data == pb[0].value->data);
        REQUIRE(fo.val_bacc <= 0.6);
    }
    SECTION("training loss decreases") {
        FoldOutcome fo = train_end_to_end(ds, plan, 0, cfg);
        REQUIRE(fo.history.train_loss.front() > fo.history.train_loss.back());
        REQUIRE(fo.history.train_loss.size() == static_cast<size_t>(cfg.epochs));
        REQUIRE(fo.history.val_loss.size() == static_cast<size_t>(cfg.epochs));
    }
    SECTION("reproducibility: same config+seed, same fold BAcc and loss") {
        FoldOutcome a = train_end_to_end(ds, plan, 1, cfg);
        FoldOutcome b = train_end_to_end(ds, plan, 1, cfg);
        REQUIRE(a.val_loss == b.val_loss);
        REQUIRE(a.val_bacc == b.val_bacc);
        REQUIRE(a.val_preds == b.val_preds);
    }
    SECTION("single modality trains and reports") {
        SingleOutcome img = train_single_modality("image", ds, plan, 0, cfg);
        SingleOutcome tab = train_single_modality("tabular", ds, plan, 0, cfg);
        REQUIRE(img.val_bacc >= 0.0);
        REQUIRE(tab.val_bacc <= 1.0);
        REQUIRE_THROWS_AS(train_single_modality("audio", ds, plan, 0, cfg), ConfigError);
    }
    SECTION("supervised feature training") {
        SupervisedOutcome so = train_supervised_feature("tabular", ds, plan, 0, cfg);
        REQUIRE(so.val_bacc > 0.5);  // clean tabular A is learnable even in 3 epochs
    }
    SECTION("hpo: single-cell grid returns that cell") {
        HpoGrid grid{{1e-3f}, {0.0f}, {}};
        HpoOutcome o = hpo_grid_search(grid, ds, plan, cfg);
        REQUIRE(o.cells.size() == 1);
        REQUIRE(o.best.lr == 1e-3f);
        REQUIRE(o.best_config.lr == 1e-3f);
        REQUIRE(o.best.fold_loss.size() == 5);
    }
    SECTION("parallel jobs do not change hpo results") {
        HpoGrid grid{{1e-2f, 1e-3f}, {0.0f}, {}};
        PipelineConfig c1 = cfg;
        c1.epochs = 2;
        c1.jobs = 1;
        PipelineConfig c2 = c1;
        c2.jobs = 3;
        HpoOutcome a = hpo_grid_search(grid, ds, plan, c1);
        HpoOutcome b = hpo_grid_search(grid, ds, plan, c2);
        REQUIRE(a.best.lr == b.best.lr);
        for (size_t i = 0; i < a.cells.size(); ++i) {
            REQUIRE(a.cells[i].fold_loss == b.cells[i].fold_loss);
        }
    }
}

TEST_CASE("autoencoder and freezing", "[pipeline][slow]") {
    auto ds = synth::make_xor_dataset(80, 2, 16, 0.25, 21);
    auto plan = synth::kfold_split(ds, 5, 7);
    PipelineConfig cfg = tiny_cfg("xor");
    cfg.ae_pretrain = true;
    cfg.ae_latent = 8;
    cfg.ae_epochs = 4;
    cfg.epochs = 4;

    SECTION("autoencoder beats the mean-image baseline") {
        AutoencoderResult ae = pretrain_autoencoder(ds, plan.train(0), cfg, 33);
        REQUIRE(ae.final_mse < ae.mean_image_mse);
        // latents of two different-shape images differ
        Batch b = make_batch(ds, {0, 1});
        nn::Tensor z = ae.encoder.forward(b.images, nn::Mode::eval);
        double l2 = 0;
        for (int j = 0; j < cfg.ae_latent; ++j) {
            double d = z.data[static_cast<size_t>(j)] - z.data[static_cast<size_t>(cfg.ae_latent + j)];
            l2 += d * d;
        }
        REQUIRE(l2 > 0.0);
    }
    SECTION("frozen encoder parameters stay byte-identical; de-freeze changes them") {
        cfg.freeze = FreezeMode::defreeze_at;
        cfg.defreeze_epoch = 2;
        FoldOutcome fo = train_fusion_fold(ds, plan, 0, cfg);
        REQUIRE(fo.model.encoder_layers > 0);

        PipelineConfig frozen = cfg;
        frozen.freeze = FreezeMode::always_frozen;
        FoldOutcome ff = train_fusion_fold(ds, plan, 0, frozen);
        // rebuild the AE alone with the same stream: identical parameters
        uint64_t fold_seed = rng_stream(frozen.seed, {0xf01d, 0});
        AutoencoderResult ae = pretrain_autoencoder(ds, plan.train(0), frozen, rng_stream(fold_seed, {0xaeULL}));
        auto trained = ff.model.image_block.parameters_in_range(0, ff.model.encoder_layers);
        auto fresh = ae.encoder.parameters();
        REQUIRE(trained.size() == fresh.size());
        for (size_t i = 0; i < trained.size(); ++i) REQUIRE(trained[i].value->data == fresh[i].value->data);

        // the defrozen run must have moved the encoder away from the AE weights
        auto moved = fo.model.image_block.parameters_in_range(0, fo.model.encoder_layers);
        bool any_diff = false;
        for (size_t i = 0; i < moved.size() && !any_diff; ++i)
            if (moved[i].value->data != fresh[i].value->data) any_diff = true;
        REQUIRE(any_diff);
    }
    SECTION("ae config validation") {
        PipelineConfig bad = cfg;
        bad.ae_latent = 0;
        REQUIRE_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("degradation sweep shape", "[pipeline][slow]") {
    PipelineConfig cfg = tiny_cfg("multiclass");
    cfg.epochs = 1;
    SweepOptions opt;
    opt.resolutions = {16, 8};
    opt.sigmas = {0.0, 5.0};
    opt.n_samples = 40;
    SweepReport rep = run_degradation_sweep(opt, cfg);
    // (resolutions + I + tabular-only) x (sigmas + T + image-only)
    REQUIRE(rep.rows.size() == 4);
    REQUIRE(rep.cols.size() == 4);
    REQUIRE(rep.at("16x16", "sigma0").defined);
    REQUIRE(rep.at("I", "T").defined);
    REQUIRE_FALSE(rep.at("tabular-only", "image-only").defined);
    REQUIRE(rep.at("16x16", "sigma0").fold_bacc.size() == 5);
    // pre-extracted both-truth cell should be essentially perfect even at 1 epoch
    REQUIRE(rep.at("I", "T").bacc.mean >= 0.9);
}
