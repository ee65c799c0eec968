#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sngp/experiment.hpp"

using namespace sngp;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.seed = 2;
    c.data.n_train_per_class = 40;
    c.data.n_test_per_class = 20;
    c.model.shape.hidden_dim = 8;
    c.model.shape.num_blocks = 2;
    c.model.shape.spec_norm_bound = 0.95;
    c.gp.gp_hidden_dim = 32;
    c.trainer.epochs = 3;
    return c;
}

std::vector<std::vector<double>> read_rows(const std::string& csv, std::string* header) {
    std::istringstream in(csv);
    std::getline(in, *header);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) r.push_back(std::stod(f));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST(MakeData, SplitsAndIsDeterministic) {
    const auto c = small_config();
    const auto d = make_data(c);
    EXPECT_EQ(d.train.size() + d.validation.size(), 80u);
    EXPECT_EQ(d.validation.size(), 16u);
    EXPECT_EQ(d.test.size(), 40u);
    EXPECT_EQ(make_data(c).train.inputs, d.train.inputs);
    auto other = c;
    other.seed = 3;
    EXPECT_NE(make_data(other).train.inputs, d.train.inputs);
}

TEST(BuildModel, RejectsInputDimensionMismatch) {
    auto c = small_config();
    c.model.shape.input_dim = 3;
    EXPECT_THROW(build_model(c, 0, make_data(small_config()).train), ConfigError);
}

TEST(RunTrain, GpHeadFinalizedAndCalibrated) {
    const auto t = run_train(small_config());
    ASSERT_EQ(t.artifact.members.size(), 1u);
    EXPECT_TRUE(t.artifact.members[0].gp_head().finalized());
    ASSERT_EQ(t.calibration.size(), 1u);
    EXPECT_EQ(t.artifact.members[0].gp_head().calibrated_amplitude(), t.calibration[0].amplitude);
    const auto log = training_log_json(t);
    EXPECT_EQ(log.dump().find("nan"), std::string::npos);
}

TEST(RunTrain, EnsembleMembersDiffer) {
    auto c = small_config();
    c.ensemble_size = 2;
    const auto t = run_train(c);
    ASSERT_EQ(t.artifact.members.size(), 2u);
    EXPECT_NE(t.artifact.members[0].net.blocks()[0].weight, t.artifact.members[1].net.blocks()[0].weight);
    EXPECT_EQ(predict_artifact(t.artifact, make_data(c).test.inputs).members, 2u);
}

TEST(RunTrain, Regression) {
    auto c = small_config();
    c.data.dataset = DatasetKind::bimodal_1d;
    c.model.shape.input_dim = 1;
    c.model.likelihood = Likelihood::regression;
    c.model.num_classes = 1;
    const auto t = run_train(c);
    EXPECT_TRUE(t.calibration.empty());
    const auto post = predict_artifact(t.artifact, Matrix{{0.0}, {20.0}});
    EXPECT_TRUE(post.probs.empty());
    EXPECT_EQ(post.mean_logits.cols(), 1u);
    EXPECT_THROW(evaluate(t.artifact, make_data(c).train, make_data(c).test, {}), ConfigError);
}

TEST(Evaluate, ReportShapeAndOodBlock) {
    const auto c = small_config();
    const auto t = run_train(c);
    const auto d = make_data(c);
    const auto plain = evaluate(t.artifact, d.train, d.test, {});
    EXPECT_TRUE(plain.ood.empty());
    EXPECT_FALSE(to_json(plain).contains("ood"));
    EXPECT_EQ(plain.n, d.test.size());
    std::size_t total = 0;
    for (const auto& b : plain.bin_stats) total += b.count;
    EXPECT_EQ(total, plain.n);
    Rng rng(5);
    const double center[] = {6.0, 6.0};
    const auto r = evaluate(t.artifact, d.train, d.test, {{"far", ood_cluster(rng, 50, center, 0.2)}});
    ASSERT_EQ(r.ood.count("far"), 1u);
    for (const char* score : {"msp", "dempster_shafer", "mahalanobis", "relative_mahalanobis"}) {
        ASSERT_EQ(r.ood.at("far").count(score), 1u) << score;
        const auto s = r.ood.at("far").at(score);
        EXPECT_GE(s.auroc, 0.0);
        EXPECT_LE(s.auroc, 1.0);
        EXPECT_GE(s.aupr, 0.0);
        EXPECT_LE(s.aupr, 1.0);
    }
    const auto j = to_json(r);
    EXPECT_TRUE(j["ood"]["far"]["msp"].contains("auroc"));
    EXPECT_GE(j["nll"].get<double>(), 0.0);
}

TEST(Grid, ParseAndDefault) {
    const auto g = parse_grid("x0:-1:2:5,x1:0:3:7");
    EXPECT_EQ(g.n[0], 5u);
    EXPECT_EQ(g.n[1], 7u);
    EXPECT_DOUBLE_EQ(g.lo[0], -1.0);
    EXPECT_DOUBLE_EQ(g.hi[1], 3.0);
    for (const char* bad : {"", "x0:0:1:5", "x0:0:1:5,x2:0:1:5", "x0:1:0:5,x1:0:1:5", "x0:0:1:0,x1:0:1:5",
                            "x0:a:1:5,x1:0:1:5"})
        EXPECT_THROW(parse_grid(bad), ConfigError) << bad;
    const LabeledSet s{Matrix{{0.0, 0.0}, {2.0, 4.0}}, Vector{0, 1}, Domain::IND};
    const auto d = default_grid(s, 10, 0.5);
    EXPECT_DOUBLE_EQ(d.lo[0], -1.0);
    EXPECT_DOUBLE_EQ(d.hi[1], 6.0);
    EXPECT_EQ(d.n[0], 10u);
}

TEST(Surface, RowsAndNormalizedUncertainty) {
    const auto t = run_train(small_config());
    std::ostringstream out;
    write_surface(out, t.artifact, parse_grid("x0:-3:3:100,x1:-3:3:100"));
    std::string header;
    const auto rows = read_rows(out.str(), &header);
    EXPECT_EQ(header, "x0,x1,max_prob,u_normalized,variance");
    ASSERT_EQ(rows.size(), 10000u);
    EXPECT_NEAR(rows[1][0] - rows[0][0], 6.0 / 99.0, 1e-12);
    EXPECT_EQ(rows[1][1], rows[0][1]);
    for (const auto& r : rows) {
        ASSERT_EQ(r.size(), 5u);
        EXPECT_NEAR(r[3], r[2] * (1 - r[2]) / 0.25, 1e-12);
        EXPECT_GE(r[3], 0.0);
        EXPECT_LE(r[3], 1.0);
        EXPECT_GT(r[4], 0.0);
    }
}

TEST(Surface, OneDimensionalModelUnsupported) {
    auto c = small_config();
    c.data.dataset = DatasetKind::bimodal_1d;
    c.model.shape.input_dim = 1;
    c.model.likelihood = Likelihood::regression;
    c.model.num_classes = 1;
    const auto t = run_train(c);
    std::ostringstream out;
    EXPECT_THROW(write_surface(out, t.artifact, parse_grid("x0:0:1:2,x1:0:1:2")), DimensionUnsupported);
}

TEST(Sweep, TableSizeAndSelection) {
    auto c = small_config();
    c.sweep.spec_norm_bound = {0.5, 0.0};
    c.sweep.kernel_amplitude = {0.5, 1.0, 4.0};
    const auto r = run_sweep(c);
    ASSERT_EQ(r.rows.size(), 6u);
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.rows.size(); ++i)
        if (r.rows[i].validation_nll < r.rows[best].validation_nll) best = i;
    EXPECT_EQ(r.best, best);
    EXPECT_EQ(r.best_config.gp.kernel_amplitude, r.rows[best].kernel_amplitude);
    const auto j = sweep_json(r);
    EXPECT_EQ(j["rows"].size(), 6u);
    EXPECT_TRUE(j["rows"][3]["spec_norm_bound"].is_null());
}

TEST(Sweep, SinglePointReturnsIt) {
    auto c = small_config();
    c.sweep.spec_norm_bound = {0.7};
    c.sweep.kernel_amplitude = {2.0};
    const auto r = run_sweep(c);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.best, 0u);
    EXPECT_EQ(*r.best_config.model.shape.spec_norm_bound, 0.7);
    EXPECT_EQ(r.best_config.gp.kernel_amplitude, 2.0);
}

TEST(Sweep, NeedsValidationSplit) {
    auto c = small_config();
    c.data.validation_fraction = 0.0;
    EXPECT_THROW(run_sweep(c), ConfigError);
}

TEST(Evaluate, ConvergedModelFitsTrainingSet) {
    ExperimentConfig c;
    c.data.n_train_per_class = 500;
    c.data.validation_fraction = 0.0;
    c.model.shape.hidden_dim = 32;
    c.model.shape.num_blocks = 6;
    c.model.shape.spec_norm_bound = 0.95;
    c.gp.gp_hidden_dim = 512;
    c.gp.calibrate_amplitude = false;
    c.trainer.epochs = 60;
    const auto t = run_train(c);
    const auto d = make_data(c);
    EXPECT_GE(evaluate(t.artifact, d.train, d.train, {}).accuracy, 0.99);
}
