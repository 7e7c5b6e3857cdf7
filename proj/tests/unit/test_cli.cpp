#include <gtest/gtest.h>

#include <string>

#include "cli_runner.hpp"
#include "dgn/corpus.hpp"
#include "dgn/heatmap.hpp"
#include "dgn/io.hpp"
#include "dgn/iodp.hpp"
#include "dgn/model.hpp"
#include "test_support.hpp"

namespace dgn {
namespace {

using testing::CliResult;
using testing::field;
using testing::TempDir;

class Cli : public ::testing::Test {
 protected:
  TempDir dir{"cli"};

  CliResult run(std::vector<std::string> args) { return testing::run_cli(DGN_CLI_PATH, args, dir.path()); }
  std::string at(const std::string& name) const { return (dir / name).string(); }

  // Small planted corpus under <dir>/data.
  void gen_small(const std::string& sub = "data", const std::string& seed = "304") {
    const auto r = run({"gen", "--classes", "3", "--objects", "9", "--per-class", "6", "--test-per-class", "3",
                        "--noise", "0.5", "--channels", "4", "--seed", seed, "--out", at(sub)});
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }

  std::string write_toy_manifest() {
    const auto corpus = testing::toy_corpus();
    return save_corpus(corpus, dir.path(), "toy").string();
  }
};

TEST_F(Cli, GenWritesRequestedCounts) {
  const auto r = run({"gen", "--classes", "7", "--objects", "20", "--per-class", "100", "--seed", "304", "--out",
                      at("d")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(field(r.out, "train_instances"), "700");
  const auto corpus = load_manifest(dir / "d/train.manifest", Split::Train);
  EXPECT_EQ(corpus.size(), 700u);
  EXPECT_EQ(corpus.num_scenes(), 7u);
  EXPECT_EQ(corpus.num_objects(), 20u);
}

TEST_F(Cli, GenIsDeterministic) {
  gen_small("a");
  gen_small("b");
  EXPECT_EQ(testing::snapshot_tree(dir / "a"), testing::snapshot_tree(dir / "b"));
  gen_small("c", "305");
  EXPECT_NE(testing::snapshot_tree(dir / "a"), testing::snapshot_tree(dir / "c"));
}

TEST_F(Cli, GenRejectsInfeasibleSpec) {
  const auto r = run({"gen", "--classes", "7", "--objects", "10", "--out", at("bad")});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).exit_code, 1);
  EXPECT_EQ(run({"gen"}).exit_code, 1);
  EXPECT_EQ(run({"iodp", "--manifest", "x", "--out", "y", "--metric", "median"}).exit_code, 1);
  const auto r = run({"frobnicate"});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, IodpOnToyManifest) {
  const auto manifest = write_toy_manifest();
  const auto r = run({"iodp", "--manifest", manifest, "--out", at("toy.dgnp")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(field(r.out, "L"), "3");
  EXPECT_EQ(field(r.out, "C"), "2");
  const auto p = load_prototype(dir / "toy.dgnp");
  EXPECT_EQ(p.metric, (DispersionMetric{Dispersion::CoeffVar, true}));
  EXPECT_EQ(p.at(0, 1), 1.0);
  EXPECT_EQ(p.at(1, 1), 0.0);
  EXPECT_EQ(p.at(0, 2), 0.0);
}

TEST_F(Cli, IodpModesDifferOnlyInModeByteAndPayload) {
  gen_small();
  const auto manifest = at("data/train.manifest");
  ASSERT_EQ(run({"iodp", "--manifest", manifest, "--mode", "independent", "--out", at("i.dgnp")}).exit_code, 0);
  ASSERT_EQ(run({"iodp", "--manifest", manifest, "--mode", "nonindependent", "--out", at("n.dgnp")}).exit_code, 0);
  const auto a = read_file(dir / "i.dgnp");
  const auto b = read_file(dir / "n.dgnp");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < 19; ++k)
    if (k != 12) EXPECT_EQ(a[k], b[k]) << "header byte " << k;
  EXPECT_EQ(a[12], 1);
  EXPECT_EQ(b[12], 0);
  EXPECT_NE(a.substr(19), b.substr(19));
}

TEST_F(Cli, IodpMetricFlags) {
  const auto manifest = write_toy_manifest();
  ASSERT_EQ(run({"iodp", "--manifest", manifest, "--metric", "range", "--no-passivate", "--out", at("r.dgnp")})
                .exit_code,
            0);
  const auto p = load_prototype(dir / "r.dgnp");
  EXPECT_EQ(p.metric, (DispersionMetric{Dispersion::Range, false}));
}

TEST_F(Cli, IodpMissingSceneIsDataError) {
  save_label_map(LabelMap(1, 1, 2, {0}), dir / "a.dgnl");
  write_file_atomic(dir / "gap.manifest", "#DGN-MANIFEST v1 C=2 L=2\n0\ta.dgnl\t-\n");
  const auto r = run({"iodp", "--manifest", at("gap.manifest"), "--out", at("gap.dgnp")});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "gap.dgnp"));
}

TEST_F(Cli, TrainIsReproducibleAndWritesTrace) {
  gen_small();
  ASSERT_EQ(run({"iodp", "--manifest", at("data/train.manifest"), "--out", at("p.dgnp")}).exit_code, 0);
  const std::vector<std::string> common{"train", "--manifest", at("data/train.manifest"), "--test-manifest",
                                        at("data/test.manifest"), "--prototype", at("p.dgnp"), "--epochs", "3"};
  auto first = common;
  first.insert(first.end(), {"--checkpoint", at("a.dgnm")});
  auto second = common;
  second.insert(second.end(), {"--checkpoint", at("b.dgnm")});
  const auto r = run(first);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  ASSERT_EQ(run(second).exit_code, 0);
  EXPECT_EQ(read_file(dir / "a.dgnm"), read_file(dir / "b.dgnm"));
  const auto trace = read_file(dir / "a.dgnm.trace.csv");
  EXPECT_EQ(trace, read_file(dir / "b.dgnm.trace.csv"));
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "epoch,lr,loss,loss_main,loss_aux,train_accuracy,test_accuracy");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 4);
  const auto model = load_model(dir / "a.dgnm");
  EXPECT_EQ(model.mode, AblationMode::Full);
  EXPECT_EQ(model.hidden_dim, 4u);
  EXPECT_EQ(model.lambda, 0.25);
}

TEST_F(Cli, TrainBaselineAndErrors) {
  gen_small();
  auto r = run({"train", "--manifest", at("data/train.manifest"), "--mode", "baseline", "--epochs", "2",
                "--checkpoint", at("base.dgnm")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto model = load_model(dir / "base.dgnm");
  EXPECT_EQ(model.mode, AblationMode::Baseline);
  EXPECT_EQ(model.hidden_dim, 0u);

  // Prototype built over a different vocabulary.
  write_toy_manifest();
  ASSERT_EQ(run({"iodp", "--manifest", at("toy.manifest"), "--out", at("toy.dgnp")}).exit_code, 0);
  r = run({"train", "--manifest", at("data/train.manifest"), "--prototype", at("toy.dgnp"), "--epochs", "1",
           "--checkpoint", at("x.dgnm")});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.dgnm"));

  r = run({"train", "--manifest", at("data/train.manifest"), "--mode", "baseline", "--epochs", "3", "--lr",
           "1e300", "--checkpoint", at("nan.dgnm")});
  EXPECT_EQ(r.exit_code, 3) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "nan.dgnm"));

  r = run({"train", "--manifest", at("data/train.manifest"), "--mode", "eval-only-iodp", "--checkpoint",
           at("e.dgnm")});
  EXPECT_EQ(r.exit_code, 1);
}

TEST_F(Cli, EvalReportsAccuracyAndPlugAndPlay) {
  gen_small();
  ASSERT_EQ(run({"iodp", "--manifest", at("data/train.manifest"), "--out", at("p.dgnp")}).exit_code, 0);
  ASSERT_EQ(run({"train", "--manifest", at("data/train.manifest"), "--mode", "baseline", "--epochs", "2",
                 "--checkpoint", at("base.dgnm")})
                .exit_code,
            0);
  auto r = run({"eval", "--manifest", at("data/test.manifest"), "--checkpoint", at("base.dgnm")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto correct = std::stod(field(r.out, "correct"));
  const auto total = std::stod(field(r.out, "instances"));
  char expect[32];
  std::snprintf(expect, sizeof expect, "%.6f", correct / total);
  EXPECT_EQ(field(r.out, "accuracy"), expect);
  EXPECT_TRUE(std::filesystem::exists(dir / "base.dgnm.eval.csv"));

  r = run({"eval", "--manifest", at("data/test.manifest"), "--checkpoint", at("base.dgnm"), "--mode",
           "eval-only-iodp", "--prototype", at("p.dgnp"), "--out", at("plug.csv")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(field(r.out, "mode"), "eval-only-iodp");

  const auto model = plug_in_prototype(load_model(dir / "base.dgnm"));
  const auto proto = load_prototype(dir / "p.dgnp");
  const auto report = evaluate(model, load_manifest(dir / "data/test.manifest", Split::Test), &proto);
  std::snprintf(expect, sizeof expect, "%.6f", report.accuracy);
  EXPECT_EQ(field(r.out, "accuracy"), expect);

  r = run({"eval", "--manifest", at("data/test.manifest"), "--checkpoint", at("base.dgnm"), "--mode",
           "eval-only-iodp"});
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(Cli, EvalPerfectModel) {
  // One-hot features per scene with an identity head classify perfectly.
  std::vector<Instance> inst;
  for (SceneId c = 0; c < 3; ++c) {
    std::vector<double> f(3, 0.0);
    f[c] = 1.0;
    inst.push_back({c, LabelMap(1, 1, 2, {0}), FeatureMap(1, 1, 3, f)});
  }
  const auto manifest = save_corpus(Corpus(3, 2, Split::Test, inst), dir.path(), "perfect");
  auto model = init_model(AblationMode::Baseline, 3, 0, 3, 0.25, 1);
  model.main_head.weight = identity(3);
  save_model(model, dir / "perfect.dgnm");
  const auto r = run({"eval", "--manifest", manifest.string(), "--checkpoint", at("perfect.dgnm")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(field(r.out, "accuracy"), "1.000000");
}

TEST_F(Cli, InspectPrototypeHeatmaps) {
  write_toy_manifest();
  ASSERT_EQ(run({"iodp", "--manifest", at("toy.manifest"), "--out", at("toy.dgnp")}).exit_code, 0);
  auto r = run({"inspect", at("toy.dgnp")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto pgm = read_file(dir / "toy.pgm");
  const std::string header = "P5\n3 3\n65535\n";
  ASSERT_EQ(pgm.size(), header.size() + 18);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const std::size_t at01 = header.size() + 2 * 1;
  EXPECT_EQ(static_cast<unsigned char>(pgm[at01]), 0xFF);
  EXPECT_EQ(static_cast<unsigned char>(pgm[at01 + 1]), 0xFF);
  EXPECT_EQ(read_file(dir / "toy.csv"), encode_csv(load_prototype(dir / "toy.dgnp").omega));

  // Every object in every instance of every scene: zero prototype.
  std::vector<Instance> inst{{0, LabelMap(2, 1, 2, {0, 1}), std::nullopt},
                             {1, LabelMap(2, 1, 2, {1, 0}), std::nullopt}};
  const auto flat = save_corpus(Corpus(2, 2, Split::Train, inst), dir.path(), "flat");
  ASSERT_EQ(run({"iodp", "--manifest", flat.string(), "--out", at("flat.dgnp")}).exit_code, 0);
  ASSERT_EQ(run({"inspect", at("flat.dgnp"), "--out", at("flat_view")}).exit_code, 0);
  const auto black = read_file(dir / "flat_view.pgm");
  EXPECT_EQ(black, "P5\n2 2\n65535\n" + std::string(8, '\0'));
}

TEST_F(Cli, InspectCheckpointAndLabelMap) {
  save_model(init_model(AblationMode::Full, 5, 3, 4, 0.25, 1), dir / "m.dgnm");
  auto r = run({"inspect", at("m.dgnm")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(field(r.out, "W"), "5x3");
  EXPECT_EQ(field(r.out, "main_head.weight"), "3x4");

  write_toy_manifest();
  ASSERT_EQ(run({"iodp", "--manifest", at("toy.manifest"), "--out", at("toy.dgnp")}).exit_code, 0);
  save_label_map(LabelMap(2, 1, 3, {0, 1}), dir / "pair.dgnl");
  r = run({"inspect", at("pair.dgnl"), "--prototype", at("toy.dgnp")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "pair.a0.csv"), "1,1\n1,0\n");
  EXPECT_EQ(read_file(dir / "pair.a.csv"), "0.5,0.5\n1,0\n");
}

TEST_F(Cli, InspectUnknownMagic) {
  write_file_atomic(dir / "junk.bin", "JUNKJUNK");
  const auto r = run({"inspect", at("junk.bin")});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({"inspect", at("missing.bin")}).exit_code, 2);
}

}  // namespace
}  // namespace dgn
