// dgn: generate synthetic corpora, build prototypes, train, evaluate and
// inspect artifacts.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dgn/corpus.hpp"
#include "dgn/error.hpp"
#include "dgn/graph.hpp"
#include "dgn/heatmap.hpp"
#include "dgn/io.hpp"
#include "dgn/iodp.hpp"
#include "dgn/model.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string fmt_double(double v, int precision = 17) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct GenOptions {
  dgn::SyntheticSpec spec;
  std::optional<std::uint32_t> common;
  std::optional<std::uint32_t> test_per_class;
  std::string out;
};

int run_gen(GenOptions opt) {
  auto& spec = opt.spec;
  if (opt.common) {
    spec.common_objects = *opt.common;
  } else {
    const std::uint64_t used = std::uint64_t{spec.discriminative_per_scene} * spec.num_scenes;
    spec.common_objects = used < spec.num_objects ? static_cast<std::uint32_t>(spec.num_objects - used) : 0;
  }
  spec.test_per_scene = opt.test_per_class.value_or(spec.train_per_scene);
  const auto corpora = dgn::generate_synthetic_corpus(spec);
  const fs::path out(opt.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw dgn::IoError("cannot create output directory " + out.string());
  const auto train_manifest = dgn::save_corpus(corpora.train, out, "train");
  const auto test_manifest = dgn::save_corpus(corpora.test, out, "test");
  std::cout << "generated " << corpora.train.size() << " train and " << corpora.test.size() << " test instances\n"
            << "train_instances=" << corpora.train.size() << "\n"
            << "test_instances=" << corpora.test.size() << "\n"
            << "train_manifest=" << train_manifest.string() << "\n"
            << "test_manifest=" << test_manifest.string() << "\n";
  return kExitOk;
}

struct IodpOptions {
  std::string manifest;
  std::string mode = "independent";
  std::string metric = "cv";
  bool passivate = true;
  std::string out;
};

int run_iodp(const IodpOptions& opt) {
  const auto mode = opt.mode == "independent" ? dgn::CooccurrenceMode::Independent
                                              : dgn::CooccurrenceMode::NonIndependent;
  const auto metric = opt.metric == "range" ? dgn::Dispersion::Range
                      : opt.metric == "std" ? dgn::Dispersion::StdDev
                                            : dgn::Dispersion::CoeffVar;
  const auto corpus = dgn::load_manifest(opt.manifest, dgn::Split::Train);
  const auto proto = dgn::build_prototype(corpus, mode, dgn::DispersionMetric{metric, opt.passivate});
  dgn::save_prototype(proto, opt.out);
  const auto values = proto.omega.values();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::cout << "prototype " << opt.out << ": " << to_string(mode) << ", "
            << (opt.passivate ? "sqrt " : "") << to_string(metric) << "\n"
            << "L=" << proto.num_objects << "\nC=" << proto.num_scenes << "\n"
            << "omega_min=" << fmt_double(*lo) << "\nomega_max=" << fmt_double(*hi)
            << "\nomega_mean=" << fmt_double(mean) << "\n";
  return kExitOk;
}

struct TrainOptions {
  std::string manifest;
  std::string test_manifest;
  std::string prototype;
  std::string mode = "full";
  dgn::TrainConfig config;
  std::optional<std::uint32_t> hidden_dim;
  bool no_aux_activation = false;
  std::string checkpoint;
  std::string trace;
};

std::string trace_csv(const std::vector<dgn::EpochStats>& trace) {
  std::ostringstream out;
  out << "epoch,lr,loss,loss_main,loss_aux,train_accuracy,test_accuracy\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << fmt_double(e.learning_rate) << ',' << fmt_double(e.loss) << ','
        << fmt_double(e.main_loss) << ',' << fmt_double(e.aux_loss) << ',' << fmt_double(e.train_accuracy) << ','
        << (e.test_accuracy ? fmt_double(*e.test_accuracy) : std::string()) << '\n';
  }
  return out.str();
}

int run_train(TrainOptions opt) {
  const auto mode = dgn::parse_ablation_mode(opt.mode);
  if (!mode || *mode == dgn::AblationMode::EvalOnlyIodp)
    throw CLI::ValidationError("--mode", "train supports baseline, train-eval-iodp or full");
  opt.config.mode = *mode;
  opt.config.hidden_dim = opt.hidden_dim;
  opt.config.aux_activation = !opt.no_aux_activation;

  const auto train_corpus = dgn::load_manifest(opt.manifest, dgn::Split::Train);
  std::optional<dgn::Corpus> test_corpus;
  if (!opt.test_manifest.empty()) test_corpus = dgn::load_manifest(opt.test_manifest, dgn::Split::Test);
  std::optional<dgn::Prototype> proto;
  if (*mode != dgn::AblationMode::Baseline) {
    if (opt.prototype.empty()) throw dgn::ValidationError("--prototype is required for graph modes");
    proto = dgn::load_prototype(opt.prototype);
  }

  const auto result = dgn::train(train_corpus, proto ? &*proto : nullptr, opt.config,
                                 test_corpus ? &*test_corpus : nullptr);
  const std::string trace_path = opt.trace.empty() ? opt.checkpoint + ".trace.csv" : opt.trace;
  dgn::save_model(result.model, opt.checkpoint);
  dgn::write_file_atomic(trace_path, trace_csv(result.trace));

  const auto& last = result.trace.back();
  std::cout << "trained " << to_string(*mode) << " for " << result.trace.size() << " epochs\n"
            << "checkpoint=" << opt.checkpoint << "\ntrace=" << trace_path << "\n"
            << "final_loss=" << fmt_double(last.loss) << "\nfinal_train_accuracy=" << fixed6(last.train_accuracy)
            << "\n";
  if (last.test_accuracy) std::cout << "final_test_accuracy=" << fixed6(*last.test_accuracy) << "\n";
  return kExitOk;
}

struct EvalOptions {
  std::string manifest;
  std::string checkpoint;
  std::string prototype;
  std::string mode;
  std::string out;
};

int run_eval(const EvalOptions& opt) {
  auto model = dgn::load_model(opt.checkpoint);
  if (!opt.mode.empty()) {
    const auto mode = dgn::parse_ablation_mode(opt.mode);
    if (!mode) throw CLI::ValidationError("--mode", "unknown mode '" + opt.mode + "'");
    if (*mode == dgn::AblationMode::EvalOnlyIodp && model.mode == dgn::AblationMode::Baseline) {
      model = dgn::plug_in_prototype(model);
    } else if (*mode != model.mode) {
      throw dgn::ValidationError("checkpoint mode is " + std::string(to_string(model.mode)) + ", cannot evaluate as " +
                                 opt.mode);
    }
  }
  const auto corpus = dgn::load_manifest(opt.manifest, dgn::Split::Test);
  std::optional<dgn::Prototype> proto;
  if (model.uses_graph()) {
    if (opt.prototype.empty()) throw dgn::ValidationError("--prototype is required for mode " +
                                                          std::string(to_string(model.mode)));
    proto = dgn::load_prototype(opt.prototype);
  }
  const auto report = dgn::evaluate(model, corpus, proto ? &*proto : nullptr);

  std::ostringstream csv;
  csv << "scene,instances,accuracy\n";
  for (std::size_t c = 0; c < report.per_class_accuracy.size(); ++c)
    csv << c << ',' << report.per_class_total[c] << ',' << fixed6(report.per_class_accuracy[c]) << '\n';
  csv << "all," << report.instances << ',' << fixed6(report.accuracy) << '\n';
  const std::string out = opt.out.empty() ? opt.checkpoint + ".eval.csv" : opt.out;
  dgn::write_file_atomic(out, csv.str());

  std::cout << "mode=" << to_string(model.mode) << "\naccuracy=" << fixed6(report.accuracy) << "\ncorrect="
            << report.correct << "\ninstances=" << report.instances << "\n";
  for (std::size_t c = 0; c < report.per_class_accuracy.size(); ++c)
    std::cout << "class_" << c << "_accuracy=" << fixed6(report.per_class_accuracy[c]) << "\n";
  std::cout << "report=" << out << "\n";
  return kExitOk;
}

struct InspectOptions {
  std::string artifact;
  std::string prototype;
  std::string feature_map;
  std::string out;
};

void print_matrix_summary(const std::string& name, const dgn::Matrix& m) {
  std::cout << name << "=" << m.rows() << "x" << m.cols() << "\n";
}

int run_inspect(const InspectOptions& opt) {
  const std::string bytes = dgn::read_file(opt.artifact);
  const std::string magic = bytes.substr(0, 4);
  fs::path prefix = opt.out.empty() ? fs::path(opt.artifact).replace_extension() : fs::path(opt.out);

  if (magic == "DGNP") {
    const auto proto = dgn::parse_prototype(bytes);
    const fs::path pgm = prefix.string() + ".pgm";
    const fs::path csv = prefix.string() + ".csv";
    dgn::write_pgm16(proto.omega, pgm);
    dgn::write_csv(proto.omega, csv);
    std::cout << "kind=prototype\nL=" << proto.num_objects << "\nC=" << proto.num_scenes
              << "\nmode=" << to_string(proto.mode) << "\nmetric=" << to_string(proto.metric.kind)
              << "\npassivated=" << (proto.metric.passivate ? 1 : 0) << "\nomega_max=" << fmt_double(dgn::max_abs(proto.omega))
              << "\nheatmap=" << pgm.string() << "\ncsv=" << csv.string() << "\n";
    return kExitOk;
  }
  if (magic == "DGNM") {
    const auto model = dgn::parse_model(bytes);
    std::cout << "kind=checkpoint\nmode=" << to_string(model.mode) << "\nc=" << model.in_dim
              << "\nd=" << model.hidden_dim << "\nC=" << model.num_scenes << "\nlambda=" << fmt_double(model.lambda)
              << "\n";
    if (model.has_graph_layer()) print_matrix_summary("W", model.gcn_weight);
    print_matrix_summary("main_head.weight", model.main_head.weight);
    std::cout << "main_head.bias=" << model.main_head.bias.size() << "\n";
    if (model.has_graph_layer()) {
      print_matrix_summary("aux_head.weight", model.aux_head.weight);
      std::cout << "aux_head.bias=" << model.aux_head.bias.size() << "\n";
    }
    std::cout << "parameters=" << model.parameter_count() << "\n";
    return kExitOk;
  }
  if (magic == "DGNF") {
    const auto f = dgn::parse_feature_map(bytes);
    std::cout << "kind=feature_map\nwidth=" << f.width() << "\nheight=" << f.height() << "\nchannels=" << f.channels()
              << "\n";
    return kExitOk;
  }
  if (magic == "DGNL") {
    auto labels = dgn::parse_label_map(bytes);
    std::cout << "kind=label_map\nwidth=" << labels.width() << "\nheight=" << labels.height()
              << "\nL=" << labels.num_objects() << "\n";
    if (opt.prototype.empty()) return kExitOk;
    const auto proto = dgn::load_prototype(opt.prototype);
    if (!opt.feature_map.empty()) {
      const auto f = dgn::load_feature_map(opt.feature_map);
      labels = dgn::nn_resize(labels, f.width(), f.height());
    }
    const std::vector<dgn::ObjectId> semantics(labels.labels().begin(), labels.labels().end());
    const auto a0 = dgn::extract_local_knowledge(semantics, proto);
    const auto a = dgn::row_normalize(a0);
    const std::string p = prefix.string();
    dgn::write_pgm16(a0, p + ".a0.pgm");
    dgn::write_csv(a0, p + ".a0.csv");
    dgn::write_pgm16(a, p + ".a.pgm");
    dgn::write_csv(a, p + ".a.csv");
    std::cout << "nodes=" << a0.rows() << "\na0_heatmap=" << p << ".a0.pgm\na_heatmap=" << p << ".a.pgm\n";
    return kExitOk;
  }
  throw dgn::FormatError("unrecognized artifact (magic '" + magic + "')");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inter-object discriminative prototypes and discriminative graph networks"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a planted synthetic train/test corpus");
  gen_cmd->add_option("--classes", gen.spec.num_scenes, "Scene categories C")->capture_default_str();
  gen_cmd->add_option("--objects", gen.spec.num_objects, "Object vocabulary size L")->capture_default_str();
  gen_cmd->add_option("--discriminative", gen.spec.discriminative_per_scene, "Discriminative objects per class")
      ->capture_default_str();
  gen_cmd->add_option("--common", gen.common, "Shared common objects (default: all remaining ids)");
  gen_cmd->add_option("--per-class", gen.spec.train_per_scene, "Training instances per class")->capture_default_str();
  gen_cmd->add_option("--test-per-class", gen.test_per_class, "Test instances per class (default: --per-class)");
  gen_cmd->add_option("--noise", gen.spec.noise_stddev, "Feature noise standard deviation")->capture_default_str();
  gen_cmd->add_option("--cells", gen.spec.cells_per_side, "Grid cells per side")->capture_default_str();
  gen_cmd->add_option("--channels", gen.spec.channels, "Feature channels c")->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  IodpOptions iodp;
  auto* iodp_cmd = app.add_subcommand("iodp", "Build an inter-object discriminative prototype");
  iodp_cmd->add_option("--manifest", iodp.manifest, "Training manifest")->required();
  iodp_cmd->add_option("--mode", iodp.mode, "Co-occurrence mode")
      ->check(CLI::IsMember({"independent", "nonindependent"}))
      ->capture_default_str();
  iodp_cmd->add_option("--metric", iodp.metric, "Dispersion metric")
      ->check(CLI::IsMember({"range", "std", "cv"}))
      ->capture_default_str();
  iodp_cmd->add_flag("--passivate,!--no-passivate", iodp.passivate, "Square-root the dispersion (default on)");
  iodp_cmd->add_option("--out", iodp.out, "Output .dgnp path")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--manifest", tr.manifest, "Training manifest")->required();
  train_cmd->add_option("--test-manifest", tr.test_manifest, "Optional test manifest for per-epoch accuracy");
  train_cmd->add_option("--prototype", tr.prototype, "Prototype (.dgnp); required for graph modes");
  train_cmd->add_option("--mode", tr.mode, "baseline | train-eval-iodp | full")->capture_default_str();
  train_cmd->add_option("--lambda", tr.config.lambda, "Auxiliary loss weight")->capture_default_str();
  train_cmd->add_option("--hidden-dim", tr.hidden_dim, "Hidden dimension d (default: feature channels c)");
  train_cmd->add_option("--epochs", tr.config.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", tr.config.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.config.learning_rate, "Initial learning rate")
      ->capture_default_str();
  train_cmd->add_option("--lr-milestones", tr.config.lr_milestones, "Epochs at which the rate decays")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--lr-decay", tr.config.lr_decay, "Decay factor at each milestone")->capture_default_str();
  train_cmd->add_option("--weight-decay", tr.config.weight_decay, "Decoupled weight decay")->capture_default_str();
  train_cmd->add_option("--seed", tr.config.seed, "Seed for initialization and shuffling")->capture_default_str();
  train_cmd->add_flag("--no-aux-activation", tr.no_aux_activation, "Drop the sigmoid on the auxiliary path");
  train_cmd->add_option("--checkpoint", tr.checkpoint, "Output checkpoint (.dgnm)")->required();
  train_cmd->add_option("--trace", tr.trace, "Trace CSV (default: <checkpoint>.trace.csv)");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval_cmd->add_option("--manifest", ev.manifest, "Test manifest")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint (.dgnm)")->required();
  eval_cmd->add_option("--prototype", ev.prototype, "Prototype (.dgnp); required for graph modes");
  eval_cmd->add_option("--mode", ev.mode, "Override: eval-only-iodp runs a baseline checkpoint plug-and-play");
  eval_cmd->add_option("--out", ev.out, "Report CSV (default: <checkpoint>.eval.csv)");

  InspectOptions in;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe an artifact and export heatmaps");
  inspect_cmd->add_option("artifact", in.artifact, ".dgnp, .dgnm, .dgnl or .dgnf file")->required();
  inspect_cmd->add_option("--prototype", in.prototype, "Prototype for label-map adjacency export");
  inspect_cmd->add_option("--feature-map", in.feature_map, "Resize the label map to this feature map first");
  inspect_cmd->add_option("--out", in.out, "Output path prefix (default: artifact path without extension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*iodp_cmd) return run_iodp(iodp);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*inspect_cmd) return run_inspect(in);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dgn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dgn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
