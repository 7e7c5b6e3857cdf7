#include "dgn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "dgn/error.hpp"
#include "dgn/io.hpp"

namespace dgn {

namespace {

constexpr std::string_view kMagic = "DGNM";
constexpr std::uint32_t kVersion = 1;

// Seed streams for parameter initialization and batch shuffling.
constexpr std::uint64_t kInitGcn = 1;
constexpr std::uint64_t kInitMain = 2;
constexpr std::uint64_t kInitAux = 3;
constexpr std::uint64_t kShuffleStream = 0x73687566;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[1]} << 32) | out[0];
}

ClassifierParams make_head(std::size_t inputs, std::size_t outputs, std::uint64_t seed) {
  return ClassifierParams{xavier_init(inputs, outputs, seed), std::vector<double>(outputs, 0.0)};
}

ClassifierParams zero_head(const ClassifierParams& like) {
  return ClassifierParams{Matrix(like.weight.rows(), like.weight.cols()), std::vector<double>(like.bias.size(), 0.0)};
}

Matrix activate(const Matrix& pre, bool use_sigmoid) {
  if (!use_sigmoid) return pre;
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t k = 0; k < pre.size(); ++k) out.values()[k] = sigmoid(pre.values()[k]);
  return out;
}

// Gradient of an affine head followed by softmax cross-entropy, scaled by
// `scale`. Accumulates into `head_grad`, returns the gradient w.r.t. the
// pooled input.
std::vector<double> head_backward(const ClassifierParams& head, std::span<const double> pooled,
                                  std::span<const double> logits, SceneId target, double scale,
                                  ClassifierParams& head_grad) {
  auto dlogits = softmax_ce_grad(logits, target);
  for (double& v : dlogits) v *= scale;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    auto row = head_grad.weight.row(i);
    for (std::size_t c = 0; c < dlogits.size(); ++c) row[c] += pooled[i] * dlogits[c];
  }
  for (std::size_t c = 0; c < dlogits.size(); ++c) head_grad.bias[c] += dlogits[c];
  std::vector<double> dpooled(pooled.size(), 0.0);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    auto row = head.weight.row(i);
    for (std::size_t c = 0; c < dlogits.size(); ++c) dpooled[i] += row[c] * dlogits[c];
  }
  return dpooled;
}

// dW += X^T dZ where dZ[r][k] = dpooled[k] / n * act'(hidden[r][k]).
void graph_layer_backward(const Matrix& x, const Matrix& hidden, std::span<const double> dpooled,
                          bool sigmoid_activation, Matrix& dw) {
  const std::size_t n = hidden.rows();
  Matrix dz(n, hidden.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto h = hidden.row(r);
    auto d = dz.row(r);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double slope = sigmoid_activation ? h[k] * (1.0 - h[k]) : 1.0;
      d[k] = dpooled[k] * inv_n * slope;
    }
  }
  const Matrix contribution = matmul_tn(x, dz);
  for (std::size_t k = 0; k < dw.size(); ++k) dw.values()[k] += contribution.values()[k];
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

struct TrainableRefs {
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;
};

// Parameters the optimizer updates. The auxiliary head is frozen when it
// receives no gradient (TrainEvalIodp, or Full with lambda = 0).
TrainableRefs trainable(DgnModel& m, const Gradients& g) {
  TrainableRefs refs;
  auto add = [&](std::span<double> p, std::span<const double> gr) {
    refs.params.push_back(p);
    refs.grads.push_back(gr);
  };
  if (m.has_graph_layer()) add(m.gcn_weight.values(), g.gcn_weight.values());
  add(m.main_head.weight.values(), g.main_head.weight.values());
  add(m.main_head.bias, g.main_head.bias);
  if (m.mode == AblationMode::Full && m.lambda != 0.0) {
    add(m.aux_head.weight.values(), g.aux_head.weight.values());
    add(m.aux_head.bias, g.aux_head.bias);
  }
  return refs;
}

void accumulate(Gradients& into, const Gradients& g) {
  auto add = [](std::span<double> a, std::span<const double> b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  };
  add(into.gcn_weight.values(), g.gcn_weight.values());
  add(into.main_head.weight.values(), g.main_head.weight.values());
  add(into.main_head.bias, g.main_head.bias);
  add(into.aux_head.weight.values(), g.aux_head.weight.values());
  add(into.aux_head.bias, g.aux_head.bias);
}

void scale(Gradients& g, double s) {
  auto mul = [s](std::span<double> a) {
    for (double& v : a) v *= s;
  };
  mul(g.gcn_weight.values());
  mul(g.main_head.weight.values());
  mul(g.main_head.bias);
  mul(g.aux_head.weight.values());
  mul(g.aux_head.bias);
}

std::vector<GraphInput> prepare_inputs(const Corpus& corpus, const Prototype* prototype) {
  std::vector<GraphInput> inputs;
  inputs.reserve(corpus.size());
  for (const auto& inst : corpus.instances()) inputs.push_back(make_input(inst, prototype));
  return inputs;
}

std::vector<SceneId> targets_of(const Corpus& corpus) {
  std::vector<SceneId> t;
  t.reserve(corpus.size());
  for (const auto& inst : corpus.instances()) t.push_back(inst.scene);
  return t;
}

void check_prototype(const Corpus& corpus, const Prototype* prototype) {
  require(prototype != nullptr, "graph modes need a prototype");
  require(prototype->num_objects == corpus.num_objects(),
          "prototype L=" + std::to_string(prototype->num_objects) + " does not match corpus L=" +
              std::to_string(corpus.num_objects()));
}

}  // namespace

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::Baseline: return "baseline";
    case AblationMode::EvalOnlyIodp: return "eval-only-iodp";
    case AblationMode::TrainEvalIodp: return "train-eval-iodp";
    case AblationMode::Full: return "full";
  }
  return "?";
}

std::optional<AblationMode> parse_ablation_mode(std::string_view name) {
  for (auto m : {AblationMode::Baseline, AblationMode::EvalOnlyIodp, AblationMode::TrainEvalIodp, AblationMode::Full})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

std::size_t DgnModel::parameter_count() const {
  std::size_t total = main_head.weight.size() + main_head.bias.size();
  if (mode == AblationMode::TrainEvalIodp || mode == AblationMode::Full) total += gcn_weight.size();
  if (mode == AblationMode::Full) total += aux_head.weight.size() + aux_head.bias.size();
  return total;
}

DgnModel init_model(AblationMode mode, std::uint32_t in_dim, std::uint32_t hidden_dim, std::uint32_t num_scenes,
                    double lambda, std::uint64_t seed) {
  require(mode != AblationMode::EvalOnlyIodp, "eval-only models come from a trained baseline (plug_in_prototype)");
  require(in_dim > 0 && num_scenes > 0, "model needs positive c and C");
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
  DgnModel m;
  m.mode = mode;
  m.lambda = lambda;
  m.in_dim = in_dim;
  m.num_scenes = num_scenes;
  if (mode == AblationMode::Baseline) {
    m.hidden_dim = 0;
    m.main_head = make_head(in_dim, num_scenes, derive_seed(seed, kInitMain));
    return m;
  }
  require(hidden_dim > 0, "graph modes need a hidden dimension d >= 1");
  m.hidden_dim = hidden_dim;
  m.gcn_weight = xavier_init(in_dim, hidden_dim, derive_seed(seed, kInitGcn));
  m.main_head = make_head(hidden_dim, num_scenes, derive_seed(seed, kInitMain));
  m.aux_head = make_head(hidden_dim, num_scenes, derive_seed(seed, kInitAux));
  return m;
}

DgnModel plug_in_prototype(const DgnModel& baseline) {
  require(baseline.mode == AblationMode::Baseline, "plug-and-play evaluation needs a Baseline model");
  DgnModel m = baseline;
  m.mode = AblationMode::EvalOnlyIodp;
  return m;
}

GraphInput make_input(const DiscriminativeGraph& graph) {
  return GraphInput{graph.nodes.features, propagate(graph.adjacency, graph.nodes.features)};
}

GraphInput make_input(const Instance& instance, const Prototype* prototype) {
  require(instance.feature_map.has_value(), "instance has no feature map");
  if (prototype) return make_input(build_graph(instance, *prototype));
  const auto& f = *instance.feature_map;
  return GraphInput{Matrix(f.pixel_count(), f.channels(), std::vector<double>(f.values().begin(), f.values().end())),
                    Matrix{}};
}

ForwardPass forward(const DgnModel& model, const GraphInput& input, bool training) {
  require(input.features.cols() == model.in_dim, "node feature width " + std::to_string(input.features.cols()) +
                                                     " does not match model c=" + std::to_string(model.in_dim));
  require(input.features.rows() >= 1, "graph has no nodes");
  ForwardPass pass;
  pass.mode = model.mode;
  pass.input = &input;
  switch (model.mode) {
    case AblationMode::Baseline:
      pass.pooled = gap(input.features);
      break;
    case AblationMode::EvalOnlyIodp:
      require(!input.propagated.empty(), "eval-only mode needs a graph input");
      pass.pooled = gap(input.propagated);
      break;
    case AblationMode::TrainEvalIodp:
    case AblationMode::Full:
      require(!input.propagated.empty(), "graph modes need a graph input");
      pass.hidden = activate(matmul(input.propagated, model.gcn_weight), true);
      pass.pooled = gap(pass.hidden);
      break;
  }
  pass.main_logits = linear(pass.pooled, model.main_head);
  if (training && model.mode == AblationMode::Full) {
    pass.has_aux = true;
    pass.aux_hidden = activate(matmul(input.features, model.gcn_weight), model.aux_activation);
    pass.aux_pooled = gap(pass.aux_hidden);
    pass.aux_logits = linear(pass.aux_pooled, model.aux_head);
  }
  return pass;
}

double total_loss(double main_loss, double aux_loss, double lambda) { return main_loss + lambda * aux_loss; }

LossBreakdown loss(const DgnModel& model, const ForwardPass& pass, SceneId target) {
  LossBreakdown out;
  out.main = softmax_ce(pass.main_logits, target);
  if (pass.has_aux) out.aux = softmax_ce(pass.aux_logits, target);
  out.total = total_loss(out.main, out.aux, model.lambda);
  return out;
}

Gradients zero_gradients(const DgnModel& model) {
  return Gradients{Matrix(model.gcn_weight.rows(), model.gcn_weight.cols()), zero_head(model.main_head),
                   zero_head(model.aux_head)};
}

Gradients backward(const DgnModel& model, const ForwardPass& pass, SceneId target) {
  require(pass.input != nullptr, "forward pass has no input record");
  require(pass.mode == model.mode, "forward pass was recorded in a different mode");
  require(pass.pooled.size() == model.main_head.inputs() && pass.main_logits.size() == model.num_scenes,
          "forward pass does not match model shapes");
  require(target < model.num_scenes, "target scene out of range");
  require(model.mode != AblationMode::EvalOnlyIodp, "eval-only models have no trainable path");

  Gradients g = zero_gradients(model);
  const auto dpooled = head_backward(model.main_head, pass.pooled, pass.main_logits, target, 1.0, g.main_head);
  if (model.has_graph_layer()) {
    require(pass.hidden.rows() == pass.input->propagated.rows() && pass.hidden.cols() == model.hidden_dim,
            "forward pass hidden state does not match model");
    graph_layer_backward(pass.input->propagated, pass.hidden, dpooled, true, g.gcn_weight);
  }
  if (pass.has_aux) {
    const auto daux = head_backward(model.aux_head, pass.aux_pooled, pass.aux_logits, target, model.lambda,
                                    g.aux_head);
    graph_layer_backward(pass.input->features, pass.aux_hidden, daux, model.aux_activation, g.gcn_weight);
  }
  return g;
}

std::size_t predict(std::span<const double> logits) {
  require(!logits.empty(), "cannot predict from empty logits");
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double scheduled_learning_rate(const TrainConfig& config, std::uint32_t epoch) {
  double lr = config.learning_rate;
  for (auto milestone : config.lr_milestones)
    if (epoch >= milestone) lr *= config.lr_decay;
  return lr;
}

TrainResult train(const Corpus& train_corpus, const Prototype* prototype, const TrainConfig& config,
                  const Corpus* test) {
  require(!train_corpus.empty(), "training corpus is empty");
  require(train_corpus.has_features(), "training instances need feature maps");
  require(config.mode != AblationMode::EvalOnlyIodp,
          "eval-only mode is not trained; train a baseline and plug the prototype in at evaluation");
  require(config.epochs > 0 && config.batch_size > 0, "epochs and batch size must be positive");
  require(config.learning_rate > 0.0 && std::isfinite(config.learning_rate), "learning rate must be positive");
  require(config.weight_decay >= 0.0, "weight decay must be >= 0");

  const Prototype* graph_prototype = nullptr;
  if (config.mode != AblationMode::Baseline) {
    check_prototype(train_corpus, prototype);
    graph_prototype = prototype;
  }
  if (test) {
    require(test->num_objects() == train_corpus.num_objects() && test->num_scenes() == train_corpus.num_scenes(),
            "test corpus disagrees with training corpus on C or L");
    require(!test->empty() && test->has_features(), "test corpus needs instances with feature maps");
  }

  const std::uint32_t in_dim = train_corpus.instances().front().feature_map->channels();
  const std::uint32_t hidden_dim = config.hidden_dim.value_or(in_dim);
  DgnModel model = init_model(config.mode, in_dim, hidden_dim, train_corpus.num_scenes(), config.lambda, config.seed);
  model.aux_activation = config.aux_activation;

  TrainResult result{model, model, {}};
  const auto inputs = prepare_inputs(train_corpus, graph_prototype);
  const auto targets = targets_of(train_corpus);
  std::vector<GraphInput> test_inputs;
  std::vector<SceneId> test_targets;
  if (test) {
    test_inputs = prepare_inputs(*test, graph_prototype);
    test_targets = targets_of(*test);
  }

  AdamState adam;
  adam.hyper.weight_decay = config.weight_decay;
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  DgnModel& m = result.model;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    adam.hyper.learning_rate = scheduled_learning_rate(config, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.learning_rate = adam.hyper.learning_rate;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Gradients batch = zero_gradients(m);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        const ForwardPass pass = forward(m, inputs[idx], true);
        const LossBreakdown l = loss(m, pass, targets[idx]);
        check_finite(l.total, "training loss");
        stats.loss += l.total;
        stats.main_loss += l.main;
        stats.aux_loss += l.aux;
        if (predict(pass.main_logits) == targets[idx]) ++correct;
        accumulate(batch, backward(m, pass, targets[idx]));
      }
      scale(batch, 1.0 / static_cast<double>(stop - start));
      const auto refs = trainable(m, batch);
      adam_step(refs.params, refs.grads, adam);
    }
    const double count = static_cast<double>(order.size());
    stats.loss /= count;
    stats.main_loss /= count;
    stats.aux_loss /= count;
    stats.train_accuracy = static_cast<double>(correct) / count;
    if (test) stats.test_accuracy = evaluate(m, test_inputs, test_targets).accuracy;
    result.trace.push_back(stats);
  }
  return result;
}

EvalReport evaluate(const DgnModel& model, std::span<const GraphInput> inputs, std::span<const SceneId> targets) {
  require(!inputs.empty(), "cannot evaluate on an empty corpus");
  require(inputs.size() == targets.size(), "inputs and targets differ in length");
  EvalReport report;
  report.instances = inputs.size();
  report.per_class_accuracy.assign(model.num_scenes, 0.0);
  report.per_class_total.assign(model.num_scenes, 0);
  std::vector<std::size_t> per_class_correct(model.num_scenes, 0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    require(targets[k] < model.num_scenes, "target scene out of range");
    const auto pass = forward(model, inputs[k], false);
    ++report.per_class_total[targets[k]];
    if (predict(pass.main_logits) == targets[k]) {
      ++report.correct;
      ++per_class_correct[targets[k]];
    }
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.instances);
  for (std::size_t c = 0; c < model.num_scenes; ++c)
    if (report.per_class_total[c] > 0)
      report.per_class_accuracy[c] =
          static_cast<double>(per_class_correct[c]) / static_cast<double>(report.per_class_total[c]);
  return report;
}

EvalReport evaluate(const DgnModel& model, const Corpus& corpus, const Prototype* prototype) {
  require(!corpus.empty(), "cannot evaluate on an empty corpus");
  require(corpus.num_scenes() == model.num_scenes, "corpus C does not match model C");
  const Prototype* graph_prototype = nullptr;
  if (model.uses_graph()) {
    check_prototype(corpus, prototype);
    graph_prototype = prototype;
  }
  const auto inputs = prepare_inputs(corpus, graph_prototype);
  const auto targets = targets_of(corpus);
  return evaluate(model, inputs, targets);
}

std::string serialize_model(const DgnModel& m) {
  detail::ByteWriter w;
  w.magic(kMagic);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(m.mode));
  w.u32(m.in_dim);
  w.u32(m.hidden_dim);
  w.u32(m.num_scenes);
  w.f64(m.lambda);
  for (double v : m.gcn_weight.values()) w.f64(v);
  for (double v : m.main_head.weight.values()) w.f64(v);
  for (double v : m.main_head.bias) w.f64(v);
  for (double v : m.aux_head.weight.values()) w.f64(v);
  for (double v : m.aux_head.bias) w.f64(v);
  return w.take();
}

DgnModel parse_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.header(kMagic, kVersion);
  DgnModel m;
  const std::uint8_t mode = r.u8();
  if (mode > 3) throw FormatError("checkpoint: unknown mode byte " + std::to_string(mode));
  m.mode = static_cast<AblationMode>(mode);
  m.in_dim = r.u32();
  m.hidden_dim = r.u32();
  m.num_scenes = r.u32();
  m.lambda = r.f64();
  require(m.in_dim > 0 && m.num_scenes > 0, "checkpoint: c and C must be positive");
  require(std::isfinite(m.lambda) && m.lambda >= 0.0, "checkpoint: lambda must be finite and >= 0");
  const bool graph_layer = m.mode == AblationMode::TrainEvalIodp || m.mode == AblationMode::Full;
  require(graph_layer == (m.hidden_dim > 0), "checkpoint: d must be > 0 exactly for graph-layer modes");

  const std::size_t c = m.in_dim, d = m.hidden_dim, classes = m.num_scenes;
  const std::size_t head_in = graph_layer ? d : c;
  const std::size_t total = c * d + head_in * classes + classes + (graph_layer ? d * classes + classes : 0);
  r.expect_remaining(8 * total, "checkpoint");
  auto read = [&](std::size_t count) {
    std::vector<double> v(count);
    for (double& x : v) {
      x = r.f64();
      if (!std::isfinite(x)) throw ValidationError("checkpoint: non-finite parameter");
    }
    return v;
  };
  if (graph_layer) m.gcn_weight = Matrix(c, d, read(c * d));
  m.main_head.weight = Matrix(head_in, classes, read(head_in * classes));
  m.main_head.bias = read(classes);
  if (graph_layer) {
    m.aux_head.weight = Matrix(d, classes, read(d * classes));
    m.aux_head.bias = read(classes);
  }
  r.expect_end("checkpoint");
  return m;
}

DgnModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

void save_model(const DgnModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

}  // namespace dgn
