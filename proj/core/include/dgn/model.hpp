#pragma once

// Discriminative graph network: one graph-convolution layer over the pixel
// graph, global average pooling and a scene classifier, plus an auxiliary
// classifier fed by the same weight W applied to the raw node features.
//
//   main:  V* = sigmoid(D^-1 (A + I) V W)  -> GAP -> main head -> l_o
//   aux:   sigmoid(V W)                     -> GAP -> aux head  -> l_a
//   loss:  l = l_o + lambda * l_a            (aux path is training-only)
//
// Checkpoint file (.dgnm), little-endian:
//   "DGNM" u32 version=1, u8 mode, u32 c, u32 d, u32 C, f64 lambda,
//   then f64 parameters: W (c x d, row-major), main head weight (in x C,
//   row-major), main head bias (C), aux head weight (d x C), aux head bias (C).
//   Baseline and eval-only models have d = 0: no W and no aux head, and the
//   main head maps c -> C.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgn/corpus.hpp"
#include "dgn/graph.hpp"
#include "dgn/iodp.hpp"
#include "dgn/matrix.hpp"
#include "dgn/nn.hpp"

namespace dgn {

enum class AblationMode : std::uint8_t {
  Baseline = 0,       // GAP(V) -> head
  EvalOnlyIodp = 1,   // trained baseline head on GAP(D^-1 (A + I) V), no W, no activation
  TrainEvalIodp = 2,  // graph layer trained and evaluated, no auxiliary loss
  Full = 3,           // graph layer plus auxiliary loss
};

std::string_view to_string(AblationMode mode);
std::optional<AblationMode> parse_ablation_mode(std::string_view name);

struct DgnModel {
  AblationMode mode = AblationMode::Full;
  double lambda = 0.25;
  std::uint32_t in_dim = 0;      // c
  std::uint32_t hidden_dim = 0;  // d; 0 for Baseline / EvalOnlyIodp
  std::uint32_t num_scenes = 0;  // C
  Matrix gcn_weight;             // c x d, shared by the main and auxiliary paths
  ClassifierParams main_head;    // (d, or c without a graph layer) x C
  ClassifierParams aux_head;     // d x C, separate storage from main_head
  // Sigmoid after V W on the auxiliary path. Training-only; not serialized.
  bool aux_activation = true;

  bool uses_graph() const { return mode != AblationMode::Baseline; }
  bool has_graph_layer() const { return hidden_dim > 0; }
  /// Trainable parameters that the mode actually uses.
  std::size_t parameter_count() const;

  bool operator==(const DgnModel&) const = default;
};

/// Xavier-initialized weights, zero biases. d is ignored (forced to 0) for
/// Baseline. EvalOnlyIodp cannot be initialized; see plug_in_prototype.
DgnModel init_model(AblationMode mode, std::uint32_t in_dim, std::uint32_t hidden_dim, std::uint32_t num_scenes,
                    double lambda, std::uint64_t seed);

/// Turns a trained Baseline model into its EvalOnlyIodp counterpart. The
/// parameters are copied unchanged.
DgnModel plug_in_prototype(const DgnModel& baseline);

/// Node features and their propagation D^-1 (A + I) V. `propagated` is empty
/// for inputs prepared without a graph.
struct GraphInput {
  Matrix features;
  Matrix propagated;
};

GraphInput make_input(const DiscriminativeGraph& graph);
/// Builds the instance graph when `prototype` is non-null, else features only.
GraphInput make_input(const Instance& instance, const Prototype* prototype);

/// Intermediate values of one forward pass. Refers to `input`, which must
/// outlive the pass.
struct ForwardPass {
  AblationMode mode = AblationMode::Baseline;
  const GraphInput* input = nullptr;
  Matrix hidden;                    // V* (n x d); empty without a graph layer
  std::vector<double> pooled;       // f^o fed to the main head
  std::vector<double> main_logits;
  bool has_aux = false;
  Matrix aux_hidden;                // activation(V W)
  std::vector<double> aux_pooled;
  std::vector<double> aux_logits;
};

/// The auxiliary path is evaluated only when `training` is set and the mode
/// is Full.
ForwardPass forward(const DgnModel& model, const GraphInput& input, bool training);

struct LossBreakdown {
  double total = 0.0;
  double main = 0.0;
  double aux = 0.0;
};

double total_loss(double main_loss, double aux_loss, double lambda);
LossBreakdown loss(const DgnModel& model, const ForwardPass& pass, SceneId target);

/// Same shapes as the model's parameters.
struct Gradients {
  Matrix gcn_weight;
  ClassifierParams main_head;
  ClassifierParams aux_head;
};

Gradients zero_gradients(const DgnModel& model);

/// Exact gradients of l = l_o + lambda * l_a with respect to every parameter.
/// The W gradient is the sum of the main-path and auxiliary-path terms.
/// Throws ValidationError when `pass` does not belong to `model`.
Gradients backward(const DgnModel& model, const ForwardPass& pass, SceneId target);

/// Index of the largest logit; ties go to the lowest index.
std::size_t predict(std::span<const double> logits);

struct TrainConfig {
  AblationMode mode = AblationMode::Full;
  std::uint32_t epochs = 30;
  std::uint32_t batch_size = 32;
  double learning_rate = 1e-3;
  // Multiply the rate by lr_decay once the 0-based epoch index reaches each
  // milestone.
  std::vector<std::uint32_t> lr_milestones{10, 15, 20};
  double lr_decay = 0.1;
  double weight_decay = 1e-5;
  double lambda = 0.25;
  std::optional<std::uint32_t> hidden_dim;  // defaults to the feature width c
  std::uint64_t seed = 304;
  bool aux_activation = true;
};

double scheduled_learning_rate(const TrainConfig& config, std::uint32_t epoch);

struct EpochStats {
  std::uint32_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double loss = 0.0;  // mean of l over the epoch
  double main_loss = 0.0;
  double aux_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

struct TrainResult {
  DgnModel model;
  DgnModel initial_model;
  std::vector<EpochStats> trace;
};

/// Deterministic in (train corpus, prototype, config). `prototype` is required
/// for graph modes and ignored for Baseline. When `test` is given its
/// accuracy is recorded after every epoch.
TrainResult train(const Corpus& train_corpus, const Prototype* prototype, const TrainConfig& config,
                  const Corpus* test = nullptr);

struct EvalReport {
  double accuracy = 0.0;
  std::size_t instances = 0;
  std::size_t correct = 0;
  std::vector<double> per_class_accuracy;  // 0 for classes with no instances
  std::vector<std::size_t> per_class_total;
};

/// Top-1 accuracy of the main head. Graph modes need `prototype`.
EvalReport evaluate(const DgnModel& model, const Corpus& corpus, const Prototype* prototype);
EvalReport evaluate(const DgnModel& model, std::span<const GraphInput> inputs, std::span<const SceneId> targets);

std::string serialize_model(const DgnModel& model);
DgnModel parse_model(std::string_view bytes);
DgnModel load_model(const std::filesystem::path& path);
void save_model(const DgnModel& model, const std::filesystem::path& path);

}  // namespace dgn
