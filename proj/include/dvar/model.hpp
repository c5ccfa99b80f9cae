#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dvar/codec.hpp"
#include "dvar/rng.hpp"
#include "dvar/tensor.hpp"

namespace dvar {

/// Miniature trainable next-scale predictor: B residual MLP blocks with
/// mean-pooled token mixing, a condition-label embedding table, a start token,
/// and a final projection onto codebook logits.

struct ModelConfig {
  int embed_dim = 64;       // D; must equal the codec channel count
  int num_blocks = 8;       // B
  int codebook_size = 256;  // V
  int condition_count = 3;  // C
  int hidden_dim = 64;
  uint64_t seed = 1234;

  void validate() const;
};

struct BlockParams {
  Matrix w1;  // D x H
  Vector b1;  // H
  Matrix w2;  // H x D
  Vector b2;  // D

  void set_zero(int embed_dim, int hidden_dim);
};

struct Model {
  ModelConfig cfg;
  Matrix cond_embed;  // C x D
  Matrix sos;         // 1 x D
  std::vector<BlockParams> blocks;
  Matrix proj;        // D x V
  Vector proj_bias;   // V

  size_t parameter_count() const;
  void require_valid() const;
};

Model init_model(const ModelConfig& cfg);

/// Elementwise-shape-preserving transform applied to an S x D feature matrix.
using FeatureTransform = std::function<Matrix(const Matrix&)>;

struct BlockHooks {
  FeatureTransform pre;   // applied to the block's input
  FeatureTransform post;  // applied to the block's output
};

struct ForwardHooks {
  std::map<int, BlockHooks> blocks;  // keyed by block index
  FeatureTransform model_pre;        // before block 0
  FeatureTransform model_post;       // after block B-1
  FeatureTransform logits;           // applied to the S x V logits
};

struct BlockOutput {
  std::vector<Matrix> features;  // per-block output, each S x D
  Matrix logits;                 // S x V
};

Matrix block_forward(const Matrix& x, const Model& model, int block_index);
BlockOutput forward(const Matrix& x, const Model& model, const ForwardHooks& hooks = {});

/// Top-k tempered softmax over one logits row: probabilities outside the k
/// largest entries are zero; ties on the cutoff favor lower indices.
Vector topk_softmax(const Vector& logits_row, double temperature, int top_k);

TokenMap sample_tokens(const Matrix& logits, int h, int w, int scale_index, double temperature,
                       int top_k, RngStream& rng);

/// Scale-1 input row: condition embedding plus the start token.
Matrix condition_embedding(const Model& model, int label);

/// One teacher-forced training example: per-scale ground-truth inputs and
/// target token ids. inputs[0] is unused (scale 1 input comes from the label).
struct TeacherExample {
  int label = 0;
  std::vector<Matrix> inputs;             // K entries, inputs[k] is S_k x D for k >= 1
  std::vector<std::vector<int>> targets;  // K entries of S_k token ids
};

TeacherExample make_teacher_example(const FeatureMap& feature, int label, const Codebook& codebook,
                                    const ScaleSchedule& sched);

struct Gradients {
  Matrix cond_embed;
  Matrix sos;
  std::vector<BlockParams> blocks;
  Matrix proj;
  Vector proj_bias;

  static Gradients zeros_like(const Model& model);
  void scale(double s);
};

/// Mean per-token cross-entropy over all scales of all examples, with
/// analytic parameter gradients.
double loss_and_gradients(const Model& model, const std::vector<TeacherExample>& examples,
                          Gradients& grads);

double evaluate_loss(const Model& model, const std::vector<TeacherExample>& examples);

struct TrainOptions {
  int epochs = 30;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 8;
  uint64_t shuffle_seed = 7;
  double max_grad_norm = 1.0;  // global-norm clip per batch; <= 0 disables
};

struct TrainResult {
  std::vector<double> epoch_loss;  // running mean per-token loss per epoch
};

TrainResult train(Model& model, const std::vector<TeacherExample>& examples,
                  const TrainOptions& options);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace dvar
