#include "dvar/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dvar/errors.hpp"

namespace dvar {

void ModelConfig::validate() const {
  if (embed_dim < 1 || num_blocks < 1 || codebook_size < 1 || condition_count < 1 ||
      hidden_dim < 1)
    throw ConfigError("model config: all dimensions must be >= 1");
}

void BlockParams::set_zero(int embed_dim, int hidden_dim) {
  w1 = Matrix::Zero(embed_dim, hidden_dim);
  b1 = Vector::Zero(hidden_dim);
  w2 = Matrix::Zero(hidden_dim, embed_dim);
  b2 = Vector::Zero(embed_dim);
}

size_t Model::parameter_count() const {
  const size_t d = static_cast<size_t>(cfg.embed_dim);
  const size_t h = static_cast<size_t>(cfg.hidden_dim);
  const size_t v = static_cast<size_t>(cfg.codebook_size);
  const size_t c = static_cast<size_t>(cfg.condition_count);
  const size_t b = static_cast<size_t>(cfg.num_blocks);
  return c * d + d + b * (d * h + h + h * d + d) + d * v + v;
}

void Model::require_valid() const {
  cfg.validate();
  const int d = cfg.embed_dim;
  const int h = cfg.hidden_dim;
  const int v = cfg.codebook_size;
  if (cond_embed.rows() != cfg.condition_count || cond_embed.cols() != d)
    throw DimensionError("model: condition embedding shape mismatch");
  if (sos.rows() != 1 || sos.cols() != d) throw DimensionError("model: start token shape mismatch");
  if (static_cast<int>(blocks.size()) != cfg.num_blocks)
    throw DimensionError("model: block count mismatch");
  for (const auto& blk : blocks) {
    if (blk.w1.rows() != d || blk.w1.cols() != h || blk.b1.size() != h || blk.w2.rows() != h ||
        blk.w2.cols() != d || blk.b2.size() != d)
      throw DimensionError("model: block parameter shape mismatch");
    if (!blk.w1.allFinite() || !blk.b1.allFinite() || !blk.w2.allFinite() || !blk.b2.allFinite())
      throw NumericError("model: non-finite block parameters");
  }
  if (proj.rows() != d || proj.cols() != v || proj_bias.size() != v)
    throw DimensionError("model: projection shape mismatch");
  if (!cond_embed.allFinite() || !sos.allFinite() || !proj.allFinite() || !proj_bias.allFinite())
    throw NumericError("model: non-finite parameters");
}

namespace {

Matrix gaussian_matrix(int rows, int cols, double sd, uint64_t seed, uint64_t stream_id) {
  RngStream rng(seed, stream_id);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = sd * rng.next_gaussian();
  return m;
}

}  // namespace

Model init_model(const ModelConfig& cfg) {
  cfg.validate();
  Model model;
  model.cfg = cfg;
  const double sd_embed = 0.5;
  const double sd_in = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
  const double sd_hidden = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  uint64_t stream = 0;
  model.cond_embed = gaussian_matrix(cfg.condition_count, cfg.embed_dim, sd_embed, cfg.seed, stream++);
  model.sos = gaussian_matrix(1, cfg.embed_dim, sd_embed, cfg.seed, stream++);
  // Block outputs start small so the residual stream stays near its input at
  // init; deep stacks train stably this way where full-scale init diverges.
  const double sd_out = 0.1 * sd_hidden / std::sqrt(static_cast<double>(cfg.num_blocks));
  model.blocks.resize(cfg.num_blocks);
  for (auto& blk : model.blocks) {
    blk.w1 = gaussian_matrix(cfg.embed_dim, cfg.hidden_dim, sd_in, cfg.seed, stream++);
    blk.b1 = Vector::Zero(cfg.hidden_dim);
    blk.w2 = gaussian_matrix(cfg.hidden_dim, cfg.embed_dim, sd_out, cfg.seed, stream++);
    blk.b2 = Vector::Zero(cfg.embed_dim);
  }
  // Small head init keeps initial logits near zero (loss starts near ln V)
  // and the first optimizer steps well-conditioned.
  model.proj = gaussian_matrix(cfg.embed_dim, cfg.codebook_size, 0.02 * sd_in, cfg.seed, stream++);
  model.proj_bias = Vector::Zero(cfg.codebook_size);
  return model;
}

Matrix block_forward(const Matrix& x, const Model& model, int block_index) {
  if (block_index < 0 || block_index >= model.cfg.num_blocks)
    throw RangeError("block_forward: block index out of range");
  if (x.cols() != model.cfg.embed_dim)
    throw DimensionError("block_forward: input width does not match embed_dim");
  const BlockParams& blk = model.blocks[static_cast<size_t>(block_index)];
  Matrix h = ((x * blk.w1).rowwise() + blk.b1.transpose()).array().tanh().matrix();
  Matrix m = h.rowwise() + h.colwise().mean();
  Matrix y = (m * blk.w2).rowwise() + blk.b2.transpose();
  return x + y;
}

namespace {

Matrix apply_transform(const FeatureTransform& t, const Matrix& x, const char* where) {
  if (!t) return x;
  Matrix out = t(x);
  if (out.rows() != x.rows() || out.cols() != x.cols())
    throw DimensionError(std::string("forward: ") + where + " transform changed the shape");
  return out;
}

}  // namespace

BlockOutput forward(const Matrix& x, const Model& model, const ForwardHooks& hooks) {
  if (x.cols() != model.cfg.embed_dim)
    throw DimensionError("forward: input width does not match embed_dim");
  for (const auto& [idx, _] : hooks.blocks) {
    if (idx < 0 || idx >= model.cfg.num_blocks)
      throw ConfigError("forward: hook references invalid block index " + std::to_string(idx));
  }
  BlockOutput out;
  out.features.reserve(static_cast<size_t>(model.cfg.num_blocks));
  Matrix cur = apply_transform(hooks.model_pre, x, "model input");
  for (int b = 0; b < model.cfg.num_blocks; ++b) {
    const auto it = hooks.blocks.find(b);
    if (it != hooks.blocks.end()) cur = apply_transform(it->second.pre, cur, "block input");
    cur = block_forward(cur, model, b);
    if (it != hooks.blocks.end()) cur = apply_transform(it->second.post, cur, "block output");
    out.features.push_back(cur);
  }
  cur = apply_transform(hooks.model_post, cur, "model output");
  out.features.back() = cur;
  Matrix logits = (cur * model.proj).rowwise() + model.proj_bias.transpose();
  if (hooks.logits) {
    Matrix adjusted = hooks.logits(logits);
    if (adjusted.rows() != logits.rows() || adjusted.cols() != logits.cols())
      throw DimensionError("forward: logits transform changed the shape");
    logits = adjusted;
  }
  out.logits = logits;
  return out;
}

Vector topk_softmax(const Vector& logits_row, double temperature, int top_k) {
  const int v = static_cast<int>(logits_row.size());
  if (!(temperature > 0.0)) throw RangeError("topk_softmax: temperature must be > 0");
  if (top_k < 1 || top_k > v) throw RangeError("topk_softmax: top_k must be in [1, V]");
  for (int i = 0; i < v; ++i)
    if (std::isnan(logits_row[i])) throw NumericError("topk_softmax: NaN logit");
  std::vector<int> order(static_cast<size_t>(v));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return logits_row[a] > logits_row[b]; });
  const double vmax = logits_row[order[0]];
  if (!(vmax > -std::numeric_limits<double>::infinity()))
    throw NumericError("topk_softmax: all logits are -inf");
  Vector probs = Vector::Zero(v);
  double sum = 0.0;
  for (int r = 0; r < top_k; ++r) {
    const int idx = order[static_cast<size_t>(r)];
    const double e = std::exp((logits_row[idx] - vmax) / temperature);
    probs[idx] = e;
    sum += e;
  }
  probs /= sum;
  return probs;
}

TokenMap sample_tokens(const Matrix& logits, int h, int w, int scale_index, double temperature,
                       int top_k, RngStream& rng) {
  if (logits.rows() != static_cast<Eigen::Index>(h) * w)
    throw DimensionError("sample_tokens: logits row count does not match h*w");
  TokenMap tokens;
  tokens.h = h;
  tokens.w = w;
  tokens.scale_index = scale_index;
  tokens.indices.resize(static_cast<size_t>(logits.rows()));
  const int v = static_cast<int>(logits.cols());
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    Vector probs = topk_softmax(logits.row(s).transpose(), temperature, top_k);
    const double u = rng.next_double();
    double cum = 0.0;
    int chosen = -1;
    for (int i = 0; i < v; ++i) {
      if (probs[i] <= 0.0) continue;
      cum += probs[i];
      chosen = i;
      if (u < cum) break;
    }
    tokens.indices[static_cast<size_t>(s)] = chosen;
  }
  return tokens;
}

Matrix condition_embedding(const Model& model, int label) {
  if (label < 0 || label >= model.cfg.condition_count)
    throw RangeError("condition_embedding: label out of range");
  Matrix row = model.cond_embed.row(label) + model.sos.row(0);
  return row;
}

TeacherExample make_teacher_example(const FeatureMap& feature, int label, const Codebook& codebook,
                                    const ScaleSchedule& sched) {
  TeacherExample ex;
  ex.label = label;
  std::vector<TokenMap> tokens = encode(feature, sched, codebook);
  const int k = sched.num_scales();
  ex.inputs.resize(static_cast<size_t>(k));
  ex.targets.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) ex.targets[static_cast<size_t>(i)] = tokens[static_cast<size_t>(i)].indices;
  for (int i = 1; i < k; ++i) {
    FeatureMap partial = reconstruct(tokens, sched, codebook, i);
    auto [h, w] = sched.at(i);
    ex.inputs[static_cast<size_t>(i)] = downsample(partial, h, w).rows;
  }
  return ex;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  g.cond_embed = Matrix::Zero(model.cond_embed.rows(), model.cond_embed.cols());
  g.sos = Matrix::Zero(1, model.cfg.embed_dim);
  g.blocks.resize(model.blocks.size());
  for (auto& blk : g.blocks) blk.set_zero(model.cfg.embed_dim, model.cfg.hidden_dim);
  g.proj = Matrix::Zero(model.proj.rows(), model.proj.cols());
  g.proj_bias = Vector::Zero(model.proj_bias.size());
  return g;
}

void Gradients::scale(double s) {
  cond_embed *= s;
  sos *= s;
  for (auto& blk : blocks) {
    blk.w1 *= s;
    blk.b1 *= s;
    blk.w2 *= s;
    blk.b2 *= s;
  }
  proj *= s;
  proj_bias *= s;
}

namespace {

struct BlockCache {
  Matrix x;  // block input
  Matrix h;  // tanh activations
  Matrix m;  // mixed activations
};

/// Adds each length-seg segment's column mean back onto its rows.
Matrix segment_mix(const Matrix& h, Eigen::Index seg) {
  Matrix m = h;
  for (Eigen::Index base = 0; base < h.rows(); base += seg)
    m.middleRows(base, seg).rowwise() += h.middleRows(base, seg).colwise().mean();
  return m;
}

/// Cross-entropy over one scale for a batch of examples stacked row-wise,
/// seg rows per example. Token mixing pools within each segment only.
/// Accumulates raw (unnormalized) gradients into g when non-null.
double scale_loss(const Model& model, const Matrix& x0, const std::vector<int>& targets,
                  Eigen::Index seg, Gradients* g, Matrix* dx0) {
  if (x0.rows() % seg != 0) throw DimensionError("training: batch rows not a segment multiple");
  const int nb = model.cfg.num_blocks;
  std::vector<BlockCache> cache(static_cast<size_t>(nb));
  Matrix cur = x0;
  for (int b = 0; b < nb; ++b) {
    BlockCache& c = cache[static_cast<size_t>(b)];
    const BlockParams& blk = model.blocks[static_cast<size_t>(b)];
    c.x = cur;
    c.h = ((cur * blk.w1).rowwise() + blk.b1.transpose()).array().tanh().matrix();
    c.m = segment_mix(c.h, seg);
    cur = cur + ((c.m * blk.w2).rowwise() + blk.b2.transpose());
  }
  Matrix logits = (cur * model.proj).rowwise() + model.proj_bias.transpose();
  const Eigen::Index s = logits.rows();
  if (static_cast<size_t>(s) != targets.size())
    throw DimensionError("training: target count does not match scale positions");
  double loss = 0.0;
  Matrix dlogits(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < s; ++r) {
    const int t = targets[static_cast<size_t>(r)];
    if (t < 0 || t >= model.cfg.codebook_size) throw RangeError("training: target id out of range");
    const double vmax = logits.row(r).maxCoeff();
    const double logz = vmax + std::log((logits.row(r).array() - vmax).exp().sum());
    loss += logz - logits(r, t);
    if (g != nullptr) {
      dlogits.row(r) = (logits.row(r).array() - logz).exp().matrix();
      dlogits(r, t) -= 1.0;
    }
  }
  if (g == nullptr) return loss;

  g->proj += cur.transpose() * dlogits;
  g->proj_bias += dlogits.colwise().sum().transpose();
  Matrix dcur = dlogits * model.proj.transpose();
  const double inv_seg = 1.0 / static_cast<double>(seg);
  for (int b = nb - 1; b >= 0; --b) {
    const BlockCache& c = cache[static_cast<size_t>(b)];
    const BlockParams& blk = model.blocks[static_cast<size_t>(b)];
    BlockParams& gb = g->blocks[static_cast<size_t>(b)];
    const Matrix& dy = dcur;
    gb.w2 += c.m.transpose() * dy;
    gb.b2 += dy.colwise().sum().transpose();
    Matrix dm = dy * blk.w2.transpose();
    Matrix dh = dm;
    for (Eigen::Index base = 0; base < dm.rows(); base += seg)
      dh.middleRows(base, seg).rowwise() += dm.middleRows(base, seg).colwise().sum() * inv_seg;
    Matrix da = dh.array() * (1.0 - c.h.array().square());
    gb.w1 += c.x.transpose() * da;
    gb.b1 += da.colwise().sum().transpose();
    dcur = dcur + da * blk.w1.transpose();
  }
  if (dx0 != nullptr) *dx0 = dcur;
  return loss;
}

/// Shared accumulation over a span of examples: stacks the span per scale so
/// the matrix products run at batch width. Returns (summed loss, tokens).
std::pair<double, size_t> accumulate(const Model& model, const std::vector<TeacherExample>& examples,
                                     const std::vector<size_t>& order, size_t begin, size_t end,
                                     Gradients* g) {
  const size_t n = end - begin;
  const size_t num_scales = examples[order[begin]].targets.size();
  for (size_t i = begin; i < end; ++i) {
    const TeacherExample& ex = examples[order[i]];
    if (ex.targets.size() != num_scales || ex.inputs.size() != num_scales)
      throw DimensionError("training: examples disagree on scale count");
  }
  double loss = 0.0;
  size_t tokens = 0;
  const int d = model.cfg.embed_dim;
  for (size_t k = 0; k < num_scales; ++k) {
    const size_t seg = examples[order[begin]].targets[k].size();
    Matrix x0(static_cast<Eigen::Index>(n * seg), d);
    std::vector<int> targets;
    targets.reserve(n * seg);
    for (size_t i = begin; i < end; ++i) {
      const TeacherExample& ex = examples[order[i]];
      if (ex.targets[k].size() != seg)
        throw DimensionError("training: examples disagree on scale sizes");
      const Eigen::Index base = static_cast<Eigen::Index>((i - begin) * seg);
      if (k == 0) {
        x0.middleRows(base, static_cast<Eigen::Index>(seg)).rowwise() =
            condition_embedding(model, ex.label).row(0);
      } else {
        if (ex.inputs[k].rows() != static_cast<Eigen::Index>(seg) || ex.inputs[k].cols() != d)
          throw DimensionError("training: example input shape mismatch");
        x0.middleRows(base, static_cast<Eigen::Index>(seg)) = ex.inputs[k];
      }
      targets.insert(targets.end(), ex.targets[k].begin(), ex.targets[k].end());
    }
    Matrix dx0;
    loss += scale_loss(model, x0, targets, static_cast<Eigen::Index>(seg), g,
                       (g != nullptr && k == 0) ? &dx0 : nullptr);
    tokens += targets.size();
    if (g != nullptr && k == 0) {
      for (size_t i = begin; i < end; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>((i - begin) * seg);
        const auto contribution =
            dx0.middleRows(base, static_cast<Eigen::Index>(seg)).colwise().sum();
        g->cond_embed.row(examples[order[i]].label) += contribution;
        g->sos.row(0) += contribution;
      }
    }
  }
  return {loss, tokens};
}

std::vector<size_t> identity_order(size_t n) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  return order;
}

}  // namespace

double loss_and_gradients(const Model& model, const std::vector<TeacherExample>& examples,
                          Gradients& grads) {
  if (examples.empty()) throw ConfigError("loss_and_gradients: empty example set");
  grads = Gradients::zeros_like(model);
  auto [loss, tokens] = accumulate(model, examples, identity_order(examples.size()), 0,
                                   examples.size(), &grads);
  const double inv = 1.0 / static_cast<double>(tokens);
  grads.scale(inv);
  return loss * inv;
}

double evaluate_loss(const Model& model, const std::vector<TeacherExample>& examples) {
  if (examples.empty()) throw ConfigError("evaluate_loss: empty example set");
  auto [loss, tokens] =
      accumulate(model, examples, identity_order(examples.size()), 0, examples.size(), nullptr);
  return loss / static_cast<double>(tokens);
}

TrainResult train(Model& model, const std::vector<TeacherExample>& examples,
                  const TrainOptions& options) {
  if (examples.empty()) throw ConfigError("train: empty example set");
  if (options.epochs < 0 || options.batch_size < 1 || !(options.learning_rate > 0.0))
    throw ConfigError("train: bad options");
  TrainResult result;
  Gradients velocity = Gradients::zeros_like(model);
  std::vector<size_t> order = identity_order(examples.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    RngStream shuffle_rng(options.shuffle_seed, static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      const uint64_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[static_cast<size_t>(j)]);
    }
    double epoch_loss = 0.0;
    size_t epoch_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(options.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(options.batch_size));
      Gradients grads = Gradients::zeros_like(model);
      auto [loss, tokens] = accumulate(model, examples, order, begin, end, &grads);
      if (!std::isfinite(loss))
        throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1));
      grads.scale(1.0 / static_cast<double>(tokens));
      epoch_loss += loss;
      epoch_tokens += tokens;

      if (options.max_grad_norm > 0.0) {
        double sq = grads.cond_embed.squaredNorm() + grads.sos.squaredNorm() +
                    grads.proj.squaredNorm() + grads.proj_bias.squaredNorm();
        for (const auto& gb : grads.blocks)
          sq += gb.w1.squaredNorm() + gb.b1.squaredNorm() + gb.w2.squaredNorm() +
                gb.b2.squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > options.max_grad_norm) grads.scale(options.max_grad_norm / norm);
      }

      auto step = [&](Matrix& vel, Matrix& param, const Matrix& g) {
        vel = options.momentum * vel - options.learning_rate * g;
        param += vel;
      };
      auto step_vec = [&](Vector& vel, Vector& param, const Vector& g) {
        vel = options.momentum * vel - options.learning_rate * g;
        param += vel;
      };
      step(velocity.cond_embed, model.cond_embed, grads.cond_embed);
      step(velocity.sos, model.sos, grads.sos);
      for (size_t b = 0; b < model.blocks.size(); ++b) {
        step(velocity.blocks[b].w1, model.blocks[b].w1, grads.blocks[b].w1);
        step_vec(velocity.blocks[b].b1, model.blocks[b].b1, grads.blocks[b].b1);
        step(velocity.blocks[b].w2, model.blocks[b].w2, grads.blocks[b].w2);
        step_vec(velocity.blocks[b].b2, model.blocks[b].b2, grads.blocks[b].b2);
      }
      step(velocity.proj, model.proj, grads.proj);
      step_vec(velocity.proj_bias, model.proj_bias, grads.proj_bias);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
  return result;
}

void save_checkpoint(const std::string& path, const Model& model) {
  model.require_valid();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open for write: " + path);
  os << "dvar_checkpoint_v1\n";
  os << "embed_dim=" << model.cfg.embed_dim << "\n";
  os << "num_blocks=" << model.cfg.num_blocks << "\n";
  os << "codebook_size=" << model.cfg.codebook_size << "\n";
  os << "condition_count=" << model.cfg.condition_count << "\n";
  os << "hidden_dim=" << model.cfg.hidden_dim << "\n";
  os << "seed=" << model.cfg.seed << "\n";
  os << "---\n";
  write_dvt1_matrix_stream(os, model.cond_embed);
  write_dvt1_matrix_stream(os, model.sos);
  for (const auto& blk : model.blocks) {
    write_dvt1_matrix_stream(os, blk.w1);
    write_dvt1_matrix_stream(os, blk.b1.transpose());
    write_dvt1_matrix_stream(os, blk.w2);
    write_dvt1_matrix_stream(os, blk.b2.transpose());
  }
  write_dvt1_matrix_stream(os, model.proj);
  write_dvt1_matrix_stream(os, model.proj_bias.transpose());
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "dvar_checkpoint_v1")
    throw IoError("checkpoint: bad header in " + path);
  ModelConfig cfg;
  while (std::getline(is, line)) {
    if (line == "---") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("checkpoint: malformed manifest line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "embed_dim")
        cfg.embed_dim = std::stoi(value);
      else if (key == "num_blocks")
        cfg.num_blocks = std::stoi(value);
      else if (key == "codebook_size")
        cfg.codebook_size = std::stoi(value);
      else if (key == "condition_count")
        cfg.condition_count = std::stoi(value);
      else if (key == "hidden_dim")
        cfg.hidden_dim = std::stoi(value);
      else if (key == "seed")
        cfg.seed = std::stoull(value);
      else
        throw IoError("checkpoint: unknown manifest key: " + key);
    } catch (const std::invalid_argument&) {
      throw IoError("checkpoint: malformed manifest value: " + line);
    }
  }
  Model model;
  model.cfg = cfg;
  model.cond_embed = read_dvt1_matrix_stream(is);
  model.sos = read_dvt1_matrix_stream(is);
  model.blocks.resize(static_cast<size_t>(cfg.num_blocks));
  for (auto& blk : model.blocks) {
    blk.w1 = read_dvt1_matrix_stream(is);
    blk.b1 = read_dvt1_matrix_stream(is).row(0).transpose();
    blk.w2 = read_dvt1_matrix_stream(is);
    blk.b2 = read_dvt1_matrix_stream(is).row(0).transpose();
  }
  model.proj = read_dvt1_matrix_stream(is);
  model.proj_bias = read_dvt1_matrix_stream(is).row(0).transpose();
  model.require_valid();
  return model;
}

}  // namespace dvar
