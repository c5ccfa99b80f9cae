#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dvar/pipeline.hpp"
#include "dvar/tensor.hpp"

namespace dvar {

/// Measurement machinery: embedding-space diversity metrics, logits
/// dispersion, frequency/structure curves, and the token-zeroing study.

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Vector embed(const Image& img) const = 0;
};

/// Default dependency-free embedder: 4x4 area-pooled pixels (16 values)
/// concatenated with log-magnitudes of the 8 lowest radial frequency bands.
class PixFreqEmbedder final : public Embedder {
 public:
  std::string name() const override { return "pix+freq"; }
  int dim() const override { return 24; }
  Vector embed(const Image& img) const override;
};

Matrix embed_all(const Embedder& emb, const std::vector<Image>& images);

double fid(const Matrix& real_embs, const Matrix& gen_embs);
double recall(const Matrix& real_embs, const Matrix& gen_embs, int k = 3);
double coverage(const Matrix& real_embs, const Matrix& gen_embs, int k = 3);
double mean_pairwise_distance(const Matrix& gen_embs);

/// Mean over positions of the average pairwise total-variation distance
/// between the samplings' per-position softmax rows.
double logits_dispersion(const std::vector<Matrix>& logit_sets);

/// Unnormalized 2-D DFT magnitudes of the image (same layout as the input).
Matrix dft_magnitude(const Image& img);

/// Relative log amplitude per radial band: log(band mean / band-0 mean),
/// floored at -30. Band index = rounded frequency radius; entry 0 is 0.
std::vector<double> freq_profile(const Image& img, int bands = 8);

double structure_distance(const Image& a, const Image& b, const Embedder& emb);

/// structure_distance(decode(F_k), decode(F_K)) for each scale k.
std::vector<double> scale_convergence_curve(const GenerationTrace& trace, const Embedder& emb);

struct Observation2Row {
  int scale_label = 0;
  TokenGroup which = TokenGroup::pivotal;
  double mean_structure_distance = 0.0;
  double condition_accuracy = 0.0;  // fraction of seeds whose blob count matches the label
  int seed_count = 0;
};

struct Observation2Table {
  std::vector<Observation2Row> rows;
  double vanilla_accuracy = 0.0;
  int seed_count = 0;
};

/// Zero pivotal or auxiliary tokens at each probe scale across n seeds;
/// measure drift from the vanilla sample and blob-count agreement.
Observation2Table observation2_study(const Model& model, const Codebook& codebook,
                                     const GenerationRequest& base,
                                     const std::vector<int>& probe_scale_labels, int n_seeds,
                                     const Embedder& emb);

struct MetricReport {
  double fid = 0.0;
  double recall = 0.0;
  double coverage = 0.0;
  double mean_pairwise_distance = 0.0;
  double dispersion = 0.0;
  std::vector<std::pair<int, double>> curves;  // (scale_label, value)
};

struct MetricRow {
  std::string metric;
  std::string condition;
  std::string variant;
  double value = 0.0;
  int seed_count = 0;
};

/// CSV with header metric,condition,variant,value,seed_count; floats printed
/// with 9 significant digits.
void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows);

/// CSV with header scale_label,value.
void write_curve_csv(const std::string& path, const std::vector<std::pair<int, double>>& series);

std::string format_float(double v);

}  // namespace dvar
