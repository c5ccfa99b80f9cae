#include "dvar/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "dvar/dataset.hpp"
#include "dvar/errors.hpp"

namespace dvar {

namespace {

void require_embeddings(const Matrix& m, const char* who) {
  if (m.rows() < 1 || m.cols() < 1) throw DimensionError(std::string(who) + ": empty embeddings");
  if (!m.allFinite()) throw NumericError(std::string(who) + ": non-finite embeddings");
}

/// Mean of image pixels over the block [y0,y1) x [x0,x1).
double block_mean(const Image& img, int y0, int y1, int x0, int x1) {
  double sum = 0.0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) sum += img(y, x);
  return sum / (static_cast<double>(y1 - y0) * (x1 - x0));
}

}  // namespace

Vector PixFreqEmbedder::embed(const Image& img) const {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  if (h < 2 || w < 2) throw DimensionError("pix+freq embedder: image too small");
  Vector out(24);
  int idx = 0;
  for (int by = 0; by < 4; ++by)
    for (int bx = 0; bx < 4; ++bx) {
      const int y0 = by * h / 4, y1 = (by + 1) * h / 4;
      const int x0 = bx * w / 4, x1 = (bx + 1) * w / 4;
      out[idx++] = block_mean(img, y0, std::max(y1, y0 + 1), x0, std::max(x1, x0 + 1));
    }
  Matrix mag = dft_magnitude(img);
  std::vector<double> band_sum(8, 0.0);
  std::vector<int> band_count(8, 0);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      const int fu = u <= h / 2 ? u : u - h;
      const int fv = v <= w / 2 ? v : v - w;
      const int band = static_cast<int>(std::lround(std::hypot(fu, fv)));
      if (band >= 8) continue;
      band_sum[static_cast<size_t>(band)] += mag(u, v);
      band_count[static_cast<size_t>(band)] += 1;
    }
  for (int b = 0; b < 8; ++b) {
    const double mean =
        band_count[static_cast<size_t>(b)] > 0
            ? band_sum[static_cast<size_t>(b)] / band_count[static_cast<size_t>(b)]
            : 0.0;
    out[idx++] = std::log(mean + 1e-12);
  }
  return out;
}

Matrix embed_all(const Embedder& emb, const std::vector<Image>& images) {
  if (images.empty()) throw DimensionError("embed_all: empty image list");
  Matrix out(static_cast<Eigen::Index>(images.size()), emb.dim());
  for (size_t i = 0; i < images.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = emb.embed(images[i]).transpose();
  return out;
}

namespace {

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues
/// from roundoff are clamped to zero.
Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("fid: eigendecomposition failed");
  Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

void mean_cov(const Matrix& embs, Vector& mu, Matrix& sigma) {
  const double n = static_cast<double>(embs.rows());
  mu = embs.colwise().mean().transpose();
  Matrix centered = embs.rowwise() - mu.transpose();
  const double denom = n > 1.0 ? n - 1.0 : 1.0;
  sigma = (centered.transpose() * centered) / denom;
  sigma += 1e-6 * Matrix::Identity(sigma.rows(), sigma.cols());
}

}  // namespace

double fid(const Matrix& real_embs, const Matrix& gen_embs) {
  require_embeddings(real_embs, "fid");
  require_embeddings(gen_embs, "fid");
  if (real_embs.cols() != gen_embs.cols())
    throw DimensionError("fid: embedding widths differ");
  Vector mu_r, mu_g;
  Matrix sig_r, sig_g;
  mean_cov(real_embs, mu_r, sig_r);
  mean_cov(gen_embs, mu_g, sig_g);
  Matrix root_r = psd_sqrt(sig_r);
  Matrix inner = root_r * sig_g * root_r;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner + inner.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("fid: eigendecomposition failed");
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value =
      (mu_r - mu_g).squaredNorm() + sig_r.trace() + sig_g.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, value);
}

namespace {

/// Squared distance to the k-th nearest other row, per row.
std::vector<double> kth_radius_sq(const Matrix& embs, int k) {
  const Eigen::Index n = embs.rows();
  std::vector<double> radii(static_cast<size_t>(n));
  std::vector<double> dists;
  for (Eigen::Index i = 0; i < n; ++i) {
    dists.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dists.push_back((embs.row(i) - embs.row(j)).squaredNorm());
    }
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    radii[static_cast<size_t>(i)] = dists[static_cast<size_t>(k - 1)];
  }
  return radii;
}

}  // namespace

double recall(const Matrix& real_embs, const Matrix& gen_embs, int k) {
  require_embeddings(real_embs, "recall");
  require_embeddings(gen_embs, "recall");
  if (real_embs.cols() != gen_embs.cols()) throw DimensionError("recall: embedding widths differ");
  if (k < 1 || gen_embs.rows() <= k)
    throw ConfigError("recall: need more generated samples than k");
  std::vector<double> radii = kth_radius_sq(gen_embs, k);
  Eigen::Index hit = 0;
  for (Eigen::Index i = 0; i < real_embs.rows(); ++i) {
    for (Eigen::Index j = 0; j < gen_embs.rows(); ++j) {
      if ((real_embs.row(i) - gen_embs.row(j)).squaredNorm() <= radii[static_cast<size_t>(j)]) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(real_embs.rows());
}

double coverage(const Matrix& real_embs, const Matrix& gen_embs, int k) {
  require_embeddings(real_embs, "coverage");
  require_embeddings(gen_embs, "coverage");
  if (real_embs.cols() != gen_embs.cols())
    throw DimensionError("coverage: embedding widths differ");
  if (k < 1 || real_embs.rows() <= k) throw ConfigError("coverage: need more real samples than k");
  std::vector<double> radii = kth_radius_sq(real_embs, k);
  Eigen::Index hit = 0;
  for (Eigen::Index i = 0; i < real_embs.rows(); ++i) {
    for (Eigen::Index j = 0; j < gen_embs.rows(); ++j) {
      if ((real_embs.row(i) - gen_embs.row(j)).squaredNorm() <= radii[static_cast<size_t>(i)]) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(real_embs.rows());
}

double mean_pairwise_distance(const Matrix& gen_embs) {
  require_embeddings(gen_embs, "mean_pairwise_distance");
  const Eigen::Index m = gen_embs.rows();
  if (m < 2) throw RangeError("mean_pairwise_distance: need at least two samples");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      sum += std::sqrt((gen_embs.row(i) - gen_embs.row(j)).squaredNorm());
  return sum / (static_cast<double>(m) * (m - 1) / 2.0);
}

namespace {

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double vmax = logits.row(r).maxCoeff();
    Vector e = (logits.row(r).array() - vmax).exp().matrix().transpose();
    p.row(r) = (e / e.sum()).transpose();
  }
  return p;
}

}  // namespace

double logits_dispersion(const std::vector<Matrix>& logit_sets) {
  if (logit_sets.size() < 2) throw ConfigError("logits_dispersion: need at least two samplings");
  const Eigen::Index s = logit_sets[0].rows();
  const Eigen::Index v = logit_sets[0].cols();
  for (const Matrix& m : logit_sets) {
    if (m.rows() != s || m.cols() != v)
      throw DimensionError("logits_dispersion: sampling shapes differ");
    if (!m.allFinite()) throw NumericError("logits_dispersion: non-finite logits");
  }
  std::vector<Matrix> probs;
  probs.reserve(logit_sets.size());
  for (const Matrix& m : logit_sets) probs.push_back(softmax_rows(m));
  const size_t n = probs.size();
  double total = 0.0;
  for (Eigen::Index pos = 0; pos < s; ++pos) {
    double pair_sum = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        pair_sum += 0.5 * (probs[i].row(pos) - probs[j].row(pos)).cwiseAbs().sum();
        ++pairs;
      }
    total += pair_sum / static_cast<double>(pairs);
  }
  return total / static_cast<double>(s);
}

Matrix dft_magnitude(const Image& img) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  if (h < 2 || w < 2) throw DimensionError("dft_magnitude: spatial dims must be >= 2");
  const double two_pi = 2.0 * std::numbers::pi;
  // Separable DFT: rows first, then columns.
  Eigen::MatrixXcd row_pass(h, w);
  for (int y = 0; y < h; ++y)
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc(0.0, 0.0);
      for (int x = 0; x < w; ++x) {
        const double ang = -two_pi * v * x / w;
        acc += img(y, x) * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      row_pass(y, v) = acc;
    }
  Matrix mag(h, w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc(0.0, 0.0);
      for (int y = 0; y < h; ++y) {
        const double ang = -two_pi * u * y / h;
        acc += row_pass(y, v) * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      mag(u, v) = std::abs(acc);
    }
  return mag;
}

std::vector<double> freq_profile(const Image& img, int bands) {
  if (bands < 1) throw ConfigError("freq_profile: bands must be >= 1");
  Matrix mag = dft_magnitude(img);
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  std::vector<double> sum(static_cast<size_t>(bands), 0.0);
  std::vector<int> count(static_cast<size_t>(bands), 0);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      const int fu = u <= h / 2 ? u : u - h;
      const int fv = v <= w / 2 ? v : v - w;
      const int band = static_cast<int>(std::lround(std::hypot(fu, fv)));
      if (band >= bands) continue;
      sum[static_cast<size_t>(band)] += mag(u, v);
      count[static_cast<size_t>(band)] += 1;
    }
  std::vector<double> profile(static_cast<size_t>(bands), 0.0);
  const double base = count[0] > 0 ? sum[0] / count[0] : 0.0;
  for (int b = 1; b < bands; ++b) {
    const double mean =
        count[static_cast<size_t>(b)] > 0 ? sum[static_cast<size_t>(b)] / count[static_cast<size_t>(b)]
                                          : 0.0;
    double value = -30.0;
    if (base > 0.0 && mean > 0.0) value = std::max(std::log(mean / base), -30.0);
    profile[static_cast<size_t>(b)] = value;
  }
  return profile;
}

double structure_distance(const Image& a, const Image& b, const Embedder& emb) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("structure_distance: image shapes differ");
  if (a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all()) return 0.0;
  Vector ea = emb.embed(a);
  Vector eb = emb.embed(b);
  const double na = ea.norm();
  const double nb = eb.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("structure_distance: zero-norm embedding");
  const double cosine = ea.dot(eb) / (na * nb);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

std::vector<double> scale_convergence_curve(const GenerationTrace& trace, const Embedder& emb) {
  if (trace.partial.empty()) throw DimensionError("scale_convergence_curve: empty trace");
  std::vector<double> series;
  series.reserve(trace.partial.size());
  for (const FeatureMap& partial : trace.partial)
    series.push_back(structure_distance(decode_image(partial), trace.image, emb));
  return series;
}

Observation2Table observation2_study(const Model& model, const Codebook& codebook,
                                     const GenerationRequest& base,
                                     const std::vector<int>& probe_scale_labels, int n_seeds,
                                     const Embedder& emb) {
  if (n_seeds < 1) throw ConfigError("observation2_study: need at least one seed");
  std::vector<int> probe_indices;
  for (int scale_label : probe_scale_labels) {
    const int idx = base.sched.index_of_label(scale_label);
    if (idx < 0)
      throw ConfigError("observation2_study: probe scale " + std::to_string(scale_label) +
                        " is not in the schedule");
    probe_indices.push_back(idx);
  }
  Observation2Table table;
  table.seed_count = n_seeds;

  std::vector<GenerationTrace> vanilla(static_cast<size_t>(n_seeds));
  std::vector<int> labels(static_cast<size_t>(n_seeds));
  double vanilla_hits = 0.0;
  for (int i = 0; i < n_seeds; ++i) {
    GenerationRequest req = base;
    req.sample_index = static_cast<uint64_t>(i);
    req.label = i % model.cfg.condition_count;
    labels[static_cast<size_t>(i)] = req.label;
    vanilla[static_cast<size_t>(i)] = generate(req, model, codebook);
    if (count_blobs(vanilla[static_cast<size_t>(i)].image) == req.label + 1) vanilla_hits += 1.0;
  }
  table.vanilla_accuracy = vanilla_hits / n_seeds;

  for (size_t p = 0; p < probe_indices.size(); ++p) {
    for (TokenGroup which : {TokenGroup::pivotal, TokenGroup::auxiliary}) {
      double dist_sum = 0.0;
      double hits = 0.0;
      for (int i = 0; i < n_seeds; ++i) {
        GenerationRequest req = base;
        req.sample_index = static_cast<uint64_t>(i);
        req.label = labels[static_cast<size_t>(i)];
        GenerationTrace t =
            intervention_zero_tokens(req, model, codebook, probe_indices[p], which);
        dist_sum += structure_distance(t.image, vanilla[static_cast<size_t>(i)].image, emb);
        if (count_blobs(t.image) == req.label + 1) hits += 1.0;
      }
      Observation2Row row;
      row.scale_label = probe_scale_labels[p];
      row.which = which;
      row.mean_structure_distance = dist_sum / n_seeds;
      row.condition_accuracy = hits / n_seeds;
      row.seed_count = n_seeds;
      table.rows.push_back(row);
    }
  }
  return table;
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("write_metric_csv: cannot open: " + path);
  os << "metric,condition,variant,value,seed_count\n";
  for (const MetricRow& r : rows)
    os << r.metric << "," << r.condition << "," << r.variant << "," << format_float(r.value) << ","
       << r.seed_count << "\n";
  if (!os) throw IoError("write_metric_csv: write failed: " + path);
}

void write_curve_csv(const std::string& path, const std::vector<std::pair<int, double>>& series) {
  std::ofstream os(path);
  if (!os) throw IoError("write_curve_csv: cannot open: " + path);
  os << "scale_label,value\n";
  for (const auto& [scale_label, value] : series)
    os << scale_label << "," << format_float(value) << "\n";
  if (!os) throw IoError("write_curve_csv: write failed: " + path);
}

}  // namespace dvar
