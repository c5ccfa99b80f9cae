#include "dvar/codec.hpp"

#include <algorithm>
#include <cmath>

#include "dvar/rng.hpp"

namespace dvar {

ScaleSchedule::ScaleSchedule(std::vector<std::pair<int, int>> res) : resolutions(std::move(res)) {
  if (resolutions.empty()) return;
  for (size_t k = 0; k < resolutions.size(); ++k) {
    auto [h, w] = resolutions[k];
    if (h < 1 || w < 1) throw DimensionError("ScaleSchedule: resolutions must be >= 1");
    if (k > 0) {
      auto [ph, pw] = resolutions[k - 1];
      if (h < ph || w < pw) throw DimensionError("ScaleSchedule: resolutions must be non-decreasing");
    }
  }
}

ScaleSchedule ScaleSchedule::square(const std::vector<int>& sides) {
  std::vector<std::pair<int, int>> res;
  res.reserve(sides.size());
  for (int s : sides) res.emplace_back(s, s);
  return ScaleSchedule(std::move(res));
}

int ScaleSchedule::index_of_label(int label) const {
  for (int k = 0; k < num_scales(); ++k)
    if (resolutions[k].first == label) return k;
  return -1;
}

Codebook::Codebook(Matrix v) : vectors(std::move(v)) {
  if (vectors.rows() < 2) throw ConfigError("Codebook: need at least 2 entries");
  if (!vectors.allFinite()) throw NumericError("Codebook: non-finite entries");
}

namespace {

// Nearest centroid by squared distance via the expansion |x|^2 - 2 x.c + |c|^2;
// used only inside k-means fitting where exact tie behavior is internal.
void assign_clusters(const Matrix& rows, const Matrix& centroids, std::vector<int>& assign) {
  const Vector cnorm = centroids.rowwise().squaredNorm();
  const Matrix dots = rows * centroids.transpose();  // N x V
  assign.resize(static_cast<size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    int best = 0;
    double best_d = cnorm(0) - 2.0 * dots(i, 0);
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
      double d = cnorm(c) - 2.0 * dots(i, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assign[static_cast<size_t>(i)] = best;
  }
}

}  // namespace

Codebook Codebook::fit_kmeans(const Matrix& rows, int codebook_size, uint64_t seed, int iterations) {
  if (codebook_size < 2) throw ConfigError("fit_kmeans: codebook size must be >= 2");
  if (rows.rows() < 1) throw ConfigError("fit_kmeans: no data rows");
  if (!rows.allFinite()) throw NumericError("fit_kmeans: non-finite data");

  const int d = static_cast<int>(rows.cols());
  const int fit_count = codebook_size - 1;  // row 0 stays the zero vector
  Matrix centroids = Matrix::Zero(fit_count, d);
  RngStream rng(seed, 0);
  for (int c = 0; c < fit_count; ++c) {
    auto pick = static_cast<Eigen::Index>(rng.next_below(static_cast<uint64_t>(rows.rows())));
    centroids.row(c) = rows.row(pick);
  }

  std::vector<int> assign;
  Matrix sums(fit_count, d);
  std::vector<int> counts(static_cast<size_t>(fit_count));
  for (int it = 0; it < iterations; ++it) {
    assign_clusters(rows, centroids, assign);
    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      int c = assign[static_cast<size_t>(i)];
      sums.row(c) += rows.row(i);
      counts[static_cast<size_t>(c)]++;
    }
    for (int c = 0; c < fit_count; ++c)
      if (counts[static_cast<size_t>(c)] > 0)
        centroids.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
  }

  Matrix out = Matrix::Zero(codebook_size, d);
  out.bottomRows(fit_count) = centroids;
  return Codebook(out);
}

namespace {

// Corner-aligned source coordinate for output index i of n samples over a
// source extent of m: i * (m-1) / (n-1), degenerate n==1 maps to 0.
inline double src_coord(int i, int n, int m) {
  if (n == 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(n - 1);
}

FeatureMap bilinear_resample(const FeatureMap& src, int th, int tw) {
  FeatureMap out(th, tw, src.channels());
  for (int y = 0; y < th; ++y) {
    const double sy = src_coord(y, th, src.h);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, src.h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < tw; ++x) {
      const double sx = src_coord(x, tw, src.w);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, src.w - 1);
      const double fx = sx - x0;
      out.rows.row(y * tw + x) =
          (1.0 - fy) * ((1.0 - fx) * src.rows.row(y0 * src.w + x0) +
                        fx * src.rows.row(y0 * src.w + x1)) +
          fy * ((1.0 - fx) * src.rows.row(y1 * src.w + x0) +
                fx * src.rows.row(y1 * src.w + x1));
    }
  }
  return out;
}

}  // namespace

FeatureMap upsample(const FeatureMap& src, int target_h, int target_w) {
  if (target_h < src.h || target_w < src.w)
    throw DimensionError("upsample: target smaller than source");
  if (target_h == src.h && target_w == src.w) return src;
  return bilinear_resample(src, target_h, target_w);
}

FeatureMap downsample(const FeatureMap& src, int target_h, int target_w) {
  if (target_h > src.h || target_w > src.w)
    throw DimensionError("downsample: target larger than source");
  if (target_h == src.h && target_w == src.w) return src;
  if (src.h % target_h == 0 && src.w % target_w == 0) {
    const int by = src.h / target_h;
    const int bx = src.w / target_w;
    FeatureMap out(target_h, target_w, src.channels());
    for (int y = 0; y < target_h; ++y)
      for (int x = 0; x < target_w; ++x) {
        auto acc = Vector::Zero(src.channels()).eval();
        for (int yy = 0; yy < by; ++yy)
          for (int xx = 0; xx < bx; ++xx)
            acc += src.rows.row((y * by + yy) * src.w + (x * bx + xx)).transpose();
        out.rows.row(y * target_w + x) = acc.transpose() / (by * bx);
      }
    return out;
  }
  return bilinear_resample(src, target_h, target_w);
}

int nearest_code(const Vector& v, const Codebook& cb) {
  if (cb.size() < 1) throw ConfigError("nearest_code: empty codebook");
  if (!v.allFinite()) throw NumericError("nearest_code: non-finite query");
  if (v.size() != cb.vectors.cols()) throw DimensionError("nearest_code: dimension mismatch");
  // Distances evaluated directly so exact ties resolve by lowest index.
  int best = 0;
  double best_d = (v.transpose() - cb.vectors.row(0)).squaredNorm();
  for (int c = 1; c < cb.size(); ++c) {
    double d = (v.transpose() - cb.vectors.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<TokenMap> encode(const FeatureMap& f, const ScaleSchedule& sched, const Codebook& cb) {
  if (sched.num_scales() < 1) throw DimensionError("encode: empty schedule");
  auto [fh, fw] = sched.final_resolution();
  if (f.h != fh || f.w != fw)
    throw DimensionError("encode: feature resolution does not match final scale");
  if (f.channels() != cb.dim()) throw DimensionError("encode: channel/codebook dim mismatch");
  f.require_finite("encode");

  FeatureMap residual = f;
  std::vector<TokenMap> out;
  out.reserve(static_cast<size_t>(sched.num_scales()));
  for (int k = 0; k < sched.num_scales(); ++k) {
    auto [hk, wk] = sched.at(k);
    FeatureMap coarse = downsample(residual, hk, wk);
    TokenMap tm;
    tm.h = hk;
    tm.w = wk;
    tm.scale_index = k;
    tm.indices.resize(static_cast<size_t>(hk * wk));
    for (int i = 0; i < hk * wk; ++i)
      tm.indices[static_cast<size_t>(i)] = nearest_code(coarse.rows.row(i).transpose(), cb);
    FeatureMap deq = dequantize(tm, cb);
    FeatureMap up = upsample(deq, f.h, f.w);
    residual.rows -= up.rows;
    out.push_back(std::move(tm));
  }
  return out;
}

FeatureMap dequantize(const TokenMap& tokens, const Codebook& cb) {
  FeatureMap out(tokens.h, tokens.w, cb.dim());
  for (int i = 0; i < tokens.h * tokens.w; ++i) {
    int idx = tokens.indices[static_cast<size_t>(i)];
    if (idx < 0 || idx >= cb.size()) throw RangeError("dequantize: token index out of range");
    out.rows.row(i) = cb.vectors.row(idx);
  }
  return out;
}

namespace {

Matrix subsample_rows(const Matrix& rows, int max_rows, uint64_t seed) {
  if (rows.rows() <= max_rows) return rows;
  std::vector<Eigen::Index> idx(static_cast<size_t>(rows.rows()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  RngStream rng(seed, 0x5EEDu);
  for (int i = 0; i < max_rows; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           rng.next_below(static_cast<uint64_t>(rows.rows() - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  Matrix out(max_rows, rows.cols());
  for (int i = 0; i < max_rows; ++i) out.row(i) = rows.row(idx[static_cast<size_t>(i)]);
  return out;
}

/// Downsampled residual rows seen at every scale while encoding each feature.
/// With a null codebook the residual update assumes perfect quantization.
Matrix residual_rows(const std::vector<FeatureMap>& features, const ScaleSchedule& sched,
                     const Codebook* cb) {
  Eigen::Index total = 0;
  for (int k = 0; k < sched.num_scales(); ++k) {
    auto [hk, wk] = sched.at(k);
    total += static_cast<Eigen::Index>(hk) * wk;
  }
  total *= static_cast<Eigen::Index>(features.size());
  const int d = features.front().channels();
  Matrix pool(total, d);
  Eigen::Index at = 0;
  for (const FeatureMap& f : features) {
    FeatureMap residual = f;
    for (int k = 0; k < sched.num_scales(); ++k) {
      auto [hk, wk] = sched.at(k);
      FeatureMap coarse = downsample(residual, hk, wk);
      pool.middleRows(at, coarse.rows.rows()) = coarse.rows;
      at += coarse.rows.rows();
      FeatureMap back = coarse;
      if (cb != nullptr) {
        TokenMap tm;
        tm.h = hk;
        tm.w = wk;
        tm.scale_index = k;
        tm.indices.resize(static_cast<size_t>(hk) * wk);
        for (int i = 0; i < hk * wk; ++i)
          tm.indices[static_cast<size_t>(i)] = nearest_code(coarse.rows.row(i).transpose(), *cb);
        back = dequantize(tm, *cb);
      }
      residual.rows -= upsample(back, f.h, f.w).rows;
    }
  }
  return pool;
}

}  // namespace

Codebook fit_codebook(const std::vector<FeatureMap>& features, const ScaleSchedule& sched,
                      int codebook_size, uint64_t seed, int max_rows) {
  if (features.empty()) throw ConfigError("fit_codebook: empty feature corpus");
  auto [fh, fw] = sched.final_resolution();
  for (const FeatureMap& f : features)
    if (f.h != fh || f.w != fw)
      throw DimensionError("fit_codebook: feature resolution does not match schedule");
  Matrix round1 = subsample_rows(residual_rows(features, sched, nullptr), max_rows, seed);
  Codebook cb1 = Codebook::fit_kmeans(round1, codebook_size, seed);
  Matrix round2 = subsample_rows(residual_rows(features, sched, &cb1), max_rows, seed + 1);
  return Codebook::fit_kmeans(round2, codebook_size, seed + 1);
}

FeatureMap reconstruct(const std::vector<TokenMap>& tokens, const ScaleSchedule& sched,
                       const Codebook& cb, int upto) {
  const int K = sched.num_scales();
  if (static_cast<int>(tokens.size()) != K)
    throw DimensionError("reconstruct: token list does not match schedule");
  if (upto < 1 || upto > K) throw RangeError("reconstruct: upto out of range");
  auto [fh, fw] = sched.final_resolution();
  FeatureMap acc(fh, fw, cb.dim());
  for (int k = 0; k < upto; ++k) {
    auto [hk, wk] = sched.at(k);
    if (tokens[static_cast<size_t>(k)].h != hk || tokens[static_cast<size_t>(k)].w != wk)
      throw DimensionError("reconstruct: token map resolution mismatch at scale " +
                           std::to_string(k + 1));
    FeatureMap up = upsample(dequantize(tokens[static_cast<size_t>(k)], cb), fh, fw);
    acc.rows += up.rows;
  }
  return acc;
}

}  // namespace dvar
