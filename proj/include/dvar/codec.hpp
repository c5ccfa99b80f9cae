#pragma once

#include <utility>
#include <vector>

#include "dvar/tensor.hpp"

namespace dvar {

/// Ordered coarse-to-fine resolutions; the last entry is the full feature
/// resolution. Entries are (h_k, w_k), non-decreasing in both axes.
struct ScaleSchedule {
  std::vector<std::pair<int, int>> resolutions;

  explicit ScaleSchedule(std::vector<std::pair<int, int>> res = {});

  /// Square schedule from side lengths, e.g. {1,2,4,6,8,12,16}.
  static ScaleSchedule square(const std::vector<int>& sides);

  int num_scales() const { return static_cast<int>(resolutions.size()); }
  std::pair<int, int> at(int k) const { return resolutions.at(k); }  // 0-based
  std::pair<int, int> final_resolution() const { return resolutions.back(); }

  /// 0-based index of the scale whose height equals `label`, or -1.
  /// Active-scale selection is by resolution label (the h_k value), so a
  /// config naming scales {4,6} picks the 4x4 and 6x6 steps of this schedule.
  int index_of_label(int label) const;
};

/// Token grid at one scale; indices into a shared codebook.
struct TokenMap {
  int h = 0;
  int w = 0;
  int scale_index = 0;  // 0-based position in the schedule
  std::vector<int> indices;  // row-major, h*w entries, each in [0, V)

  int& at(int y, int x) { return indices[y * w + x]; }
  int at(int y, int x) const { return indices[y * w + x]; }
};

/// Shared vector-quantization codebook. Fitted codebooks pin row 0 to the
/// exact zero vector so residual encoding can always choose "add nothing".
struct Codebook {
  Matrix vectors;  // V x d

  Codebook() = default;
  explicit Codebook(Matrix v);

  int size() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }

  /// k-means with a fixed iteration count and seeded initialization from data
  /// rows. Row 0 of the result is the exact zero vector; the remaining V-1
  /// centroids are fit to `rows`. Empty clusters keep their previous centroid.
  static Codebook fit_kmeans(const Matrix& rows, int codebook_size, uint64_t seed,
                             int iterations = 50);
};

/// Corner-aligned bilinear upsampling. Target must be >= source per axis.
FeatureMap upsample(const FeatureMap& src, int target_h, int target_w);

/// Area-average pooling when both axes divide evenly, corner-aligned bilinear
/// sampling otherwise. Target must be <= source per axis.
FeatureMap downsample(const FeatureMap& src, int target_h, int target_w);

/// Index of the codebook row nearest to v in squared Euclidean distance.
/// Ties break to the lowest index.
int nearest_code(const Vector& v, const Codebook& cb);

/// Residual multi-scale encoding: K token maps, coarse to fine. At each scale
/// the running full-resolution residual is downsampled, quantized per
/// position, upsampled back and subtracted.
std::vector<TokenMap> encode(const FeatureMap& f, const ScaleSchedule& sched, const Codebook& cb);

/// Dequantize one token map to a feature map at its own resolution.
FeatureMap dequantize(const TokenMap& tokens, const Codebook& cb);

/// Partial reconstruction F_k: sum of upsampled dequantized maps 1..upto
/// (1-based upto, clamped contract: 1 <= upto <= K), at full resolution.
FeatureMap reconstruct(const std::vector<TokenMap>& tokens, const ScaleSchedule& sched,
                       const Codebook& cb, int upto);

/// Fit a codebook to a feature corpus in two rounds: first on the residual
/// rows an ideal quantizer would see, then refit on the residual rows the
/// round-one codebook actually produces while encoding. Training rows are
/// subsampled to at most max_rows per round.
Codebook fit_codebook(const std::vector<FeatureMap>& features, const ScaleSchedule& sched,
                      int codebook_size, uint64_t seed, int max_rows = 16384);

}  // namespace dvar
