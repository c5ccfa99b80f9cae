#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dvar/errors.hpp"

namespace dvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Grayscale image, values in [0,1]; (h x w) with row y, column x.
using Image = Eigen::MatrixXd;

/// Continuous feature map of shape (h x w x channels), stored scale-flattened:
/// row y*w + x of `rows` holds the channel vector at spatial position (y, x).
/// This is the layout every SVD/regularizer consumer wants.
struct FeatureMap {
  int h = 0;
  int w = 0;
  Matrix rows;  // (h*w) x channels

  FeatureMap() = default;
  FeatureMap(int h_, int w_, int channels) : h(h_), w(w_), rows(Matrix::Zero(h_ * w_, channels)) {
    if (h_ < 1 || w_ < 1 || channels < 1) throw DimensionError("FeatureMap: dimensions must be >= 1");
  }

  int channels() const { return static_cast<int>(rows.cols()); }
  int positions() const { return h * w; }

  double& at(int y, int x, int c) { return rows(y * w + x, c); }
  double at(int y, int x, int c) const { return rows(y * w + x, c); }

  bool finite() const { return rows.allFinite(); }

  void require_finite(const char* who) const {
    if (!finite()) throw NumericError(std::string(who) + ": feature map has non-finite entries");
  }
};

// --- DVT1 tensor file format -------------------------------------------------
// magic "DVT1", little-endian u32 rank, u32 dims[rank], f32 payload row-major.

void write_dvt1(const std::string& path, const std::vector<uint32_t>& dims,
                const std::vector<float>& payload);
void read_dvt1(const std::string& path, std::vector<uint32_t>& dims, std::vector<float>& payload);

/// Stream variants; records can be concatenated (checkpoint container).
void write_dvt1_stream(std::ostream& os, const std::vector<uint32_t>& dims,
                       const std::vector<float>& payload);
void read_dvt1_stream(std::istream& is, std::vector<uint32_t>& dims, std::vector<float>& payload);
void write_dvt1_matrix_stream(std::ostream& os, const Matrix& m);
Matrix read_dvt1_matrix_stream(std::istream& is);

/// Serialize a matrix as a rank-2 DVT1 tensor (row-major payload).
void write_dvt1_matrix(const std::string& path, const Matrix& m);
Matrix read_dvt1_matrix(const std::string& path);

/// Feature maps serialize as rank-3 (h, w, channels).
void write_dvt1_feature(const std::string& path, const FeatureMap& f);
FeatureMap read_dvt1_feature(const std::string& path);

// --- PGM (binary P5, 8-bit) --------------------------------------------------

void write_pgm(const std::string& path, const Image& img);
Image read_pgm(const std::string& path);

/// FNV-1a hash of a whole file's bytes.
uint64_t hash_file(const std::string& path);

/// Deterministic hash of a directory tree: sorted relative paths + contents.
uint64_t hash_directory(const std::string& dir);

}  // namespace dvar
