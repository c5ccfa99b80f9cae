#pragma once

#include <set>
#include <string>
#include <vector>

#include "dvar/tensor.hpp"

namespace dvar {

/// Thin SVD of a scale-flattened feature matrix M = U diag(sigma) V^T with
/// singular values sorted descending, n = min(rows, cols).
struct SingularDecomposition {
  Matrix left_vectors;     // S x n, orthonormal columns
  Vector singular_values;  // n, descending, >= 0
  Matrix right_vectors;    // D x n, orthonormal columns

  Matrix reconstruct() const {
    return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
  }
};

/// Where the regularizers act during generation.
enum class Site { block_level, model_level, logits_level };

/// Composition variants for the suppression/amplification pair. "in" means
/// the block (or model/logits) input, "out" the corresponding output.
enum class Ordering {
  ssr_in_sar_out,  // default: suppress input, amplify output
  ssr_in_only,     // suppression alone
  sar_in_ssr_out,  // swapped sides
  ssr_sar_in,      // both on the input, suppress first
  sar_ssr_in,      // both on the input, amplify first
};

std::string to_string(Site s);
std::string to_string(Ordering o);
Site site_from_string(const std::string& s);
Ordering ordering_from_string(const std::string& s);

/// Parameters controlling the singular-value interventions. Scales are
/// selected by resolution label (h_k), matching the schedule convention.
struct RegularizerConfig {
  double alpha = 1.0;       // suppression gain
  double beta = 0.01;       // suppression decay rate
  double alpha_hat = 1.0;   // amplification gain
  double beta_hat = 0.001;  // amplification growth rate
  std::set<int> active_scales;  // resolution labels; empty = vanilla
  std::set<int> active_blocks = {0, 1, 2, 3, 4, 5, 6, 7};
  Site site = Site::block_level;
  Ordering ordering = Ordering::ssr_in_sar_out;

  void validate() const;  // positivity of the four parameters
};

/// Soft suppression of one singular value: alpha * exp(-beta*sigma) * sigma.
double ssr_value(double sigma, double alpha, double beta);

/// Soft amplification of one singular value: alpha_hat * exp(beta_hat*sigma) * sigma.
/// Rejects exponents beyond 700 instead of silently overflowing.
double sar_value(double sigma_hat, double alpha_hat, double beta_hat);

/// SVD, map every singular value through ssr_value, reconstruct positionally
/// (mapped values are not re-sorted).
Matrix apply_ssr(const Matrix& m, const RegularizerConfig& cfg);

/// Same shape of operation with sar_value; a fresh SVD of the input is taken.
Matrix apply_sar(const Matrix& m, const RegularizerConfig& cfg);

/// Reconstruct with the top k singular values zeroed. 0 <= k <= n.
Matrix zero_top_k(const Matrix& m, int k);

Matrix svd_reconstruct_mapped(const SingularDecomposition& d, const Vector& mapped);

SingularDecomposition svd(const Matrix& m);

/// Per-token deviation from the mean token: score_i = |row_i - rowmean|_2.
std::vector<double> pivotal_scores(const Matrix& flattened);

/// Elbow of a descending score sequence by maximum perpendicular distance to
/// the chord from (1, s_1) to (L, s_L). Returns a 1-based index in [1, L];
/// ties break to the smallest index (a fully collinear sequence yields 1).
int mdc_elbow(const std::vector<double>& sorted_scores);

/// Token split at one scale: ranks 1..elbow are pivotal, the rest auxiliary.
struct PivotalPartition {
  int elbow_index = 0;                  // 1-based rank position of the split
  std::vector<int> pivotal_indices;     // original token positions, rank order
  std::vector<int> auxiliary_indices;   // original token positions, rank order
  std::vector<double> scores;           // per-token scores in original order
};

/// Rank tokens by pivotal score descending (ties by lower original position),
/// find the elbow, split inclusively. A single token is pivotal by itself.
PivotalPartition partition_tokens(const Matrix& flattened);

/// Replace the listed rows with zero vectors.
Matrix zero_tokens(const Matrix& flattened, const std::vector<int>& positions);

}  // namespace dvar
