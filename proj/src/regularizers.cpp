#include "dvar/regularizers.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace dvar {

std::string to_string(Site s) {
  switch (s) {
    case Site::block_level: return "block";
    case Site::model_level: return "model";
    case Site::logits_level: return "logits";
  }
  return "?";
}

std::string to_string(Ordering o) {
  switch (o) {
    case Ordering::ssr_in_sar_out: return "ssr_in_sar_out";
    case Ordering::ssr_in_only: return "ssr_in_only";
    case Ordering::sar_in_ssr_out: return "sar_in_ssr_out";
    case Ordering::ssr_sar_in: return "ssr_sar_in";
    case Ordering::sar_ssr_in: return "sar_ssr_in";
  }
  return "?";
}

Site site_from_string(const std::string& s) {
  if (s == "block") return Site::block_level;
  if (s == "model") return Site::model_level;
  if (s == "logits") return Site::logits_level;
  throw ConfigError("unknown site: " + s);
}

Ordering ordering_from_string(const std::string& s) {
  if (s == "ssr_in_sar_out") return Ordering::ssr_in_sar_out;
  if (s == "ssr_in_only") return Ordering::ssr_in_only;
  if (s == "sar_in_ssr_out") return Ordering::sar_in_ssr_out;
  if (s == "ssr_sar_in") return Ordering::ssr_sar_in;
  if (s == "sar_ssr_in") return Ordering::sar_ssr_in;
  throw ConfigError("unknown ordering: " + s);
}

void RegularizerConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(alpha_hat > 0.0) || !(beta_hat > 0.0))
    throw ConfigError("regularizer parameters must be positive");
}

double ssr_value(double sigma, double alpha, double beta) {
  if (sigma < 0.0) throw RangeError("ssr_value: sigma must be non-negative");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw RangeError("ssr_value: alpha, beta must be positive");
  return alpha * std::exp(-beta * sigma) * sigma;
}

double sar_value(double sigma_hat, double alpha_hat, double beta_hat) {
  if (sigma_hat < 0.0) throw RangeError("sar_value: sigma must be non-negative");
  if (!(alpha_hat > 0.0) || !(beta_hat > 0.0))
    throw RangeError("sar_value: alpha, beta must be positive");
  const double exponent = beta_hat * sigma_hat;
  if (exponent > 700.0) throw NumericError("sar_value: exponent overflow");
  return alpha_hat * std::exp(exponent) * sigma_hat;
}

SingularDecomposition svd(const Matrix& m) {
  if (!m.allFinite()) throw NumericError("svd: non-finite input");
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SingularDecomposition d;
  d.left_vectors = solver.matrixU();
  d.singular_values = solver.singularValues();
  d.right_vectors = solver.matrixV();
  return d;
}

Matrix svd_reconstruct_mapped(const SingularDecomposition& d, const Vector& mapped) {
  return d.left_vectors * mapped.asDiagonal() * d.right_vectors.transpose();
}

Matrix apply_ssr(const Matrix& m, const RegularizerConfig& cfg) {
  cfg.validate();
  SingularDecomposition d = svd(m);
  Vector mapped(d.singular_values.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i)
    mapped(i) = ssr_value(d.singular_values(i), cfg.alpha, cfg.beta);
  return svd_reconstruct_mapped(d, mapped);
}

Matrix apply_sar(const Matrix& m, const RegularizerConfig& cfg) {
  cfg.validate();
  SingularDecomposition d = svd(m);
  Vector mapped(d.singular_values.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i)
    mapped(i) = sar_value(d.singular_values(i), cfg.alpha_hat, cfg.beta_hat);
  return svd_reconstruct_mapped(d, mapped);
}

Matrix zero_top_k(const Matrix& m, int k) {
  SingularDecomposition d = svd(m);
  if (k < 0 || k > d.singular_values.size()) throw RangeError("zero_top_k: k out of range");
  Vector mapped = d.singular_values;
  mapped.head(k).setZero();
  return svd_reconstruct_mapped(d, mapped);
}

std::vector<double> pivotal_scores(const Matrix& flattened) {
  if (flattened.rows() < 1) throw DimensionError("pivotal_scores: need at least one token");
  const Eigen::RowVectorXd mean = flattened.colwise().mean();
  std::vector<double> scores(static_cast<size_t>(flattened.rows()));
  for (Eigen::Index i = 0; i < flattened.rows(); ++i)
    scores[static_cast<size_t>(i)] = (flattened.row(i) - mean).norm();
  return scores;
}

int mdc_elbow(const std::vector<double>& sorted_scores) {
  const int L = static_cast<int>(sorted_scores.size());
  if (L < 2) throw RangeError("mdc_elbow: need at least two scores");
  const double s1 = sorted_scores.front();
  const double sL = sorted_scores.back();
  // Perpendicular distance of (n, s_n) to the chord (1, s1)-(L, sL):
  // |(sL - s1) n - (L - 1) s_n + L s1 - sL| / sqrt((sL - s1)^2 + (L - 1)^2).
  const double denom = std::sqrt((sL - s1) * (sL - s1) +
                                 static_cast<double>(L - 1) * static_cast<double>(L - 1));
  int best = 1;
  double best_d = 0.0;  // endpoints sit on the chord
  for (int n = 1; n <= L; ++n) {
    const double sn = sorted_scores[static_cast<size_t>(n - 1)];
    const double numer = std::abs((sL - s1) * n - (L - 1) * sn + L * s1 - sL);
    const double d = numer / denom;
    if (d > best_d) {
      best_d = d;
      best = n;
    }
  }
  return best;
}

PivotalPartition partition_tokens(const Matrix& flattened) {
  const int S = static_cast<int>(flattened.rows());
  if (S < 1) throw RangeError("partition_tokens: need at least one token");

  PivotalPartition p;
  p.scores = pivotal_scores(flattened);
  if (S == 1) {  // partition of one: the lone token is pivotal
    p.elbow_index = 1;
    p.pivotal_indices = {0};
    return p;
  }

  std::vector<int> order(static_cast<size_t>(S));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double sa = p.scores[static_cast<size_t>(a)];
    double sb = p.scores[static_cast<size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;  // equal scores: lower original position ranks first
  });

  std::vector<double> sorted(static_cast<size_t>(S));
  for (int r = 0; r < S; ++r) sorted[static_cast<size_t>(r)] = p.scores[static_cast<size_t>(order[static_cast<size_t>(r)])];
  p.elbow_index = mdc_elbow(sorted);

  p.pivotal_indices.assign(order.begin(), order.begin() + p.elbow_index);
  p.auxiliary_indices.assign(order.begin() + p.elbow_index, order.end());
  return p;
}

Matrix zero_tokens(const Matrix& flattened, const std::vector<int>& positions) {
  Matrix out = flattened;
  for (int pos : positions) {
    if (pos < 0 || pos >= flattened.rows()) throw RangeError("zero_tokens: position out of range");
    out.row(pos).setZero();
  }
  return out;
}

}  // namespace dvar
