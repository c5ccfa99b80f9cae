#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dvar/codec.hpp"
#include "dvar/dataset.hpp"
#include "dvar/errors.hpp"
#include "dvar/rng.hpp"

using namespace dvar;

namespace {

FeatureMap random_feature(int h, int w, int channels, uint64_t seed) {
  RngStream rng(seed, 0);
  FeatureMap f(h, w, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) f.at(y, x, c) = rng.next_uniform(-1.0, 1.0);
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("codec");

TEST_CASE("square schedule validates ordering") {
  ScaleSchedule s = ScaleSchedule::square({1, 2, 4});
  CHECK(s.num_scales() == 3);
  CHECK(s.at(0) == std::pair<int, int>(1, 1));
  CHECK(s.final_resolution() == std::pair<int, int>(4, 4));
  CHECK_THROWS_AS(ScaleSchedule::square({4, 2}), DimensionError);
  CHECK_THROWS_AS(ScaleSchedule::square({0, 2}), DimensionError);
  // an empty schedule is a legal placeholder; using it is what fails
  FeatureMap f(1, 1, 2);
  Codebook cb(Matrix::Zero(2, 2));
  CHECK_THROWS_AS(encode(f, ScaleSchedule::square({}), cb), DimensionError);
}

TEST_CASE("index_of_label matches by resolution label") {
  ScaleSchedule s = ScaleSchedule::square({1, 2, 4, 6, 8, 12, 16});
  CHECK(s.index_of_label(1) == 0);
  CHECK(s.index_of_label(6) == 3);
  CHECK(s.index_of_label(16) == 6);
  CHECK(s.index_of_label(5) == -1);
}

TEST_CASE("upsample keeps constants and corner values") {
  FeatureMap f(2, 2, 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = 10.0 * y + x + 0.1 * c;
  FeatureMap up = upsample(f, 5, 5);
  CHECK(up.h == 5);
  CHECK(up.w == 5);
  for (int c = 0; c < 3; ++c) {
    CHECK(up.at(0, 0, c) == doctest::Approx(f.at(0, 0, c)).epsilon(1e-12));
    CHECK(up.at(0, 4, c) == doctest::Approx(f.at(0, 1, c)).epsilon(1e-12));
    CHECK(up.at(4, 0, c) == doctest::Approx(f.at(1, 0, c)).epsilon(1e-12));
    CHECK(up.at(4, 4, c) == doctest::Approx(f.at(1, 1, c)).epsilon(1e-12));
  }
}

TEST_CASE("bilinear upsampling reproduces linear ramps exactly") {
  FeatureMap f(3, 3, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) f.at(y, x, 0) = 2.0 * y - 3.0 * x + 1.0;
  FeatureMap up = upsample(f, 9, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      const double sy = y * 2.0 / 8.0;  // corner-aligned source coordinate
      const double sx = x * 2.0 / 8.0;
      CHECK(up.at(y, x, 0) == doctest::Approx(2.0 * sy - 3.0 * sx + 1.0).epsilon(1e-12));
    }
}

TEST_CASE("divisible downsample is block averaging") {
  FeatureMap f(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) f.at(y, x, 0) = y * 4 + x;
  FeatureMap down = downsample(f, 2, 2);
  CHECK(down.at(0, 0, 0) == doctest::Approx((0.0 + 1 + 4 + 5) / 4.0));
  CHECK(down.at(0, 1, 0) == doctest::Approx((2.0 + 3 + 6 + 7) / 4.0));
  CHECK(down.at(1, 0, 0) == doctest::Approx((8.0 + 9 + 12 + 13) / 4.0));
  CHECK(down.at(1, 1, 0) == doctest::Approx((10.0 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("resampling to the same size is the identity") {
  FeatureMap f = random_feature(5, 7, 2, 3);
  CHECK((upsample(f, 5, 7).rows - f.rows).cwiseAbs().maxCoeff() == 0.0);
  CHECK((downsample(f, 5, 7).rows - f.rows).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resampling direction is enforced") {
  FeatureMap f = random_feature(4, 4, 2, 4);
  CHECK_THROWS_AS(upsample(f, 3, 4), DimensionError);
  CHECK_THROWS_AS(downsample(f, 5, 4), DimensionError);
}

TEST_CASE("nearest_code picks the closest row, ties to the lowest index") {
  Matrix rows(3, 2);
  rows << 0.0, 0.0, 1.0, 0.0, -1.0, 0.0;
  Codebook cb(rows);
  Vector v(2);
  v << 0.9, 0.0;
  CHECK(nearest_code(v, cb) == 1);
  v << 0.5, 0.0;  // exactly between rows 0 and 1
  CHECK(nearest_code(v, cb) == 0);
}

TEST_CASE("codebook constructor validates size and finiteness") {
  CHECK_THROWS_AS(Codebook{Matrix::Ones(1, 3)}, ConfigError);
  Matrix bad = Matrix::Ones(3, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(Codebook{bad}, NumericError);
  Codebook cb(Matrix::Ones(4, 3));
  CHECK(cb.size() == 4);
  CHECK(cb.dim() == 3);
}

TEST_CASE("kmeans keeps the zero row and is seed deterministic") {
  Matrix data(64, 4);
  RngStream rng(21, 0);
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index j = 0; j < data.cols(); ++j) data(i, j) = rng.next_gaussian();
  Codebook a = Codebook::fit_kmeans(data, 9, 5);
  Codebook b = Codebook::fit_kmeans(data, 9, 5);
  Codebook c = Codebook::fit_kmeans(data, 9, 6);
  CHECK(a.vectors.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.vectors - c.vectors).cwiseAbs().maxCoeff() != 0.0);
  CHECK(a.size() == 9);
}

TEST_CASE("encode emits one token map per scale with in-range indices") {
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4});
  FeatureMap f = random_feature(4, 4, 3, 8);
  Codebook cb = Codebook::fit_kmeans(f.rows, 7, 2);
  std::vector<TokenMap> tokens = encode(f, sched, cb);
  REQUIRE(tokens.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(tokens[static_cast<size_t>(k)].h == sched.at(k).first);
    CHECK(tokens[static_cast<size_t>(k)].scale_index == k);
    for (int idx : tokens[static_cast<size_t>(k)].indices) {
      CHECK(idx >= 0);
      CHECK(idx < cb.size());
    }
  }
}

TEST_CASE("single-scale encode of codebook rows reconstructs exactly") {
  Matrix rows(5, 3);
  rows.setZero();
  rows.row(1) << 1.0, 0.0, 2.0;
  rows.row(2) << -1.0, 0.5, 0.0;
  rows.row(3) << 0.0, 3.0, 1.0;
  rows.row(4) << 2.0, -2.0, 0.5;
  Codebook cb(rows);
  ScaleSchedule sched = ScaleSchedule::square({2});
  FeatureMap f(2, 2, 3);
  f.rows.row(0) = rows.row(1);
  f.rows.row(1) = rows.row(4);
  f.rows.row(2) = rows.row(2);
  f.rows.row(3) = rows.row(3);
  std::vector<TokenMap> tokens = encode(f, sched, cb);
  CHECK(tokens[0].indices == std::vector<int>{1, 4, 2, 3});
  FeatureMap recon = reconstruct(tokens, sched, cb, 1);
  CHECK((recon.rows - f.rows).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reconstruct is the running sum of upsampled dequantized maps") {
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4, 6});
  FeatureMap f = random_feature(6, 6, 4, 12);
  Codebook cb = Codebook::fit_kmeans(f.rows, 11, 3);
  std::vector<TokenMap> tokens = encode(f, sched, cb);
  Matrix manual = Matrix::Zero(36, 4);
  for (int k = 0; k < sched.num_scales(); ++k) {
    manual += upsample(dequantize(tokens[static_cast<size_t>(k)], cb), 6, 6).rows;
    FeatureMap partial = reconstruct(tokens, sched, cb, k + 1);
    CHECK((partial.rows - manual).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(reconstruct(tokens, sched, cb, 0), RangeError);
  CHECK_THROWS_AS(reconstruct(tokens, sched, cb, 5), RangeError);
}

TEST_CASE("encode matches a straight-line residual loop") {
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4});
  Matrix codes(8, 1);
  codes << 0.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0;
  Codebook cb(codes);
  FeatureMap f = random_feature(4, 4, 1, 19);
  std::vector<TokenMap> tokens = encode(f, sched, cb);

  FeatureMap residual = f;
  for (int k = 0; k < sched.num_scales(); ++k) {
    const auto [h, w] = sched.at(k);
    FeatureMap coarse = downsample(residual, h, w);
    TokenMap expected;
    expected.h = h;
    expected.w = w;
    expected.scale_index = k;
    for (int p = 0; p < h * w; ++p) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < cb.size(); ++c) {
        const double d = (coarse.rows.row(p) - cb.vectors.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      expected.indices.push_back(best);
    }
    CHECK(tokens[static_cast<size_t>(k)].indices == expected.indices);
    residual.rows -= upsample(dequantize(expected, cb), 4, 4).rows;
  }
}

TEST_CASE("reconstruction error is non-increasing across scales on toy features") {
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4, 8, 16});
  std::vector<ToyImage> imgs = make_toy_dataset(24, 31);
  std::vector<FeatureMap> feats;
  for (const auto& t : imgs) feats.push_back(lift_image(t.pixels, 8));
  Codebook cb = fit_codebook(feats, sched, 48, 7);
  for (const auto& f : feats) {
    std::vector<TokenMap> tokens = encode(f, sched, cb);
    double prev = (f.rows).norm();
    for (int k = 1; k <= sched.num_scales(); ++k) {
      const double err = (f.rows - reconstruct(tokens, sched, cb, k).rows).norm();
      CHECK(err <= prev + 1e-9);
      prev = err;
    }
  }
}

TEST_CASE("fit_codebook output is deterministic and well formed") {
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4, 8, 16});
  std::vector<ToyImage> imgs = make_toy_dataset(8, 77);
  std::vector<FeatureMap> feats;
  for (const auto& t : imgs) feats.push_back(lift_image(t.pixels, 6));
  Codebook a = fit_codebook(feats, sched, 17, 5);
  Codebook b = fit_codebook(feats, sched, 17, 5);
  CHECK(a.size() == 17);
  CHECK(a.dim() == 6);
  CHECK(a.vectors.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
