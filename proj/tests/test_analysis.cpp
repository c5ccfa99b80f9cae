#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "dvar/analysis.hpp"
#include "dvar/codec.hpp"
#include "dvar/dataset.hpp"
#include "dvar/errors.hpp"
#include "dvar/model.hpp"
#include "dvar/pipeline.hpp"
#include "dvar/rng.hpp"
#include "support/oracles.hpp"

using namespace dvar;

namespace {

Matrix integer_cloud(int n, int dim, uint64_t seed) {
  RngStream rng(seed, 0);
  Matrix m(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = static_cast<double>(rng.next_below(9));
  return m;
}

Matrix gaussian_cloud(int n, int dim, uint64_t seed, double mean = 0.0, double spread = 1.0) {
  RngStream rng(seed, 1);
  Matrix m(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = mean + spread * rng.next_gaussian();
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("analysis");

TEST_CASE("pix+freq embedder has the documented width and determinism") {
  PixFreqEmbedder emb;
  CHECK(emb.dim() == 24);
  Image img = make_toy_dataset(1, 44)[0].pixels;
  Vector a = emb.embed(img);
  Vector b = emb.embed(img);
  REQUIRE(a.size() == 24);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  Matrix all = embed_all(emb, {img, img});
  CHECK(all.rows() == 2);
  CHECK(all.cols() == 24);
  CHECK((all.row(0).transpose() - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embedder pools pixels area-wise") {
  Image img = Image::Zero(16, 16);
  img.block(0, 0, 4, 4).setConstant(1.0);  // exactly the first pooling cell
  PixFreqEmbedder emb;
  Vector e = emb.embed(img);
  CHECK(e[0] == doctest::Approx(1.0));
  for (int i = 1; i < 16; ++i) CHECK(e[i] == doctest::Approx(0.0));
}

TEST_CASE("fid on identical sets is zero") {
  Matrix x = gaussian_cloud(40, 4, 7);
  CHECK(fid(x, x) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fid matches the 1-D closed form") {
  // samples with exact mean/variance: {-1, 1} has mean 0, var 2/1 = 2 (N-1)
  Matrix a(2, 1), b(2, 1);
  a << -1.0, 1.0;
  b << 0.0, 2.0;  // mean 1, same variance
  const double sig = std::sqrt(2.0 + 1e-6);
  const double expect = 1.0 + (sig - sig) * (sig - sig);
  CHECK(fid(a, b) == doctest::Approx(expect).epsilon(1e-9));

  Matrix c(3, 1);
  c << -3.0, 0.0, 3.0;  // mean 0, var 9
  const double sc = std::sqrt(9.0 + 1e-6);
  const double sa = std::sqrt(2.0 + 1e-6);
  CHECK(fid(a, c) == doctest::Approx((sa - sc) * (sa - sc)).epsilon(1e-9));
}

TEST_CASE("fid agrees with the Denman-Beavers oracle in dimension 4") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    Matrix real = gaussian_cloud(30, 4, 100 + seed, 0.0, 1.0 + 0.1 * static_cast<double>(seed));
    Matrix gen = gaussian_cloud(26, 4, 200 + seed, 0.3, 0.8);
    CHECK(fid(real, gen) == doctest::Approx(oracle::fid(real, gen)).epsilon(1e-5));
  }
}

TEST_CASE("fid rejects non-finite embeddings") {
  Matrix x = gaussian_cloud(10, 3, 3);
  Matrix y = x;
  y(2, 1) = std::nan("");
  CHECK_THROWS_AS(fid(x, y), NumericError);
}

TEST_CASE("recall and coverage equal the brute-force loops on integer clouds") {
  for (uint64_t seed = 0; seed < 12; ++seed) {
    Matrix real = integer_cloud(14 + static_cast<int>(seed), 3, 300 + seed);
    Matrix gen = integer_cloud(11 + static_cast<int>(seed % 5), 3, 400 + seed);
    const int k = 1 + static_cast<int>(seed % 3);
    CHECK(recall(real, gen, k) == oracle::recall(real, gen, k));
    CHECK(coverage(real, gen, k) == oracle::coverage(real, gen, k));
  }
}

TEST_CASE("recall and coverage endpoints") {
  Matrix x = gaussian_cloud(12, 3, 9);
  CHECK(recall(x, x, 1) == 1.0);
  CHECK(coverage(x, x, 1) == 1.0);
  Matrix far = gaussian_cloud(12, 3, 10);
  far.array() += 1000.0;
  CHECK(recall(far, x, 2) == 0.0);
  CHECK(coverage(far, x, 2) == 0.0);
  CHECK_THROWS_AS(recall(x, gaussian_cloud(3, 3, 2), 3), ConfigError);
  CHECK_THROWS_AS(coverage(gaussian_cloud(3, 3, 2), x, 3), ConfigError);
}

TEST_CASE("mean pairwise distance closed forms") {
  Matrix same = Matrix::Zero(4, 2);
  CHECK(mean_pairwise_distance(same) == 0.0);
  Matrix two(2, 2);
  two << 0.0, 0.0, 3.0, 4.0;
  CHECK(mean_pairwise_distance(two) == doctest::Approx(5.0));
  Matrix five = gaussian_cloud(5, 3, 77);
  CHECK(mean_pairwise_distance(five) == doctest::Approx(oracle::mean_pairwise_distance(five)));
  CHECK_THROWS_AS(mean_pairwise_distance(Matrix::Zero(1, 2)), RangeError);
}

TEST_CASE("logits dispersion hand cases") {
  Matrix a(2, 3);
  a << 1.0, 2.0, 3.0, 0.0, 0.0, 0.0;
  CHECK(logits_dispersion({a, a, a}) == doctest::Approx(0.0));

  // disjoint one-hots at every position: TV distance 1
  Matrix hot1(2, 2), hot2(2, 2);
  hot1 << 50.0, 0.0, 50.0, 0.0;
  hot2 << 0.0, 50.0, 0.0, 50.0;
  CHECK(logits_dispersion({hot1, hot2}) == doctest::Approx(1.0).epsilon(1e-9));

  // three samplings, V=4, S=2 against a hand-rolled TV computation
  std::vector<Matrix> sets;
  for (uint64_t s = 0; s < 3; ++s) sets.push_back(gaussian_cloud(2, 4, 600 + s));
  auto softmax_row = [](const Vector& row) {
    Vector e = (row.array() - row.maxCoeff()).exp();
    return Vector(e / e.sum());
  };
  double manual = 0.0;
  for (int pos = 0; pos < 2; ++pos) {
    double pair_sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < sets.size(); ++i)
      for (size_t j = i + 1; j < sets.size(); ++j) {
        Vector pi = softmax_row(sets[i].row(pos).transpose());
        Vector pj = softmax_row(sets[j].row(pos).transpose());
        pair_sum += 0.5 * (pi - pj).cwiseAbs().sum();
        ++pairs;
      }
    manual += pair_sum / pairs;
  }
  manual /= 2.0;
  CHECK(logits_dispersion(sets) == doctest::Approx(manual).epsilon(1e-12));

  CHECK_THROWS_AS(logits_dispersion({a}), ConfigError);
  Matrix wrong = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(logits_dispersion({a, wrong}), DimensionError);
}

TEST_CASE("dft magnitude satisfies Parseval") {
  Image img = make_toy_dataset(1, 91)[0].pixels;
  Matrix mag = dft_magnitude(img);
  const double freq_energy = mag.array().square().sum() / (16.0 * 16.0);
  const double pixel_energy = img.array().square().sum();
  CHECK(freq_energy == doctest::Approx(pixel_energy).epsilon(1e-6));
}

TEST_CASE("freq profile of a constant image floors every band") {
  Image img = Image::Constant(16, 16, 0.6);
  std::vector<double> p = freq_profile(img);
  REQUIRE(p.size() == 8);
  CHECK(p[0] == 0.0);
  for (size_t b = 1; b < p.size(); ++b) CHECK(p[b] == doctest::Approx(-30.0));
}

TEST_CASE("a pure sinusoid concentrates in its radial band") {
  Image img(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      img(y, x) = 0.5 + 0.4 * std::cos(2.0 * std::numbers::pi * 3.0 * x / 16.0);
  std::vector<double> p = freq_profile(img);
  // band 3 carries the sinusoid; neighbours stay at the floor
  CHECK(p[3] > p[1] + 5.0);
  CHECK(p[3] > p[2] + 5.0);
  CHECK(p[3] > p[4] + 5.0);
}

TEST_CASE("structure distance endpoints and symmetry") {
  PixFreqEmbedder emb;
  std::vector<ToyImage> imgs = make_toy_dataset(2, 55);
  CHECK(structure_distance(imgs[0].pixels, imgs[0].pixels, emb) == 0.0);
  const double d01 = structure_distance(imgs[0].pixels, imgs[1].pixels, emb);
  const double d10 = structure_distance(imgs[1].pixels, imgs[0].pixels, emb);
  CHECK(d01 == doctest::Approx(d10));
  CHECK(d01 >= 0.0);
  CHECK(d01 <= 2.0);
}

TEST_CASE("metric csv uses the pinned schema and 9 significant digits") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dvar_metric_test.csv").string();
  write_metric_csv(path, {{"fid", "all", "vanilla", 1.0 / 3.0, 20}});
  std::ifstream is(path);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "metric,condition,variant,value,seed_count");
  CHECK(row == "fid,all,vanilla,0.333333333,20");
  std::remove(path.c_str());

  CHECK(format_float(2.0) == "2");
  CHECK(format_float(0.1) == "0.1");
  CHECK(format_float(123456789.5) == "123456790");
}

TEST_CASE("curve csv schema") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dvar_curve_test.csv").string();
  write_curve_csv(path, {{1, 0.5}, {16, 0.0}});
  std::ifstream is(path);
  std::string header, r1, r2;
  std::getline(is, header);
  std::getline(is, r1);
  std::getline(is, r2);
  CHECK(header == "scale_label,value");
  CHECK(r1 == "1,0.5");
  CHECK(r2 == "16,0");
  std::remove(path.c_str());
}

TEST_CASE("convergence curve ends at exactly zero") {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.num_blocks = 2;
  cfg.codebook_size = 16;
  cfg.hidden_dim = 8;
  cfg.seed = 3;
  Model model = init_model(cfg);
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4, 8});
  std::vector<ToyImage> imgs = make_toy_dataset(8, 2, ToyDatasetOptions{.side = 8});
  std::vector<FeatureMap> feats;
  for (const auto& t : imgs) feats.push_back(lift_image(t.pixels, 8));
  Codebook cb = fit_codebook(feats, sched, 16, 1);
  GenerationRequest req;
  req.sched = sched;
  req.top_k = 16;
  req.reg.active_blocks = {0, 1};
  GenerationTrace trace = generate(req, model, cb);
  PixFreqEmbedder emb;
  std::vector<double> curve = scale_convergence_curve(trace, emb);
  REQUIRE(curve.size() == 4);
  CHECK(curve.back() == 0.0);
  for (double v : curve) {
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
  }
}

TEST_CASE("observation study rejects probe labels outside the schedule") {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.num_blocks = 2;
  cfg.codebook_size = 16;
  cfg.hidden_dim = 8;
  cfg.seed = 4;
  Model model = init_model(cfg);
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4});
  std::vector<ToyImage> imgs = make_toy_dataset(6, 2, ToyDatasetOptions{.side = 4, .margin = 1.0});
  std::vector<FeatureMap> feats;
  for (const auto& t : imgs) feats.push_back(lift_image(t.pixels, 8));
  Codebook cb = fit_codebook(feats, sched, 16, 1);
  GenerationRequest req;
  req.sched = sched;
  req.top_k = 16;
  req.reg.active_blocks = {0, 1};
  PixFreqEmbedder emb;
  CHECK_THROWS_AS(observation2_study(model, cb, req, {3}, 2, emb), ConfigError);
  Observation2Table table = observation2_study(model, cb, req, {2}, 3, emb);
  CHECK(table.seed_count == 3);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].scale_label == 2);
  CHECK(table.rows[0].seed_count == 3);
}

TEST_SUITE_END();
