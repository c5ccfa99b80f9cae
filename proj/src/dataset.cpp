#include "dvar/dataset.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "dvar/errors.hpp"

namespace dvar {

namespace {

struct Blob {
  double cx, cy, sigma, amplitude;
};

double min_pairwise(const std::vector<Blob>& blobs, double cx, double cy) {
  double best = std::numeric_limits<double>::infinity();
  for (const Blob& b : blobs) {
    const double d = std::hypot(b.cx - cx, b.cy - cy);
    best = std::min(best, d);
  }
  return best;
}

}  // namespace

ToyImage make_toy_image(RngStream& rng, const ToyDatasetOptions& options) {
  if (options.side < 4) throw ConfigError("toy image: side too small");
  const int count = 1 + static_cast<int>(rng.next_below(3));
  std::vector<Blob> blobs;
  const double lo = options.margin;
  const double hi = static_cast<double>(options.side) - options.margin;
  for (int i = 0; i < count; ++i) {
    double best_cx = 0.0, best_cy = 0.0, best_sep = -1.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double cx = rng.next_uniform(lo, hi);
      const double cy = rng.next_uniform(lo, hi);
      const double sep = blobs.empty() ? std::numeric_limits<double>::infinity()
                                       : min_pairwise(blobs, cx, cy);
      if (sep > best_sep) {
        best_sep = sep;
        best_cx = cx;
        best_cy = cy;
      }
      if (sep >= options.min_separation) break;
    }
    Blob b;
    b.cx = best_cx;
    b.cy = best_cy;
    b.sigma = rng.next_uniform(options.sigma_min, options.sigma_max);
    b.amplitude = rng.next_uniform(options.amplitude_min, options.amplitude_max);
    blobs.push_back(b);
  }
  ToyImage img;
  img.label = count - 1;
  img.pixels = Image::Constant(options.side, options.side, options.background);
  for (int y = 0; y < options.side; ++y)
    for (int x = 0; x < options.side; ++x) {
      double v = img.pixels(y, x);
      for (const Blob& b : blobs) {
        const double dx = x - b.cx;
        const double dy = y - b.cy;
        v += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      img.pixels(y, x) = std::clamp(v, 0.0, 1.0);
    }
  return img;
}

std::vector<ToyImage> make_toy_dataset(int count, uint64_t base_seed,
                                       const ToyDatasetOptions& options) {
  if (count < 0) throw ConfigError("toy dataset: negative count");
  std::vector<ToyImage> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    RngStream rng(base_seed, static_cast<uint64_t>(i));
    out.push_back(make_toy_image(rng, options));
  }
  return out;
}

int count_blobs(const Image& img, double threshold, int min_size) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  std::vector<int> mark(static_cast<size_t>(h) * w, 0);
  auto at = [&](int y, int x) -> int& { return mark[static_cast<size_t>(y) * w + x]; };
  int components = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      if (img(y0, x0) <= threshold || at(y0, x0) != 0) continue;
      int size = 0;
      stack.clear();
      stack.emplace_back(y0, x0);
      at(y0, x0) = 1;
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        ++size;
        const int dy[4] = {-1, 1, 0, 0};
        const int dx[4] = {0, 0, -1, 1};
        for (int n = 0; n < 4; ++n) {
          const int ny = y + dy[n];
          const int nx = x + dx[n];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (img(ny, nx) <= threshold || at(ny, nx) != 0) continue;
          at(ny, nx) = 1;
          stack.emplace_back(ny, nx);
        }
      }
      if (size >= min_size) ++components;
    }
  return components;
}

FeatureMap lift_image(const Image& img, int channels) {
  if (channels < 1) throw ConfigError("lift_image: channels must be >= 1");
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  FeatureMap f(h, w, channels);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double p = img(y, x);
      const double base = 2.0 * p - 1.0;
      for (int c = 0; c < channels; ++c) {
        const double phase = two_pi * p + two_pi * static_cast<double>(c) / channels;
        f.rows(static_cast<Eigen::Index>(y) * w + x, c) = base + 0.3 * std::cos(phase);
      }
    }
  return f;
}

}  // namespace dvar
