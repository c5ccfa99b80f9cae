#pragma once

#include <cstdint>
#include <vector>

#include "dvar/rng.hpp"
#include "dvar/tensor.hpp"

namespace dvar {

/// Procedural toy data: 16x16 grayscale images of 1..3 Gaussian blobs.
/// The condition label is blob count minus one (labels 0..2).

struct ToyImage {
  Image pixels;
  int label = 0;  // blob count - 1
};

struct ToyDatasetOptions {
  int side = 16;
  double margin = 3.0;         // blob centers stay this far from the border
  double min_separation = 6.5; // pairwise center distance
  double sigma_min = 1.0;
  double sigma_max = 1.4;
  double amplitude_min = 0.75;
  double amplitude_max = 1.0;
  double background = 0.08;
};

ToyImage make_toy_image(RngStream& rng, const ToyDatasetOptions& options = {});
std::vector<ToyImage> make_toy_dataset(int count, uint64_t base_seed,
                                       const ToyDatasetOptions& options = {});

/// Threshold the image and count 4-connected bright components of at least
/// min_size pixels. Recovers the blob count on clean toy images.
int count_blobs(const Image& img, double threshold = 0.45, int min_size = 3);

/// Lift a grayscale image into a d-channel feature map whose channel mean at
/// each pixel is exactly 2p-1, so the fixed decoder inverts the lift. The
/// cosine term varies per channel and keeps feature matrices full-rank.
FeatureMap lift_image(const Image& img, int channels);

}  // namespace dvar
