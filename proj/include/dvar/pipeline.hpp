#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvar/codec.hpp"
#include "dvar/model.hpp"
#include "dvar/regularizers.hpp"
#include "dvar/tensor.hpp"

namespace dvar {

/// Next-scale inference: the vanilla coarse-to-fine loop and the intervened
/// loop with singular-value regularizers at configurable sites.

struct GenerationRequest {
  int label = 0;
  uint64_t base_seed = 0;
  uint64_t sample_index = 0;
  double temperature = 1.0;
  int top_k = 256;
  RegularizerConfig reg;
  ScaleSchedule sched = ScaleSchedule::square({1, 2, 4, 6, 8, 12, 16});
  bool full_logits = false;  // capture logits at every scale instead of the final snapshot

  void validate(const Model& model) const;
};

struct GenerationTrace {
  std::vector<TokenMap> tokens;     // per scale
  std::vector<FeatureMap> partial;  // per-scale partial reconstruction at final resolution
  std::vector<Matrix> logits;       // per-scale snapshots; empty matrices where not captured
  FeatureMap final_feature;
  Image image;
};

GenerationTrace generate(const GenerationRequest& req, const Model& model,
                         const Codebook& codebook);

std::vector<GenerationTrace> generate_batch(int n, const GenerationRequest& request_template,
                                            const Model& model, const Codebook& codebook);

/// Lighter batch runner for metric sweeps: per-sample traces are decoded and
/// discarded, keeping only images. Identical sampling to generate_batch.
std::vector<Image> generate_images(int n, const GenerationRequest& request_template,
                                   const Model& model, const Codebook& codebook);

/// Run an explicit request list (labels and sample indices already set),
/// parallel over entries with the same determinism contract.
std::vector<GenerationTrace> generate_set(const std::vector<GenerationRequest>& requests,
                                          const Model& model, const Codebook& codebook);

Image decode_image(const FeatureMap& f);

enum class TokenGroup { pivotal, auxiliary };

/// generate() with the scale_index input's pivotal (or auxiliary) token rows
/// zeroed before the forward pass at that scale.
GenerationTrace intervention_zero_tokens(const GenerationRequest& req, const Model& model,
                                         const Codebook& codebook, int scale_index,
                                         TokenGroup which);

uint64_t config_hash(const GenerationRequest& req);

void write_trace(const std::string& dir, const GenerationTrace& trace,
                 const GenerationRequest& req,
                 const std::vector<std::pair<std::string, std::string>>& extra_manifest = {});

/// Worker count for batch loops: DIVERSEVAR_THREADS when set, else hardware.
int worker_count();

}  // namespace dvar
