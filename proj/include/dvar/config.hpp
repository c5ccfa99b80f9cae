#pragma once

#include <string>
#include <vector>

#include "dvar/codec.hpp"
#include "dvar/model.hpp"
#include "dvar/pipeline.hpp"
#include "dvar/regularizers.hpp"

namespace dvar {

/// Flat key=value run configuration. Unknown keys are rejected; '#' starts a
/// comment; list values are comma-separated.
struct RunConfig {
  ModelConfig model;

  std::vector<int> codec_scales = {1, 2, 4, 6, 8, 12, 16};
  uint64_t codec_fit_seed = 99;
  int codec_max_rows = 16384;

  RegularizerConfig reg;

  double gen_temperature = 1.0;
  int gen_top_k = 256;
  int gen_n = 16;
  uint64_t gen_base_seed = 17;

  int train_dataset_size = 192;
  uint64_t train_data_seed = 5;
  TrainOptions train;

  std::string out_dir = "out";
  std::string checkpoint_path;  // defaults to <out_dir>/model.ckpt
  std::string codebook_path;    // defaults to <out_dir>/codebook.dvt1
  std::string loss_csv_path;    // defaults to <out_dir>/loss.csv

  ScaleSchedule schedule() const { return ScaleSchedule::square(codec_scales); }

  /// Generation request template carrying the configured sampling and
  /// regularizer settings; label and sample_index stay at defaults.
  GenerationRequest request_template() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);

}  // namespace dvar
