#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvar/analysis.hpp"
#include "dvar/config.hpp"
#include "dvar/dataset.hpp"
#include "dvar/errors.hpp"
#include "dvar/model.hpp"
#include "dvar/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dvar;

namespace {

/// Exclusive lock on an output directory; stale locks must be removed by hand.
class LockGuard {
 public:
  explicit LockGuard(const std::string& dir) {
    fs::create_directories(dir);
    path_ = (fs::path(dir) / ".lock").string();
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (f == nullptr)
      throw ConfigError("output directory is in use (lock file " + path_ +
                        " exists; remove it if stale)");
    std::fclose(f);
    held_ = true;
  }
  ~LockGuard() {
    if (held_) std::remove(path_.c_str());
  }
  LockGuard(const LockGuard&) = delete;
  LockGuard& operator=(const LockGuard&) = delete;

 private:
  std::string path_;
  bool held_ = false;
};

std::string tmp_path(const std::string& final_path) { return final_path + ".tmp"; }

void finalize_file(const std::string& final_path) {
  std::error_code ec;
  fs::remove(final_path, ec);
  fs::rename(tmp_path(final_path), final_path);
}

void finalize_dir(const std::string& final_path) {
  std::error_code ec;
  fs::remove_all(final_path, ec);
  fs::rename(tmp_path(final_path), final_path);
}

std::vector<Image> load_pgms(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".pgm") continue;
    if (entry.path().filename() == "sheet.pgm") continue;
    paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Image> images;
  images.reserve(paths.size());
  for (const auto& p : paths) images.push_back(read_pgm(p));
  return images;
}

Image make_sheet(const std::vector<Image>& images) {
  const int n = static_cast<int>(images.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const int h = static_cast<int>(images[0].rows());
  const int w = static_cast<int>(images[0].cols());
  Image sheet = Image::Zero(rows * (h + 1) + 1, cols * (w + 1) + 1);
  for (int i = 0; i < n; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    sheet.block(1 + r * (h + 1), 1 + c * (w + 1), h, w) = images[static_cast<size_t>(i)];
  }
  return sheet;
}

std::string sample_dir_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%04d", i);
  return std::string(buf);
}

bool artifacts_exist(const RunConfig& cfg) {
  return fs::exists(cfg.checkpoint_path) && fs::exists(cfg.codebook_path);
}

int missing_artifacts(const RunConfig& cfg) {
  if (!fs::exists(cfg.checkpoint_path))
    std::cerr << "checkpoint not found: " << cfg.checkpoint_path << "\n";
  if (!fs::exists(cfg.codebook_path))
    std::cerr << "codebook not found: " << cfg.codebook_path << "\n";
  return 4;
}

std::vector<GenerationRequest> build_requests(const RunConfig& cfg, int n, uint64_t base_seed,
                                              bool vanilla) {
  std::vector<GenerationRequest> reqs;
  reqs.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    GenerationRequest req = cfg.request_template();
    req.base_seed = base_seed;
    req.sample_index = static_cast<uint64_t>(i);
    req.label = i % cfg.model.condition_count;
    if (vanilla) req.reg.active_scales.clear();
    reqs.push_back(std::move(req));
  }
  return reqs;
}

// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path) {
  RunConfig cfg = parse_config_file(config_path);
  LockGuard lock(cfg.out_dir);

  ScaleSchedule sched = cfg.schedule();
  auto [fh, fw] = sched.final_resolution();
  if (fh != fw) throw ConfigError("codec.scales: final resolution must be square");

  ToyDatasetOptions data_opts;
  data_opts.side = fh;
  std::vector<ToyImage> dataset =
      make_toy_dataset(cfg.train_dataset_size, cfg.train_data_seed, data_opts);

  std::vector<FeatureMap> features;
  features.reserve(dataset.size());
  for (const ToyImage& t : dataset) features.push_back(lift_image(t.pixels, cfg.model.embed_dim));

  Codebook codebook = fit_codebook(features, sched, cfg.model.codebook_size, cfg.codec_fit_seed,
                                   cfg.codec_max_rows);

  std::vector<TeacherExample> examples;
  examples.reserve(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i)
    examples.push_back(make_teacher_example(features[i], dataset[i].label, codebook, sched));

  Model model = init_model(cfg.model);
  const double init_loss = evaluate_loss(model, examples);
  TrainResult result = train(model, examples, cfg.train);
  const double final_loss = evaluate_loss(model, examples);

  double mae_sum = 0.0;
  double mae_max = 0.0;
  const size_t probe = std::min<size_t>(dataset.size(), 32);
  for (size_t i = 0; i < probe; ++i) {
    std::vector<TokenMap> tokens = encode(features[i], sched, codebook);
    Image recon = decode_image(reconstruct(tokens, sched, codebook, sched.num_scales()));
    const double mae = (recon - dataset[i].pixels).cwiseAbs().mean();
    mae_sum += mae;
    mae_max = std::max(mae_max, mae);
  }
  const double mae_mean = mae_sum / static_cast<double>(probe);

  write_dvt1_matrix(tmp_path(cfg.codebook_path), codebook.vectors);
  finalize_file(cfg.codebook_path);
  save_checkpoint(tmp_path(cfg.checkpoint_path), model);
  finalize_file(cfg.checkpoint_path);

  {
    std::ofstream os(tmp_path(cfg.loss_csv_path));
    if (!os) throw IoError("cannot write " + cfg.loss_csv_path);
    os << "epoch,loss\n";
    os << "0," << format_float(init_loss) << "\n";
    for (size_t e = 0; e < result.epoch_loss.size(); ++e)
      os << (e + 1) << "," << format_float(result.epoch_loss[e]) << "\n";
  }
  finalize_file(cfg.loss_csv_path);

  {
    const std::string stats_path = cfg.out_dir + "/stats.txt";
    std::ofstream os(tmp_path(stats_path));
    if (!os) throw IoError("cannot write " + stats_path);
    os << "dataset_size=" << dataset.size() << "\n";
    os << "parameter_count=" << model.parameter_count() << "\n";
    os << "initial_loss=" << format_float(init_loss) << "\n";
    os << "final_loss=" << format_float(final_loss) << "\n";
    os << "recon_mae_mean=" << format_float(mae_mean) << "\n";
    os << "recon_mae_max=" << format_float(mae_max) << "\n";
    finalize_file(stats_path);
  }

  {
    const std::string real_dir = cfg.out_dir + "/real";
    fs::remove_all(tmp_path(real_dir));
    fs::create_directories(tmp_path(real_dir));
    for (size_t i = 0; i < dataset.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "img_%04d.pgm", static_cast<int>(i));
      write_pgm((fs::path(tmp_path(real_dir)) / buf).string(), dataset[i].pixels);
    }
    finalize_dir(real_dir);
  }

  std::cout << "trained " << cfg.train.epochs << " epochs on " << dataset.size() << " images\n";
  std::cout << "loss " << format_float(init_loss) << " -> " << format_float(final_loss) << "\n";
  std::cout << "codec reconstruction mae mean " << format_float(mae_mean) << " max "
            << format_float(mae_max) << "\n";
  std::cout << "checkpoint " << cfg.checkpoint_path << "\n";
  return 0;
}

int cmd_generate(const std::string& config_path, const std::string& variant, int n_override,
                 int64_t seed_override, std::string out_dir) {
  RunConfig cfg = parse_config_file(config_path);
  if (!artifacts_exist(cfg)) return missing_artifacts(cfg);
  if (out_dir.empty()) out_dir = cfg.out_dir + "/gen_" + variant;
  const int n = n_override > 0 ? n_override : cfg.gen_n;
  const uint64_t base_seed =
      seed_override >= 0 ? static_cast<uint64_t>(seed_override) : cfg.gen_base_seed;

  LockGuard lock(out_dir);
  Model model = load_checkpoint(cfg.checkpoint_path);
  Codebook codebook{read_dvt1_matrix(cfg.codebook_path)};

  std::vector<GenerationRequest> reqs = build_requests(cfg, n, base_seed, variant == "vanilla");
  std::vector<GenerationTrace> traces = generate_set(reqs, model, codebook);

  for (int i = 0; i < n; ++i) {
    const std::string dir = (fs::path(out_dir) / sample_dir_name(i)).string();
    const std::string effective =
        reqs[static_cast<size_t>(i)].reg.active_scales.empty() ? "vanilla" : "diverse";
    write_trace(tmp_path(dir), traces[static_cast<size_t>(i)], reqs[static_cast<size_t>(i)],
                {{"variant", effective}});
    finalize_dir(dir);
  }

  std::vector<Image> images;
  images.reserve(traces.size());
  for (const auto& t : traces) images.push_back(t.image);
  const std::string sheet_path = (fs::path(out_dir) / "sheet.pgm").string();
  write_pgm(tmp_path(sheet_path), make_sheet(images));
  finalize_file(sheet_path);

  std::cout << "wrote " << n << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& real_dir, const std::string& gen_dir, int k,
                 const std::string& out_csv) {
  std::vector<Image> real_images = load_pgms(real_dir);
  std::vector<Image> gen_images = load_pgms(gen_dir);
  if (static_cast<int>(real_images.size()) < k + 1) {
    std::cerr << "insufficient samples in " << real_dir << ": have " << real_images.size()
              << ", need at least " << (k + 1) << "\n";
    return 5;
  }
  if (static_cast<int>(gen_images.size()) < k + 1) {
    std::cerr << "insufficient samples in " << gen_dir << ": have " << gen_images.size()
              << ", need at least " << (k + 1) << "\n";
    return 5;
  }
  PixFreqEmbedder emb;
  Matrix real_embs = embed_all(emb, real_images);
  Matrix gen_embs = embed_all(emb, gen_images);

  MetricReport report;
  report.fid = fid(real_embs, gen_embs);
  report.recall = recall(real_embs, gen_embs, k);
  report.coverage = coverage(real_embs, gen_embs, k);
  report.mean_pairwise_distance = mean_pairwise_distance(gen_embs);

  const int count = static_cast<int>(gen_images.size());
  std::vector<MetricRow> rows = {
      {"fid", "all", "gen", report.fid, count},
      {"recall", "all", "gen", report.recall, count},
      {"coverage", "all", "gen", report.coverage, count},
      {"mean_pairwise_distance", "all", "gen", report.mean_pairwise_distance, count},
  };
  write_metric_csv(tmp_path(out_csv), rows);
  finalize_file(out_csv);

  std::cout << "fid=" << format_float(report.fid) << "\n";
  std::cout << "recall=" << format_float(report.recall) << "\n";
  std::cout << "coverage=" << format_float(report.coverage) << "\n";
  std::cout << "mean_pairwise_distance=" << format_float(report.mean_pairwise_distance) << "\n";
  return 0;
}

struct AblationArm {
  std::string name;
  RegularizerConfig reg;
  bool vanilla = false;  // clear active scales entirely
};

std::string join_ints(const std::set<int>& values, const char* sep) {
  std::ostringstream os;
  size_t i = 0;
  for (int v : values) os << (i++ ? sep : "") << v;
  return os.str();
}

std::vector<AblationArm> ablation_arms(const RunConfig& cfg, const std::string& axis) {
  std::vector<AblationArm> arms;
  const RegularizerConfig base = cfg.reg;
  if (axis == "scales") {
    const std::vector<std::set<int>> subsets = {
        {},     {2},    {4},    {6},       {8},       {2, 4},
        {4, 6}, {6, 8}, {2, 4, 6}, {4, 6, 8}, {2, 4, 6, 8}};
    for (const auto& s : subsets) {
      AblationArm arm;
      arm.reg = base;
      arm.reg.active_scales = s;
      arm.name = s.empty() ? "scales=none" : "scales=" + join_ints(s, "+");
      arms.push_back(arm);
    }
  } else if (axis == "blocks") {
    const std::vector<std::pair<std::string, std::set<int>>> subsets = {
        {"none", {}},
        {"0-7", {0, 1, 2, 3, 4, 5, 6, 7}},
        {"1-7", {1, 2, 3, 4, 5, 6, 7}},
        {"0-6", {0, 1, 2, 3, 4, 5, 6}},
        {"2-7", {2, 3, 4, 5, 6, 7}},
        {"4-7", {4, 5, 6, 7}},
        {"1+2+3", {1, 2, 3}}};
    for (const auto& [name, s] : subsets) {
      AblationArm arm;
      arm.reg = base;
      arm.reg.active_blocks = s;
      arm.name = "blocks=" + name;
      if (s.empty()) arm.vanilla = true;
      arms.push_back(arm);
    }
    AblationArm model_level;
    model_level.reg = base;
    model_level.reg.site = Site::model_level;
    model_level.name = "blocks=model";
    arms.push_back(model_level);
  } else if (axis == "site") {
    AblationArm vanilla;
    vanilla.reg = base;
    vanilla.vanilla = true;
    vanilla.name = "site=vanilla";
    arms.push_back(vanilla);
    for (Site site : {Site::block_level, Site::model_level, Site::logits_level}) {
      AblationArm arm;
      arm.reg = base;
      arm.reg.site = site;
      arm.name = "site=" + to_string(site);
      arms.push_back(arm);
    }
  } else if (axis == "ordering") {
    for (Ordering o : {Ordering::ssr_in_only, Ordering::sar_in_ssr_out, Ordering::ssr_sar_in,
                       Ordering::sar_ssr_in, Ordering::ssr_in_sar_out}) {
      AblationArm arm;
      arm.reg = base;
      arm.reg.ordering = o;
      arm.name = "ordering=" + to_string(o);
      arms.push_back(arm);
    }
  } else {
    throw ConfigError("unknown ablation axis: " + axis +
                      " (expected scales|blocks|site|ordering)");
  }
  return arms;
}

int cmd_ablate(const std::string& config_path, const std::string& axis,
               const std::string& out_csv) {
  RunConfig cfg = parse_config_file(config_path);
  std::vector<AblationArm> arms = ablation_arms(cfg, axis);
  if (!artifacts_exist(cfg)) return missing_artifacts(cfg);
  Model model = load_checkpoint(cfg.checkpoint_path);
  Codebook codebook{read_dvt1_matrix(cfg.codebook_path)};

  ScaleSchedule sched = cfg.schedule();
  auto [fh, fw] = sched.final_resolution();
  if (fh != fw) throw ConfigError("codec.scales: final resolution must be square");
  ToyDatasetOptions data_opts;
  data_opts.side = fh;
  std::vector<ToyImage> dataset =
      make_toy_dataset(cfg.train_dataset_size, cfg.train_data_seed, data_opts);
  std::vector<Image> real_images;
  real_images.reserve(dataset.size());
  for (const ToyImage& t : dataset) real_images.push_back(t.pixels);

  PixFreqEmbedder emb;
  Matrix real_embs = embed_all(emb, real_images);

  std::vector<MetricRow> rows;
  for (const AblationArm& arm : arms) {
    RunConfig arm_cfg = cfg;
    arm_cfg.reg = arm.reg;
    std::vector<GenerationRequest> reqs =
        build_requests(arm_cfg, cfg.gen_n, cfg.gen_base_seed, arm.vanilla);
    std::vector<GenerationTrace> traces = generate_set(reqs, model, codebook);
    std::vector<Image> images;
    images.reserve(traces.size());
    for (const auto& t : traces) images.push_back(t.image);
    Matrix gen_embs = embed_all(emb, images);
    const int n = static_cast<int>(images.size());
    rows.push_back({"fid", "all", arm.name, fid(real_embs, gen_embs), n});
    rows.push_back({"recall", "all", arm.name, recall(real_embs, gen_embs), n});
    rows.push_back({"coverage", "all", arm.name, coverage(real_embs, gen_embs), n});
    rows.push_back(
        {"mean_pairwise_distance", "all", arm.name, mean_pairwise_distance(gen_embs), n});
    std::cout << arm.name << ": fid=" << format_float(rows[rows.size() - 4].value)
              << " recall=" << format_float(rows[rows.size() - 3].value)
              << " coverage=" << format_float(rows[rows.size() - 2].value)
              << " mpd=" << format_float(rows[rows.size() - 1].value) << "\n";
  }
  write_metric_csv(tmp_path(out_csv), rows);
  finalize_file(out_csv);
  return 0;
}

int cmd_observe(const std::string& config_path, int study, std::string out_dir) {
  RunConfig cfg = parse_config_file(config_path);
  if (study != 1 && study != 2) throw ConfigError("unknown study (expected 1 or 2)");
  if (!artifacts_exist(cfg)) return missing_artifacts(cfg);
  if (out_dir.empty()) out_dir = cfg.out_dir + "/observe" + std::to_string(study);

  try {
    LockGuard lock(out_dir);
    Model model = load_checkpoint(cfg.checkpoint_path);
    Codebook codebook{read_dvt1_matrix(cfg.codebook_path)};
    PixFreqEmbedder emb;
    ScaleSchedule sched = cfg.schedule();

    if (study == 1) {
      GenerationRequest req = cfg.request_template();
      GenerationTrace trace = generate(req, model, codebook);
      std::vector<double> curve = scale_convergence_curve(trace, emb);
      std::vector<std::pair<int, double>> series;
      for (int k = 0; k < sched.num_scales(); ++k)
        series.emplace_back(sched.at(k).first, curve[static_cast<size_t>(k)]);
      const std::string curve_path = (fs::path(out_dir) / "convergence.csv").string();
      write_curve_csv(tmp_path(curve_path), series);
      finalize_file(curve_path);

      std::vector<MetricRow> freq_rows;
      for (int k = 0; k < sched.num_scales(); ++k) {
        std::vector<double> profile = freq_profile(decode_image(trace.partial[static_cast<size_t>(k)]));
        for (size_t b = 1; b < profile.size(); ++b)
          freq_rows.push_back({"freq_band_" + std::to_string(b),
                               std::to_string(sched.at(k).first), "study1", profile[b], 1});
      }
      const std::string freq_path = (fs::path(out_dir) / "freq.csv").string();
      write_metric_csv(tmp_path(freq_path), freq_rows);
      finalize_file(freq_path);
      std::cout << "study 1 artifacts in " << out_dir << "\n";
      return 0;
    }

    std::vector<int> probe_labels;
    for (int k = 0; k < sched.num_scales(); ++k) probe_labels.push_back(sched.at(k).first);
    Observation2Table table =
        observation2_study(model, codebook, cfg.request_template(), probe_labels, cfg.gen_n, emb);
    std::vector<MetricRow> rows;
    rows.push_back({"condition_accuracy", "all", "vanilla", table.vanilla_accuracy,
                    table.seed_count});
    for (const Observation2Row& r : table.rows) {
      const std::string variant = r.which == TokenGroup::pivotal ? "pivotal" : "auxiliary";
      rows.push_back({"structure_distance", std::to_string(r.scale_label), variant,
                      r.mean_structure_distance, r.seed_count});
      rows.push_back({"condition_accuracy", std::to_string(r.scale_label), variant,
                      r.condition_accuracy, r.seed_count});
    }
    const std::string path = (fs::path(out_dir) / "observation2.csv").string();
    write_metric_csv(tmp_path(path), rows);
    finalize_file(path);
    std::cout << "study 2 artifacts in " << out_dir << "\n";
    return 0;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "observe failed: " << e.what() << "\n";
    return 6;
  }
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_md) {
  if (inputs.empty()) throw ConfigError("report: need at least one --in CSV");
  std::ostringstream md;
  md << "# Run summary\n";
  for (const std::string& input : inputs) {
    std::ifstream is(input);
    if (!is) throw ConfigError("report: cannot open " + input);
    md << "\n## " << fs::path(input).filename().string() << "\n\n";
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::ostringstream row;
      row << "|";
      std::stringstream ss(line);
      std::string cell;
      int cells = 0;
      while (std::getline(ss, cell, ',')) {
        row << " " << cell << " |";
        ++cells;
      }
      md << row.str() << "\n";
      if (header) {
        md << "|";
        for (int i = 0; i < cells; ++i) md << " --- |";
        md << "\n";
        header = false;
      }
    }
  }
  std::ofstream os(tmp_path(out_md));
  if (!os) throw IoError("report: cannot write " + out_md);
  os << md.str();
  os.close();
  finalize_file(out_md);
  std::cout << "report written to " << out_md << "\n";
  return 0;
}

int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale next-scale image generator with diversity interventions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string variant = "vanilla";
  int n_override = 0;
  int64_t seed_override = -1;
  std::string out_path;
  std::string real_dir, gen_dir;
  int k = 3;
  std::string axis;
  int study = 0;
  std::vector<std::string> report_inputs;

  CLI::App* train_cmd = app.add_subcommand("train", "fit codebook and train the toy checkpoint");
  train_cmd->add_option("--config", config_path, "run configuration file")->required();

  CLI::App* gen_cmd = app.add_subcommand("generate", "run generation sweeps");
  gen_cmd->add_option("--config", config_path, "run configuration file")->required();
  gen_cmd->add_option("--variant", variant, "vanilla or diverse")
      ->check(CLI::IsMember({"vanilla", "diverse"}));
  gen_cmd->add_option("--n", n_override, "sample count override");
  gen_cmd->add_option("--seed", seed_override, "base seed override");
  gen_cmd->add_option("--out", out_path, "output directory");

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "compute diversity metrics for image sets");
  eval_cmd->add_option("--real", real_dir, "directory of reference images")->required();
  eval_cmd->add_option("--gen", gen_dir, "directory of generated images")->required();
  eval_cmd->add_option("--k", k, "neighbor count for recall/coverage");
  eval_cmd->add_option("--out", out_path, "metrics CSV path")->required();

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "sweep one ablation axis");
  ablate_cmd->add_option("--config", config_path, "run configuration file")->required();
  ablate_cmd->add_option("--axis", axis, "scales|blocks|site|ordering")->required();
  ablate_cmd->add_option("--out", out_path, "ablation CSV path")->required();

  CLI::App* observe_cmd = app.add_subcommand("observe", "reproduce the observation studies");
  observe_cmd->add_option("--config", config_path, "run configuration file")->required();
  observe_cmd->add_option("--study", study, "1 or 2")->required();
  observe_cmd->add_option("--out", out_path, "output directory");

  CLI::App* report_cmd = app.add_subcommand("report", "merge CSVs into a markdown summary");
  report_cmd->add_option("--in", report_inputs, "input CSV (repeatable)")->required();
  report_cmd->add_option("--out", out_path, "markdown output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (train_cmd->parsed()) return dispatch([&] { return cmd_train(config_path); });
  if (gen_cmd->parsed())
    return dispatch([&] { return cmd_generate(config_path, variant, n_override, seed_override, out_path); });
  if (eval_cmd->parsed())
    return dispatch([&] { return cmd_evaluate(real_dir, gen_dir, k, out_path); });
  if (ablate_cmd->parsed())
    return dispatch([&] { return cmd_ablate(config_path, axis, out_path); });
  if (observe_cmd->parsed()) return dispatch([&] { return cmd_observe(config_path, study, out_path); });
  if (report_cmd->parsed()) return dispatch([&] { return cmd_report(report_inputs, out_path); });
  return 1;
}
