#include "dvar/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "dvar/errors.hpp"

namespace dvar {

void GenerationRequest::validate(const Model& model) const {
  if (label < 0 || label >= model.cfg.condition_count)
    throw RangeError("generation request: label out of range");
  if (!(temperature > 0.0)) throw RangeError("generation request: temperature must be > 0");
  if (top_k < 1 || top_k > model.cfg.codebook_size)
    throw RangeError("generation request: top_k out of range");
  reg.validate();
  for (int scale_label : reg.active_scales)
    if (sched.index_of_label(scale_label) < 0)
      throw ConfigError("generation request: active scale " + std::to_string(scale_label) +
                        " is not in the schedule");
  for (int b : reg.active_blocks)
    if (b < 0 || b >= model.cfg.num_blocks)
      throw ConfigError("generation request: active block out of range");
}

namespace {

template <typename Fn>
auto with_scale_context(int scale_number, Fn&& fn) {
  const std::string ctx = "scale " + std::to_string(scale_number) + ": ";
  try {
    return fn();
  } catch (const DimensionError& e) {
    throw DimensionError(ctx + e.what());
  } catch (const RangeError& e) {
    throw RangeError(ctx + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const NumericError& e) {
    throw NumericError(ctx + e.what());
  } catch (const IoError& e) {
    throw IoError(ctx + e.what());
  }
}

/// The two transforms an ordering variant applies around an active site.
struct SitePair {
  FeatureTransform in;
  FeatureTransform out;
};

SitePair ordering_transforms(const RegularizerConfig& reg) {
  auto ssr = [reg](const Matrix& x) { return apply_ssr(x, reg); };
  auto sar = [reg](const Matrix& x) { return apply_sar(x, reg); };
  SitePair p;
  switch (reg.ordering) {
    case Ordering::ssr_in_sar_out:
      p.in = ssr;
      p.out = sar;
      break;
    case Ordering::ssr_in_only:
      p.in = ssr;
      break;
    case Ordering::sar_in_ssr_out:
      p.in = sar;
      p.out = ssr;
      break;
    case Ordering::ssr_sar_in:
      p.in = [ssr, sar](const Matrix& x) { return sar(ssr(x)); };
      break;
    case Ordering::sar_ssr_in:
      p.in = [ssr, sar](const Matrix& x) { return ssr(sar(x)); };
      break;
  }
  return p;
}

ForwardHooks build_hooks(const RegularizerConfig& reg, int num_blocks) {
  ForwardHooks hooks;
  SitePair pair = ordering_transforms(reg);
  switch (reg.site) {
    case Site::block_level:
      for (int b : reg.active_blocks) {
        if (b < 0 || b >= num_blocks) throw ConfigError("active block out of range");
        hooks.blocks[b] = BlockHooks{pair.in, pair.out};
      }
      break;
    case Site::model_level:
      hooks.model_pre = pair.in;
      hooks.model_post = pair.out;
      break;
    case Site::logits_level: {
      FeatureTransform in = pair.in;
      FeatureTransform out = pair.out;
      hooks.logits = [in, out](const Matrix& x) {
        Matrix y = in ? in(x) : x;
        return out ? out(y) : y;
      };
      break;
    }
  }
  return hooks;
}

bool scale_active(const RegularizerConfig& reg, int scale_label) {
  return std::find(reg.active_scales.begin(), reg.active_scales.end(), scale_label) !=
         reg.active_scales.end();
}

using InputMutator = std::function<Matrix(int scale_index, const Matrix&)>;

GenerationTrace run_loop(const GenerationRequest& req, const Model& model,
                         const Codebook& codebook, const InputMutator& mutate) {
  req.validate(model);
  model.require_valid();
  if (codebook.dim() != model.cfg.embed_dim)
    throw DimensionError("generate: codebook dimension does not match embed_dim");
  const int k_scales = req.sched.num_scales();
  const auto [h_final, w_final] = req.sched.final_resolution();

  GenerationTrace trace;
  trace.tokens.reserve(static_cast<size_t>(k_scales));
  trace.partial.reserve(static_cast<size_t>(k_scales));
  trace.logits.resize(static_cast<size_t>(k_scales));

  RngStream rng(req.base_seed, req.sample_index);
  FeatureMap accum(h_final, w_final, model.cfg.embed_dim);
  accum.rows.setZero();
  const auto [h_first, w_first] = req.sched.at(0);
  Matrix x = condition_embedding(model, req.label)
                 .replicate(static_cast<Eigen::Index>(h_first) * w_first, 1);

  for (int k = 0; k < k_scales; ++k) {
    with_scale_context(k + 1, [&] {
      const auto [h, w] = req.sched.at(k);
      if (mutate) x = mutate(k, x);
      ForwardHooks hooks;
      if (scale_active(req.reg, h)) hooks = build_hooks(req.reg, model.cfg.num_blocks);
      BlockOutput out = forward(x, model, hooks);
      if (req.full_logits) {
        trace.logits[static_cast<size_t>(k)] = out.logits;
      } else if (k == k_scales - 1) {
        const Eigen::Index keep = std::min<Eigen::Index>(64, out.logits.rows());
        trace.logits[static_cast<size_t>(k)] = out.logits.topRows(keep);
      }
      TokenMap tokens = sample_tokens(out.logits, h, w, k, req.temperature, req.top_k, rng);
      trace.tokens.push_back(tokens);
      FeatureMap up = upsample(dequantize(tokens, codebook), h_final, w_final);
      accum.rows += up.rows;
      trace.partial.push_back(accum);
      if (k + 1 < k_scales) {
        const auto [hn, wn] = req.sched.at(k + 1);
        x = downsample(accum, hn, wn).rows;
      }
    });
  }
  trace.final_feature = accum;
  trace.image = decode_image(accum);
  return trace;
}

}  // namespace

GenerationTrace generate(const GenerationRequest& req, const Model& model,
                         const Codebook& codebook) {
  return run_loop(req, model, codebook, nullptr);
}

GenerationTrace intervention_zero_tokens(const GenerationRequest& req, const Model& model,
                                         const Codebook& codebook, int scale_index,
                                         TokenGroup which) {
  if (scale_index < 0 || scale_index >= req.sched.num_scales())
    throw RangeError("intervention: scale index out of range");
  InputMutator mutate = [scale_index, which](int k, const Matrix& x) {
    if (k != scale_index) return x;
    PivotalPartition part = partition_tokens(x);
    const std::vector<int>& rows =
        which == TokenGroup::pivotal ? part.pivotal_indices : part.auxiliary_indices;
    return zero_tokens(x, rows);
  };
  return run_loop(req, model, codebook, mutate);
}

namespace {

template <typename PerSample>
void parallel_samples(int n, const PerSample& body) {
  const int workers = std::min(n, worker_count());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<GenerationTrace> generate_batch(int n, const GenerationRequest& request_template,
                                            const Model& model, const Codebook& codebook) {
  if (n < 1) throw ConfigError("generate_batch: n must be >= 1");
  std::vector<GenerationTrace> traces(static_cast<size_t>(n));
  parallel_samples(n, [&](int i) {
    GenerationRequest req = request_template;
    req.sample_index = static_cast<uint64_t>(i);
    traces[static_cast<size_t>(i)] = generate(req, model, codebook);
  });
  return traces;
}

std::vector<Image> generate_images(int n, const GenerationRequest& request_template,
                                   const Model& model, const Codebook& codebook) {
  if (n < 1) throw ConfigError("generate_images: n must be >= 1");
  std::vector<Image> images(static_cast<size_t>(n));
  parallel_samples(n, [&](int i) {
    GenerationRequest req = request_template;
    req.sample_index = static_cast<uint64_t>(i);
    images[static_cast<size_t>(i)] = generate(req, model, codebook).image;
  });
  return images;
}

std::vector<GenerationTrace> generate_set(const std::vector<GenerationRequest>& requests,
                                          const Model& model, const Codebook& codebook) {
  std::vector<GenerationTrace> traces(requests.size());
  parallel_samples(static_cast<int>(requests.size()), [&](int i) {
    traces[static_cast<size_t>(i)] = generate(requests[static_cast<size_t>(i)], model, codebook);
  });
  return traces;
}

Image decode_image(const FeatureMap& f) {
  f.require_finite("decode_image input");
  Image img(f.h, f.w);
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x) {
      const double mean = f.rows.row(static_cast<Eigen::Index>(y) * f.w + x).mean();
      img(y, x) = std::clamp(0.5 * mean + 0.5, 0.0, 1.0);
    }
  return img;
}

uint64_t config_hash(const GenerationRequest& req) {
  std::ostringstream os;
  os << "label=" << req.label << ";seed=" << req.base_seed << ";sample=" << req.sample_index;
  char buf[192];
  std::snprintf(buf, sizeof(buf), ";tau=%.17g", req.temperature);
  os << buf << ";topk=" << req.top_k << ";site=" << to_string(req.reg.site)
     << ";ordering=" << to_string(req.reg.ordering);
  std::snprintf(buf, sizeof(buf), ";alpha=%.17g;beta=%.17g;alpha_hat=%.17g;beta_hat=%.17g",
                req.reg.alpha, req.reg.beta, req.reg.alpha_hat, req.reg.beta_hat);
  os << buf << ";scales=";
  {
    size_t i = 0;
    for (int s : req.reg.active_scales) os << (i++ ? "," : "") << s;
  }
  os << ";blocks=";
  {
    size_t i = 0;
    for (int b : req.reg.active_blocks) os << (i++ ? "," : "") << b;
  }
  os << ";sched=";
  for (int k = 0; k < req.sched.num_scales(); ++k)
    os << (k ? "," : "") << req.sched.at(k).first << "x" << req.sched.at(k).second;
  const std::string s = os.str();
  return fnv1a(s.data(), s.size());
}

void write_trace(const std::string& dir, const GenerationTrace& trace,
                 const GenerationRequest& req,
                 const std::vector<std::pair<std::string, std::string>>& extra_manifest) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("write_trace: cannot create directory: " + dir);
  for (size_t k = 0; k < trace.tokens.size(); ++k) {
    const TokenMap& t = trace.tokens[k];
    std::vector<float> payload(t.indices.size());
    for (size_t i = 0; i < t.indices.size(); ++i) payload[i] = static_cast<float>(t.indices[i]);
    write_dvt1((fs::path(dir) / ("tokens_" + std::to_string(k + 1) + ".dvt1")).string(),
               {static_cast<uint32_t>(t.h), static_cast<uint32_t>(t.w)}, payload);
  }
  write_dvt1_feature((fs::path(dir) / "feature_K.dvt1").string(), trace.final_feature);
  write_pgm((fs::path(dir) / "image.pgm").string(), trace.image);
  if (!trace.logits.empty() && trace.logits.back().size() > 0)
    write_dvt1_matrix((fs::path(dir) / "logits_K.dvt1").string(), trace.logits.back());
  std::ofstream manifest((fs::path(dir) / "manifest.txt").string());
  if (!manifest) throw IoError("write_trace: cannot write manifest in " + dir);
  manifest << "seed=" << req.base_seed << "\n";
  manifest << "sample_index=" << req.sample_index << "\n";
  manifest << "label=" << req.label << "\n";
  manifest << "config_hash=" << config_hash(req) << "\n";
  for (const auto& [key, value] : extra_manifest) manifest << key << "=" << value << "\n";
  if (!manifest) throw IoError("write_trace: manifest write failed in " + dir);
}

int worker_count() {
  if (const char* env = std::getenv("DIVERSEVAR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace dvar
