#include "dvar/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "dvar/errors.hpp"

namespace dvar {

GenerationRequest RunConfig::request_template() const {
  GenerationRequest req;
  req.base_seed = gen_base_seed;
  req.temperature = gen_temperature;
  req.top_k = gen_top_k;
  req.reg = reg;
  req.sched = schedule();
  return req;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

class Parser {
 public:
  Parser(const std::string& origin) : origin_(origin) {}

  void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(origin_ + ": key '" + key + "': " + why);
  }

  long long to_int(const std::string& key, const std::string& v, long long lo, long long hi) const {
    try {
      size_t pos = 0;
      const long long out = std::stoll(v, &pos);
      if (pos != v.size()) fail(key, "trailing characters in integer '" + v + "'");
      if (out < lo || out > hi) fail(key, "value " + v + " out of range");
      return out;
    } catch (const std::invalid_argument&) {
      fail(key, "not an integer: '" + v + "'");
    } catch (const std::out_of_range&) {
      fail(key, "integer out of range: '" + v + "'");
    }
    return 0;
  }

  uint64_t to_u64(const std::string& key, const std::string& v) const {
    try {
      size_t pos = 0;
      const unsigned long long out = std::stoull(v, &pos);
      if (pos != v.size()) fail(key, "trailing characters in integer '" + v + "'");
      return out;
    } catch (const std::invalid_argument&) {
      fail(key, "not an integer: '" + v + "'");
    } catch (const std::out_of_range&) {
      fail(key, "integer out of range: '" + v + "'");
    }
    return 0;
  }

  double to_double(const std::string& key, const std::string& v) const {
    try {
      size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) fail(key, "trailing characters in number '" + v + "'");
      return out;
    } catch (const std::invalid_argument&) {
      fail(key, "not a number: '" + v + "'");
    } catch (const std::out_of_range&) {
      fail(key, "number out of range: '" + v + "'");
    }
    return 0.0;
  }

  std::vector<int> to_int_list(const std::string& key, const std::string& v) const {
    std::vector<int> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(static_cast<int>(to_int(key, trim(item), 0, 1 << 20)));
    return out;
  }

 private:
  std::string origin_;
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  Parser p(origin);
  std::set<std::string> seen;
  bool model_v_set = false;
  int model_v = 0;
  bool codec_v_set = false;
  int codec_v = 0;

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ": line " + std::to_string(line_no) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ": empty key on line " + std::to_string(line_no));
    if (!seen.insert(key).second) p.fail(key, "duplicate key");

    if (key == "model.embed_dim") {
      cfg.model.embed_dim = static_cast<int>(p.to_int(key, value, 1, 4096));
    } else if (key == "model.num_blocks") {
      cfg.model.num_blocks = static_cast<int>(p.to_int(key, value, 1, 256));
    } else if (key == "model.hidden_dim") {
      cfg.model.hidden_dim = static_cast<int>(p.to_int(key, value, 1, 8192));
    } else if (key == "model.condition_count") {
      cfg.model.condition_count = static_cast<int>(p.to_int(key, value, 1, 1024));
    } else if (key == "model.seed") {
      cfg.model.seed = p.to_u64(key, value);
    } else if (key == "model.codebook_size") {
      model_v = static_cast<int>(p.to_int(key, value, 2, 65536));
      model_v_set = true;
    } else if (key == "codec.codebook_size") {
      codec_v = static_cast<int>(p.to_int(key, value, 2, 65536));
      codec_v_set = true;
    } else if (key == "codec.scales") {
      cfg.codec_scales = p.to_int_list(key, value);
      if (cfg.codec_scales.empty()) p.fail(key, "schedule needs at least one scale");
    } else if (key == "codec.fit_seed") {
      cfg.codec_fit_seed = p.to_u64(key, value);
    } else if (key == "codec.max_rows") {
      cfg.codec_max_rows = static_cast<int>(p.to_int(key, value, 256, 1 << 24));
    } else if (key == "reg.alpha") {
      cfg.reg.alpha = p.to_double(key, value);
    } else if (key == "reg.beta") {
      cfg.reg.beta = p.to_double(key, value);
    } else if (key == "reg.alpha_hat") {
      cfg.reg.alpha_hat = p.to_double(key, value);
    } else if (key == "reg.beta_hat") {
      cfg.reg.beta_hat = p.to_double(key, value);
    } else if (key == "reg.scales") {
      const auto list = p.to_int_list(key, value);
      cfg.reg.active_scales = std::set<int>(list.begin(), list.end());
    } else if (key == "reg.blocks") {
      const auto list = p.to_int_list(key, value);
      cfg.reg.active_blocks = std::set<int>(list.begin(), list.end());
    } else if (key == "reg.site") {
      try {
        cfg.reg.site = site_from_string(value);
      } catch (const ConfigError& e) {
        p.fail(key, e.what());
      }
    } else if (key == "reg.ordering") {
      try {
        cfg.reg.ordering = ordering_from_string(value);
      } catch (const ConfigError& e) {
        p.fail(key, e.what());
      }
    } else if (key == "gen.temperature") {
      cfg.gen_temperature = p.to_double(key, value);
      if (!(cfg.gen_temperature > 0.0)) p.fail(key, "temperature must be > 0");
    } else if (key == "gen.top_k") {
      cfg.gen_top_k = static_cast<int>(p.to_int(key, value, 1, 65536));
    } else if (key == "gen.n") {
      cfg.gen_n = static_cast<int>(p.to_int(key, value, 1, 1 << 20));
    } else if (key == "gen.base_seed") {
      cfg.gen_base_seed = p.to_u64(key, value);
    } else if (key == "train.dataset_size") {
      cfg.train_dataset_size = static_cast<int>(p.to_int(key, value, 1, 1 << 20));
    } else if (key == "train.data_seed") {
      cfg.train_data_seed = p.to_u64(key, value);
    } else if (key == "train.epochs") {
      cfg.train.epochs = static_cast<int>(p.to_int(key, value, 0, 1 << 20));
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = static_cast<int>(p.to_int(key, value, 1, 1 << 20));
    } else if (key == "train.learning_rate") {
      cfg.train.learning_rate = p.to_double(key, value);
      if (!(cfg.train.learning_rate > 0.0)) p.fail(key, "learning rate must be > 0");
    } else if (key == "train.momentum") {
      cfg.train.momentum = p.to_double(key, value);
      if (cfg.train.momentum < 0.0 || cfg.train.momentum >= 1.0)
        p.fail(key, "momentum must be in [0, 1)");
    } else if (key == "train.shuffle_seed") {
      cfg.train.shuffle_seed = p.to_u64(key, value);
    } else if (key == "paths.out_dir") {
      if (value.empty()) p.fail(key, "path must be non-empty");
      cfg.out_dir = value;
    } else if (key == "paths.checkpoint") {
      if (value.empty()) p.fail(key, "path must be non-empty");
      cfg.checkpoint_path = value;
    } else if (key == "paths.codebook") {
      if (value.empty()) p.fail(key, "path must be non-empty");
      cfg.codebook_path = value;
    } else if (key == "paths.loss_csv") {
      if (value.empty()) p.fail(key, "path must be non-empty");
      cfg.loss_csv_path = value;
    } else {
      throw ConfigError(origin + ": unknown key '" + key + "'");
    }
  }

  if (model_v_set && codec_v_set && model_v != codec_v)
    throw ConfigError(origin + ": model.codebook_size and codec.codebook_size disagree");
  if (model_v_set || codec_v_set) cfg.model.codebook_size = model_v_set ? model_v : codec_v;

  if (cfg.checkpoint_path.empty()) cfg.checkpoint_path = cfg.out_dir + "/model.ckpt";
  if (cfg.codebook_path.empty()) cfg.codebook_path = cfg.out_dir + "/codebook.dvt1";
  if (cfg.loss_csv_path.empty()) cfg.loss_csv_path = cfg.out_dir + "/loss.csv";

  cfg.model.validate();
  cfg.reg.validate();
  ScaleSchedule sched;
  try {
    sched = cfg.schedule();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": key 'codec.scales': " + e.what());
  }
  for (int scale_label : cfg.reg.active_scales)
    if (sched.index_of_label(scale_label) < 0)
      throw ConfigError(origin + ": reg.scales entry " + std::to_string(scale_label) +
                        " is not a scale of codec.scales");
  for (int b : cfg.reg.active_blocks)
    if (b < 0 || b >= cfg.model.num_blocks)
      throw ConfigError(origin + ": reg.blocks entry " + std::to_string(b) + " out of range");
  if (cfg.gen_top_k > cfg.model.codebook_size)
    throw ConfigError(origin + ": gen.top_k exceeds the codebook size");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace dvar
