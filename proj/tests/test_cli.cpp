#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "dvar/tensor.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef DIVERSEVAR_BIN
#error "DIVERSEVAR_BIN must point at the diversevar executable"
#endif

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

RunResult run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("dvar_cli_out_" + std::to_string(counter));
  const fs::path err = fs::temp_directory_path() / ("dvar_cli_err_" + std::to_string(counter));
  ++counter;
  const std::string cmd = env + (env.empty() ? "" : " ") + DIVERSEVAR_BIN + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

/// Scratch workspace with a trained micro checkpoint, shared across cases.
struct Workspace {
  fs::path root;
  fs::path cfg;

  Workspace() {
    root = fs::temp_directory_path() / "dvar_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    cfg = root / "run.cfg";
    write_config(cfg, {});
    RunResult r = run("train --config " + cfg.string());
    trained = r.code == 0;
    train_err = r.err;
  }

  ~Workspace() { fs::remove_all(root); }

  void write_config(const fs::path& path, const std::vector<std::string>& extra) const {
    std::ofstream os(path);
    os << "model.embed_dim = 8\n"
       << "model.hidden_dim = 10\n"
       << "model.num_blocks = 2\n"
       << "model.codebook_size = 24\n"
       << "model.condition_count = 3\n"
       << "model.seed = 7\n"
       << "codec.scales = 1,2,4,8,16\n"
       << "codec.fit_seed = 3\n"
       << "train.dataset_size = 10\n"
       << "train.data_seed = 11\n"
       << "train.epochs = 2\n"
       << "gen.n = 5\n"
       << "gen.top_k = 24\n"
       << "gen.base_seed = 21\n"
       << "reg.scales = 4,8\n"
       << "reg.blocks = 0,1\n"
       << "paths.out_dir = " << (root / "out").string() << "\n";
    for (const std::string& line : extra) os << line << "\n";
  }

  bool trained = false;
  std::string train_err;
};

Workspace& ws() {
  static Workspace w;
  return w;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("argument errors are reported without running") {
  CHECK(run("").code != 0);
  CHECK(run("frobnicate").code != 0);
  CHECK(run("generate").code != 0);  // --config is required
}

TEST_CASE("missing or malformed configs exit with the config code") {
  RunResult missing = run("train --config /nonexistent/nope.cfg");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/nonexistent/nope.cfg") != std::string::npos);

  const fs::path bad = fs::temp_directory_path() / "dvar_cli_bad.cfg";
  {
    std::ofstream os(bad);
    os << "model.not_a_knob = 5\n";
  }
  RunResult r = run("train --config " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("model.not_a_knob") != std::string::npos);
  fs::remove(bad);
}

TEST_CASE("train writes the full artifact set") {
  REQUIRE_MESSAGE(ws().trained, ws().train_err);
  const fs::path out = ws().root / "out";
  CHECK(fs::exists(out / "model.ckpt"));
  CHECK(fs::exists(out / "codebook.dvt1"));
  CHECK(fs::exists(out / "stats.txt"));
  CHECK(fs::is_directory(out / "real"));
  CHECK(fs::exists(out / "real" / "img_0000.pgm"));

  std::vector<std::string> loss = read_lines(out / "loss.csv");
  REQUIRE(loss.size() == 4);  // header + epoch 0 + 2 epochs
  CHECK(loss[0] == "epoch,loss");
  CHECK(loss[1].rfind("0,", 0) == 0);
  CHECK(loss[3].rfind("2,", 0) == 0);

  const std::string stats = slurp(out / "stats.txt");
  for (const char* key : {"dataset_size=10", "parameter_count=", "initial_loss=", "final_loss=",
                          "recon_mae_mean=", "recon_mae_max="})
    CHECK(stats.find(key) != std::string::npos);
}

TEST_CASE("generate writes per-sample traces and is rerun deterministic") {
  REQUIRE(ws().trained);
  const fs::path a = ws().root / "gen_a";
  const fs::path b = ws().root / "gen_b";
  CHECK(run("generate --config " + ws().cfg.string() + " --variant vanilla --out " + a.string())
            .code == 0);
  CHECK(fs::exists(a / "sheet.pgm"));
  CHECK(fs::exists(a / "sample_0000" / "image.pgm"));
  CHECK(fs::exists(a / "sample_0004" / "manifest.txt"));
  const std::string manifest = slurp(a / "sample_0000" / "manifest.txt");
  CHECK(manifest.find("variant=vanilla") != std::string::npos);
  CHECK(manifest.find("label=0") != std::string::npos);

  // bitwise identical rerun, including under a different worker count
  CHECK(run("generate --config " + ws().cfg.string() + " --variant vanilla --out " + b.string(),
            "DIVERSEVAR_THREADS=3").code == 0);
  CHECK(dvar::hash_directory(a.string()) == dvar::hash_directory(b.string()));
  fs::remove_all(b);
}

TEST_CASE("diverse runs differ from vanilla but collapse to it without active scales") {
  REQUIRE(ws().trained);
  const fs::path dv = ws().root / "gen_dv";
  CHECK(run("generate --config " + ws().cfg.string() + " --variant diverse --out " + dv.string())
            .code == 0);
  CHECK(slurp(dv / "sample_0000" / "manifest.txt").find("variant=diverse") != std::string::npos);
  CHECK(dvar::hash_directory(dv.string()) != dvar::hash_directory((ws().root / "gen_a").string()));

  const fs::path plain_cfg = ws().root / "plain.cfg";
  ws().write_config(plain_cfg, {"# override: no active scales"});
  {
    // rewrite without the reg.scales line
    std::vector<std::string> lines = read_lines(plain_cfg);
    std::ofstream os(plain_cfg);
    for (const std::string& line : lines)
      if (line.rfind("reg.scales", 0) != 0) os << line << "\n";
  }
  const fs::path dv2 = ws().root / "gen_dv2";
  CHECK(run("generate --config " + plain_cfg.string() + " --variant diverse --out " + dv2.string())
            .code == 0);
  CHECK(slurp(dv2 / "sample_0000" / "manifest.txt").find("variant=vanilla") != std::string::npos);
  CHECK(dvar::hash_directory(dv2.string()) == dvar::hash_directory((ws().root / "gen_a").string()));
  fs::remove_all(dv2);
}

TEST_CASE("generate without a checkpoint exits with the artifact code") {
  const fs::path cfg2 = ws().root / "untrained.cfg";
  ws().write_config(cfg2, {"paths.checkpoint = " + (ws().root / "void.ckpt").string()});
  RunResult r = run("generate --config " + cfg2.string());
  CHECK(r.code == 4);
  CHECK(r.err.find("checkpoint not found") != std::string::npos);
  CHECK(r.err.find("void.ckpt") != std::string::npos);
}

TEST_CASE("a stale lock blocks the run with the config code") {
  REQUIRE(ws().trained);
  const fs::path locked = ws().root / "gen_locked";
  fs::create_directories(locked);
  std::ofstream(locked / ".lock") << "";
  RunResult r = run("generate --config " + ws().cfg.string() + " --out " + locked.string());
  CHECK(r.code == 2);
  CHECK(r.err.find(".lock") != std::string::npos);
  fs::remove_all(locked);
}

TEST_CASE("evaluate reports metrics or an insufficient-sample failure") {
  REQUIRE(ws().trained);
  const fs::path csv = ws().root / "metrics.csv";
  RunResult ok = run("evaluate --real " + (ws().root / "out" / "real").string() + " --gen " +
                     (ws().root / "gen_a").string() + " --k 3 --out " + csv.string());
  CHECK(ok.code == 0);
  std::vector<std::string> lines = read_lines(csv);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "metric,condition,variant,value,seed_count");
  CHECK(lines[1].rfind("fid,all,gen,", 0) == 0);
  CHECK(lines[2].rfind("recall,all,gen,", 0) == 0);
  CHECK(lines[3].rfind("coverage,all,gen,", 0) == 0);
  CHECK(lines[4].rfind("mean_pairwise_distance,all,gen,", 0) == 0);

  RunResult tiny = run("evaluate --real " + (ws().root / "out" / "real").string() + " --gen " +
                       (ws().root / "gen_a").string() + " --k 9 --out " + csv.string());
  CHECK(tiny.code == 5);
  CHECK(tiny.err.find("insufficient samples") != std::string::npos);
  CHECK(tiny.err.find("need at least 10") != std::string::npos);
}

TEST_CASE("ablate sweeps one axis into a tidy CSV") {
  REQUIRE(ws().trained);
  const fs::path csv = ws().root / "ablate_site.csv";
  RunResult r = run("ablate --config " + ws().cfg.string() + " --axis site --out " + csv.string());
  CHECK(r.code == 0);
  std::vector<std::string> lines = read_lines(csv);
  REQUIRE(lines.size() == 17);  // header + 4 arms x 4 metrics
  CHECK(lines[0] == "metric,condition,variant,value,seed_count");
  const std::string all = slurp(csv);
  for (const char* arm : {"site=vanilla", "site=block", "site=model", "site=logits"})
    CHECK(all.find(arm) != std::string::npos);

  CHECK(run("ablate --config " + ws().cfg.string() + " --axis flavour --out " + csv.string())
            .code == 2);
}

TEST_CASE("observe writes study artifacts and rejects unknown studies") {
  REQUIRE(ws().trained);
  RunResult s1 = run("observe --config " + ws().cfg.string() + " --study 1");
  CHECK(s1.code == 0);
  std::vector<std::string> curve = read_lines(ws().root / "out" / "observe1" / "convergence.csv");
  REQUIRE(curve.size() == 6);  // header + 5 scales
  CHECK(curve[0] == "scale_label,value");
  CHECK(curve[5].rfind("16,", 0) == 0);
  CHECK(fs::exists(ws().root / "out" / "observe1" / "freq.csv"));

  RunResult s2 = run("observe --config " + ws().cfg.string() + " --study 2");
  CHECK(s2.code == 0);
  std::vector<std::string> obs = read_lines(ws().root / "out" / "observe2" / "observation2.csv");
  // header + vanilla row + 5 scales x {pivotal, auxiliary} x {distance, accuracy}
  REQUIRE(obs.size() == 22);
  CHECK(obs[1].rfind("condition_accuracy,all,vanilla,", 0) == 0);

  CHECK(run("observe --config " + ws().cfg.string() + " --study 3").code == 2);
}

TEST_CASE("report merges CSVs into markdown tables") {
  REQUIRE(ws().trained);
  const fs::path md = ws().root / "summary.md";
  RunResult r = run("report --in " + (ws().root / "metrics.csv").string() + " --out " + md.string());
  CHECK(r.code == 0);
  const std::string text = slurp(md);
  CHECK(text.find("# Run summary") != std::string::npos);
  CHECK(text.find("## metrics.csv") != std::string::npos);
  CHECK(text.find("| metric | condition | variant | value | seed_count |") != std::string::npos);
  CHECK(text.find("| --- | --- | --- | --- | --- |") != std::string::npos);

  CHECK(run("report --in /nonexistent.csv --out " + md.string()).code == 2);
}

TEST_SUITE_END();
