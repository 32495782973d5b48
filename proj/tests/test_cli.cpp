#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "heterformer/cli/commands.hpp"
#include "support.hpp"

using namespace heterformer;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "heterformer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Runs the built executable; returns its exit status and combined output.
Result run_binary(const std::string& args) {
  Result r;
  const std::string cmd = std::string(HETERFORMER_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "", "popen failed"};
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> config_echo(const std::string& dir) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp((fs::path(dir) / "config.txt").string()));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

double metric(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') current = line.substr(1, line.size() - 2);
    if (current == section && line.rfind(key + " = ", 0) == 0) return std::stod(line.substr(key.size() + 3));
  }
  throw std::runtime_error("metric " + section + "." + key + " missing");
}

/// Small planted-topic network shared by the tests of this file.
const std::string& small_network() {
  static const std::string dir = [] {
    const auto d = heterformer::testing::scratch_dir("cli_network");
    const auto r = run_cli({"generate", "--out", d, "--seed", "3", "--set", "synth.text_rich_count=240", "--set",
                            "synth.textless_count=30", "--set", "synth.textless_degree=6", "--set",
                            "synth.p_in=0.06", "--set", "synth.p_out=0.004"});
    if (r.code != 0) throw std::runtime_error(r.err);
    return d;
  }();
  return dir;
}

std::vector<std::string> small_train(const std::string& out, const std::string& seed) {
  return {"train",       "--data",       small_network(), "--out", out, "--seed", seed, "--dim", "16",
          "--heads",     "2",            "--layers",      "2",     "--seq-len", "12", "--textless-dim", "8",
          "--max-epochs", "3",           "--lr",          "1e-3",  "--warmup-epochs", "1", "--batch-size", "10",
          "--test-batch-size", "10"};
}

}  // namespace

TEST(Cli, GenerateWritesNetworkFilesAndConfigEcho) {
  const auto& d = small_network();
  for (auto f : {"schema.txt", "nodes.tsv", "edges.tsv", "labels.tsv", "config.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path(d) / f)) << f;
  }
  EXPECT_EQ(config_echo(d).at("synth.text_rich_count"), "240");
}

TEST(Cli, TrainTwiceWithSameSeedIsByteIdentical) {
  const auto a = heterformer::testing::scratch_dir("cli_train_a");
  const auto b = heterformer::testing::scratch_dir("cli_train_b");
  const auto c = heterformer::testing::scratch_dir("cli_train_c");
  const auto ra = run_cli(small_train(a, "11"));
  ASSERT_EQ(ra.code, 0) << ra.err;
  const auto rb = run_cli(small_train(b, "11"));
  ASSERT_EQ(rb.code, 0) << rb.err;
  for (auto f : {"trace.csv", "digest.txt", "metrics.txt", "model.ckpt"}) {
    const auto x = slurp((fs::path(a) / f).string());
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp((fs::path(b) / f).string())) << f;
  }
  ASSERT_EQ(run_cli(small_train(c, "12")).code, 0);
  EXPECT_NE(slurp((fs::path(a) / "digest.txt").string()), slurp((fs::path(c) / "digest.txt").string()));
}

TEST(Cli, SeedPrecedenceFlagThenFileThenEnvThenDefault) {
  const auto cfg_dir = heterformer::testing::scratch_dir("cli_precedence");
  const auto cfg = (fs::path(cfg_dir) / "run.cfg").string();
  std::ofstream(cfg) << "# comment\nseed = 5\nmodel.dim = 24\n";
  auto seed_of = [&](std::vector<std::string> extra) {
    const auto out = heterformer::testing::scratch_dir("cli_precedence_out");
    std::vector<std::string> args = {"generate", "--out", out, "--set", "synth.text_rich_count=8", "--set",
                                     "synth.textless_count=2", "--set", "synth.textless_degree=1"};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return config_echo(out);
  };
  ::setenv("HETERFORMER_SEED", "9", 1);
  EXPECT_EQ(seed_of({"--config", cfg, "--seed", "7"}).at("seed"), "7");
  const auto from_file = seed_of({"--config", cfg});
  EXPECT_EQ(from_file.at("seed"), "5");
  EXPECT_EQ(from_file.at("model.dim"), "24");
  EXPECT_EQ(seed_of({"--config", cfg, "--dim", "40"}).at("model.dim"), "40");
  EXPECT_EQ(seed_of({}).at("seed"), "9");
  ::unsetenv("HETERFORMER_SEED");
  const auto defaults = seed_of({});
  EXPECT_EQ(defaults.at("seed"), "42");
  EXPECT_EQ(std::stod(defaults.at("train.lr")), 1e-5);
  EXPECT_EQ(std::stod(defaults.at("train.weight_decay")), 1e-3);
  EXPECT_EQ(defaults.at("train.patience"), "3");
  EXPECT_EQ(defaults.at("train.batch_size"), "30");
  EXPECT_EQ(defaults.at("train.test_batch_size"), "50");
  EXPECT_EQ(defaults.at("model.textless_dim"), "64");
  EXPECT_EQ(defaults.at("model.seq_len"), "32");
}

TEST(Cli, ErrorsExitNonzeroWithMessageAndNoOutputs) {
  const auto out = heterformer::testing::scratch_dir("cli_errors");
  auto r = run_cli({"train", "--nodes", "/nonexistent/nodes.tsv", "--edges", "/nonexistent/edges.tsv", "--schema",
                    "/nonexistent/schema.txt", "--out", out});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_FALSE(fs::exists(fs::path(out) / "metrics.txt"));
  EXPECT_FALSE(fs::exists(fs::path(out) / "model.ckpt"));

  r = run_cli({"generate", "--out", out, "--set", "model.no_such_key=1"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("unknown config key"), std::string::npos);

  r = run_cli({"generate", "--out", out, "--set", "synth.p_in=0.0001"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("p_in"), std::string::npos);

  r = run_cli({"eval", "--data", small_network(), "--out", out});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("--ckpt"), std::string::npos);

  r = run_cli({"train", "--data", small_network(), "--out", out, "--ablation", "most"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(fs::path(out) / "metrics.txt"));
}

TEST(Cli, ExecutableReportsExitStatus) {
  EXPECT_EQ(run_binary("--help").code, 0);
  EXPECT_NE(run_binary("").code, 0);
  EXPECT_NE(run_binary("frobnicate").code, 0);
  const auto r = run_binary("vocab --nodes /nonexistent --edges /nonexistent --schema /nonexistent");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
}

TEST(Cli, AblationNoAggDoesNotBeatFullOnTrainedModel) {
  const auto out = heterformer::testing::scratch_dir("cli_ablation");
  auto args = small_train(out, "4");
  args[std::find(args.begin(), args.end(), "--max-epochs") - args.begin() + 1] = "6";
  ASSERT_EQ(run_cli(args).code, 0);
  const auto ckpt = (fs::path(out) / "model.ckpt").string();
  auto dev_prec = [&](const std::string& ablation) {
    std::vector<std::string> eval_args = {"eval", "--ckpt", ckpt, "--ablation", ablation};
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--out") {
        eval_args.push_back("--out");
        eval_args.push_back(out + "/eval_" + ablation);
        ++i;
      } else if (args[i].rfind("--", 0) == 0 && args[i] != "--max-epochs" && args[i] != "--lr" &&
                 args[i] != "--warmup-epochs" && args[i] != "--batch-size") {
        eval_args.push_back(args[i]);
        eval_args.push_back(args[i + 1]);
        ++i;
      } else {
        ++i;
      }
    }
    const auto r = run_cli(eval_args);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("ablation = " + ablation), std::string::npos) << r.out;
    return metric(r.out, "link.dev", "prec");
  };
  EXPECT_LE(dev_prec("no_agg"), dev_prec("full"));
}

TEST(Cli, EmbedAndRetrieve) {
  const auto out = heterformer::testing::scratch_dir("cli_embed");
  ASSERT_EQ(run_cli(small_train(out, "2")).code, 0);
  const auto ckpt = (fs::path(out) / "model.ckpt").string();
  const std::vector<std::string> model = {"--dim", "16", "--heads", "2", "--layers", "2",
                                          "--seq-len", "12", "--textless-dim", "8"};
  std::vector<std::string> embed = {"embed", "--data", small_network(), "--ckpt", ckpt, "--out", out};
  embed.insert(embed.end(), model.begin(), model.end());
  const auto r = run_cli(embed);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto emb = eval::read_embeddings((fs::path(out) / "embeddings.tsv").string());
  EXPECT_EQ(emb.ids.size(), 240u + 90u);

  std::ifstream nodes(fs::path(small_network()) / "nodes.tsv");
  std::string first;
  std::getline(nodes, first);
  const auto cols = graph::detail::split_tabs(first);
  std::vector<std::string> retrieve = {"retrieve", "--data", small_network(), "--ckpt", ckpt, "--out", out,
                                       "--query", cols[2], "-k", "3"};
  retrieve.insert(retrieve.end(), model.begin(), model.end());
  const auto q = run_cli(retrieve);
  ASSERT_EQ(q.code, 0) << q.err;
  EXPECT_NE(q.out.find("1\t" + cols[0] + "\t"), std::string::npos) << q.out;
}
