#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pacoh/checkpoint.hpp"
#include "pacoh/commands.hpp"
#include "pacoh/config.hpp"

using namespace pacoh;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pacoh_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& command, const fs::path& config, const fs::path& out, bool mll_only = false) {
  CliOptions o;
  o.command = command;
  o.config_path = config.string();
  o.out_dir = out.string();
  o.mll_only = mll_only;
  return run_command(o);
}

int count_data_rows(const std::string& csv) {
  int rows = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  return rows - 1;  // column header
}

const char* kSmallBounds = R"({"seed": 3, "bound": {"env": "blr", "ns": [8, 16, 32, 64], "m": 5, "mc_priors": 50,
                                "test_tasks": 20}})";

const char* kSmallMeta = R"({"seed": 1, "seeds": [0], "env": {"name": "sinusoid", "n": 4, "m": 5},
  "model": {"kind": "gp", "hidden": [8]},
  "meta_train": {"method": "map", "iterations": 50, "step_size": 0.01},
  "meta_test": {"steps": 10}})";

}  // namespace

TEST(Config, RejectsUnknownAndIllTypedKeys) {
  EXPECT_THROW(parse_config(R"({"seed": 0, "sed": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": "zero"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"meta_train": {"particles": 2.5}})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_NO_THROW(parse_config(kSmallMeta));
}

TEST(Config, MapHashesLikeSingleParticleSvgd) {
  auto a = parse_config(R"({"meta_train": {"method": "map"}})");
  auto b = parse_config(R"({"meta_train": {"method": "svgd", "particles": 1}})");
  auto c = parse_config(R"({"meta_train": {"method": "svgd", "particles": 2}})");
  EXPECT_EQ(config_hash(a, "meta-train"), config_hash(b, "meta-train"));
  EXPECT_NE(config_hash(a, "meta-train"), config_hash(c, "meta-train"));
  EXPECT_EQ(output_header("abc", 7).rfind("# pacoh_lab", 0), 0u);
}

TEST(Checkpoint, JsonRoundTrip) {
  Checkpoint c;
  c.model.kind = "gp";
  c.model.gp = GpModel::make(1, {4}, 2, 0.05);
  c.config_hash = "deadbeef";
  c.seed = 5;
  c.approx.method = Method::svgd;
  c.approx.particles = Mat::Random(3, c.model.gp.dim());
  const Checkpoint back = checkpoint_from_json(checkpoint_to_json(c));
  EXPECT_EQ(back.approx, c.approx);
  EXPECT_TRUE(back.model == c.model);
  EXPECT_EQ(back.config_hash, "deadbeef");
  EXPECT_EQ(back.seed, 5u);
  EXPECT_THROW(checkpoint_from_json(R"({"version": 99})"), std::exception);
}

TEST(Cli, BoundsSweepIsReproducible) {
  const fs::path dir = scratch("bounds");
  const fs::path cfg = write_config(dir, kSmallBounds);
  ASSERT_EQ(run("bounds", cfg, dir / "a"), kExitOk);
  ASSERT_EQ(run("bounds", cfg, dir / "b"), kExitOk);
  const std::string a = read_file(dir / "a" / "bounds.csv");
  EXPECT_EQ(a, read_file(dir / "b" / "bounds.csv"));
  EXPECT_EQ(count_data_rows(a), 4);
  EXPECT_EQ(a.rfind("# pacoh_lab", 0), 0u);
  EXPECT_EQ(a.find('\r'), std::string::npos);
}

TEST(Cli, DiracHyperPriorGivesZeroDelta) {
  const fs::path dir = scratch("dirac");
  const fs::path cfg = write_config(
      dir, R"({"bound": {"env": "blr", "ns": [8, 16], "mc_priors": 20, "test_tasks": 10, "hyper_prior_var": 0.0}})");
  ASSERT_EQ(run("bounds", cfg, dir), kExitOk);
  std::istringstream in(read_file(dir / "bounds.csv"));
  std::string line, header;
  while (std::getline(in, line) && line[0] == '#') {
  }
  header = line;
  int col = 0;
  for (std::istringstream h(header); std::getline(h, line, ',');) {
    if (line == "delta") break;
    ++col;
  }
  while (std::getline(in, line)) {
    std::istringstream r(line);
    std::string cell;
    for (int i = 0; i <= col; ++i) std::getline(r, cell, ',');
    EXPECT_NEAR(std::stod(cell), 0.0, 1e-12) << line;
  }
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  EXPECT_EQ(run("bounds", dir / "missing.json", dir), kExitConfig);
  EXPECT_EQ(run("bounds", write_config(dir, R"({"bogus": 1})"), dir), kExitConfig);
  EXPECT_EQ(run("frobnicate", write_config(dir, "{}"), dir), kExitConfig);
}

TEST(Cli, MetaTrainCheckpointFeedsMetaTest) {
  const fs::path dir = scratch("meta");
  const fs::path cfg = write_config(dir, kSmallMeta);
  ASSERT_EQ(run("meta-train", cfg, dir / "train"), kExitOk);
  const Checkpoint ck = load_checkpoint((dir / "train" / "checkpoint.json").string());
  EXPECT_EQ(ck.approx.size(), 1);
  EXPECT_EQ(checkpoint_from_json(checkpoint_to_json(ck)).approx, ck.approx);
  EXPECT_EQ(count_data_rows(read_file(dir / "train" / "train_log.csv")), 50);

  auto with_ckpt = std::string(kSmallMeta);
  with_ckpt.replace(with_ckpt.find("\"steps\""), 0,
                    "\"checkpoint\": \"" + (dir / "train" / "checkpoint.json").string() + "\", ");
  const fs::path cfg2 = write_config(dir, with_ckpt);
  ASSERT_EQ(run("meta-test", cfg2, dir / "t1"), kExitOk);
  ASSERT_EQ(run("meta-test", cfg2, dir / "t2"), kExitOk);
  EXPECT_EQ(read_file(dir / "t1" / "metrics.csv"), read_file(dir / "t2" / "metrics.csv"));
}

TEST(Cli, SingleParticleSvgdCheckpointMatchesMap) {
  const fs::path dir = scratch("k1");
  std::string svgd = kSmallMeta;
  svgd.replace(svgd.find("\"map\""), 5, "\"svgd\", \"particles\": 1");
  ASSERT_EQ(run("meta-train", write_config(dir, kSmallMeta), dir / "map"), kExitOk);
  ASSERT_EQ(run("meta-train", write_config(dir, svgd), dir / "svgd"), kExitOk);
  EXPECT_EQ(read_file(dir / "map" / "checkpoint.json"), read_file(dir / "svgd" / "checkpoint.json"));
}
