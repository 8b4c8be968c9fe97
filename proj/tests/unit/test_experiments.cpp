#include "rflab/errors.hpp"
#include "rflab/experiments.hpp"
#include "rflab/io.hpp"
#include "support.hpp"

#include <cmath>

using namespace rflab;
using rflab::testing::ScratchDir;
using rflab::testing::slurp;

namespace {

namespace fs = std::filesystem;

// The closed-form velocity with the sign of the z_t coefficient flipped.
LatentVector flipped_velocity(const LatentVector& z, double t, const GaussianSpec& spec) {
  const double s2 = spec.sigma_sq();
  const double lambda = 1.0 / (t * t * s2 + (1.0 - t) * (1.0 - t));
  return -(t * s2 - (1.0 - t)) * lambda * z + (1.0 - t) * lambda * spec.mu();
}

RunConfig small_pretrain_config() {
  RunConfig cfg(train_schema());
  cfg.set("dataset", "domains");
  cfg.set("hidden", nlohmann::json::array({8, 8}));
  cfg.set("steps", 40);
  cfg.set("batch", 32);
  cfg.set("a_count", 256);
  cfg.set("b_count", 256);
  return cfg;
}

RunConfig small_finetune_config(const fs::path& ckpt) {
  RunConfig cfg(finetune_schema());
  cfg.set("checkpoint", ckpt.string());
  cfg.set("steps", 4);
  cfg.set("batch", 16);
  cfg.set("eval_every", 2);
  cfg.set("eval_samples", 64);
  cfg.set("disc_hidden", nlohmann::json::array({8}));
  cfg.set("a_count", 256);
  cfg.set("b_count", 256);
  return cfg;
}

std::vector<std::string> column(const CsvTable& t, const std::string& name) {
  std::vector<std::string> out;
  const auto j = t.column(name);
  for (const auto& row : t.rows) out.push_back(row[j]);
  return out;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("every command schema rejects unknown keys") {
  for (const auto& schema : {theorem1_schema(), theorem2_schema(), fig4_schema(), train_schema(), finetune_schema(),
                             translate_schema(), angles_schema()}) {
    CHECK_THROWS_AS(RunConfig::from_json(schema, {{"no_such_key", 1}}), ConfigError);
    CHECK(RunConfig(schema).values().contains("seed"));
  }
}

TEST_CASE("theorem1 passes for the closed form and catches a sign error") {
  ScratchDir dir("theorem1");
  const RunConfig cfg(theorem1_schema());
  const CommandReport good = cmd_theorem1(cfg, dir / "good");
  CHECK(good.passed);
  CHECK(good.values.at("max_rel_err") < 0.05);
  CHECK(good.values.at("reliable_probes") > 0.0);
  CHECK(fs::exists(dir / "good" / "config.resolved.json"));
  const CsvTable t = read_csv(dir / "good" / "theorem1.csv");
  CHECK(t.header == std::vector<std::string>{"t", "probe", "analytic", "mc", "rel_err", "ess", "reliable"});

  const CommandReport bad = cmd_theorem1(cfg, dir / "bad", flipped_velocity);
  CHECK_FALSE(bad.passed);
}

TEST_CASE("theorem2 rate") {
  ScratchDir dir("theorem2");
  const CommandReport r = cmd_theorem2(RunConfig(theorem2_schema()), dir.path());
  CHECK(r.passed);
  CHECK(r.values.at("pairs_used") >= 100.0);
  CHECK(r.values.at("mean_slope") >= 0.85);
  CHECK(r.values.at("mean_slope") <= 1.15);
}

TEST_CASE("re-running from the resolved config reproduces every CSV byte for byte") {
  ScratchDir dir("rerun");
  RunConfig cfg(theorem2_schema());
  cfg.set("seed", 5);
  cfg.set("pairs", 110);
  cmd_theorem2(cfg, dir / "first");
  const RunConfig again = RunConfig::from_file(theorem2_schema(), dir / "first" / "config.resolved.json");
  cmd_theorem2(again, dir / "second");
  for (const char* name : {"theorem2_errors.csv", "theorem2_slopes.csv", "config.resolved.json"}) {
    CAPTURE(name);
    const std::string a = slurp(dir / "first" / name);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir / "second" / name));
  }
}

TEST_CASE("fig4 on the analytic field") {
  ScratchDir dir("fig4");
  RunConfig cfg(fig4_schema());
  cfg.set("runs", 200);
  cfg.set("marginal_samples", 20000);
  const CommandReport r = cmd_fig4(cfg, dir.path());
  CHECK(r.passed);
  CHECK(std::abs(r.values.at("cos_final") - 1.0) <= 1e-6);
  const CsvTable curves = read_csv(dir / "fig4.csv");
  CHECK(curves.rows.size() == 51);
  const CsvTable runs = read_csv(dir / "fig4_runs.csv");
  CHECK(runs.header == std::vector<std::string>{"run_id", "step_index", "t", "cos_sim", "z0_norm"});
  CHECK(runs.rows.size() == 51 * cfg.get_size("keep_runs"));
}

TEST_CASE("fig4 rejects a checkpoint of the wrong dimension") {
  ScratchDir dir("fig4_ckpt");
  const std::vector<std::size_t> hidden{4};
  save_checkpoint(dir / "m.ckpt", NetParams::init(3, hidden, Activation::tanh, 1));
  RunConfig cfg(fig4_schema());
  cfg.set("source", "checkpoint");
  cfg.set("checkpoint", (dir / "m.ckpt").string());
  CHECK_THROWS_AS(cmd_fig4(cfg, dir / "out"), ConfigError);
  cfg.set("checkpoint", "");
  CHECK_THROWS_AS(cmd_fig4(cfg, dir / "out"), ConfigError);
  cfg.set("source", "somewhere");
  CHECK_THROWS_AS(cmd_fig4(cfg, dir / "out"), ConfigError);
}

TEST_CASE("translate with TReFT on the analytic field is the identity") {
  ScratchDir dir("translate");
  RunConfig cfg(translate_schema());
  const CommandReport r = cmd_translate(cfg, dir / "treft");
  CHECK(r.values.at("count") == 256.0);
  CHECK(r.values.at("max_abs_change") <= 1e-12);

  // Feed the written inputs back through vanilla: every output is mu.
  cfg.set("strategy", "vanilla");
  cfg.set("input", (dir / "treft" / "input.csv").string());
  cmd_translate(cfg, dir / "vanilla");
  const CsvTable out = read_csv(dir / "vanilla" / "output.csv");
  REQUIRE(out.rows.size() == 256);
  const auto mu = cfg.get_doubles("mu");
  for (const auto& row : out.rows) {
    CHECK(std::abs(parse_double(row[0]) - mu[0]) < 1e-12);
    CHECK(std::abs(parse_double(row[1]) - mu[1]) < 1e-12);
  }
}

TEST_CASE("angles") {
  ScratchDir dir("angles");
  const CommandReport r = cmd_angles(RunConfig(angles_schema()), dir.path());
  CHECK(r.passed);
  CHECK(r.values.at("rows") == 3582.0);
  CHECK(read_csv(dir / "angles.csv").rows.size() == 3582);
  CHECK(r.values.at("median_cos_treft") > 0.95);
  CHECK(r.values.at("median_abs_cos_vanilla") < 0.5);
}

TEST_CASE("finetune sweep from a pretrained checkpoint") {
  ScratchDir dir("finetune");
  const CommandReport pre = cmd_train(small_pretrain_config(), dir / "pretrain");
  CHECK(std::isfinite(pre.values.at("final_loss")));
  REQUIRE(fs::exists(dir / "pretrain" / "model.ckpt"));
  CHECK(read_csv(dir / "pretrain" / "loss.csv").rows.size() == 40);

  const RunConfig cfg = small_finetune_config(dir / "pretrain" / "model.ckpt");
  const CommandReport r = cmd_finetune(cfg, dir / "ft");
  std::vector<std::string> grid;
  for (const char* s : {"vanilla", "inversion", "treft"}) {
    CAPTURE(s);
    const CsvTable h = read_csv(dir / "ft" / (std::string("history_") + s + ".csv"));
    CHECK(h.header.size() == 10);
    const auto steps = column(h, "step");
    if (grid.empty()) grid = steps;
    CHECK(steps == grid);
    for (const auto& st : steps) CHECK(fs::exists(dir / "ft" / ("ckpt_" + std::string(s) + "_" + st + ".ckpt")));
    CHECK(std::isfinite(r.values.at(std::string("final_frechet_a2b_") + s)));
  }
  CHECK(grid == std::vector<std::string>{"0", "2", "4"});
}

TEST_CASE("finetune needs an existing checkpoint") {
  ScratchDir dir("finetune_missing");
  RunConfig cfg(finetune_schema());
  CHECK_THROWS_WITH_AS(cmd_finetune(cfg, dir.path()), doctest::Contains("requires a pretrained checkpoint"),
                       ConfigError);
  cfg.set("checkpoint", (dir / "absent.ckpt").string());
  CHECK_THROWS_WITH_AS(cmd_finetune(cfg, dir.path()), doctest::Contains("not found"), ConfigError);
}

TEST_CASE("train rejects inconsistent settings") {
  ScratchDir dir("train_bad");
  RunConfig cfg(train_schema());
  cfg.set("mu", nlohmann::json::array({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(cmd_train(cfg, dir.path()), ConfigError);
  cfg = RunConfig(train_schema());
  cfg.set("dataset", "imagenet");
  CHECK_THROWS_AS(cmd_train(cfg, dir.path()), ConfigError);
}

}  // TEST_SUITE
