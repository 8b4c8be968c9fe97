#include "rflab/config.hpp"
#include "rflab/errors.hpp"
#include "rflab/io.hpp"
#include "support.hpp"

#include <clocale>
#include <cmath>
#include <limits>

using namespace rflab;
using rflab::testing::ScratchDir;
using rflab::testing::slurp;

namespace {

ConfigSchema toy_schema() {
  return {{"steps", 100, "iterations"},
          {"lr", 1e-3, "learning rate"},
          {"name", "ring", "generator"},
          {"enabled", true, "switch"},
          {"mu", nlohmann::json::array({3.0, -1.0}), "mean"},
          {"hidden", nlohmann::json::array({64, 64}), "widths"},
          {"strategies", nlohmann::json::array({"vanilla", "treft"}), "strategies"}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles round-trip through text") {
  RngState rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(rng.next_normal(), static_cast<int>(rng.next_index(200)) - 100);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.0) == "-2");
  CHECK(parse_double(format_double(std::numeric_limits<double>::denorm_min())) ==
        std::numeric_limits<double>::denorm_min());
  CHECK_THROWS_AS(parse_double("1.5x"), ConfigError);
  CHECK_THROWS_AS(parse_double(""), ConfigError);
}

TEST_CASE("number formatting ignores the global locale") {
  // Some sandboxes ship only the C locale; the check is still meaningful.
  const char* old = std::setlocale(LC_ALL, nullptr);
  const std::string saved = old ? old : "C";
  std::setlocale(LC_ALL, "de_DE.UTF-8");
  CHECK(format_double(1.5) == "1.5");
  CHECK(parse_double("1.5") == 1.5);
  std::setlocale(LC_ALL, saved.c_str());
}

TEST_CASE("CSV writer and reader") {
  ScratchDir dir("csv");
  {
    CsvWriter w(dir / "t.csv", {"step", "value", "label", "maybe"});
    w.row({std::size_t{0}, 0.25, "a", std::optional<double>{}});
    w.row({std::size_t{1}, 1.0 / 3.0, std::string("b c"), std::optional<double>{2.5}});
    CHECK(w.rows() == 2);
    CHECK_THROWS_AS(w.row({1, 2.0}), InvalidArgument);
    CHECK_THROWS_AS(w.row({1, 2.0, "x,y", 0.0}), InvalidArgument);
  }
  const CsvTable t = read_csv(dir / "t.csv");
  CHECK(t.header == std::vector<std::string>{"step", "value", "label", "maybe"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][3].empty());
  CHECK(parse_double(t.rows[1][t.column("value")]) == 1.0 / 3.0);
  CHECK(t.rows[1][2] == "b c");
  CHECK_THROWS_AS(t.column("missing"), ConfigError);
  CHECK(slurp(dir / "t.csv").substr(0, 23) == "step,value,label,maybe\n");
}

TEST_CASE("checkpoints round-trip and are validated") {
  ScratchDir dir("ckpt");
  const std::vector<std::size_t> hidden{8, 5};
  NetParams p = NetParams::init(3, hidden, Activation::tanh, 77);
  RngState rng(2);
  for (Eigen::Index i = 0; i < p.theta().size(); ++i) p.theta()[i] = rng.next_normal() * 1e-3;
  save_checkpoint(dir / "m.ckpt", p);
  const NetParams q = load_checkpoint(dir / "m.ckpt");
  CHECK(q.dimension() == 3);
  CHECK(q.seed() == 77);
  CHECK(q.layout() == p.layout());
  CHECK(q.theta() == p.theta());

  const std::string text = slurp(dir / "m.ckpt");
  CHECK(text.rfind("rflab-checkpoint 1\n", 0) == 0);

  SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), ConfigError); }
  SUBCASE("future version") {
    std::string bad = text;
    bad.replace(0, 18, "rflab-checkpoint 9");
    write_text(dir / "bad.ckpt", bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "bad.ckpt"), doctest::Contains("version"), ConfigError);
  }
  SUBCASE("truncated payload") {
    write_text(dir / "bad.ckpt", text.substr(0, text.size() - 40));
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), ConfigError);
  }
  SUBCASE("trailing data") {
    write_text(dir / "bad.ckpt", text + "0.5\n");
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "bad.ckpt"), doctest::Contains("trailing"), ConfigError);
  }
  SUBCASE("parameter count disagrees with the shapes") {
    std::string bad = text;
    const auto pos = bad.find("params ");
    bad.replace(pos, bad.find('\n', pos) - pos, "params 3");
    write_text(dir / "bad.ckpt", bad);
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), ConfigError);
  }
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("defaults and typed getters") {
  const RunConfig cfg(toy_schema());
  CHECK(cfg.get_size("steps") == 100);
  CHECK(cfg.get_double("lr") == 1e-3);
  CHECK(cfg.get_double("steps") == 100.0);
  CHECK(cfg.get_string("name") == "ring");
  CHECK(cfg.get_bool("enabled"));
  CHECK(cfg.get_doubles("mu") == std::vector<double>{3.0, -1.0});
  CHECK(cfg.get_sizes("hidden") == std::vector<std::size_t>{64, 64});
  CHECK(cfg.get_strings("strategies") == std::vector<std::string>{"vanilla", "treft"});
  CHECK_THROWS_AS(cfg.get_double("absent"), ConfigError);
}

TEST_CASE("overrides are type-checked and unknown keys rejected") {
  RunConfig cfg(toy_schema());
  cfg.set("lr", 5);
  CHECK(cfg.get_double("lr") == 5.0);
  CHECK_THROWS_WITH_AS(cfg.set("learning_rate", 1.0), doctest::Contains("unknown config key"), ConfigError);
  CHECK_THROWS_AS(cfg.set("steps", 1.5), ConfigError);
  CHECK_THROWS_AS(cfg.set("steps", -3), ConfigError);
  CHECK_THROWS_AS(cfg.set("name", 3), ConfigError);
  CHECK_THROWS_AS(cfg.set("mu", "3,-1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("enabled", 1), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(toy_schema(), nlohmann::json::array({1, 2})), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(toy_schema(), {{"stepz", 3}}), ConfigError);
}

TEST_CASE("files and the resolved config") {
  ScratchDir dir("config");
  write_text(dir / "c.json", R"({"steps": 7, "mu": [0.1, 0.2]})");
  const RunConfig cfg = RunConfig::from_file(toy_schema(), dir / "c.json");
  CHECK(cfg.get_size("steps") == 7);
  CHECK(cfg.get_string("name") == "ring");

  const auto resolved = cfg.write_resolved(dir.path());
  CHECK(resolved.filename() == "config.resolved.json");
  const RunConfig again = RunConfig::from_file(toy_schema(), resolved);
  CHECK(again.values() == cfg.values());
  CHECK(again.get_doubles("mu") == std::vector<double>{0.1, 0.2});

  write_text(dir / "broken.json", "{\"steps\": ");
  CHECK_THROWS_AS(RunConfig::from_file(toy_schema(), dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(toy_schema(), dir / "absent.json"), ConfigError);
}

}  // TEST_SUITE
