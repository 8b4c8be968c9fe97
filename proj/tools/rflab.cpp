// rflab: command-line entry point for the experiments and the acceptance
// suite. Every command reads an optional JSON config, applies --seed/--out,
// writes config.resolved.json next to its outputs and prints a summary.

#include "rflab/acceptance.hpp"
#include "rflab/errors.hpp"
#include "rflab/experiments.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <optional>

namespace {

using namespace rflab;
namespace fs = std::filesystem;

struct Command {
  std::string name;
  std::string help;
  std::function<ConfigSchema()> schema;
  std::function<CommandReport(const RunConfig&, const fs::path&)> run;
  bool has_verdict;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"theorem1", "closed-form velocity vs kernel-regression estimate", theorem1_schema,
       [](const RunConfig& c, const fs::path& o) { return cmd_theorem1(c, o); }, true},
      {"theorem2", "O(1 - t) convergence of the mixture posterior velocity", theorem2_schema, cmd_theorem2, true},
      {"fig4", "cosine and ||z0_hat|| curves along Euler trajectories", fig4_schema, cmd_fig4, true},
      {"train", "flow-matching pretraining", train_schema, cmd_train, true},
      {"finetune", "adversarial fine-tuning sweep over translation strategies", finetune_schema, cmd_finetune, false},
      {"translate", "translate latents with one strategy", translate_schema, cmd_translate, false},
      {"angles", "flow-angle statistics on constructed pairs", angles_schema, cmd_angles, true},
  };
  return table;
}

void print_schema(const ConfigSchema& schema) {
  for (const auto& k : schema) std::cout << "  " << k.name << " = " << k.default_value.dump() << "  # " << k.doc << '\n';
}

int run_command(const Command& cmd, const std::string& config, std::optional<std::uint64_t> seed, const fs::path& out) {
  const auto schema = cmd.schema();
  RunConfig cfg = config.empty() ? RunConfig(schema) : RunConfig::from_file(schema, config);
  if (seed) cfg.set("seed", *seed);
  const auto report = cmd.run(cfg, out);
  for (const auto& [k, v] : report.values) std::cout << k << " = " << v << '\n';
  for (const auto& n : report.notes) std::cout << "note: " << n << '\n';
  std::cout << "outputs in " << out.string() << '\n';
  if (!cmd.has_verdict) return 0;
  std::cout << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rflab: rectified-flow translation experiments"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool show_schema = false;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config, "JSON config file (flat key/value)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "output directory (default: out/<command>)");
    sub->add_flag("--schema", show_schema, "print the config keys with defaults and exit");
    subs[cmd.name] = sub;
  }
  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  bool list = false;
  std::vector<int> only;
  accept->add_flag("--list", list, "print the criteria without running them");
  accept->add_option("--out", out, "output directory (default: out/accept)");
  accept->add_option("--only", only, "run only these criterion ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (accept->parsed()) {
      if (list) {
        list_acceptance(std::cout);
        return 0;
      }
      const fs::path dir = out.empty() ? fs::path("out/accept") : fs::path(out);
      const auto results = run_acceptance(dir, std::set<int>(only.begin(), only.end()), std::cout);
      std::size_t failed = 0;
      for (const auto& r : results) failed += r.passed ? 0 : 1;
      std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
      for (const auto& r : results) {
        if (!r.passed) std::cout << "failed: criterion " << r.id << " (" << r.name << ")\n";
      }
      return failed == 0 ? 0 : 1;
    }
    for (const auto& cmd : commands()) {
      if (!subs[cmd.name]->parsed()) continue;
      if (show_schema) {
        print_schema(cmd.schema());
        return 0;
      }
      return run_command(cmd, config, seed, out.empty() ? fs::path("out") / cmd.name : fs::path(out));
    }
  } catch (const rflab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
