#include "rflab/acceptance.hpp"

#include "rflab/analytic_flow.hpp"
#include "rflab/errors.hpp"
#include "rflab/experiments.hpp"
#include "rflab/field.hpp"
#include "rflab/gradcheck.hpp"
#include "rflab/io.hpp"
#include "rflab/translation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>

namespace rflab {

namespace {

namespace fs = std::filesystem;

// Pinned tolerances and budgets.
constexpr double kTreftIdentityTol = 1e-12;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientEps = 1e-4;
constexpr std::size_t kGradientConfigs = 10;

// Frozen translation benchmark (8 Gaussians of radius 2 -> ring of radius 3).
// The Frechet threshold for TReFT is about twice the mean of the reference
// runs recorded when the benchmark was frozen.
constexpr std::size_t kBenchPretrainSteps = 10000;
constexpr std::size_t kBenchSteps = 3000;
constexpr double kBenchLrGen = 3e-5;
constexpr double kBenchLrDisc = 6e-5;
constexpr std::uint64_t kBenchSeeds[] = {0, 1, 2};
constexpr double kTreftFrechetThreshold = 0.25;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(4) << x;
  return s.str();
}

Outcome criterion_theorem1(const fs::path& dir) {
  RunConfig cfg(theorem1_schema());
  const auto r = cmd_theorem1(cfg, dir);
  return {r.passed, "max rel err " + fmt(r.values.at("max_rel_err")) + " < " + fmt(cfg.get_double("tolerance")) +
                        " over " + fmt(r.values.at("reliable_probes")) + " reliable probes"};
}

Outcome criterion_norm_identity(const fs::path& dir) {
  RunConfig cfg(fig4_schema());
  cfg.set("runs", 1000);
  const auto r = cmd_fig4(cfg, dir);
  const bool shape = r.values.at("marginal_decreasing") == 1.0;
  const bool match = r.values.at("max_rel_gap") <= cfg.get_double("tolerance");
  return {shape && match, "max rel gap " + fmt(r.values.at("max_rel_gap")) + " <= " +
                              fmt(cfg.get_double("tolerance")) + ", strictly decreasing: " + (shape ? "yes" : "no")};
}

Outcome criterion_limit_and_rate(const fs::path& dir) {
  fs::create_directories(dir);
  // (a) v(z, 1) = z for the analytic Gaussian field.
  double worst = 0.0;
  {
    CsvWriter csv(dir / "treft_identity.csv", {"d", "sample_id", "max_abs_err"});
    RngState rng(7);
    for (std::size_t d : {2, 16}) {
      LatentVector mu(static_cast<Eigen::Index>(d));
      for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = 3.0 * rng.next_normal();
      const GaussianField field(GaussianSpec(mu, 0.25));
      for (std::size_t i = 0; i < 1000; ++i) {
        const LatentVector z = mu + 2.0 * sample_standard_normal(rng, d);
        const double err = (treft_translate(field, z, DomainTag::none) - z).cwiseAbs().maxCoeff();
        worst = std::max(worst, err / std::max(1.0, z.cwiseAbs().maxCoeff()));
        csv.row({d, i, err});
      }
    }
  }
  // (b) O(1 - t) convergence of the mixture posterior.
  RunConfig cfg(theorem2_schema());
  const auto r = cmd_theorem2(cfg, dir);
  const bool a_ok = worst <= kTreftIdentityTol;
  return {a_ok && r.passed, "(a) max identity err " + fmt(worst) + " <= 1e-12; (b) slope " +
                                fmt(r.values.at("mean_slope")) + " in [0.85, 1.15] over " +
                                fmt(r.values.at("pairs_used")) + " pairs"};
}

Outcome criterion_gradients(const fs::path& dir) {
  fs::create_directories(dir);
  CsvWriter csv(dir / "gradients.csv", {"config_id", "loss", "params_checked", "rel_err", "max_component_rel_err"});
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t c = 0; c < kGradientConfigs; ++c) {
    for (const auto& g : gradient_suite(GradSuiteConfig::make(c), kGradientEps)) {
      csv.row({c, g.name, g.checked, g.rel_err, g.max_component_rel_err});
      if (g.rel_err >= worst) {
        worst = g.rel_err;
        worst_name = g.name + " #" + std::to_string(c);
      }
    }
  }
  return {worst < kGradientTol, "max rel err " + fmt(worst) + " < 1e-4 (worst: " + worst_name + ")"};
}

Outcome criterion_pretraining(const fs::path& dir) {
  RunConfig cfg(train_schema());
  const auto r = cmd_train(cfg, dir);
  return {r.passed, "RMSE " + fmt(r.values.at("rmse")) + " <= 0.1 after " + std::to_string(cfg.get_size("steps")) +
                        " steps"};
}

Outcome criterion_convergence_gap(const fs::path& dir) {
  double treft = 0.0;
  double vanilla = 0.0;
  double inversion = 0.0;
  for (const auto seed : kBenchSeeds) {
    const auto seed_dir = dir / ("seed" + std::to_string(seed));
    RunConfig pre(train_schema());
    pre.set("dataset", "domains");
    pre.set("steps", kBenchPretrainSteps);
    pre.set("seed", seed);
    pre.set("a_seed", 11 + seed);
    pre.set("b_seed", 12 + seed);
    cmd_train(pre, seed_dir / "pretrain");

    RunConfig ft(finetune_schema());
    ft.set("checkpoint", (seed_dir / "pretrain" / "model.ckpt").string());
    ft.set("steps", kBenchSteps);
    ft.set("lr_gen", kBenchLrGen);
    ft.set("lr_disc", kBenchLrDisc);
    ft.set("eval_every", 500);
    ft.set("save_checkpoints", false);
    ft.set("seed", seed);
    ft.set("a_seed", 11 + seed);
    ft.set("b_seed", 12 + seed);
    const auto r = cmd_finetune(ft, seed_dir / "finetune");
    treft += r.values.at("final_frechet_a2b_treft");
    vanilla += r.values.at("final_frechet_a2b_vanilla");
    inversion += r.values.at("final_frechet_a2b_inversion");
  }
  const double n = static_cast<double>(std::size(kBenchSeeds));
  treft /= n;
  vanilla /= n;
  inversion /= n;
  {
    CsvWriter csv(dir / "summary.csv", {"strategy", "mean_final_frechet_a2b"});
    csv.row({"treft", treft});
    csv.row({"inversion", inversion});
    csv.row({"vanilla", vanilla});
  }
  const bool ok = treft < vanilla && treft <= 2.0 * inversion && treft < kTreftFrechetThreshold;
  return {ok, "mean Frechet treft " + fmt(treft) + ", vanilla " + fmt(vanilla) + ", inversion " + fmt(inversion) +
                  " (need treft < vanilla, treft <= 2x inversion, treft < " + fmt(kTreftFrechetThreshold) + ")"};
}

Outcome criterion_angles(const fs::path& dir) {
  RunConfig cfg(angles_schema());
  const auto r = cmd_angles(cfg, dir);
  return {r.passed, "median cos_treft " + fmt(r.values.at("median_cos_treft")) + " > 0.95, median |cos_vanilla| " +
                        fmt(r.values.at("median_abs_cos_vanilla")) + " < 0.5 over " + fmt(r.values.at("rows")) +
                        " pairs"};
}

struct Entry {
  CriterionInfo info;
  double budget_seconds;
  std::function<Outcome(const fs::path&)> run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {{1, "theorem1-oracle", "closed-form velocity matches a kernel-regression estimate (< 5% rel. error)"},
       60.0, criterion_theorem1},
      {{2, "z0-norm-identity", "simulated ||z0_hat|| matches the closed form within 2% and strictly decreases"},
       60.0, criterion_norm_identity},
      {{3, "t1-limit-and-rate", "v(z,1) = z for the Gaussian field; mixture posterior error slope in [0.85, 1.15]"},
       120.0, criterion_limit_and_rate},
      {{4, "gradients", "analytic gradients match central differences (rel. error < 1e-4) on 10 configurations"},
       60.0, criterion_gradients},
      {{5, "pretraining", "trained network matches the closed-form velocity on the grid (RMSE <= 0.1)"}, 600.0,
       criterion_pretraining},
      {{6, "convergence-gap", "8-Gaussians -> ring: treft < vanilla, treft <= 2x inversion, treft below threshold"},
       1800.0, criterion_convergence_gap},
      {{7, "flow-angles", "3582 constructed pairs: median cos_treft > 0.95, median |cos_vanilla| < 0.5"}, 30.0,
       criterion_angles},
      {{8, "determinism", "re-running the criteria above reproduces every CSV byte for byte"}, 0.0, nullptr},
  };
  return table;
}

std::vector<fs::path> csv_files(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary);
  std::ifstream fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

CriterionResult run_one(const Entry& e, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    fs::remove_all(dir);
    o = e.run(dir);
  } catch (const std::exception& ex) {
    o = {false, std::string("error: ") + ex.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.passed && secs > e.budget_seconds) {
    o.passed = false;
    o.detail += "; over the " + fmt(e.budget_seconds) + " s budget";
  }
  return {e.info.id, e.info.name, o.passed, o.detail, secs};
}

void print(std::ostream& log, const CriterionResult& r) {
  log << (r.passed ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << "  " << r.detail << "  [" << fmt(r.seconds)
      << " s]" << std::endl;
}

}  // namespace

const std::vector<CriterionInfo>& acceptance_criteria() {
  static const std::vector<CriterionInfo> infos = [] {
    std::vector<CriterionInfo> v;
    for (const auto& e : entries()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

void list_acceptance(std::ostream& log) {
  for (const auto& c : acceptance_criteria()) log << c.id << "  " << c.name << ": " << c.description << '\n';
}

std::vector<CriterionResult> run_acceptance(const fs::path& out, const std::set<int>& only, std::ostream& log) {
  for (int id : only) {
    if (id < 1 || id > static_cast<int>(entries().size())) throw ConfigError("unknown criterion " + std::to_string(id));
  }
  const bool all = only.empty();
  const bool determinism = all || only.count(8);
  std::vector<const Entry*> selected;
  for (const auto& e : entries()) {
    if (e.run && (all || only.count(e.info.id))) selected.push_back(&e);
  }
  // Determinism alone still needs something to re-run.
  if (determinism && selected.empty()) {
    for (const auto& e : entries()) {
      if (e.run) selected.push_back(&e);
    }
  }

  std::vector<CriterionResult> results;
  for (const Entry* e : selected) {
    results.push_back(run_one(*e, out / ("c" + std::to_string(e->info.id))));
    print(log, results.back());
  }

  if (determinism) {
    const auto start = std::chrono::steady_clock::now();
    std::size_t compared = 0;
    std::vector<std::string> mismatched;
    for (const Entry* e : selected) {
      const std::string sub = "c" + std::to_string(e->info.id);
      try {
        fs::remove_all(out / "rerun" / sub);
        e->run(out / "rerun" / sub);
      } catch (const std::exception&) {
        // A failure here shows up as missing or differing files below.
      }
      const auto first = csv_files(out / sub);
      const auto second = csv_files(out / "rerun" / sub);
      if (first != second) mismatched.push_back(sub + " (file set differs)");
      for (const auto& rel : first) {
        ++compared;
        if (!same_bytes(out / sub / rel, out / "rerun" / sub / rel)) mismatched.push_back((fs::path(sub) / rel).string());
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string detail = std::to_string(compared) + " CSV files compared, " + std::to_string(mismatched.size()) +
                         " differ";
    for (std::size_t i = 0; i < std::min<std::size_t>(mismatched.size(), 5); ++i) detail += "; " + mismatched[i];
    results.push_back({8, "determinism", compared > 0 && mismatched.empty(), detail, secs});
    print(log, results.back());
  }
  return results;
}

}  // namespace rflab
