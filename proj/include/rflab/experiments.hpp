#pragma once

// Config-driven experiment commands. Each command has a schema (its config
// keys with defaults), writes its resolved config plus CSV artifacts into an
// output directory, and returns a summary with a verdict where one applies.

#include "rflab/adversarial.hpp"
#include "rflab/analytic_flow.hpp"
#include "rflab/config.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace rflab {

/// Outcome of one command: named scalar results plus an optional verdict.
struct CommandReport {
  bool passed = true;
  std::map<std::string, double> values;
  std::vector<std::string> notes;
};

/// Closed-form velocity under test in theorem1; replaceable so a deliberately
/// broken formula can be shown to fail the check.
using VelocityFormula = std::function<LatentVector(const LatentVector&, double, const GaussianSpec&)>;

ConfigSchema theorem1_schema();
ConfigSchema theorem2_schema();
ConfigSchema fig4_schema();
ConfigSchema train_schema();
ConfigSchema finetune_schema();
ConfigSchema translate_schema();
ConfigSchema angles_schema();

/// Nadaraya-Watson estimate of E[z1 - z0 | z_t = x] versus the closed form at
/// probes drawn from the z_t marginal. CSV `theorem1.csv`:
/// t, probe, analytic, mc, rel_err, ess, reliable.
CommandReport cmd_theorem1(const RunConfig& cfg, const std::filesystem::path& out,
                           const VelocityFormula& formula = expected_velocity);

/// ||E[z1 - z0 | z_t] - z1*|| against (1 - t) for pairs (z0, z1*) under a
/// mixture prior. CSVs `theorem2_errors.csv` (pair_id, t, one_minus_t, error)
/// and `theorem2_slopes.csv` (pair_id, slope).
CommandReport cmd_theorem2(const RunConfig& cfg, const std::filesystem::path& out);

/// Averaged sampling curves. CSV `fig4.csv`:
/// t, cos_sim, z0_norm, z0_norm_marginal, z0_norm_theory
/// and `fig4_runs.csv`: run_id, step_index, t, cos_sim, z0_norm.
CommandReport cmd_fig4(const RunConfig& cfg, const std::filesystem::path& out);

/// Flow-matching training. Writes `loss.csv` (step, loss), `model.ckpt` and,
/// for the Gaussian dataset, `fidelity.csv` (t, rmse) against the closed form.
CommandReport cmd_train(const RunConfig& cfg, const std::filesystem::path& out);

/// Strategy sweep from a pretrained checkpoint. Per strategy s:
/// `history_<s>.csv` and `ckpt_<s>_<step>.ckpt` at every evaluation.
CommandReport cmd_finetune(const RunConfig& cfg, const std::filesystem::path& out);

/// Translates a set of latents. Writes `input.csv` and `output.csv`, both
/// with columns z_0 .. z_{d-1}.
CommandReport cmd_translate(const RunConfig& cfg, const std::filesystem::path& out);

/// Flow-angle statistics on a constructed pair set. CSV `angles.csv`:
/// pair_id, cos_treft, cos_vanilla.
CommandReport cmd_angles(const RunConfig& cfg, const std::filesystem::path& out);

/// Shared helpers, exposed for the acceptance suite and tests.

/// Per-coordinate RMSE between a network and the closed-form velocity over
/// an n x n grid per timestep, aligned with the z_t marginal:
/// x = t mu + s(t) g with s(t)^2 = t^2 sigma^2 + (1 - t)^2 and g on a
/// uniform grid over [-2, 2]^2 (d = 2 only).
std::vector<double> velocity_rmse_grid(const NetParams& params, const GaussianSpec& spec,
                                       const std::vector<double>& timesteps, std::size_t n);

/// Domains of the translation benchmark as configured by the shared keys.
std::pair<DomainDataset, DomainDataset> benchmark_domains(const RunConfig& cfg);

/// Writes the rows of a finetune history.
void write_history(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace rflab
