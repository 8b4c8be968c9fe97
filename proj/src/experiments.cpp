#include "rflab/experiments.hpp"

#include "rflab/errors.hpp"
#include "rflab/io.hpp"
#include "rflab/kernels.hpp"
#include "rflab/metrics.hpp"
#include "rflab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>

namespace rflab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

LatentVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const LatentVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Coordinates joined by spaces, so a vector fits in one CSV field.
std::string join_coords(const LatentVector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

LatentVector gaussian_draw(const GaussianSpec& spec, RngState& rng) {
  return spec.mu() + std::sqrt(spec.sigma_sq()) * sample_standard_normal(rng, spec.dimension());
}

GaussianSpec gaussian_from(const RunConfig& cfg) {
  const auto d = cfg.get_size("d");
  const auto mu = cfg.get_doubles("mu");
  if (mu.size() != d) {
    throw ConfigError("'mu' has " + std::to_string(mu.size()) + " entries but d=" + std::to_string(d));
  }
  return GaussianSpec(to_vector(mu), cfg.get_double("sigma_sq"));
}

void append(ConfigSchema& schema, const ConfigSchema& more) { schema.insert(schema.end(), more.begin(), more.end()); }

ConfigSchema domain_keys() {
  return {
      {"a_generator", "gaussians8", "domain a generator: gaussians8 | ring | two_moons"},
      {"a_radius", 2.0, "domain a radius"},
      {"a_noise", 0.1, "domain a per-coordinate noise std"},
      {"a_count", 4096, "domain a sample count"},
      {"a_seed", 11, "domain a sampling seed"},
      {"b_generator", "ring", "domain b generator"},
      {"b_radius", 3.0, "domain b radius"},
      {"b_noise", 0.1, "domain b per-coordinate noise std"},
      {"b_shift_x", 0.0, "domain b horizontal offset"},
      {"b_shift_y", 0.0, "domain b vertical offset"},
      {"b_count", 4096, "domain b sample count"},
      {"b_seed", 12, "domain b sampling seed"},
  };
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

std::unique_ptr<NetParams> load_matching_checkpoint(const std::string& path, std::size_t d) {
  if (path.empty()) throw ConfigError("source=checkpoint requires the 'checkpoint' key");
  auto params = std::make_unique<NetParams>(load_checkpoint(path));
  if (params->dimension() != d) {
    throw ConfigError("checkpoint dimension " + std::to_string(params->dimension()) + " does not match configured d=" +
                      std::to_string(d));
  }
  return params;
}

void check_source(const std::string& source) {
  if (source != "analytic" && source != "checkpoint") {
    throw ConfigError("unknown field source '" + source + "' (expected analytic or checkpoint)");
  }
}

}  // namespace

// ---------------------------------------------------------------- schemas

ConfigSchema theorem1_schema() {
  return {
      {"d", 2, "latent dimension"},
      {"mu", json::array({3.0, -1.0}), "mean of the clean Gaussian"},
      {"sigma_sq", 0.25, "variance of the clean Gaussian"},
      {"timesteps", json::array({0.2, 0.5, 0.8}), "timesteps to check"},
      {"samples", 200000, "joint (z0, z1) draws per timestep"},
      {"bandwidth", 0.05, "Gaussian kernel bandwidth"},
      {"probes_per_t", 20, "probe points per timestep, drawn from the z_t marginal"},
      {"min_ess", 100.0, "probes with a smaller effective sample size are unreliable"},
      {"tolerance", 0.05, "maximum relative error over reliable probes"},
      {"seed", 0, "rng seed"},
  };
}

ConfigSchema theorem2_schema() {
  return {
      {"d", 2, "latent dimension"},
      {"means", json::array({2.0, 0.0, -2.0, 0.0}), "component means, concatenated"},
      {"sigma_sqs", json::array({0.1, 0.1}), "component variances"},
      {"weights", json::array({0.5, 0.5}), "component weights"},
      {"pairs", 128, "number of (z0, z1) pairs"},
      {"min_pairs", 100, "minimum usable pairs for a verdict"},
      {"timesteps", json::array({0.9, 0.95, 0.99, 0.995, 0.999}), "timesteps approaching 1"},
      {"slope_min", 0.85, "lower bound on the mean log-log slope"},
      {"slope_max", 1.15, "upper bound on the mean log-log slope"},
      {"seed", 0, "rng seed"},
  };
}

ConfigSchema fig4_schema() {
  return {
      {"source", "analytic", "analytic | checkpoint"},
      {"checkpoint", "", "checkpoint path when source=checkpoint"},
      {"d", 2, "latent dimension"},
      {"mu_norm", 512.0, "analytic field: mean is (mu_norm, 0, ..., 0)"},
      {"sigma_sq", 0.03, "analytic field: variance"},
      {"steps", 50, "Euler steps"},
      {"runs", 1000, "sampling runs averaged"},
      {"marginal_samples", 100000, "analytic field: draws per timestep for the marginal norm"},
      {"keep_runs", 10, "runs written to fig4_runs.csv"},
      {"tag", "none", "domain tag passed to the field"},
      {"tolerance", 0.02, "analytic field: max relative gap between marginal and theoretical norm"},
      {"seed", 0, "rng seed"},
  };
}

ConfigSchema train_schema() {
  ConfigSchema s{
      {"dataset", "gaussian", "gaussian | domains (even mixture of the two benchmark domains)"},
      {"d", 2, "latent dimension"},
      {"mu", json::array({3.0, -1.0}), "gaussian dataset mean"},
      {"sigma_sq", 0.25, "gaussian dataset variance"},
      {"hidden", json::array({64, 64}), "hidden layer widths"},
      {"activation", "tanh", "hidden activation"},
      {"lr", 1e-3, "Adam learning rate"},
      {"batch", 128, "batch size"},
      {"steps", 20000, "optimizer steps"},
      {"rmse_grid", 8, "gaussian dataset: grid points per axis for the fidelity check"},
      {"rmse_timesteps", json::array({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}), "fidelity timesteps"},
      {"rmse_max", 0.1, "gaussian dataset: maximum pooled RMSE"},
      {"seed", 0, "rng seed"},
  };
  append(s, domain_keys());
  return s;
}

ConfigSchema finetune_schema() {
  ConfigSchema s{
      {"checkpoint", "", "pretrained checkpoint (required)"},
      {"strategies", json::array({"vanilla", "inversion", "treft"}), "strategies to sweep"},
      {"lr_gen", 3e-5, "generator learning rate"},
      {"lr_disc", 6e-5, "discriminator learning rate"},
      {"steps", 3000, "generator steps"},
      {"batch", 128, "batch size per domain"},
      {"eval_every", 250, "evaluation interval"},
      {"eval_samples", 2048, "held-out samples per domain for evaluation"},
      {"disc_hidden", json::array({64, 64}), "discriminator hidden widths"},
      {"w_cyc", 0.5, "cycle-consistency weight"},
      {"w_idt", 1.0, "identity weight"},
      {"w_gan", 1.0, "adversarial weight"},
      {"t_inv", 0.5, "inversion step size"},
      {"save_checkpoints", true, "write a checkpoint at every evaluation"},
      {"seed", 0, "rng seed"},
  };
  append(s, domain_keys());
  return s;
}

ConfigSchema translate_schema() {
  return {
      {"source", "analytic", "analytic | checkpoint"},
      {"checkpoint", "", "checkpoint path when source=checkpoint"},
      {"d", 2, "latent dimension"},
      {"mu", json::array({3.0, -1.0}), "analytic field mean; also the input distribution"},
      {"sigma_sq", 0.25, "analytic field variance; also the input distribution"},
      {"strategy", "treft", "vanilla | inversion | treft"},
      {"t_inv", 0.5, "inversion step size"},
      {"tag", "a2b", "domain tag"},
      {"input", "", "CSV with columns z_0..z_{d-1}; empty draws 'count' inputs"},
      {"count", 256, "number of drawn inputs when 'input' is empty"},
      {"seed", 0, "rng seed"},
  };
}

ConfigSchema angles_schema() {
  return {
      {"d", 16, "latent dimension"},
      {"pairs", 3582, "number of (a, b) pairs"},
      {"mu_value", 1.0, "every coordinate of the field mean"},
      {"sigma_sq", 1.0, "field variance"},
      {"noise_scale", 0.1, "b = a + noise_scale * ||a|| * unit noise"},
      {"cos_treft_min", 0.95, "required median cos_treft"},
      {"cos_vanilla_max", 0.5, "required bound on median |cos_vanilla|"},
      {"seed", 0, "rng seed"},
  };
}

// ---------------------------------------------------------------- helpers

std::vector<double> velocity_rmse_grid(const NetParams& params, const GaussianSpec& spec,
                                       const std::vector<double>& timesteps, std::size_t n) {
  if (spec.dimension() != 2 || params.dimension() != 2) throw ConfigError("velocity_rmse_grid: needs d = 2");
  if (n < 2) throw ConfigError("velocity_rmse_grid: grid needs at least 2 points per axis");
  std::vector<double> out;
  for (double t : timesteps) {
    check_timestep(t);
    const double s = std::sqrt(t * t * spec.sigma_sq() + (1.0 - t) * (1.0 - t));
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gx = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        const double gy = -2.0 + 4.0 * static_cast<double>(j) / static_cast<double>(n - 1);
        LatentVector x = t * spec.mu();
        x[0] += s * gx;
        x[1] += s * gy;
        sq += (forward(params, x, t, DomainTag::none) - expected_velocity(x, t, spec)).squaredNorm();
      }
    }
    out.push_back(std::sqrt(sq / static_cast<double>(n * n * 2)));
  }
  return out;
}

std::pair<DomainDataset, DomainDataset> benchmark_domains(const RunConfig& cfg) {
  DatasetSpec a;
  a.generator = cfg.get_string("a_generator");
  a.radius = cfg.get_double("a_radius");
  a.noise = cfg.get_double("a_noise");
  a.count = cfg.get_size("a_count");
  a.seed = cfg.get_u64("a_seed");
  DatasetSpec b;
  b.generator = cfg.get_string("b_generator");
  b.radius = cfg.get_double("b_radius");
  b.noise = cfg.get_double("b_noise");
  b.shift_x = cfg.get_double("b_shift_x");
  b.shift_y = cfg.get_double("b_shift_y");
  b.count = cfg.get_size("b_count");
  b.seed = cfg.get_u64("b_seed");
  return {make_dataset("a", a), make_dataset("b", b)};
}

void write_history(const fs::path& path, const std::vector<MetricRow>& rows) {
  CsvWriter csv(path, {"step", "strategy", "frechet_a2b", "frechet_b2a", "struct_a2b", "struct_b2a", "d_loss",
                       "g_loss", "cyc", "idt"});
  for (const auto& r : rows) {
    csv.row({r.step, to_string(r.strategy), r.frechet_a2b, r.frechet_b2a, r.struct_a2b, r.struct_b2a, r.d_loss,
             r.g_loss, r.cyc, r.idt});
  }
}

// ---------------------------------------------------------------- commands

CommandReport cmd_theorem1(const RunConfig& cfg, const fs::path& out, const VelocityFormula& formula) {
  const GaussianSpec spec = gaussian_from(cfg);
  const auto d = static_cast<Eigen::Index>(spec.dimension());
  const auto n = cfg.get_size("samples");
  const auto n_probes = cfg.get_size("probes_per_t");
  const double h = cfg.get_double("bandwidth");
  const double min_ess = cfg.get_double("min_ess");
  const auto timesteps = cfg.get_doubles("timesteps");
  if (n == 0 || n_probes == 0) throw ConfigError("theorem1: samples and probes_per_t must be positive");
  cfg.write_resolved(out);

  const RngState root(cfg.get_u64("seed"));
  CsvWriter csv(out / "theorem1.csv", {"t", "probe", "analytic", "mc", "rel_err", "ess", "reliable"});
  CommandReport report;
  double max_rel = 0.0;
  std::size_t reliable = 0;
  std::size_t unreliable = 0;
  for (std::size_t k = 0; k < timesteps.size(); ++k) {
    const double t = timesteps[k];
    check_timestep(t);
    RngState rng = root.fork(2 * k);
    Matrix x(d, static_cast<Eigen::Index>(n));
    Matrix y(d, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const LatentVector z1 = gaussian_draw(spec, rng);
      const LatentVector z0 = sample_standard_normal(rng, spec.dimension());
      x.col(static_cast<Eigen::Index>(i)) = t * z1 + (1.0 - t) * z0;
      y.col(static_cast<Eigen::Index>(i)) = z1 - z0;
    }
    RngState probe_rng = root.fork(2 * k + 1);
    const double s = std::sqrt(t * t * spec.sigma_sq() + (1.0 - t) * (1.0 - t));
    Matrix probes(d, static_cast<Eigen::Index>(n_probes));
    for (std::size_t p = 0; p < n_probes; ++p) {
      probes.col(static_cast<Eigen::Index>(p)) = t * spec.mu() + s * sample_standard_normal(probe_rng, spec.dimension());
    }
    const auto est = kernel_regression(x, y, probes, h);
    for (std::size_t p = 0; p < n_probes; ++p) {
      const LatentVector probe = probes.col(static_cast<Eigen::Index>(p));
      const LatentVector analytic = formula(probe, t, spec);
      const LatentVector mc = est.estimate.col(static_cast<Eigen::Index>(p));
      const double denom = analytic.norm();
      const double rel = denom > 0.0 ? (mc - analytic).norm() / denom : (mc - analytic).norm();
      const bool ok = est.ess[p] >= min_ess;
      if (ok) {
        ++reliable;
        max_rel = std::max(max_rel, rel);
      } else {
        ++unreliable;
      }
      csv.row({t, join_coords(probe), join_coords(analytic), join_coords(mc), rel, est.ess[p], ok ? 1 : 0});
    }
  }
  report.values["max_rel_err"] = max_rel;
  report.values["reliable_probes"] = static_cast<double>(reliable);
  report.values["unreliable_probes"] = static_cast<double>(unreliable);
  report.passed = reliable > 0 && max_rel < cfg.get_double("tolerance");
  if (reliable == 0) report.notes.push_back("no probe reached the effective-sample guard");
  return report;
}

CommandReport cmd_theorem2(const RunConfig& cfg, const fs::path& out) {
  const auto d = cfg.get_size("d");
  const auto means = cfg.get_doubles("means");
  const auto vars = cfg.get_doubles("sigma_sqs");
  const auto weights = cfg.get_doubles("weights");
  if (weights.empty() || vars.size() != weights.size() || means.size() != weights.size() * d) {
    throw ConfigError("theorem2: means, sigma_sqs and weights describe different component counts");
  }
  std::vector<MixtureComponent> comps;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const LatentVector mu = Eigen::Map<const LatentVector>(means.data() + k * d, static_cast<Eigen::Index>(d));
    comps.push_back({weights[k], GaussianSpec(mu, vars[k])});
  }
  const MixtureSpec mixture(std::move(comps));
  const auto timesteps = cfg.get_doubles("timesteps");
  if (timesteps.size() < 2) throw ConfigError("theorem2: need at least two timesteps for a slope");
  for (double t : timesteps) {
    check_timestep(t);
    if (t >= 1.0) throw ConfigError("theorem2: timesteps must be below 1");
  }
  cfg.write_resolved(out);

  const RngState root(cfg.get_u64("seed"));
  CsvWriter errors_csv(out / "theorem2_errors.csv", {"pair_id", "t", "one_minus_t", "error"});
  CsvWriter slopes_csv(out / "theorem2_slopes.csv", {"pair_id", "slope"});
  std::vector<double> xs;
  for (double t : timesteps) xs.push_back(std::log(1.0 - t));
  const double x_mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());

  double slope_sum = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < cfg.get_size("pairs"); ++i) {
    RngState rng = root.fork(i);
    const LatentVector z1 = mixture.sample(rng);
    const LatentVector z0 = sample_standard_normal(rng, d);
    std::vector<double> errs;
    bool ok = true;
    try {
      for (double t : timesteps) {
        const double e = (expected_velocity_mixture(t * z1 + (1.0 - t) * z0, t, mixture) - z1).norm();
        if (!(e > 0.0) || !std::isfinite(e)) ok = false;
        errs.push_back(e);
      }
    } catch (const NumericalDegeneracy&) {
      ok = false;
    }
    if (!ok) {
      ++skipped;
      continue;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    const double y_mean = [&] {
      double s = 0.0;
      for (double e : errs) s += std::log(e);
      return s / static_cast<double>(errs.size());
    }();
    for (std::size_t k = 0; k < timesteps.size(); ++k) {
      errors_csv.row({i, timesteps[k], 1.0 - timesteps[k], errs[k]});
      sxy += (xs[k] - x_mean) * (std::log(errs[k]) - y_mean);
      sxx += (xs[k] - x_mean) * (xs[k] - x_mean);
    }
    const double slope = sxy / sxx;
    slopes_csv.row({i, slope});
    slope_sum += slope;
    ++used;
  }
  CommandReport report;
  const double mean_slope = used ? slope_sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
  report.values["mean_slope"] = mean_slope;
  report.values["pairs_used"] = static_cast<double>(used);
  report.values["pairs_skipped"] = static_cast<double>(skipped);
  report.passed = used >= cfg.get_size("min_pairs") && mean_slope >= cfg.get_double("slope_min") &&
                  mean_slope <= cfg.get_double("slope_max");
  return report;
}

CommandReport cmd_fig4(const RunConfig& cfg, const fs::path& out) {
  const auto d = cfg.get_size("d");
  check_source(cfg.get_string("source"));
  const bool analytic = cfg.get_string("source") == "analytic";
  const auto tag = parse_domain_tag(cfg.get_string("tag"));
  std::unique_ptr<NetParams> storage;
  std::unique_ptr<VelocityField> field;
  std::optional<GaussianSpec> spec;
  if (analytic) {
    if (d == 0) throw InvalidDimension("fig4: d must be >= 1");
    LatentVector mu = LatentVector::Zero(static_cast<Eigen::Index>(d));
    mu[0] = cfg.get_double("mu_norm");
    spec.emplace(mu, cfg.get_double("sigma_sq"));
    field = std::make_unique<GaussianField>(*spec);
  } else {
    storage = load_matching_checkpoint(cfg.get_string("checkpoint"), d);
    field = std::make_unique<NeuralField>(*storage);
  }
  const Schedule schedule = Schedule::uniform(cfg.get_size("steps"));
  cfg.write_resolved(out);

  const RngState root(cfg.get_u64("seed"));
  const auto batch = sample_curves(*field, schedule, cfg.get_size("runs"), root.fork(0).next_u64(), tag,
                                   cfg.get_size("keep_runs"));
  std::vector<double> marginal;
  std::vector<double> theory;
  if (spec) {
    const CleanSampler data = [&](RngState& r) { return gaussian_draw(*spec, r); };
    marginal = marginal_z0_norm_rms(*field, data, schedule.timesteps(), cfg.get_size("marginal_samples"),
                                    root.fork(1).next_u64());
    for (double t : schedule.timesteps()) theory.push_back(std::sqrt(expected_z0_norm_sq(t, *spec)));
  }

  CsvWriter csv(out / "fig4.csv", {"t", "cos_sim", "z0_norm", "z0_norm_marginal", "z0_norm_theory"});
  const auto& m = batch.mean;
  double max_gap = 0.0;
  for (std::size_t k = 0; k < m.t.size(); ++k) {
    std::optional<double> cos;
    if (m.cos_count[k] > 0) cos = m.cos_sim_mean[k];
    std::optional<double> marg;
    std::optional<double> th;
    if (spec) {
      marg = marginal[k];
      th = theory[k];
      const double gap = theory[k] > 0.0 ? std::abs(marginal[k] - theory[k]) / theory[k]
                                         : (marginal[k] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      max_gap = std::max(max_gap, gap);
    }
    csv.row({m.t[k], cos, m.z0_norm_rms[k], marg, th});
  }
  CsvWriter runs(out / "fig4_runs.csv", {"run_id", "step_index", "t", "cos_sim", "z0_norm"});
  for (std::size_t r = 0; r < batch.runs.size(); ++r) {
    for (std::size_t k = 0; k < batch.runs[r].size(); ++k) {
      const auto& row = batch.runs[r][k];
      runs.row({r, k, row.t, row.cos_sim, row.z0_norm});
    }
  }

  CommandReport report;
  const bool cos_up = strictly_increasing(m.cos_sim_mean);
  const double cos_final = m.cos_sim_mean.back();
  report.values["cos_final"] = cos_final;
  report.values["cos_increasing"] = cos_up ? 1.0 : 0.0;
  report.values["z0_norm_decreasing"] = strictly_decreasing(m.z0_norm_rms) ? 1.0 : 0.0;
  if (spec) {
    const bool marg_down = strictly_decreasing(marginal);
    report.values["max_rel_gap"] = max_gap;
    report.values["marginal_decreasing"] = marg_down ? 1.0 : 0.0;
    report.passed = max_gap <= cfg.get_double("tolerance") && marg_down && std::abs(cos_final - 1.0) <= 1e-6;
  } else {
    report.passed = cos_up;
  }
  return report;
}

CommandReport cmd_train(const RunConfig& cfg, const fs::path& out) {
  FlowTrainConfig tc;
  tc.d = cfg.get_size("d");
  tc.hidden = cfg.get_sizes("hidden");
  tc.activation = parse_activation(cfg.get_string("activation"));
  tc.lr = cfg.get_double("lr");
  tc.batch = cfg.get_size("batch");
  tc.steps = cfg.get_size("steps");
  tc.seed = cfg.get_u64("seed");
  if (tc.hidden.empty()) throw ConfigError("train: at least one hidden layer is required");

  const auto dataset = cfg.get_string("dataset");
  std::optional<GaussianSpec> spec;
  std::optional<std::pair<DomainDataset, DomainDataset>> domains;
  CleanSampler data;
  if (dataset == "gaussian") {
    spec.emplace(gaussian_from(cfg));
    data = [&](RngState& r) { return gaussian_draw(*spec, r); };
  } else if (dataset == "domains") {
    domains.emplace(benchmark_domains(cfg));
    if (domains->first.dimension() != tc.d) throw ConfigError("train: domain dimension differs from d");
    data = [&](RngState& r) { return r.next_uniform() < 0.5 ? domains->first.sample(r) : domains->second.sample(r); };
  } else {
    throw ConfigError("train: unknown dataset '" + dataset + "' (expected gaussian or domains)");
  }
  cfg.write_resolved(out);

  RngState rng = RngState(tc.seed).fork(1);
  const auto result = train_flow_matching(tc, data, rng);
  {
    CsvWriter csv(out / "loss.csv", {"step", "loss"});
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) csv.row({i + 1, result.loss_history[i]});
  }
  save_checkpoint(out / "model.ckpt", result.params);

  CommandReport report;
  report.values["final_loss"] = result.loss_history.back();
  if (spec) {
    const auto ts = cfg.get_doubles("rmse_timesteps");
    const auto rmse = velocity_rmse_grid(result.params, *spec, ts, cfg.get_size("rmse_grid"));
    CsvWriter csv(out / "fidelity.csv", {"t", "rmse"});
    double pooled = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      csv.row({ts[k], rmse[k]});
      pooled += rmse[k] * rmse[k];
    }
    pooled = std::sqrt(pooled / static_cast<double>(ts.size()));
    report.values["rmse"] = pooled;
    report.passed = pooled <= cfg.get_double("rmse_max");
  }
  return report;
}

CommandReport cmd_finetune(const RunConfig& cfg, const fs::path& out) {
  const auto ckpt = cfg.get_string("checkpoint");
  if (ckpt.empty()) throw ConfigError("finetune requires a pretrained checkpoint (config key 'checkpoint')");
  if (!fs::exists(ckpt)) throw ConfigError("pretrained checkpoint not found: " + ckpt);
  const NetParams pretrained = load_checkpoint(ckpt);
  const auto [data_a, data_b] = benchmark_domains(cfg);

  std::vector<FinetuneConfig> runs;
  for (const auto& name : cfg.get_strings("strategies")) {
    FinetuneConfig fc;
    fc.strategy = parse_strategy(name);
    fc.weights = {cfg.get_double("w_cyc"), cfg.get_double("w_idt"), cfg.get_double("w_gan")};
    fc.inversion.t_inv = cfg.get_double("t_inv");
    fc.lr_gen = cfg.get_double("lr_gen");
    fc.lr_disc = cfg.get_double("lr_disc");
    fc.steps = cfg.get_size("steps");
    fc.batch = cfg.get_size("batch");
    fc.seed = cfg.get_u64("seed");
    fc.eval_every = cfg.get_size("eval_every");
    fc.eval_samples = cfg.get_size("eval_samples");
    fc.disc_hidden = cfg.get_sizes("disc_hidden");
    fc.validate();
    runs.push_back(fc);
  }
  if (runs.empty()) throw ConfigError("finetune: 'strategies' is empty");
  cfg.write_resolved(out);

  CommandReport report;
  const bool save = cfg.get_bool("save_checkpoints");
  for (const auto& fc : runs) {
    const std::string name(to_string(fc.strategy));
    const auto result = finetune(fc, pretrained, data_a, data_b, [&](const MetricRow& row, const NetParams& p) {
      if (save) save_checkpoint(out / ("ckpt_" + name + "_" + std::to_string(row.step) + ".ckpt"), p);
    });
    write_history(out / ("history_" + name + ".csv"), result.history);
    const auto& last = result.history.back();
    report.values["final_frechet_a2b_" + name] = last.frechet_a2b;
    report.values["final_frechet_b2a_" + name] = last.frechet_b2a;
    report.values["final_struct_a2b_" + name] = last.struct_a2b;
    if (result.disc_collapse) {
      report.notes.push_back(name + ": discriminator loss stayed below 1e-6 for 500 steps from step " +
                             std::to_string(result.collapse_step));
    }
  }
  return report;
}

CommandReport cmd_translate(const RunConfig& cfg, const fs::path& out) {
  const auto d = cfg.get_size("d");
  check_source(cfg.get_string("source"));
  std::unique_ptr<NetParams> storage;
  std::unique_ptr<VelocityField> field;
  if (cfg.get_string("source") == "analytic") {
    field = std::make_unique<GaussianField>(gaussian_from(cfg));
  } else {
    storage = load_matching_checkpoint(cfg.get_string("checkpoint"), d);
    field = std::make_unique<NeuralField>(*storage);
  }
  const auto strategy = parse_strategy(cfg.get_string("strategy"));
  const auto tag = parse_domain_tag(cfg.get_string("tag"));
  InversionConfig inv{cfg.get_double("t_inv")};
  inv.validate();

  std::vector<LatentVector> inputs;
  const auto input_path = cfg.get_string("input");
  if (input_path.empty()) {
    const GaussianSpec spec = gaussian_from(cfg);
    RngState rng(cfg.get_u64("seed"));
    for (std::size_t i = 0; i < cfg.get_size("count"); ++i) inputs.push_back(gaussian_draw(spec, rng));
  } else {
    const auto table = read_csv(input_path);
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < d; ++j) cols.push_back(table.column("z_" + std::to_string(j)));
    for (const auto& row : table.rows) {
      LatentVector z(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) z[static_cast<Eigen::Index>(j)] = parse_double(row[cols[j]]);
      inputs.push_back(z);
    }
  }
  cfg.write_resolved(out);

  std::vector<std::string> header;
  for (std::size_t j = 0; j < d; ++j) header.push_back("z_" + std::to_string(j));
  CsvWriter in_csv(out / "input.csv", header);
  CsvWriter out_csv(out / "output.csv", header);
  double max_change = 0.0;
  for (const auto& z : inputs) {
    const LatentVector y = translate(strategy, *field, z, inv, tag);
    std::vector<CsvCell> a;
    std::vector<CsvCell> b;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      a.emplace_back(z[j]);
      b.emplace_back(y[j]);
    }
    in_csv.row(a);
    out_csv.row(b);
    max_change = std::max(max_change, (y - z).cwiseAbs().maxCoeff());
  }
  CommandReport report;
  report.values["count"] = static_cast<double>(inputs.size());
  report.values["max_abs_change"] = max_change;
  return report;
}

CommandReport cmd_angles(const RunConfig& cfg, const fs::path& out) {
  const auto d = cfg.get_size("d");
  if (d == 0) throw InvalidDimension("angles: d must be >= 1");
  const GaussianSpec spec(LatentVector::Constant(static_cast<Eigen::Index>(d), cfg.get_double("mu_value")),
                          cfg.get_double("sigma_sq"));
  const double scale = cfg.get_double("noise_scale");
  cfg.write_resolved(out);

  RngState rng(cfg.get_u64("seed"));
  std::vector<std::pair<LatentVector, LatentVector>> pairs;
  for (std::size_t i = 0; i < cfg.get_size("pairs"); ++i) {
    const LatentVector a = gaussian_draw(spec, rng);
    const LatentVector u = sample_standard_normal(rng, d);
    pairs.emplace_back(a, a + scale * a.norm() * u.normalized());
  }
  const GaussianField field(spec);
  const auto stats = flow_angle_stats(field, pairs);

  CsvWriter csv(out / "angles.csv", {"pair_id", "cos_treft", "cos_vanilla"});
  for (std::size_t k = 0; k < stats.pair_ids.size(); ++k) {
    csv.row({stats.pair_ids[k], stats.cos_treft[k], stats.cos_vanilla[k]});
  }
  CommandReport report;
  const double med_treft = median(stats.cos_treft);
  const double med_vanilla = median_abs(stats.cos_vanilla);
  report.values["rows"] = static_cast<double>(csv.rows());
  report.values["skipped"] = static_cast<double>(stats.skipped);
  report.values["median_cos_treft"] = med_treft;
  report.values["median_abs_cos_vanilla"] = med_vanilla;
  report.passed = med_treft > cfg.get_double("cos_treft_min") && med_vanilla < cfg.get_double("cos_vanilla_max");
  return report;
}

}  // namespace rflab
