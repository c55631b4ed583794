// Command line front end. Subcommands map onto the library pipelines:
//
//   spectrum    exact chain spectrum and adapted basis summary
//   partition   sector decomposition under the collective coupling
//   steady      asymptotic state by mode (uniform | thermal | driven-direct |
//               driven-perturbative | two-bath)
//   evolve      time-domain integration cross-check with CSV history
//   bloch-check single two-level resonance comparison (three routes)
//   dfs-check   scan for bath-protected states
//   no-cat-check structural witnesses against thermal cat preparation
//   sweep       repeat `steady` over one swept parameter
//
// Results are JSON envelopes carrying the verbatim config, version, wall time
// and a metrics block for every emitted state. Exit codes: 2 for invalid
// input, 3 for solver failures, 1 for anything else unexpected.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "catchain/analysis.hpp"
#include "catchain/bath.hpp"
#include "catchain/chain.hpp"
#include "catchain/checks.hpp"
#include "catchain/io.hpp"
#include "catchain/oracle.hpp"
#include "catchain/partition.hpp"
#include "catchain/solver.hpp"
#include "catchain/types.hpp"

namespace catchain {
namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void require_driven_temperature(const RunConfig& cfg) {
  if (cfg.bath.temperature <= 0.0)
    throw InvalidParameter(
        "driven modes require T > 0: at T = 0 the driven chain does not "
        "relax to a unique asymptotic state, so there is nothing to solve "
        "for");
}

json named_state_json(const EigenStructure& es) {
  return json{{"up_config", es.named.up.bits},
              {"down_config", es.named.down.bits},
              {"cat_plus_state", es.named.cat_plus.state},
              {"cat_minus_state", es.named.cat_minus.state}};
}

json spectrum_payload(const RunConfig& cfg) {
  const EigenStructure es = build_eigenstructure(cfg.chain);
  json levels = json::array();
  for (const Level& level : es.levels) {
    levels.push_back(json{{"energy", level.energy},
                          {"degeneracy", level.configs.size()},
                          {"configs", level.configs},
                          {"states", level.states}});
  }
  json five = json::array();
  for (std::size_t i = 0; i < es.levels.size() && i < 5; ++i)
    five.push_back(es.levels[i].energy);
  return json{{"dim", es.dim},
              {"ground_energy", es.ground_energy()},
              {"level_energies_lowest_five", five},
              {"levels", levels},
              {"state_energy", vector_to_json(es.state_energy)},
              {"named", named_state_json(es)},
              {"warnings", es.warnings}};
}

json partition_payload(const RunConfig& cfg) {
  const EigenStructure es = build_eigenstructure(cfg.chain);
  const SectorPartition part =
      build_partition(es, sx_matrix(es), cfg.bath.temperature, 1e-14, cfg.seed);
  json sectors = json::array();
  for (int q = 0; q < part.n_sectors(); ++q) {
    json members = json::array();
    for (int state : part.sets[q]) {
      members.push_back(json::array({es.state_level[state],
                                     part.state_parity[state],
                                     es.state_offset[state]}));
    }
    // True partition function, referenced to the chain ground energy so the
    // number is representable wherever the physics is.
    double zq = part.z(q);
    if (part.temperature > 0.0) {
      zq *= std::exp(-(part.z_shift(q) - es.ground_energy()) /
                     part.temperature);
    } else if (part.z_shift(q) > es.ground_energy()) {
      zq = 0.0;
    }
    sectors.push_back(json{{"pi", part.pi_label[q]},
                           {"size", part.sets[q].size()},
                           {"members", members},
                           {"z_q", zq}});
  }
  return json{{"n_sectors", part.n_sectors()},
              {"T", part.temperature},
              {"basis_is_identity", part.basis_is_identity},
              {"sectors", sectors},
              {"warnings", part.warnings}};
}

json steady_state_block(const EigenStructure& es, const DensityMatrix& rho) {
  return json{{"rho_s", density_to_json(rho)}, {"metrics", metrics_json(es, rho)}};
}

double even_odd_ratio(const EigenStructure& es, const DensityMatrix& rho) {
  const DensityMatrix adapted = to_adapted_basis(es, rho);
  const double p_plus = adapted.entries(es.named.cat_plus.state,
                                        es.named.cat_plus.state).real();
  const double p_minus = adapted.entries(es.named.cat_minus.state,
                                         es.named.cat_minus.state).real();
  return p_minus > 0.0 ? p_plus / p_minus
                       : std::numeric_limits<double>::infinity();
}

json rates_json(const EffectiveRateMatrix& rates) {
  json rows = json::array();
  for (int q = 0; q < rates.r.rows(); ++q) {
    json row = json::array();
    for (int q2 = 0; q2 < rates.r.cols(); ++q2) row.push_back(rates.r(q, q2));
    rows.push_back(std::move(row));
  }
  return json{{"r", rows},
              {"scalar_r", rates.scalar_r},
              {"column_sum_residual", rates.column_sum_residual},
              {"populations", vector_to_json(rates.populations)}};
}

json freezeout_json(const FreezeoutReport& fr) {
  return json{{"mass_above", fr.mass_above},
              {"bound", fr.bound},
              {"ratio", fr.ratio},
              {"resolvable", fr.resolvable},
              {"note", fr.note}};
}

json steady_payload(const RunConfig& cfg, const std::string& mode) {
  const EigenStructure es = build_eigenstructure(cfg.chain);
  json out{{"mode", mode}};

  if (mode == "uniform") {
    const SectorPartition part = build_partition(
        es, sx_matrix(es), cfg.bath.temperature, 1e-14, cfg.seed);
    const UniformFamily fam =
        solve_uniform(es, part, cfg.coupling, cfg.bath);
    json members = json::array();
    for (const DensityMatrix& m : fam.members)
      members.push_back(steady_state_block(es, m));
    out["family"] = json{{"nullspace_dim", fam.nullspace_dim},
                         {"max_null_residual", fam.max_null_residual},
                         {"members", members}};
    return out;
  }

  if (mode == "thermal") {
    const RateTensor rt0 =
        gamma_block(es, cfg.coupling, cfg.bath, std::nullopt, 0, 0.0);
    const ThermalSolution sol = solve_thermal(rt0, es, cfg.bath.temperature);
    out.update(steady_state_block(es, sol.steady));
    out["populations"] = vector_to_json(sol.populations);
    out["null_residual"] = sol.null_residual;
    out["nullspace_dim"] = sol.nullspace_dim;
    return out;
  }

  if (mode == "driven-direct" || mode == "driven-perturbative") {
    require_driven_temperature(cfg);
    const bool with_local = cfg.coupling.eps_local > 0.0;
    const GeneratorBlocks blocks =
        build_generator_blocks(es, cfg.coupling, cfg.bath, 1, with_local);
    const SectorPartition part = build_partition(
        es, sx_matrix(es), cfg.bath.temperature, 1e-14, cfg.seed);

    SteadyHarmonics sh;
    if (mode == "driven-direct") {
      sh = solve_driven_direct(blocks, cfg.coupling.eps_drive);
    } else {
      PerturbativeSolution ps =
          solve_driven_perturbative(blocks, part, cfg.coupling.eps_drive);
      out["rates"] = rates_json(ps.rates);
      sh = std::move(ps.harmonics);
    }
    out.update(steady_state_block(es, sh.steady));
    out["omega"] = sh.omega;
    if (sh.sector_populations.size() > 0)
      out["sector_populations"] = vector_to_json(sh.sector_populations);
    out["population_ratio_even_odd"] = even_odd_ratio(es, sh.steady);
    out["freezeout"] =
        freezeout_json(low_t_freezeout_report(sh, es, cfg.bath.temperature));
    out["warnings"] = sh.warnings;
    return out;
  }

  if (mode == "two-bath") {
    if (!cfg.bath2)
      throw InvalidParameter("two-bath mode requires a bath2 block");
    if (!(cfg.coupling.eps2_local > 0.0))
      throw InvalidParameter("two-bath mode requires eps2_local > 0");
    const SectorPartition part = build_partition(
        es, sx_matrix(es), cfg.bath.temperature, 1e-14, cfg.seed);
    const TwoBathSolution sol =
        solve_two_bath(es, part, cfg.coupling, cfg.bath, *cfg.bath2);
    out.update(steady_state_block(es, sol.harmonics.steady));
    out["rates"] = rates_json(sol.rates);
    if (sol.harmonics.sector_populations.size() > 0)
      out["sector_populations"] =
          vector_to_json(sol.harmonics.sector_populations);
    out["population_ratio_even_odd"] =
        even_odd_ratio(es, sol.harmonics.steady);
    out["warnings"] = sol.harmonics.warnings;
    return out;
  }

  throw InvalidParameter(
      "mode must be one of uniform, thermal, driven-direct, "
      "driven-perturbative, two-bath");
}

DensityMatrix evolve_seed(const EigenStructure& es, const RunConfig& cfg) {
  const std::string& kind = cfg.evolve.seed_state;
  const int dim = es.dim;
  if (kind == "mixed") {
    CMatrix m = CMatrix::Identity(dim, dim) / static_cast<double>(dim);
    return make_density_matrix(std::move(m), "adapted");
  }
  if (kind == "thermal") {
    const double t = cfg.evolve.seed_temperature;
    if (!(t > 0.0))
      throw InvalidParameter("thermal seed requires seed_temperature > 0");
    CMatrix m = CMatrix::Zero(dim, dim);
    double z = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double w = std::exp(-(es.state_energy(k) - es.ground_energy()) / t);
      m(k, k) = w;
      z += w;
    }
    m /= z;
    return make_density_matrix(std::move(m), "adapted");
  }
  if (kind == "cat_plus" || kind == "cat_minus") {
    const int state = kind == "cat_plus" ? es.named.cat_plus.state
                                         : es.named.cat_minus.state;
    CMatrix m = CMatrix::Zero(dim, dim);
    m(state, state) = 1.0;
    return make_density_matrix(std::move(m), "adapted");
  }
  if (kind == "direct") {
    require_driven_temperature(cfg);
    const bool with_local = cfg.coupling.eps_local > 0.0;
    const GeneratorBlocks blocks =
        build_generator_blocks(es, cfg.coupling, cfg.bath, 1, with_local);
    return solve_driven_direct(blocks, cfg.coupling.eps_drive).steady;
  }
  throw InvalidParameter(
      "evolve.seed_state must be one of mixed, thermal, cat_plus, cat_minus, "
      "direct");
}

json evolve_payload(RunConfig& cfg, json& result_extra) {
  if (cfg.bath2)
    throw InvalidParameter(
        "evolve integrates a single bath; drop the bath2 block");
  const EigenStructure es = build_eigenstructure(cfg.chain);
  if (cfg.coupling.eps_drive > 0.0) require_driven_temperature(cfg);

  const DensityMatrix seed = evolve_seed(es, cfg);
  EvolveOptions opts = cfg.evolve.options;
  opts.record_history = true;
  const EvolveResult res = integrate(es, cfg.coupling, cfg.bath, seed, opts);

  json out{{"seed_state", cfg.evolve.seed_state},
           {"periods", res.periods},
           {"converged", res.converged},
           {"convergence_gap", res.convergence_gap},
           {"max_trace_drift", res.max_trace_drift},
           {"max_hermiticity_gap", res.max_hermiticity_gap},
           {"min_eigenvalue", res.min_eigenvalue},
           {"stroboscopic", density_to_json(res.stroboscopic)},
           {"period_average", density_to_json(res.period_average)},
           {"metrics", metrics_json(es, res.stroboscopic)},
           {"metrics_period_average", metrics_json(es, res.period_average)},
           {"warnings", res.warnings}};

  std::string csv = cfg.evolve.history_out;
  if (csv.empty() && !cfg.out.empty()) csv = cfg.out + ".history.csv";
  if (!csv.empty()) {
    write_history_csv(csv, res.history);
    result_extra["history_csv"] = csv;
  } else {
    result_extra["history"] = history_to_json(res.history);
  }
  return out;
}

json bloch_payload(const RunConfig& cfg) {
  const BlochCheck bc = single_tls_bloch(cfg.bloch.field_h,
                                         cfg.bloch.eps_drive, cfg.bath,
                                         cfg.bloch.e_coupling);
  return json{
      {"field_h", cfg.bloch.field_h},
      {"eps_drive", cfg.bloch.eps_drive},
      {"e_coupling", cfg.bloch.e_coupling},
      {"gamma", bc.gamma},
      {"theta", bc.theta},
      {"closed_form_excited", bc.closed_form_excited},
      {"integrated_excited", bc.integrated_excited},
      {"full_cos_excited", bc.full_cos_excited},
      {"rwa_gap", std::abs(bc.integrated_excited - bc.closed_form_excited)},
      {"counter_rotating_gap",
       std::abs(bc.full_cos_excited - bc.closed_form_excited)}};
}

json dfs_payload(const RunConfig& cfg) {
  const std::vector<DfsState> found = dfs_scan(cfg.chain);
  json states = json::array();
  for (const DfsState& s : found) {
    states.push_back(json{{"energy", s.energy},
                          {"sx_value", s.sx_value},
                          {"h_residual", s.h_residual},
                          {"sx_residual", s.sx_residual},
                          {"vector", cvector_to_json(s.vector)}});
  }
  return json{{"count", found.size()}, {"states", states}};
}

json no_cat_payload(const RunConfig& cfg) {
  json out;
  if (cfg.raw.contains("chain")) {
    const NoThermalCatReport rep =
        no_thermal_cat_property(chain_local_hamiltonian(cfg.chain));
    out["chain_report"] = json{{"cross_term", rep.cross_term},
                               {"identity_gap", rep.identity_gap},
                               {"schmidt_gap", rep.schmidt_gap},
                               {"cat_energy", rep.cat_energy},
                               {"ground_energy", rep.ground_energy},
                               {"ground_gap", rep.ground_gap},
                               {"unique_ground", rep.unique_ground},
                               {"strictly_above", rep.strictly_above}};
  }
  const NoThermalCatTrials trials =
      run_no_thermal_cat_trials(cfg.trials.sites, cfg.trials.count, cfg.seed);
  out["trials"] = json{{"trials", trials.trials},
                       {"strict", trials.strict},
                       {"redraws", trials.redraws},
                       {"max_identity_gap", trials.max_identity_gap},
                       {"max_cross_term", trials.max_cross_term},
                       {"max_schmidt_gap", trials.max_schmidt_gap},
                       {"min_margin", trials.min_margin},
                       {"seed", trials.seed}};
  return out;
}

json sweep_payload(const RunConfig& cfg, int threads) {
  if (cfg.sweep.parameter.empty() || cfg.sweep.values.empty())
    throw InvalidParameter("sweep needs sweep.parameter and sweep.values");
  const int n = static_cast<int>(cfg.sweep.values.size());
  std::vector<json> results(n);
  std::vector<std::exception_ptr> errors(n);

  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n) workers = n;

  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        RunConfig point = cfg;
        apply_sweep_value(point, cfg.sweep.parameter, cfg.sweep.values[i]);
        json r = steady_payload(point, point.mode);
        r["value"] = cfg.sweep.values[i];
        results[i] = std::move(r);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  json points = json::array();
  for (json& r : results) points.push_back(std::move(r));
  return json{{"mode", cfg.mode},
              {"parameter", cfg.sweep.parameter},
              {"values", cfg.sweep.values},
              {"points", points}};
}

struct CliState {
  std::string config_path;
  std::string out_path;
  std::string mode;
  int threads = 0;
  std::optional<std::uint32_t> seed;
};

RunConfig effective_config(const CliState& st) {
  RunConfig cfg = st.config_path.empty()
                      ? parse_config(json::object())
                      : load_config(st.config_path);
  // Fold CLI overrides into the config echo so a result re-run from its own
  // envelope reproduces the same computation.
  if (!st.out_path.empty()) {
    cfg.out = st.out_path;
    cfg.raw["out"] = st.out_path;
  }
  if (st.seed) {
    cfg.seed = *st.seed;
    cfg.raw["seed"] = *st.seed;
  }
  if (!st.mode.empty()) {
    cfg.mode = st.mode;
    cfg.raw["mode"] = st.mode;
  }
  return cfg;
}

int dispatch(const std::string& command, const CliState& st) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = effective_config(st);

  json extra = json::object();
  json payload;
  if (command == "spectrum") payload = spectrum_payload(cfg);
  else if (command == "partition") payload = partition_payload(cfg);
  else if (command == "steady") payload = steady_payload(cfg, cfg.mode);
  else if (command == "evolve") payload = evolve_payload(cfg, extra);
  else if (command == "bloch-check") payload = bloch_payload(cfg);
  else if (command == "dfs-check") payload = dfs_payload(cfg);
  else if (command == "no-cat-check") payload = no_cat_payload(cfg);
  else if (command == "sweep") payload = sweep_payload(cfg, st.threads);
  else throw InvalidParameter("unknown command '" + command + "'");

  json result = result_envelope(cfg, command, seconds_since(t0));
  result["result"] = std::move(payload);
  result.update(extra);
  write_result(cfg, result);
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{
      "Asymptotic states of a driven Ising chain coupled to heat baths"};
  app.require_subcommand(1);

  CliState st;
  std::uint32_t seed_value = 0;
  bool seed_given = false;

  const std::vector<std::string> commands = {
      "spectrum",    "partition", "steady",       "evolve",
      "bloch-check", "dfs-check", "no-cat-check", "sweep"};
  const std::vector<std::string> described = {
      "exact spectrum and level structure",
      "sector decomposition under the collective coupling",
      "asymptotic state for the configured mode",
      "time-domain integration cross-check",
      "single two-level resonance comparison",
      "scan for bath-protected states",
      "structural witnesses against thermal cat preparation",
      "repeat steady over a swept parameter"};

  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i], described[i]);
    sub->add_option("--config", st.config_path, "JSON config file");
    sub->add_option("--out", st.out_path, "result JSON path (default stdout)");
    sub->add_option("--threads", st.threads, "worker threads for sweeps");
    sub->add_option("--seed", seed_value, "seed override")
        ->each([&](const std::string&) { seed_given = true; });
    if (commands[i] == "steady" || commands[i] == "sweep")
      sub->add_option("--mode", st.mode,
                      "uniform | thermal | driven-direct | "
                      "driven-perturbative | two-bath");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (seed_given) st.seed = seed_value;

  return dispatch(app.get_subcommands().front()->get_name(), st);
}

}  // namespace
}  // namespace catchain

int main(int argc, char** argv) {
  try {
    return catchain::run_cli(argc, argv);
  } catch (const catchain::ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const catchain::SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
