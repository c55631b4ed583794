#pragma once

// Configuration parsing and result serialization for the command line tool.
// Configs and results are JSON (complex numbers as [re, im] pairs); time
// series go to CSV. Energies are reported in units of the chain coupling and
// times in its inverse, matching the dimensionless model.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "catchain/chain.hpp"
#include "catchain/oracle.hpp"
#include "catchain/types.hpp"

namespace catchain {

struct RunConfig {
  ChainSpec chain;
  BathSpec bath;
  std::optional<BathSpec> bath2;
  CouplingSpec coupling;

  // Steady-state solver selection: uniform | thermal | driven-direct |
  // driven-perturbative | two-bath.
  std::string mode = "thermal";

  struct EvolveBlock {
    // mixed | thermal | cat_plus | cat_minus | direct
    std::string seed_state = "mixed";
    double seed_temperature = 1.0;  // for the thermal seed
    std::string history_out;        // empty: derive from the result path
    EvolveOptions options;
  } evolve;

  struct BlochBlock {
    double field_h = 1.0;
    double eps_drive = 0.05;
    double e_coupling = 1.0;
  } bloch;

  struct TrialsBlock {
    int sites = 4;
    int count = 100;
  } trials;

  struct SweepBlock {
    std::string parameter;  // dotted path, e.g. "bath.T"
    std::vector<double> values;
  } sweep;

  std::string out;  // result path; empty writes to stdout
  std::uint32_t seed = 0x5eed5eedu;

  nlohmann::json raw;  // the config document, echoed into results verbatim
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Scalar assignment through the dotted paths accepted in sweep blocks.
void apply_sweep_value(RunConfig& cfg, const std::string& parameter,
                       double value);

// JSON encoders.
nlohmann::json complex_to_json(Complex z);
nlohmann::json vector_to_json(const Vector& v);
nlohmann::json cvector_to_json(const CVector& v);
nlohmann::json matrix_to_json(const CMatrix& m);
nlohmann::json density_to_json(const DensityMatrix& rho);

// Standard metric block attached to every emitted state: doublet mixing
// parameter, aligned-cat fidelities, purity, mirror expectation, entropies
// and the half-chain entanglement witness.
nlohmann::json metrics_json(const EigenStructure& es, const DensityMatrix& rho);

// Result wrapper: verbatim config echo, version, command and wall time.
nlohmann::json result_envelope(const RunConfig& cfg, const std::string& command,
                               double wall_seconds);

// t, distance to final, cat fidelities, mirror expectation, purity per row.
void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows);
nlohmann::json history_to_json(const std::vector<HistoryRow>& rows);

std::string version_string();

// Serialize `result` to cfg.out (or stdout when empty). Returns the path
// written, empty for stdout.
std::string write_result(const RunConfig& cfg, const nlohmann::json& result);

}  // namespace catchain
