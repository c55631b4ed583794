#include "catchain/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "catchain/analysis.hpp"

#ifndef CATCHAIN_VERSION
#define CATCHAIN_VERSION "untracked"
#endif

namespace catchain {

namespace {

using nlohmann::json;

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number_or(const json& j, const char* key, double fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number())
    throw InvalidParameter(std::string("config field '") + key +
                           "' must be a number");
  return v->get<double>();
}

Axis axis_from(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw InvalidParameter("drive weight axis must be one of x, y, z");
}

Complex complex_from(const json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  throw InvalidParameter("complex values are numbers or [re, im] pairs");
}

BathSpec bath_from(const json& j) {
  BathSpec bath;
  bath.temperature = number_or(j, "T", bath.temperature);
  if (const json* m = find(j, "model")) {
    if (!m->is_string() || m->get<std::string>() != "ohmic")
      throw InvalidParameter("bath.model must be \"ohmic\"");
  }
  bath.model.eta = number_or(j, "eta", bath.model.eta);
  bath.model.cutoff = number_or(j, "cutoff", bath.model.cutoff);
  if (const json* v = find(j, "lamb_shifts")) {
    if (!v->is_boolean())
      throw InvalidParameter("bath.lamb_shifts must be a boolean");
    bath.include_shifts = v->get<bool>();
  }
  return bath;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw InvalidParameter("config root must be an object");
  RunConfig cfg;
  cfg.raw = j;

  if (const json* chain = find(j, "chain")) {
    cfg.chain.n_half = static_cast<int>(
        number_or(*chain, "n_half", cfg.chain.n_half));
    cfg.chain.coupling_j = number_or(*chain, "J", cfg.chain.coupling_j);
    if (const json* fields = find(*chain, "h")) {
      if (!fields->is_array())
        throw InvalidParameter("chain.h must be an array");
      cfg.chain.fields_h.clear();
      for (const json& v : *fields) cfg.chain.fields_h.push_back(v.get<double>());
    }
    // Chainless commands (bloch-check, no-cat-check) may omit the block;
    // commands that build the chain validate again on entry.
    cfg.chain.validate();
  }

  if (const json* bath = find(j, "bath")) cfg.bath = bath_from(*bath);
  cfg.bath.validate();
  if (const json* bath2 = find(j, "bath2")) {
    cfg.bath2 = bath_from(*bath2);
    cfg.bath2->validate();
  }

  if (const json* c = find(j, "coupling")) {
    cfg.coupling.e_uniform = number_or(*c, "e_uniform", 0.0);
    cfg.coupling.eps_local = number_or(*c, "eps_local", 0.0);
    cfg.coupling.eps_drive = number_or(*c, "eps_drive", 0.0);
    cfg.coupling.eps2_local = number_or(*c, "eps2_local", 0.0);
    if (const json* w = find(*c, "drive_frequency")) {
      if (w->is_string()) {
        if (w->get<std::string>() != "resonant")
          throw InvalidParameter(
              "coupling.drive_frequency must be a number or \"resonant\"");
      } else if (!w->is_null()) {
        cfg.coupling.drive_frequency = w->get<double>();
      }
    }
    if (const json* weights = find(*c, "drive_weights")) {
      if (!weights->is_array())
        throw InvalidParameter("coupling.drive_weights must be an array");
      for (const json& term : *weights) {
        DriveTerm t;
        t.site = static_cast<int>(number_or(term, "site", 0));
        const json* axis = find(term, "axis");
        if (!axis || !axis->is_string())
          throw InvalidParameter("drive weight needs an axis");
        t.axis = axis_from(axis->get<std::string>());
        if (const json* lam = find(term, "weight")) t.weight = complex_from(*lam);
        cfg.coupling.drive_weights.push_back(t);
      }
    }
  }
  cfg.coupling.validate();

  if (const json* mode = find(j, "mode")) {
    if (!mode->is_string()) throw InvalidParameter("mode must be a string");
    cfg.mode = mode->get<std::string>();
  }

  if (const json* e = find(j, "evolve")) {
    auto& blk = cfg.evolve;
    if (const json* s = find(*e, "seed_state"))
      blk.seed_state = s->get<std::string>();
    blk.seed_temperature =
        number_or(*e, "seed_temperature", blk.seed_temperature);
    if (const json* h = find(*e, "history_out"))
      blk.history_out = h->get<std::string>();
    auto& o = blk.options;
    o.rel_tol = number_or(*e, "rel_tol", o.rel_tol);
    o.abs_tol = number_or(*e, "abs_tol", o.abs_tol);
    o.period = number_or(*e, "period", o.period);
    o.max_periods = static_cast<long long>(
        number_or(*e, "max_periods", static_cast<double>(o.max_periods)));
    o.converge_tol = number_or(*e, "converge_tol", o.converge_tol);
    o.average_samples = static_cast<int>(
        number_or(*e, "average_samples", o.average_samples));
    o.positivity_floor =
        number_or(*e, "positivity_floor", o.positivity_floor);
    o.record_history = true;
  }

  if (const json* b = find(j, "bloch")) {
    cfg.bloch.field_h = number_or(*b, "field_h", cfg.bloch.field_h);
    cfg.bloch.eps_drive = number_or(*b, "eps_drive", cfg.bloch.eps_drive);
    cfg.bloch.e_coupling = number_or(*b, "e_coupling", cfg.bloch.e_coupling);
  }

  if (const json* t = find(j, "trials")) {
    cfg.trials.sites = static_cast<int>(
        number_or(*t, "sites", cfg.trials.sites));
    cfg.trials.count = static_cast<int>(
        number_or(*t, "count", cfg.trials.count));
  }

  if (const json* s = find(j, "sweep")) {
    if (const json* p = find(*s, "parameter"))
      cfg.sweep.parameter = p->get<std::string>();
    if (const json* vals = find(*s, "values")) {
      if (!vals->is_array())
        throw InvalidParameter("sweep.values must be an array");
      for (const json& v : *vals) cfg.sweep.values.push_back(v.get<double>());
    }
  }

  if (const json* out = find(j, "out")) cfg.out = out->get<std::string>();
  if (const json* seed = find(j, "seed"))
    cfg.seed = seed->get<std::uint32_t>();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidParameter(std::string("config is not valid JSON: ") +
                           e.what());
  }
  return parse_config(j);
}

void apply_sweep_value(RunConfig& cfg, const std::string& parameter,
                       double value) {
  if (parameter == "bath.T") {
    cfg.bath.temperature = value;
  } else if (parameter == "bath.eta") {
    cfg.bath.model.eta = value;
  } else if (parameter == "bath2.T") {
    if (!cfg.bath2) throw InvalidParameter("sweep over bath2 without a bath2");
    cfg.bath2->temperature = value;
  } else if (parameter == "coupling.e_uniform") {
    cfg.coupling.e_uniform = value;
  } else if (parameter == "coupling.eps_local") {
    cfg.coupling.eps_local = value;
  } else if (parameter == "coupling.eps_drive") {
    cfg.coupling.eps_drive = value;
  } else if (parameter == "coupling.eps2_local") {
    cfg.coupling.eps2_local = value;
  } else if (parameter == "coupling.drive_frequency") {
    cfg.coupling.drive_frequency = value;
  } else {
    throw InvalidParameter("unknown sweep parameter '" + parameter + "'");
  }
  cfg.bath.validate();
  if (cfg.bath2) cfg.bath2->validate();
  cfg.coupling.validate();
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json cvector_to_json(const CVector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json density_to_json(const DensityMatrix& rho) {
  return json{{"basis", rho.basis},
              {"dim", rho.dim()},
              {"entries", matrix_to_json(rho.entries)}};
}

json metrics_json(const EigenStructure& es, const DensityMatrix& rho) {
  const auto cat = cat_parameter(es, rho);
  const auto adapted = to_adapted_basis(es, rho);
  const auto config = to_config_basis(es, rho);

  std::vector<int> half;
  for (int n = 1; n <= es.spec.n_half; ++n) half.push_back(n);
  const auto witness = entanglement_witness(es.spec, config, half);

  const int cp = es.named.cat_plus.state;
  const int cm = es.named.cat_minus.state;
  return json{
      {"cat_parameter", cat.p},
      {"doublet_mass", cat.doublet_mass},
      {"fidelity_cat_plus", adapted.entries(cp, cp).real()},
      {"fidelity_cat_minus", adapted.entries(cm, cm).real()},
      {"purity", purity(rho)},
      {"pi_expectation", pi_expectation(es, rho)},
      {"entropy", von_neumann_entropy(rho.entries)},
      {"half_chain_entropy", witness.subsystem_entropy},
      {"entangled_by_witness", witness.entangled},
  };
}

json result_envelope(const RunConfig& cfg, const std::string& command,
                     double wall_seconds) {
  return json{{"command", command},
              {"version", version_string()},
              {"wall_seconds", wall_seconds},
              {"config", cfg.raw}};
}

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write history CSV '" + path + "'");
  out << "t,distance_to_final,fidelity_cat_plus,fidelity_cat_minus,"
         "pi_expectation,purity\n";
  out.precision(17);
  for (const HistoryRow& r : rows) {
    out << r.time << ',' << r.distance_to_final << ',' << r.fidelity_cat_plus
        << ',' << r.fidelity_cat_minus << ',' << r.pi_expectation << ','
        << r.purity << '\n';
  }
}

json history_to_json(const std::vector<HistoryRow>& rows) {
  json out = json::array();
  for (const HistoryRow& r : rows) {
    out.push_back(json{{"t", r.time},
                       {"distance_to_final", r.distance_to_final},
                       {"fidelity_cat_plus", r.fidelity_cat_plus},
                       {"fidelity_cat_minus", r.fidelity_cat_minus},
                       {"pi_expectation", r.pi_expectation},
                       {"purity", r.purity}});
  }
  return out;
}

std::string version_string() { return CATCHAIN_VERSION; }

std::string write_result(const RunConfig& cfg, const json& result) {
  if (cfg.out.empty()) {
    printf("%s\n", result.dump(2).c_str());
    return {};
  }
  std::ofstream out(cfg.out);
  if (!out) throw InvalidParameter("cannot write result '" + cfg.out + "'");
  out << result.dump(2) << '\n';
  return cfg.out;
}

}  // namespace catchain
