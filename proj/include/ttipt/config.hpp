// config.hpp: JSON run configuration, validation and hashing
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttipt/bath.hpp"
#include "ttipt/core.hpp"
#include "ttipt/itebd.hpp"
#include "ttipt/models.hpp"

namespace ttipt {

inline constexpr const char* kVersion = "1.0.0";

struct PtConfig {
  double dt = 0.1;
  int k_max = 0;
  double eps_rel = 1e-7;
  double tol_inner = 1e-7;
  Variant variant = Variant::Enhanced;
  int max_chi = 4096;
};

struct RunBlock {
  int n_steps = 0;
  std::vector<std::string> observables;
  int initial_qubit = 0;     // 0 up, 1 down
  int initial_n = 0;
  std::uint64_t random_seed = 0;  // nonzero: random initial state from this seed
  bool symmetric = false;
  int record_stride = 1;
  int snapshot_stride = 0;
  std::string output = "trajectory.csv";
  std::string pt_file = "process_tensor.ttipt";
};

struct BenchmarkBlock {
  std::vector<int> d;
  int repetitions = 1;
};

struct OracleBlock {
  std::string kind = "lindblad";  // lindblad | gaussian | brute
  int chain_modes = 0;            // 0: sized from the light cone
  double omega_max = 0;           // hard cutoff for the chain measure (0: none)
  double dt_out = 0;              // 0: pt.dt
};

struct RunConfig {
  SpectralDensity bath;
  SystemModel model;
  PtConfig pt;
  RunBlock run;
  BenchmarkBlock benchmark;
  OracleBlock oracle;
  bool deterministic = true;
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::string& block,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw DomainError("config: '" + block + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key()))
      throw DomainError("config: unknown key '" + block + "." + it.key() + "'");
}

inline const json& need(const json& j, const std::string& block, const char* key) {
  if (!j.contains(key))
    throw DomainError("config: missing required key '" + block + "." + key + "'");
  return j.at(key);
}

template <class T>
T as(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DomainError("config: '" + where + "' has the wrong type");
  }
}

template <class T>
void opt(const json& j, const std::string& block, const char* key, T& out) {
  if (j.contains(key)) out = as<T>(j.at(key), block + "." + key);
}

inline double number_or_inf(const json& v, const std::string& where) {
  if (v.is_string() && v.get<std::string>() == "inf")
    return std::numeric_limits<double>::infinity();
  return as<double>(v, where);
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError("config: " + msg);
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  using detail::require;
  const auto& b = c.bath;
  require(b.eta >= 0 && std::isfinite(b.eta), "bath.eta must be finite and >= 0");
  require(b.omega_c > 0 && std::isfinite(b.omega_c), "bath.omega_c must be > 0");
  require(b.p >= 0 && b.p <= 1, "bath.p must be in [0, 1]");
  require(b.inv_w2 > 0, "bath.inv_w2 must be > 0");
  require(b.omega_r > 0, "bath.omega_r must be > 0");
  require(b.beta > 0, "bath.beta must be > 0");
  const auto& m = c.model;
  require(m.N >= 2, "model.N must be >= 2");
  require(m.omega_r >= 0 && m.omega_q >= 0, "model frequencies must be >= 0");
  require(std::isfinite(m.g) && std::isfinite(m.drive.epsilon), "model couplings must be finite");
  const auto& p = c.pt;
  require(p.dt > 0 && std::isfinite(p.dt), "pt.dt must be > 0");
  require(p.k_max >= 0, "pt.k_max must be >= 0");
  require(p.eps_rel > 0 && p.eps_rel < 1, "pt.eps_rel must be in (0, 1)");
  require(p.tol_inner >= 0 && p.tol_inner < 1, "pt.tol_inner must be in [0, 1)");
  require(p.max_chi >= 1, "pt.max_chi must be >= 1");
  const auto& r = c.run;
  require(r.n_steps >= 0, "run.n_steps must be >= 0");
  require(r.initial_qubit == 0 || r.initial_qubit == 1, "run.initial_qubit must be 0 or 1");
  require(r.initial_n >= 0 && r.initial_n < m.N, "run.initial_n must be in [0, N)");
  require(r.record_stride >= 1, "run.record_stride must be >= 1");
  require(r.snapshot_stride >= 0, "run.snapshot_stride must be >= 0");
  require(c.benchmark.repetitions >= 1, "benchmark.repetitions must be >= 1");
  for (int d : c.benchmark.d) require(d >= 2, "benchmark.d entries must be >= 2");
  require(c.oracle.kind == "lindblad" || c.oracle.kind == "gaussian" ||
              c.oracle.kind == "brute",
          "oracle.kind must be lindblad, gaussian or brute");
  require(c.oracle.chain_modes >= 0, "oracle.chain_modes must be >= 0");
  require(c.oracle.omega_max >= 0, "oracle.omega_max must be >= 0");
  require(c.oracle.dt_out >= 0, "oracle.dt_out must be >= 0");
}

inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  check_keys(j, "config", {"bath", "model", "pt", "run", "benchmark", "oracle", "deterministic"});
  RunConfig c;

  const json& b = need(j, "config", "bath");
  check_keys(b, "bath", {"kind", "eta", "omega_c", "p", "inv_w2", "omega_q", "omega_r", "beta"});
  c.bath.kind = bath_kind_from(as<std::string>(need(b, "bath", "kind"), "bath.kind"));
  c.bath.eta = as<double>(need(b, "bath", "eta"), "bath.eta");
  opt(b, "bath", "omega_c", c.bath.omega_c);
  opt(b, "bath", "p", c.bath.p);
  opt(b, "bath", "inv_w2", c.bath.inv_w2);
  opt(b, "bath", "omega_q", c.bath.omega_q);
  opt(b, "bath", "omega_r", c.bath.omega_r);
  if (b.contains("beta")) c.bath.beta = number_or_inf(b.at("beta"), "bath.beta");

  const json& m = need(j, "config", "model");
  check_keys(m, "model", {"kind", "N", "omega_r", "omega_q", "g", "drive"});
  c.model.kind = model_kind_from(as<std::string>(need(m, "model", "kind"), "model.kind"));
  c.model.N = as<int>(need(m, "model", "N"), "model.N");
  opt(m, "model", "omega_r", c.model.omega_r);
  opt(m, "model", "omega_q", c.model.omega_q);
  opt(m, "model", "g", c.model.g);
  if (m.contains("drive")) {
    const json& d = m.at("drive");
    check_keys(d, "model.drive", {"epsilon", "omega_d"});
    opt(d, "model.drive", "epsilon", c.model.drive.epsilon);
    opt(d, "model.drive", "omega_d", c.model.drive.omega_d);
  }

  const json& p = need(j, "config", "pt");
  check_keys(p, "pt", {"dt", "k_max", "eps_rel", "tol_inner", "variant", "max_chi"});
  c.pt.dt = as<double>(need(p, "pt", "dt"), "pt.dt");
  c.pt.k_max = as<int>(need(p, "pt", "k_max"), "pt.k_max");
  c.pt.eps_rel = as<double>(need(p, "pt", "eps_rel"), "pt.eps_rel");
  c.pt.tol_inner = c.pt.eps_rel;
  opt(p, "pt", "tol_inner", c.pt.tol_inner);
  if (p.contains("variant")) c.pt.variant = variant_from(as<std::string>(p.at("variant"), "pt.variant"));
  opt(p, "pt", "max_chi", c.pt.max_chi);

  if (j.contains("run")) {
    const json& r = j.at("run");
    check_keys(r, "run", {"n_steps", "observables", "initial_qubit", "initial_n", "random_seed",
                          "symmetric", "record_stride", "snapshot_stride", "output", "pt_file"});
    opt(r, "run", "n_steps", c.run.n_steps);
    opt(r, "run", "observables", c.run.observables);
    opt(r, "run", "initial_qubit", c.run.initial_qubit);
    opt(r, "run", "initial_n", c.run.initial_n);
    opt(r, "run", "random_seed", c.run.random_seed);
    opt(r, "run", "symmetric", c.run.symmetric);
    opt(r, "run", "record_stride", c.run.record_stride);
    opt(r, "run", "snapshot_stride", c.run.snapshot_stride);
    opt(r, "run", "output", c.run.output);
    opt(r, "run", "pt_file", c.run.pt_file);
  }
  if (j.contains("benchmark")) {
    const json& k = j.at("benchmark");
    check_keys(k, "benchmark", {"d", "repetitions"});
    opt(k, "benchmark", "d", c.benchmark.d);
    opt(k, "benchmark", "repetitions", c.benchmark.repetitions);
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    check_keys(o, "oracle", {"kind", "chain_modes", "omega_max", "dt_out"});
    opt(o, "oracle", "kind", c.oracle.kind);
    opt(o, "oracle", "chain_modes", c.oracle.chain_modes);
    opt(o, "oracle", "omega_max", c.oracle.omega_max);
    opt(o, "oracle", "dt_out", c.oracle.dt_out);
  }
  opt(j, "config", "deterministic", c.deterministic);
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// Fully populated form; parse_config(to_json(c)) reproduces c.
inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json j;
  j["bath"] = {{"kind", to_string(c.bath.kind)}, {"eta", c.bath.eta},
               {"omega_c", c.bath.omega_c},      {"p", c.bath.p},
               {"inv_w2", c.bath.inv_w2},        {"omega_q", c.bath.omega_q},
               {"omega_r", c.bath.omega_r},
               {"beta", std::isinf(c.bath.beta) ? json("inf") : json(c.bath.beta)}};
  j["model"] = {{"kind", to_string(c.model.kind)},
                {"N", c.model.N},
                {"omega_r", c.model.omega_r},
                {"omega_q", c.model.omega_q},
                {"g", c.model.g},
                {"drive", {{"epsilon", c.model.drive.epsilon}, {"omega_d", c.model.drive.omega_d}}}};
  j["pt"] = {{"dt", c.pt.dt},           {"k_max", c.pt.k_max},
             {"eps_rel", c.pt.eps_rel}, {"tol_inner", c.pt.tol_inner},
             {"variant", to_string(c.pt.variant)}, {"max_chi", c.pt.max_chi}};
  j["run"] = {{"n_steps", c.run.n_steps},
              {"observables", c.run.observables},
              {"initial_qubit", c.run.initial_qubit},
              {"initial_n", c.run.initial_n},
              {"random_seed", c.run.random_seed},
              {"symmetric", c.run.symmetric},
              {"record_stride", c.run.record_stride},
              {"snapshot_stride", c.run.snapshot_stride},
              {"output", c.run.output},
              {"pt_file", c.run.pt_file}};
  j["benchmark"] = {{"d", c.benchmark.d}, {"repetitions", c.benchmark.repetitions}};
  j["oracle"] = {{"kind", c.oracle.kind},
                 {"chain_modes", c.oracle.chain_modes},
                 {"omega_max", c.oracle.omega_max},
                 {"dt_out", c.oracle.dt_out}};
  j["deterministic"] = c.deterministic;
  return j;
}

// 64-bit FNV-1a of the canonical (sorted-key, populated) dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline EtaTable make_eta(const RunConfig& c) { return eta_table(c.bath, c.pt.dt, c.pt.k_max); }

inline BuildOptions build_options(const PtConfig& p) {
  BuildOptions o;
  o.variant = p.variant;
  o.eps_rel = p.eps_rel;
  o.tol_inner = p.tol_inner;
  o.max_chi = p.max_chi;
  return o;
}

inline BuildOptions build_options(const RunConfig& c) { return build_options(c.pt); }

}  // namespace ttipt
