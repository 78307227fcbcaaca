#pragma once

// Declarative experiment description, loaded from JSON. Unknown keys are
// rejected; missing keys take the defaults below. to_json() writes the
// canonical form (all defaults filled) whose SHA-256 goes into manifests.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "libmlab/expr.hpp"
#include "libmlab/model.hpp"
#include "libmlab/particles.hpp"
#include "libmlab/pde.hpp"

namespace libmlab {

enum class PdeSolver { cross_diffusion, two_color };

struct ParticleSection {
  double dt = 0.0;  // <= 0: engine default
  double t_final = 0.05;
  std::uint64_t seed = 1;
  double epsilon = 0.0;  // <= 0: N^(-1/3)
  LocalTimeScheme local_time_scheme = LocalTimeScheme::skorokhod_exact;
  double occupation_halfwidth = 0.0;
  bool same_type_switching = false;
  int max_cluster = 64;
  int replicas = 1;
};

struct PdeSection {
  int cells = 256;
  double dt = 0.0;
  Scheme scheme = Scheme::explicit_rk2;
  double stability_safety = 0.9;
  PdeSolver solver = PdeSolver::cross_diffusion;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<double> snapshot_times;  // empty: {t_final}
  bool plot = false;
  bool ms_form = false;
  double ms_d12 = 0.0;  // <= 0: 2 max(1/s1, 1/s2)
};

struct DiagnoseCase {
  int n = 128;
  double epsilon = 0.05;
};

struct DiagnoseSection {
  std::vector<DiagnoseCase> cases{{128, 0.05}, {512, 0.01}};
  int seeds = 20;
  double t_final = 0.01;  // horizon of the replacement runs
  int qv_replicas = 200;
  double qv_t_final = 0.01;
};

struct ExperimentConfig {
  ModelParams model{1.0, 2.0, 1.0, 128};
  ParticleSection particles;
  PdeSection pde;
  std::string rho1_text = "0.5";
  std::string rho2_text = "0.5";
  OutputSection outputs;
  std::vector<int> sweep_n;  // empty: {model.n}
  DiagnoseSection diagnose;

  expr::Expr rho1;
  expr::Expr rho2;

  // Snapshot times with the defaults applied, sorted.
  std::vector<double> snapshot_times() const;
  double epsilon_for(int n) const;
  SimConfig sim_config(int n) const;
  SolverConfig solver_config() const;
  ModelParams model_for(int n) const;
};

// Throws ConfigError (unknown key, wrong type, invalid value, negative
// profile on the 10^4-point check) or ParseError from the expressions.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& c);
std::string canonical_text(const ExperimentConfig& c);

}  // namespace libmlab
