#pragma once

// Experiment orchestration behind the command-line tool. The cmd_* functions
// write files; the run_* / compare_* functions return the numbers so tests can
// check them without touching the file system.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "libmlab/config.hpp"
#include "libmlab/field.hpp"
#include "libmlab/pde.hpp"

namespace libmlab {

inline constexpr const char* version_string = "libmlab 0.3.0";

// Runs fn(0..count-1) on up to `threads` workers. The first exception (by
// index) is rethrown after all workers finish.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

struct ReplicaRun {
  std::uint64_t seed = 0;
  std::vector<DensityField> fields;  // smoothed, one per snapshot time
  std::vector<double> ledger_total;
  std::vector<std::int64_t> switches;
};

struct Ensemble {
  int n = 0;
  double epsilon = 0.0;
  std::vector<double> times;
  std::vector<double> grid;  // evaluation points (PDE cell centres)
  std::vector<ReplicaRun> replicas;
};

// Replica r uses seed replica_seed(master, r): its initial positions come
// from Rng(seed) and its dynamics from Rng(mix64(seed)).
Ensemble run_ensemble(const ExperimentConfig& cfg, int n, std::uint64_t master,
                      int threads);

// PDE trajectory at the configured snapshot times, with the configured
// solver. Initial data are cell-centre samples of the profiles.
Trajectory run_pde(const ExperimentConfig& cfg);

struct CompareRow {
  double t = 0.0;
  int n = 0;
  double epsilon = 0.0;
  double l1_rho1 = 0.0, l1_rho2 = 0.0;
  double l2_rho1 = 0.0, l2_rho2 = 0.0;
  double l1_ci_lo = 0.0, l1_ci_hi = 0.0;  // 95% bootstrap, l1_rho1 + l1_rho2
};

// Ensemble-mean fields against the PDE snapshots. Throws InvalidArgument
// when epsilon < 2 dx.
std::vector<CompareRow> compare_ensemble(const Ensemble& e,
                                         const Trajectory& pde,
                                         std::uint64_t boot_seed,
                                         int resamples = 1000);

struct MartingaleStats {
  int n = 0;
  int replicas = 0;
  double t = 0.0;
  std::vector<Species> type;      // by id
  std::vector<double> mean_dz;    // by id
  std::vector<double> se_dz;      // by id
  std::vector<double> realized;   // [replica * n + id]
  std::vector<double> predicted;  // [replica * n + id]
  std::vector<std::uint64_t> seeds;

  double fraction_mean_ok(double z_max = 4.0) const;
  double fraction_qv_ok(double lo = 0.9, double hi = 1.1) const;
};

// z_k(T) - z_k(0) and realized vs predicted quadratic variation, with
// same-type switching on (the tagged-particle identity needs it).
MartingaleStats run_martingale(const ExperimentConfig& cfg,
                               std::uint64_t master, int threads);

struct ReplacementRow {
  int n = 0;
  double epsilon = 0.0;
  Species c1 = Species::one, c2 = Species::one;
  double mean = 0.0, se = 0.0;
};

// Four (c1, c2) rows per diagnose case, averaged over diagnose.seeds runs.
std::vector<ReplacementRow> run_replacement(const ExperimentConfig& cfg,
                                            std::uint64_t master, int threads);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: cfg.outputs.directory
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool plot = false;
  bool timings = false;  // wall-clock timings make manifests run-dependent
  std::ostream* log = nullptr;
};

void cmd_simulate(ExperimentConfig cfg, const RunOptions& opt);
void cmd_solve(ExperimentConfig cfg, const RunOptions& opt);
void cmd_compare(ExperimentConfig cfg, const RunOptions& opt);
void cmd_diagnose(ExperimentConfig cfg, const RunOptions& opt);
void cmd_sweep(ExperimentConfig cfg, const RunOptions& opt);

}  // namespace libmlab
