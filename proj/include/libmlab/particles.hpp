#pragma once

// Time-stepped Monte Carlo engine for the N-particle two-component LIBM on
// the unit torus.
//
// Particles live in "slots" that keep their cyclic order forever: reflection
// never reorders slots, and a label switch exchanges the (id, type) labels of
// two adjacent slots. Slot coordinates are stored unwrapped; the gap from the
// last slot back to the first is positions[0] + 1 - positions[N-1].
//
// Local-time conventions:
//  * reflect_pair() returns the Skorokhod regulator K of the gap
//    u = x_j - x_i, i.e. the total push needed to keep u >= 0.
//  * The ledger stores the collision local time of the pair in occupation
//    density form, A = K / (s_i + s_j): the limit of
//    (2 eps)^-1 * time{ |x_i - x_j| <= eps }. Label switching runs at rate
//    lambda * s_i * s_j * N per unit of A.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "libmlab/field.hpp"
#include "libmlab/model.hpp"
#include "libmlab/rng.hpp"

namespace libmlab {

struct ParticleState {
  std::vector<double> positions;     // per slot, unwrapped, cyclically increasing
  std::vector<Species> types;        // per slot
  std::vector<std::int32_t> ids;     // per slot
  std::vector<std::int32_t> slot_of; // per id
  std::vector<std::int32_t> winding; // per id, see lifted_position()
  double time = 0.0;
  std::int64_t step = 0;

  int size() const noexcept { return static_cast<int>(positions.size()); }
  int next(int slot) const noexcept { return slot + 1 == size() ? 0 : slot + 1; }

  // Forward gap from slot to next(slot), in [0, 1]; touching particles have
  // gap 0.
  double gap(int slot) const noexcept;
  TorusPoint position(int slot) const { return TorusPoint(positions[slot]); }

  // Continuous (unwrapped) trajectory of particle id, including the jump to
  // the neighbouring slot at a label switch.
  double lifted_position(int id) const noexcept;
  Species type_of(int id) const noexcept { return types[slot_of[id]]; }
  std::array<int, 2> counts() const noexcept;

  // Checks cyclic order, label bookkeeping and finiteness; throws
  // SimulationAbort with a description otherwise.
  void check_invariants() const;
};

struct LocalTimeLedger {
  std::vector<double> pair_accrual;  // per slot pair, A since last threshold reset
  std::vector<double> pair_hazard;   // per slot pair, integrated switch hazard
  std::vector<double> threshold;     // per slot pair, Exp(1)
  std::vector<std::array<double, 2>> per_particle;  // A_{i,1}, A_{i,2} by id
  double total = 0.0;                 // sum of A_ij over unordered pairs
  std::int64_t switches = 0;

  static LocalTimeLedger fresh(int n, Rng& rng);
};

enum class LocalTimeScheme { skorokhod_exact, mollified_occupation };

struct SimConfig {
  double dt = 0.0;       // <= 0 selects default_dt()
  double t_final = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;  // mollifier half-width for local densities
  std::vector<double> snapshot_times;
  LocalTimeScheme local_time_scheme = LocalTimeScheme::skorokhod_exact;
  // Window half-width of the occupation estimator; <= 0 selects
  // 8 * sqrt(2 max(s) dt).
  double occupation_halfwidth = 0.0;
  // Largest run of mutually overlapping particles resolved in one step.
  int max_cluster = 64;
  // Same-type pairs exchange ids at rate lambda s_c^2 N as well. Densities
  // are unaffected; tagged-particle observables (z_k) need it.
  bool same_type_switching = false;
};

// 0.1 * (1/N)^2 / max(s1, s2).
double default_dt(const ModelParams& p);
double effective_dt(const SimConfig& cfg, const ModelParams& p);
// Non-empty when dt is coarser than the neighbour-gap diffusion time.
std::optional<std::string> dt_warning(double dt, const ModelParams& p);

using DensityFn = std::function<double(double)>;

// Draws round(N * m1 / (m1 + m2)) type-1 particles i.i.d. from rho1 / m1 and
// the rest from rho2 / m2 (m_c = integral of rho_c), by inverse-CDF sampling
// on a fine grid. Ids follow draw order; the result is sorted.
ParticleState init_iid(const DensityFn& rho1, const DensityFn& rho2, int n,
                       std::uint64_t seed);

// Builds a state from explicit positions and types (positions in [0, 1),
// sorted internally). Ids follow the input order.
ParticleState make_state(std::span<const double> positions,
                         std::span<const Species> types);

struct PairNoise {
  double db_i = 0.0;     // free displacement of x_i over the step
  double db_j = 0.0;     // free displacement of x_j
  double uniform = 0.5;  // U(0,1) for the bridge minimum
};

struct PairReflection {
  TorusPoint x_i;
  TorusPoint x_j;
  double dl = 0.0;  // Skorokhod regulator of the gap over the step
};

// Regulator increment of a gap with variance rate var_rate that moved freely
// from u0 to u1 over dt: max(0, -min of the Brownian bridge), the bridge
// minimum drawn from uniform.
double gap_regulator(double u0, double u1, double var_rate, double dt,
                     double uniform) noexcept;

// Solves u = x_j - x_i, w = x_i/s_i + x_j/s_j for (x_i, x_j).
std::array<double, 2> positions_from_uw(double u, double w, double s_i,
                                        double s_j) noexcept;

// One step of the adjacent pair (x_i, x_j) (x_j directly ahead of x_i) in the
// decoupling coordinates: u reflected at 0 with diffusivity s_i + s_j, w free
// with diffusivity 1/s_i + 1/s_j.
PairReflection reflect_pair(TorusPoint x_i, TorusPoint x_j, double s_i,
                            double s_j, double dt, const PairNoise& noise);
PairReflection reflect_pair(TorusPoint x_i, TorusPoint x_j, double s_i,
                            double s_j, double dt, Rng& rng);

// Adds local time da to slot pair (slot, next(slot)), updating the per-id
// aggregates. For a mixed pair the switch hazard grows by
// da * switch_rate * N; every time it crosses the pair's Exp(1) threshold the
// two slots exchange labels and the threshold is redrawn. Same-type pairs
// accrue local time and switch only when same_type is set. Returns the
// number of switches.
int accrue_and_switch(ParticleState& state, LocalTimeLedger& ledger, int slot,
                      double da, const ModelParams& p, Rng& rng,
                      bool same_type = false);

// Observer invoked after every completed step.
class StepRecorder {
 public:
  virtual ~StepRecorder() = default;
  virtual void on_step(const ParticleState& state,
                       const LocalTimeLedger& ledger, double dt) = 0;
};

// One step of size dt: free Gaussian moves, bridge-sampled pair reflection,
// projection back onto the cyclic order where pushes from both sides
// overlap, local-time accrual and switching. Throws SimulationAbort when an
// overlap cluster exceeds cfg.max_cluster.
void advance(ParticleState& state, LocalTimeLedger& ledger,
             const SimConfig& cfg, const ModelParams& p, Rng& rng);

struct Snapshot {
  double time = 0.0;
  std::vector<double> positions;  // wrapped, per slot
  std::vector<Species> types;     // per slot
  std::vector<std::int32_t> ids;  // per slot
  double ledger_total = 0.0;
  std::int64_t switches = 0;
};

using SnapshotFn = std::function<void(const Snapshot&, const ParticleState&,
                                      const LocalTimeLedger&)>;

// Runs from state.time to cfg.t_final, emitting snapshots at
// cfg.snapshot_times (each rounded to the nearest step).
void run_trajectory(ParticleState& state, LocalTimeLedger& ledger,
                    const SimConfig& cfg, const ModelParams& p, Rng& rng,
                    const SnapshotFn& on_snapshot = {},
                    StepRecorder* recorder = nullptr);

// (1/N) sum_{j in T_c} iota_eps(x_j - x) at each grid point, iota_eps the box
// kernel of half-width eps and height 1/(2 eps).
DensityField empirical_density(const ParticleState& state, double epsilon,
                               std::span<const double> grid);

// z_k = x_k + (alpha/N) sum_i nu(x_i - x_k) / s_{c(i)}, indexed by id, with
// x_k the lifted position. O(N).
std::vector<double> z_values(const ParticleState& state, double alpha,
                             const ModelParams& p);

// Leading term of the quadratic variation of z_k:
// lambda alpha^2 s_{c(k)} [lambda t + A_{k,1}/s1 + A_{k,2}/s2].
double qv_predicted(const LocalTimeLedger& ledger, Species type_k, int k,
                    double t, const ModelParams& p, double alpha);

// Per-id local densities rho^{N,eps}_{i,c}(x) (self excluded), written into
// out[id][c].
void local_densities(const ParticleState& state, double epsilon,
                     std::vector<std::array<double, 2>>& out);

// Tracks z_k(0) and the realized quadratic variation sum (dz_k)^2.
class MartingaleRecorder : public StepRecorder {
 public:
  MartingaleRecorder(const ParticleState& initial, double alpha,
                     const ModelParams& p);
  void on_step(const ParticleState& state, const LocalTimeLedger& ledger,
               double dt) override;

  const std::vector<double>& z0() const noexcept { return z0_; }
  const std::vector<double>& z() const noexcept { return z_; }
  const std::vector<double>& realized_qv() const noexcept { return qv_; }

 private:
  double alpha_;
  ModelParams params_;
  std::vector<double> z0_, z_, qv_;
};

// Integrates rho^{N,eps}_{i,c}(x(t)) dt per id (right-point rule).
class ReplacementRecorder : public StepRecorder {
 public:
  ReplacementRecorder(int n, double epsilon);
  void on_step(const ParticleState& state, const LocalTimeLedger& ledger,
               double dt) override;

  const std::vector<std::array<double, 2>>& integrals() const noexcept {
    return integral_;
  }
  double epsilon() const noexcept { return epsilon_; }

 private:
  double epsilon_;
  std::vector<std::array<double, 2>> integral_, scratch_;
};

// Occupation-time estimate of the per-id averaged local times,
// (1/N) sum_{j in T_c, j != i} dt * 1{|x_i - x_j| <= delta} / (2 delta),
// accumulated on the same path as the main ledger.
class OccupationRecorder : public StepRecorder {
 public:
  OccupationRecorder(int n, double halfwidth);
  void on_step(const ParticleState& state, const LocalTimeLedger& ledger,
               double dt) override;
  const std::vector<std::array<double, 2>>& per_particle() const noexcept {
    return acc_;
  }

 private:
  double delta_;
  std::vector<std::array<double, 2>> acc_;
};

// Fans one step out to several recorders.
class RecorderChain : public StepRecorder {
 public:
  explicit RecorderChain(std::vector<StepRecorder*> r) : recorders_(std::move(r)) {}
  void on_step(const ParticleState& state, const LocalTimeLedger& ledger,
               double dt) override {
    for (auto* r : recorders_) r->on_step(state, ledger, dt);
  }

 private:
  std::vector<StepRecorder*> recorders_;
};

// (1/N) sum_{i in T_c1} | A_{i,c2}(T) - int_0^T rho^{N,eps}_{i,c2} dt |.
double replacement_statistic(const ParticleState& state,
                             std::span<const std::array<double, 2>> local_time,
                             std::span<const std::array<double, 2>> density_integral,
                             Species c1, Species c2);

}  // namespace libmlab
