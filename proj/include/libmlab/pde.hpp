#pragma once

// Finite-volume solvers on the periodic unit interval.
//
// Cell i covers [i dx, (i+1) dx); interface i sits between cells i and i+1
// (interface M-1 wraps to cell 0). Fluxes are oriented so that
//   value_i += dt/dx * (F_i - F_{i-1}),
// i.e. F is the negative of the physical flux.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "libmlab/field.hpp"
#include "libmlab/model.hpp"

namespace libmlab {

enum class Scheme { explicit_rk2, semi_implicit };

struct SolverConfig {
  int cells = 256;
  double dt = 0.0;  // <= 0: chosen from the stability bound
  Scheme scheme = Scheme::explicit_rk2;
  double t_final = 0.0;
  double stability_safety = 0.9;
  // Empty means {0, t_final}. Times are clamped onto the step grid.
  std::vector<double> snapshot_times;
  bool record_every_step = false;

  void validate() const;
};

struct Trajectory {
  std::vector<DensityField> snapshots;
  double dt = 0.0;  // nominal step (individual steps may be slightly shorter)
  std::int64_t steps = 0;
  double min_value = 0.0;  // most negative cell value seen (0 if none)
};

// Cell-centre samples of two profiles.
DensityField sample_field(const Grid1D& grid,
                          const std::function<double(double)>& rho1,
                          const std::function<double(double)>& rho2);

// F_i = 1/2 D(mean state) (rho_{i+1} - rho_i) / dx.
std::vector<Vec2> interface_flux(const DensityField& field,
                                 const ModelParams& p);

// stability_safety * dx^2 / (2 max spectral radius of D) over interface states.
double stable_dt(const DensityField& field, const ModelParams& p,
                 double safety);

// Called with the state and the fluxes of every flux evaluation.
using FluxObserver =
    std::function<void(const DensityField&, std::span<const Vec2>)>;

// One step of size cfg.dt (or the automatic step when cfg.dt <= 0).
// Throws StabilityError (explicit, dt too large) and BlowUpError.
DensityField step_fields(const DensityField& field, const SolverConfig& cfg,
                         const ModelParams& p);

Trajectory solve_trajectory(const DensityField& rho0, const SolverConfig& cfg,
                            const ModelParams& p,
                            const FluxObserver& observer = {});

// Ternary Maxwell-Stefan system for (u1, u2) (stored in rho1/rho2 of the
// field), u3 = 1 - u1 - u2.

// Physical fluxes J at each interface from the Maxwell-Stefan relations
//   grad u_i = -sum_j (u_j J_i - u_i J_j) * k_ij,  k_ij = D_ij read as a
//   friction coefficient, J3 = -J1 - J2,
// solved as a 2x2 system per interface. Throws SingularSystem where the
// determinant f(u1, u2) vanishes.
std::vector<Vec2> ms_flux_inversion(const DensityField& u, const MSParams& ms);

// -A(mean state) grad u at each interface.
std::vector<Vec2> ms_matrix_flux(const DensityField& u, const MSParams& ms);

enum class MsForm { matrix, flux_inversion };

// d_tau u = div(A(u) grad u) in time tau = cfg times. The flux-inversion form
// uses the 2x2 solve above (explicit) or the numerically inverted friction
// matrix (semi-implicit).
Trajectory solve_ms_trajectory(const DensityField& u0, const MSParams& ms,
                               const SolverConfig& cfg, MsForm form);

// Staged solve for equal unit diffusivities: the total rho evolves by the
// exact Fourier solution of d_t rho = 1/2 rho_xx, then rho1 solves the linear
// equation
//   d_t rho1 = 1/2 d_x [S(rho) d_x rho1 + (1 - S(rho)) rho1 d_x rho / rho]
// by Crank-Nicolson with rho frozen from the first stage. Returns
// (rho1, rho - rho1).
Trajectory two_color_reference_solve(const DensityField& rho0, double lambda,
                                     const SolverConfig& cfg);

// L2 norm of m(T) - m(0) - sum_k dt_k * 1/2 Lap(rho1 + rho2)(t_k),
// m = rho1/s1 + rho2/s2, over consecutive snapshots. Zero for exact
// solutions; O(dt) for snapshot-per-step trajectories.
double master_residual(std::span<const DensityField> trajectory,
                       const ModelParams& p);

// 2/M |sum_j v_j exp(-2 pi i k x_j)|.
double fourier_amplitude(std::span<const double> values, int k);

// Grid L1 / L2 distances (sum |a - b| dx, sqrt(sum (a - b)^2 dx)).
double l1_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(std::span<const double> a, std::span<const double> b);

}  // namespace libmlab
