#pragma once

// Closed-form objects of the two-component locally interacting Brownian
// motion (LIBM) model: switching rates, the cross-diffusion matrix of the
// hydrodynamic limit, its two-color special case, normal ellipticity and the
// maps to and from the ternary Maxwell-Stefan system.
//
// Everything here is a pure function returning values; safe to call from any
// thread.

#include <cstdint>
#include <utility>

namespace libmlab {

enum class Species : std::uint8_t { one = 1, two = 2 };

inline constexpr int index_of(Species c) noexcept {
  return c == Species::one ? 0 : 1;
}

// A point of the unit torus, always stored in [0, 1).
class TorusPoint {
 public:
  constexpr TorusPoint() = default;
  explicit TorusPoint(double x);

  double value() const noexcept { return value_; }

  // Reduces any real to [0, 1).
  static double wrap(double x) noexcept;

 private:
  double value_ = 0.0;
};

// nu((a - b) mod 1) with nu(x) = x on [0, 1): the discontinuous "distance
// walked forward from b to a".
double torus_nu(TorusPoint a, TorusPoint b) noexcept;

struct ModelParams {
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  double lambda = 1.0;
  int n = 1;

  // Throws InvalidArgument unless sigma^2 > 0, lambda >= 0, N >= 1.
  void validate() const;

  double sigma_sq(Species c) const noexcept {
    return c == Species::one ? sigma1_sq : sigma2_sq;
  }
};

// Switching intensity per unit of collision local time, before the factor N:
// lambda * sigma_c1^2 * sigma_c2^2.
double switch_rate(Species c1, Species c2, const ModelParams& p) noexcept;

struct SpeciesPair {
  double rho1 = 0.0;
  double rho2 = 0.0;
};

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Row-major 2x2 matrix, passed by value.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0;
  double a21 = 0.0, a22 = 0.0;

  double trace() const noexcept { return a11 + a22; }
  double det() const noexcept { return a11 * a22 - a12 * a21; }
  Vec2 operator*(Vec2 v) const noexcept {
    return {a11 * v.x1 + a12 * v.x2, a21 * v.x1 + a22 * v.x2};
  }
  // Largest |eigenvalue| (eigenvalues may be complex for general input).
  double spectral_radius() const noexcept;

  static Mat2 identity() noexcept { return {1.0, 0.0, 0.0, 1.0}; }
};

using CrossDiffusionMatrix = Mat2;

// D(rho1, rho2) of the limiting equation
//   d_t rho = 1/2 div(D(rho) grad rho),
//   D = [[rho1 + lambda s1, rho1], [rho2, rho2 + lambda s2]] / Q,
//   Q = lambda + rho1/s1 + rho2/s2.
// Throws DegenerateDenominator when Q <= 0 (lambda = 0 and vacuum).
CrossDiffusionMatrix diffusion_matrix(SpeciesPair rho, const ModelParams& p);

// Self-diffusion coefficient S(rho) = lambda / (lambda + rho).
double self_diffusion(double rho, double lambda);

// Two-color matrix with bulk diffusion D == 1 and S(rho) = lambda/(lambda+rho).
// Throws DegenerateDenominator at rho1 + rho2 = 0.
CrossDiffusionMatrix two_color_matrix(SpeciesPair rho, double lambda);

// trace > 0 and det > 0; for 2x2 real matrices this is equivalent to every
// eigenvalue having positive real part.
bool is_normally_elliptic(const Mat2& m) noexcept;

// alpha = (lambda + rho_bar1/s1 + rho_bar2/s2)^-1.
double alpha_const(const ModelParams& p, double rho_bar1, double rho_bar2);

// Binary diffusion coefficients of a ternary Maxwell-Stefan mixture.
struct MSParams {
  double d12 = 1.0;
  double d13 = 1.0;
  double d23 = 1.0;

  void validate() const;
  // D12 > max(D13, D23): the range in which the LIBM correspondence holds.
  bool admits_libm_map() const noexcept;
};

// f(u1, u2) = D13 D23 + D13 (D12 - D23) u1 + D23 (D12 - D13) u2.
double ms_denominator(double u1, double u2, const MSParams& ms) noexcept;

// Ternary Maxwell-Stefan matrix A(u1, u2) (flux J = -A grad u).
// Throws SingularSystem when f(u1, u2) = 0.
CrossDiffusionMatrix ms_ternary_matrix(double u1, double u2,
                                       const MSParams& ms);

// Density scaling used by the LIBM <-> Maxwell-Stefan maps.
//
// as_published: rho1 = k D13 (D12 - D23) u1, rho2 = k D23 (D12 - D13) u2.
//   The two directions are exact inverses of each other but do not carry
//   one PDE into the other.
// pde_consistent: rho1 = k (D12 - D23) u1, rho2 = k (D12 - D13) u2. With this
//   scaling D(P u) = P A(u) P^-1, so rho(t) solves the LIBM limit equation iff
//   u(t / 2) solves the Maxwell-Stefan system.
// Both use sigma_c^2 = 1/D_c3 and lambda = k D13 D23.
enum class MapConvention { as_published, pde_consistent };

struct LibmFromMs {
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  double lambda = 0.0;
  SpeciesPair rho;
};

// Throws ConstraintViolation unless D12 > max(D13, D23) and k > 0.
LibmFromMs libm_from_ms(const MSParams& ms, double k, SpeciesPair u,
                        MapConvention conv = MapConvention::as_published);

struct MsFromLibm {
  MSParams ms;
  SpeciesPair u;
  // The k that maps the result back onto the input.
  double k = 0.0;
};

// Throws ConstraintViolation when lambda = 0 or d12 <= max(1/s1, 1/s2).
MsFromLibm ms_from_libm(const ModelParams& p, double d12, SpeciesPair rho,
                        MapConvention conv = MapConvention::as_published);

// Time factor between the LIBM limit equation and the Maxwell-Stefan system
// under MapConvention::pde_consistent: tau = t * ms_time_factor.
inline constexpr double ms_time_factor = 0.5;

}  // namespace libmlab
