#include "libmlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "libmlab/errors.hpp"

namespace libmlab {

double TorusPoint::wrap(double x) noexcept {
  double r = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.0.
  if (r >= 1.0) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(double x) : value_(wrap(x)) {}

double torus_nu(TorusPoint a, TorusPoint b) noexcept {
  return TorusPoint::wrap(a.value() - b.value());
}

void ModelParams::validate() const {
  if (!(sigma1_sq > 0.0) || !(sigma2_sq > 0.0))
    throw InvalidArgument("sigma1_sq and sigma2_sq must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("lambda must be finite and non-negative");
  if (n < 1) throw InvalidArgument("particle count N must be at least 1");
}

double switch_rate(Species c1, Species c2, const ModelParams& p) noexcept {
  return p.lambda * p.sigma_sq(c1) * p.sigma_sq(c2);
}

double Mat2::spectral_radius() const noexcept {
  const std::complex<double> tr = trace();
  const std::complex<double> disc = std::sqrt(tr * tr - 4.0 * det());
  return std::max(std::abs((tr + disc) / 2.0), std::abs((tr - disc) / 2.0));
}

CrossDiffusionMatrix diffusion_matrix(SpeciesPair rho, const ModelParams& p) {
  const double q = p.lambda + rho.rho1 / p.sigma1_sq + rho.rho2 / p.sigma2_sq;
  if (!(q > 0.0))
    throw DegenerateDenominator(
        "diffusion matrix denominator lambda + rho1/s1 + rho2/s2 vanishes");
  return {(rho.rho1 + p.lambda * p.sigma1_sq) / q, rho.rho1 / q,
          rho.rho2 / q, (rho.rho2 + p.lambda * p.sigma2_sq) / q};
}

double self_diffusion(double rho, double lambda) {
  const double q = lambda + rho;
  if (!(q > 0.0))
    throw DegenerateDenominator("self-diffusion lambda + rho vanishes");
  return lambda / q;
}

CrossDiffusionMatrix two_color_matrix(SpeciesPair rho, double lambda) {
  const double total = rho.rho1 + rho.rho2;
  if (!(total > 0.0))
    throw DegenerateDenominator("two-color matrix needs rho1 + rho2 > 0");
  const double s = self_diffusion(total, lambda);
  constexpr double bulk = 1.0;
  const double f1 = rho.rho1 / total;
  const double f2 = rho.rho2 / total;
  return {f1 * bulk + f2 * s, f1 * (bulk - s),
          f2 * (bulk - s), f2 * bulk + f1 * s};
}

bool is_normally_elliptic(const Mat2& m) noexcept {
  return m.trace() > 0.0 && m.det() > 0.0;
}

double alpha_const(const ModelParams& p, double rho_bar1, double rho_bar2) {
  const double q = p.lambda + rho_bar1 / p.sigma1_sq + rho_bar2 / p.sigma2_sq;
  if (!(q > 0.0))
    throw DegenerateDenominator("alpha denominator vanishes");
  return 1.0 / q;
}

void MSParams::validate() const {
  if (!(d12 > 0.0) || !(d13 > 0.0) || !(d23 > 0.0))
    throw InvalidArgument("binary diffusion coefficients must be positive");
}

bool MSParams::admits_libm_map() const noexcept {
  return d12 > std::max(d13, d23);
}

double ms_denominator(double u1, double u2, const MSParams& ms) noexcept {
  return ms.d13 * ms.d23 + ms.d13 * (ms.d12 - ms.d23) * u1 +
         ms.d23 * (ms.d12 - ms.d13) * u2;
}

CrossDiffusionMatrix ms_ternary_matrix(double u1, double u2,
                                       const MSParams& ms) {
  const double f = ms_denominator(u1, u2, ms);
  if (f == 0.0 || !std::isfinite(f))
    throw SingularSystem("Maxwell-Stefan denominator f(u1, u2) vanishes");
  return {(ms.d23 + (ms.d12 - ms.d23) * u1) / f, (ms.d12 - ms.d13) * u1 / f,
          (ms.d12 - ms.d23) * u2 / f, (ms.d13 + (ms.d12 - ms.d13) * u2) / f};
}

namespace {

// Multipliers p_c with rho_c = p_c u_c.
Vec2 density_scale(const MSParams& ms, double k, MapConvention conv) {
  Vec2 s{k * (ms.d12 - ms.d23), k * (ms.d12 - ms.d13)};
  if (conv == MapConvention::as_published) {
    s.x1 *= ms.d13;
    s.x2 *= ms.d23;
  }
  return s;
}

}  // namespace

LibmFromMs libm_from_ms(const MSParams& ms, double k, SpeciesPair u,
                        MapConvention conv) {
  ms.validate();
  if (!(k > 0.0)) throw ConstraintViolation("k must be positive");
  if (!ms.admits_libm_map())
    throw ConstraintViolation("LIBM map requires D12 > max(D13, D23)");
  const Vec2 s = density_scale(ms, k, conv);
  LibmFromMs out;
  out.sigma1_sq = 1.0 / ms.d13;
  out.sigma2_sq = 1.0 / ms.d23;
  out.lambda = k * ms.d13 * ms.d23;
  out.rho = {s.x1 * u.rho1, s.x2 * u.rho2};
  return out;
}

MsFromLibm ms_from_libm(const ModelParams& p, double d12, SpeciesPair rho,
                        MapConvention conv) {
  if (!(p.lambda > 0.0))
    throw ConstraintViolation("Maxwell-Stefan map requires lambda > 0");
  const double bound = std::max(1.0 / p.sigma1_sq, 1.0 / p.sigma2_sq);
  if (!(d12 > bound))
    throw ConstraintViolation("D12 must exceed max(1/sigma1^2, 1/sigma2^2) = " +
                              std::to_string(bound));
  MsFromLibm out;
  out.ms = {d12, 1.0 / p.sigma1_sq, 1.0 / p.sigma2_sq};
  out.k = p.lambda * p.sigma1_sq * p.sigma2_sq;
  if (conv == MapConvention::as_published) {
    out.u = {rho.rho1 / (p.lambda * (p.sigma2_sq * d12 - 1.0)),
             rho.rho2 / (p.lambda * (p.sigma1_sq * d12 - 1.0))};
  } else {
    const Vec2 s = density_scale(out.ms, out.k, conv);
    out.u = {rho.rho1 / s.x1, rho.rho2 / s.x2};
  }
  return out;
}

}  // namespace libmlab
