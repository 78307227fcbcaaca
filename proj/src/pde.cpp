#include "libmlab/pde.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "libmlab/errors.hpp"

namespace libmlab {

void SolverConfig::validate() const {
  Grid1D{cells}.validate();
  if (!std::isfinite(dt)) throw InvalidArgument("dt must be finite");
  if (!(t_final >= 0.0) || !std::isfinite(t_final))
    throw InvalidArgument("t_final must be finite and non-negative");
  if (!(stability_safety > 0.0) || stability_safety > 1.0)
    throw InvalidArgument("stability_safety must lie in (0, 1]");
  for (double t : snapshot_times)
    if (!(t >= 0.0) || t > t_final * (1.0 + 1e-12) + 1e-15)
      throw InvalidArgument("snapshot times must lie in [0, t_final]");
}

namespace {

constexpr double blow_up_bound = 1e6;

// F = M(state) * grad, with an optional direct flux rule.
struct FluxLaw {
  std::function<Mat2(SpeciesPair)> matrix;
  std::function<Vec2(SpeciesPair, Vec2)> flux;  // may be empty
  // Spectral radius entering the explicit bound dx^2 / (2 r).
  std::function<double(SpeciesPair)> radius;
};

SpeciesPair mean_state(const DensityField& f, int i, int j) {
  return {0.5 * (f.rho1[i] + f.rho1[j]), 0.5 * (f.rho2[i] + f.rho2[j])};
}

void fill_fluxes(const DensityField& f, const FluxLaw& law,
                 std::vector<Vec2>& out) {
  const int m = static_cast<int>(f.size());
  const double inv_dx = static_cast<double>(m);
  out.resize(f.size());
  for (int i = 0; i < m; ++i) {
    const int j = i + 1 == m ? 0 : i + 1;
    const SpeciesPair s = mean_state(f, i, j);
    const Vec2 grad{(f.rho1[j] - f.rho1[i]) * inv_dx,
                    (f.rho2[j] - f.rho2[i]) * inv_dx};
    out[i] = law.flux ? law.flux(s, grad) : law.matrix(s) * grad;
  }
}

double bound_for(const DensityField& f, const FluxLaw& law) {
  const int m = static_cast<int>(f.size());
  double r = 0.0;
  for (int i = 0; i < m; ++i)
    r = std::max(r, law.radius(mean_state(f, i, i + 1 == m ? 0 : i + 1)));
  const double dx = 1.0 / m;
  return r > 0.0 ? dx * dx / (2.0 * r) : 1e300;
}

void apply_fluxes(DensityField& f, const std::vector<Vec2>& flux, double h) {
  const int m = static_cast<int>(f.size());
  const double c = h * m;
  for (int i = 0; i < m; ++i) {
    const int l = i == 0 ? m - 1 : i - 1;
    f.rho1[i] += c * (flux[i].x1 - flux[l].x1);
    f.rho2[i] += c * (flux[i].x2 - flux[l].x2);
  }
}

double check_sane(const DensityField& f, double t) {
  double lo = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (double v : {f.rho1[i], f.rho2[i]}) {
      if (!std::isfinite(v) || std::abs(v) > blow_up_bound) {
        std::ostringstream os;
        os << "solution blew up at t = " << t << " (cell " << i
           << ", value " << v << ")";
        throw BlowUpError(os.str(), t);
      }
      lo = std::min(lo, v);
    }
  return lo;
}

class Stepper {
 public:
  Stepper(FluxLaw law, const SolverConfig& cfg, const FluxObserver& obs)
      : law_(std::move(law)), cfg_(cfg), obs_(obs) {}

  // Nominal step for the given state.
  double nominal_dt(const DensityField& f) const {
    if (cfg_.dt > 0.0) return cfg_.dt;
    const double b = cfg_.stability_safety * bound_for(f, law_);
    return cfg_.scheme == Scheme::explicit_rk2 ? b : 20.0 * b;
  }

  void step(DensityField& f, double h) {
    if (cfg_.scheme == Scheme::explicit_rk2)
      explicit_step(f, h);
    else
      implicit_step(f, h);
  }

 private:
  void explicit_step(DensityField& f, double h) {
    const double limit = cfg_.stability_safety * bound_for(f, law_);
    if (h > limit * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "explicit step dt = " << h << " exceeds the stability limit "
         << limit << " at t = " << f.time;
      throw StabilityError(os.str());
    }
    fill_fluxes(f, law_, k1_);
    if (obs_) obs_(f, k1_);
    stage_ = f;
    apply_fluxes(stage_, k1_, h);
    fill_fluxes(stage_, law_, k2_);
    if (obs_) obs_(stage_, k2_);
    for (std::size_t i = 0; i < k1_.size(); ++i) {
      k1_[i].x1 = 0.5 * (k1_[i].x1 + k2_[i].x1);
      k1_[i].x2 = 0.5 * (k1_[i].x2 + k2_[i].x2);
    }
    apply_fluxes(f, k1_, h);
  }

  // (I - h L(lagged)) u_new = u_old, unknown 2 i + c.
  void implicit_step(DensityField& f, double h) {
    const int m = static_cast<int>(f.size());
    const double c = h * m * m;
    std::vector<Mat2> mats(f.size());
    for (int i = 0; i < m; ++i)
      mats[i] = law_.matrix(mean_state(f, i, i + 1 == m ? 0 : i + 1));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 12);
    auto add_block = [&](int row_cell, int col_cell, const Mat2& b,
                         double scale) {
      const double e[2][2] = {{b.a11, b.a12}, {b.a21, b.a22}};
      for (int r = 0; r < 2; ++r)
        for (int q = 0; q < 2; ++q)
          if (e[r][q] != 0.0)
            trip.emplace_back(2 * row_cell + r, 2 * col_cell + q,
                              scale * e[r][q]);
    };
    for (int i = 0; i < m; ++i) {
      const int up = i + 1 == m ? 0 : i + 1;
      const int dn = i == 0 ? m - 1 : i - 1;
      const Mat2& right = mats[i];
      const Mat2& left = mats[dn];
      trip.emplace_back(2 * i, 2 * i, 1.0);
      trip.emplace_back(2 * i + 1, 2 * i + 1, 1.0);
      add_block(i, up, right, -c);
      add_block(i, i, right, c);
      add_block(i, i, left, c);
      add_block(i, dn, left, -c);
    }
    Eigen::SparseMatrix<double> a(2 * m, 2 * m);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
      throw SingularSystem("semi-implicit system could not be factorized");
    Eigen::VectorXd rhs(2 * m);
    for (int i = 0; i < m; ++i) {
      rhs[2 * i] = f.rho1[i];
      rhs[2 * i + 1] = f.rho2[i];
    }
    const Eigen::VectorXd x = lu.solve(rhs);
    for (int i = 0; i < m; ++i) {
      f.rho1[i] = x[2 * i];
      f.rho2[i] = x[2 * i + 1];
    }
    if (obs_) {
      k1_.resize(f.size());
      for (int i = 0; i < m; ++i) {
        const int j = i + 1 == m ? 0 : i + 1;
        k1_[i] = mats[i] * Vec2{(f.rho1[j] - f.rho1[i]) * m,
                                (f.rho2[j] - f.rho2[i]) * m};
      }
      obs_(f, k1_);
    }
  }

  FluxLaw law_;
  SolverConfig cfg_;
  const FluxObserver& obs_;
  std::vector<Vec2> k1_, k2_;
  DensityField stage_;
};

std::vector<double> targets(const SolverConfig& cfg) {
  std::vector<double> t = cfg.snapshot_times;
  if (t.empty()) t = {0.0, cfg.t_final};
  for (double& x : t) x = std::clamp(x, 0.0, cfg.t_final);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (cfg.t_final == 0.0) t = {0.0};
  return t;
}

Trajectory run(const DensityField& start, const SolverConfig& cfg,
               const FluxLaw& law, const FluxObserver& obs) {
  cfg.validate();
  if (static_cast<int>(start.size()) != cfg.cells)
    throw InvalidArgument("initial field does not match the configured grid");
  Stepper stepper(law, cfg, obs);
  Trajectory out;
  DensityField f = start;
  f.time = 0.0;
  out.min_value = check_sane(f, 0.0);
  out.dt = stepper.nominal_dt(f);
  double t = 0.0;
  bool recorded_start = false;
  for (double target : targets(cfg)) {
    if (target <= 0.0) {
      out.snapshots.push_back(f);
      recorded_start = true;
      continue;
    }
    if (cfg.record_every_step && !recorded_start) {
      out.snapshots.push_back(f);
      recorded_start = true;
    }
    const double start = t;
    const double span = target - t;
    // Fixed dt: equal substeps landing on the target. Automatic dt: the
    // stable step is re-evaluated before each substep.
    const bool fixed = cfg.dt > 0.0;
    double n_total = fixed ? std::max(1.0, std::ceil(span / cfg.dt - 1e-9)) : 0.0;
    for (std::int64_t k = 1; t < target; ++k) {
      double h, next;
      if (fixed) {
        next = k >= n_total ? target : start + span * (k / n_total);
        h = next - t;
      } else {
        const double remaining = target - t;
        const double n = std::ceil(remaining / stepper.nominal_dt(f) - 1e-6);
        h = n <= 1.0 ? remaining : remaining / n;
        next = n <= 1.0 ? target : t + h;
      }
      stepper.step(f, h);
      t = next;
      f.time = t;
      ++out.steps;
      out.min_value = std::min(out.min_value, check_sane(f, t));
      if (cfg.record_every_step && t < target) out.snapshots.push_back(f);
    }
    out.snapshots.push_back(f);
  }
  return out;
}

FluxLaw libm_law(const ModelParams& p) {
  FluxLaw law;
  law.matrix = [p](SpeciesPair s) {
    Mat2 d = diffusion_matrix(s, p);
    return Mat2{0.5 * d.a11, 0.5 * d.a12, 0.5 * d.a21, 0.5 * d.a22};
  };
  law.radius = [p](SpeciesPair s) {
    return diffusion_matrix(s, p).spectral_radius();
  };
  return law;
}

// Friction matrix B with grad u = -B J.
Mat2 ms_friction(SpeciesPair u, const MSParams& ms) {
  return {ms.d13 + (ms.d12 - ms.d13) * u.rho2, u.rho1 * (ms.d13 - ms.d12),
          u.rho2 * (ms.d23 - ms.d12), ms.d23 + (ms.d12 - ms.d23) * u.rho1};
}

// J = -B^-1 grad u by Cramer's rule.
Vec2 ms_solve(SpeciesPair u, Vec2 grad, const MSParams& ms) {
  const Mat2 b = ms_friction(u, ms);
  const double det = b.det();
  if (det == 0.0 || !std::isfinite(det))
    throw SingularSystem("Maxwell-Stefan flux system is singular");
  return {-(b.a22 * grad.x1 - b.a12 * grad.x2) / det,
          -(-b.a21 * grad.x1 + b.a11 * grad.x2) / det};
}

FluxLaw ms_law(const MSParams& ms, MsForm form) {
  FluxLaw law;
  law.radius = [ms](SpeciesPair s) {
    return ms_ternary_matrix(s.rho1, s.rho2, ms).spectral_radius();
  };
  if (form == MsForm::matrix) {
    law.matrix = [ms](SpeciesPair s) {
      return ms_ternary_matrix(s.rho1, s.rho2, ms);
    };
  } else {
    law.matrix = [ms](SpeciesPair s) {
      const Mat2 b = ms_friction(s, ms);
      const double det = b.det();
      if (det == 0.0 || !std::isfinite(det))
        throw SingularSystem("Maxwell-Stefan flux system is singular");
      return Mat2{b.a22 / det, -b.a12 / det, -b.a21 / det, b.a11 / det};
    };
    law.flux = [ms](SpeciesPair s, Vec2 g) {
      const Vec2 j = ms_solve(s, g, ms);
      return Vec2{-j.x1, -j.x2};
    };
  }
  return law;
}

}  // namespace

DensityField sample_field(const Grid1D& grid,
                          const std::function<double(double)>& rho1,
                          const std::function<double(double)>& rho2) {
  grid.validate();
  std::vector<double> a(static_cast<std::size_t>(grid.cells));
  std::vector<double> b(a.size());
  for (int i = 0; i < grid.cells; ++i) {
    a[i] = rho1(grid.center(i));
    b[i] = rho2(grid.center(i));
  }
  return DensityField(std::move(a), std::move(b), 0.0);
}

std::vector<Vec2> interface_flux(const DensityField& field,
                                 const ModelParams& p) {
  std::vector<Vec2> out;
  fill_fluxes(field, libm_law(p), out);
  return out;
}

double stable_dt(const DensityField& field, const ModelParams& p,
                 double safety) {
  return safety * bound_for(field, libm_law(p));
}

DensityField step_fields(const DensityField& field, const SolverConfig& cfg,
                         const ModelParams& p) {
  const FluxObserver none;
  Stepper s(libm_law(p), cfg, none);
  DensityField f = field;
  const double h = s.nominal_dt(f);
  s.step(f, h);
  f.time = field.time + h;
  check_sane(f, f.time);
  return f;
}

Trajectory solve_trajectory(const DensityField& rho0, const SolverConfig& cfg,
                            const ModelParams& p,
                            const FluxObserver& observer) {
  p.validate();
  return run(rho0, cfg, libm_law(p), observer);
}

std::vector<Vec2> ms_flux_inversion(const DensityField& u,
                                    const MSParams& ms) {
  const int m = static_cast<int>(u.size());
  std::vector<Vec2> out(u.size());
  for (int i = 0; i < m; ++i) {
    const int j = i + 1 == m ? 0 : i + 1;
    out[i] = ms_solve(mean_state(u, i, j),
                      {(u.rho1[j] - u.rho1[i]) * m, (u.rho2[j] - u.rho2[i]) * m},
                      ms);
  }
  return out;
}

std::vector<Vec2> ms_matrix_flux(const DensityField& u, const MSParams& ms) {
  const int m = static_cast<int>(u.size());
  std::vector<Vec2> out(u.size());
  for (int i = 0; i < m; ++i) {
    const int j = i + 1 == m ? 0 : i + 1;
    const SpeciesPair s = mean_state(u, i, j);
    const Vec2 f = ms_ternary_matrix(s.rho1, s.rho2, ms) *
                   Vec2{(u.rho1[j] - u.rho1[i]) * m, (u.rho2[j] - u.rho2[i]) * m};
    out[i] = {-f.x1, -f.x2};
  }
  return out;
}

Trajectory solve_ms_trajectory(const DensityField& u0, const MSParams& ms,
                               const SolverConfig& cfg, MsForm form) {
  ms.validate();
  return run(u0, cfg, ms_law(ms, form), {});
}

namespace {

// Real Fourier representation of a periodic cell-centre sample, Nyquist
// mode dropped.
struct HeatModes {
  int m = 0;
  std::vector<double> a, b;  // cos / sin coefficients, index = wavenumber
  std::vector<double> cos_tab, sin_tab;  // angle 2 pi q / (2m)

  explicit HeatModes(std::span<const double> v) : m(static_cast<int>(v.size())) {
    const int half = m / 2;
    a.assign(static_cast<std::size_t>(half), 0.0);
    b.assign(static_cast<std::size_t>(half), 0.0);
    cos_tab.resize(static_cast<std::size_t>(2 * m));
    sin_tab.resize(cos_tab.size());
    for (int q = 0; q < 2 * m; ++q) {
      const double ang = std::numbers::pi * q / m;
      cos_tab[q] = std::cos(ang);
      sin_tab[q] = std::sin(ang);
    }
    for (int k = 0; k < half; ++k) {
      double sc = 0.0, ss = 0.0;
      for (int j = 0; j < m; ++j) {
        const int q = static_cast<int>((static_cast<long>(k) * (2 * j + 1)) % (2 * m));
        sc += v[j] * cos_tab[q];
        ss += v[j] * sin_tab[q];
      }
      a[k] = (k == 0 ? 1.0 : 2.0) * sc / m;
      b[k] = (k == 0 ? 0.0 : 2.0) * ss / m;
    }
  }

  // Value and x-derivative at x = q / (2m), time t.
  void eval(int q, std::span<const double> decay, double& value,
            double& deriv) const {
    value = 0.0;
    deriv = 0.0;
    const int half = m / 2;
    for (int k = 0; k < half; ++k) {
      const int idx = static_cast<int>((static_cast<long>(k) * q) % (2 * m));
      const double c = cos_tab[idx], s = sin_tab[idx];
      const double w = decay[k];
      value += w * (a[k] * c + b[k] * s);
      deriv += w * 2.0 * std::numbers::pi * k * (b[k] * c - a[k] * s);
    }
  }

  void decay_at(double t, std::vector<double>& out) const {
    out.resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double kk = 2.0 * std::numbers::pi * static_cast<double>(k);
      out[k] = std::exp(-0.5 * kk * kk * t);
    }
  }
};

// Interface coefficients of the rho1 equation: G_i = al_i u_{i+1} + be_i u_i.
void color_coefficients(const HeatModes& heat, double t, double lambda,
                        std::vector<double>& al, std::vector<double>& be,
                        std::vector<double>& decay) {
  const int m = heat.m;
  heat.decay_at(t, decay);
  al.resize(static_cast<std::size_t>(m));
  be.resize(al.size());
  for (int i = 0; i < m; ++i) {
    double rho, drho;
    heat.eval(2 * (i + 1), decay, rho, drho);
    const double s = self_diffusion(rho, lambda);
    if (!(rho > 0.0))
      throw DegenerateDenominator("two-color solve needs positive total density");
    const double drift = 0.25 * (1.0 - s) * drho / rho;
    al[i] = 0.5 * s * m + drift;
    be[i] = -0.5 * s * m + drift;
  }
}

Eigen::SparseMatrix<double> color_operator(const std::vector<double>& al,
                                           const std::vector<double>& be,
                                           double scale) {
  const int m = static_cast<int>(al.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * m));
  for (int i = 0; i < m; ++i) {
    const int up = i + 1 == m ? 0 : i + 1;
    const int dn = i == 0 ? m - 1 : i - 1;
    trip.emplace_back(i, up, scale * al[i] * m);
    trip.emplace_back(i, i, scale * (be[i] - al[dn]) * m);
    trip.emplace_back(i, dn, scale * (-be[dn]) * m);
  }
  Eigen::SparseMatrix<double> l(m, m);
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

}  // namespace

Trajectory two_color_reference_solve(const DensityField& rho0, double lambda,
                                     const SolverConfig& cfg) {
  cfg.validate();
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  const int m = static_cast<int>(rho0.size());
  if (m != cfg.cells)
    throw InvalidArgument("initial field does not match the configured grid");
  std::vector<double> total(rho0.size());
  for (int i = 0; i < m; ++i) total[i] = rho0.rho1[i] + rho0.rho2[i];
  const HeatModes heat(total);

  const double dx = 1.0 / m;
  const double h_nominal = cfg.dt > 0.0 ? cfg.dt : 0.1 * dx;
  Trajectory out;
  out.dt = h_nominal;

  std::vector<double> decay;
  auto field_at = [&](double t, const Eigen::VectorXd& u) {
    heat.decay_at(t, decay);
    DensityField f;
    f.rho1.resize(rho0.size());
    f.rho2.resize(rho0.size());
    f.time = t;
    for (int i = 0; i < m; ++i) {
      double rho, drho;
      heat.eval(2 * i + 1, decay, rho, drho);
      f.rho1[i] = u[i];
      f.rho2[i] = rho - u[i];
    }
    out.min_value = std::min(out.min_value, check_sane(f, t));
    return f;
  };

  Eigen::VectorXd u(m);
  for (int i = 0; i < m; ++i) u[i] = rho0.rho1[i];
  std::vector<double> al, be, al1, be1;
  Eigen::SparseMatrix<double> eye(m, m);
  eye.setIdentity();

  double t = 0.0;
  for (double target : targets(cfg)) {
    while (t < target) {
      const double remaining = target - t;
      const double n = std::ceil(remaining / h_nominal - 1e-9);
      const double h = n <= 1.0 ? remaining : remaining / n;
      const double t1 = n <= 1.0 ? target : t + h;
      color_coefficients(heat, t, lambda, al, be, decay);
      color_coefficients(heat, t1, lambda, al1, be1, decay);
      const Eigen::SparseMatrix<double> explicit_part =
          eye + color_operator(al, be, 0.5 * h);
      Eigen::SparseMatrix<double> implicit_part =
          eye - color_operator(al1, be1, 0.5 * h);
      implicit_part.makeCompressed();
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(implicit_part);
      if (lu.info() != Eigen::Success)
        throw SingularSystem("Crank-Nicolson system could not be factorized");
      const Eigen::VectorXd rhs = explicit_part * u;
      u = lu.solve(rhs);
      t = t1;
      ++out.steps;
    }
    out.snapshots.push_back(field_at(t, u));
  }
  return out;
}

double master_residual(std::span<const DensityField> trajectory,
                       const ModelParams& p) {
  if (trajectory.size() < 2)
    throw InvalidArgument("master_residual needs at least two snapshots");
  const auto& first = trajectory.front();
  const auto& last = trajectory.back();
  const int m = static_cast<int>(first.size());
  const double inv_dx2 = static_cast<double>(m) * m;
  std::vector<double> r(first.size());
  for (int i = 0; i < m; ++i)
    r[i] = (last.rho1[i] - first.rho1[i]) / p.sigma1_sq +
           (last.rho2[i] - first.rho2[i]) / p.sigma2_sq;
  for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
    const auto& f = trajectory[k];
    const double h = trajectory[k + 1].time - f.time;
    for (int i = 0; i < m; ++i) {
      const int up = i + 1 == m ? 0 : i + 1;
      const int dn = i == 0 ? m - 1 : i - 1;
      const double lap = (f.rho1[up] + f.rho2[up] - 2.0 * (f.rho1[i] + f.rho2[i]) +
                          f.rho1[dn] + f.rho2[dn]) * inv_dx2;
      r[i] -= h * 0.5 * lap;
    }
  }
  double ss = 0.0;
  for (double v : r) ss += v * v;
  return std::sqrt(ss / m);
}

double fourier_amplitude(std::span<const double> values, int k) {
  const std::size_t m = values.size();
  double c = 0.0, s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double ang = 2.0 * std::numbers::pi * k * (j + 0.5) / m;
    c += values[j] * std::cos(ang);
    s += values[j] * std::sin(ang);
  }
  return 2.0 / m * std::hypot(c, s);
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw InvalidArgument("distance needs equal non-empty grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / a.size();
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw InvalidArgument("distance needs equal non-empty grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / a.size());
}

}  // namespace libmlab
