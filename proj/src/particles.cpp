#include "libmlab/particles.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>

#include "libmlab/errors.hpp"

namespace libmlab {

double ParticleState::gap(int slot) const noexcept {
  const int n = size();
  if (n == 1) return 1.0;
  if (slot + 1 == n) return positions[0] + 1.0 - positions[slot];
  return positions[slot + 1] - positions[slot];
}

double ParticleState::lifted_position(int id) const noexcept {
  return positions[slot_of[id]] + winding[id];
}

std::array<int, 2> ParticleState::counts() const noexcept {
  std::array<int, 2> c{0, 0};
  for (Species t : types) ++c[index_of(t)];
  return c;
}

void ParticleState::check_invariants() const {
  const int n = size();
  if (n < 1) throw SimulationAbort("empty particle state");
  if (static_cast<int>(types.size()) != n || static_cast<int>(ids.size()) != n ||
      static_cast<int>(slot_of.size()) != n ||
      static_cast<int>(winding.size()) != n)
    throw SimulationAbort("particle state arrays have inconsistent sizes");
  for (int s = 0; s < n; ++s) {
    if (!std::isfinite(positions[s]))
      throw SimulationAbort("non-finite particle position");
    if (slot_of[ids[s]] != s)
      throw SimulationAbort("slot/id bookkeeping is inconsistent");
    if (n > 1 && !(gap(s) >= 0.0)) {
      std::ostringstream os;
      os << "cyclic order violated at slot " << s << " (gap " << gap(s) << ")";
      throw SimulationAbort(os.str());
    }
  }
}

LocalTimeLedger LocalTimeLedger::fresh(int n, Rng& rng) {
  LocalTimeLedger l;
  const int pairs = n >= 2 ? n : 0;
  l.pair_accrual.assign(static_cast<std::size_t>(pairs), 0.0);
  l.pair_hazard.assign(static_cast<std::size_t>(pairs), 0.0);
  l.threshold.resize(static_cast<std::size_t>(pairs));
  for (auto& e : l.threshold) e = rng.exponential();
  l.per_particle.assign(static_cast<std::size_t>(n), {0.0, 0.0});
  return l;
}

double default_dt(const ModelParams& p) {
  const double n = static_cast<double>(p.n);
  return 0.1 / (n * n) / std::max(p.sigma1_sq, p.sigma2_sq);
}

double effective_dt(const SimConfig& cfg, const ModelParams& p) {
  double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(p);
  if (cfg.t_final > 0.0) {
    // Land exactly on t_final.
    const double steps = std::ceil(cfg.t_final / dt - 1e-9);
    dt = cfg.t_final / std::max(steps, 1.0);
  }
  return dt;
}

std::optional<std::string> dt_warning(double dt, const ModelParams& p) {
  const double n = static_cast<double>(p.n);
  const double limit = 1.0 / (n * n) / std::min(p.sigma1_sq, p.sigma2_sq);
  if (dt > limit) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the neighbour-gap diffusion time "
       << limit << "; collisions will be poorly resolved";
    return os.str();
  }
  return std::nullopt;
}

namespace {

constexpr int fine_cells = 1 << 14;

struct Sampler {
  std::vector<double> cdf;  // cdf[k] = mass of cells [0, k)
  double total = 0.0;

  explicit Sampler(const DensityFn& rho) : cdf(fine_cells + 1, 0.0) {
    for (int k = 0; k < fine_cells; ++k) {
      const double v = rho((k + 0.5) / fine_cells);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("initial density is negative or not finite");
      cdf[k + 1] = cdf[k] + v / fine_cells;
    }
    total = cdf.back();
  }

  double draw(double u) const {
    const double target = u * total;
    // First cell whose right cumulative mass exceeds the target.
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), target);
    if (it == cdf.end()) --it;
    const auto k = static_cast<int>(it - cdf.begin()) - 1;
    const double w = cdf[k + 1] - cdf[k];
    const double frac = w > 0.0 ? (target - cdf[k]) / w : 0.5;
    return TorusPoint::wrap((k + std::clamp(frac, 0.0, 1.0)) / fine_cells);
  }
};

void swap_labels(ParticleState& s, int a, int b) {
  const int ida = s.ids[a];
  const int idb = s.ids[b];
  std::swap(s.ids[a], s.ids[b]);
  std::swap(s.types[a], s.types[b]);
  s.slot_of[ida] = b;
  s.slot_of[idb] = a;
  if (b == 0 && a == s.size() - 1) {
    // Across the seam the slot coordinates differ by one turn.
    s.winding[ida] += 1;
    s.winding[idb] -= 1;
  }
}

void push_pair(ParticleState& s, int a, int b, double k, double sa,
               double sb) noexcept {
  const double total = sa + sb;
  s.positions[a] -= k * sa / total;
  s.positions[b] += k * sb / total;
}

// Closest cyclically ordered configuration in the norm sum (dx_i)^2 / s_i
// (pool adjacent violators on the ring, cut at the widest gap). Particles in
// a pooled block end up at a common point; the impulse carried across each
// pair inside a block is added to da.
void project_order(ParticleState& s, const std::vector<double>& diff,
                   std::vector<double>& da, int max_cluster, double dt) {
  const int n = s.size();
  int cut = 0;
  for (int a = 1; a < n; ++a)
    if (s.gap(a) > s.gap(cut)) cut = a;
  if (!(s.gap(cut) > 0.0))
    throw SimulationAbort("particles overlap around the whole ring");

  thread_local std::vector<double> x, w, bw, bsum;
  thread_local std::vector<int> slot, bstart;
  x.resize(n);
  w.resize(n);
  slot.resize(n);
  bw.clear();
  bsum.clear();
  bstart.clear();
  for (int k = 0; k < n; ++k) {
    const int q = (cut + 1 + k) % n;
    slot[k] = q;
    // Slots that come after the seam in ring order sit one turn further on.
    x[k] = s.positions[q] + (q <= cut && cut + 1 < n ? 1.0 : 0.0);
    w[k] = 1.0 / diff[q];
    bstart.push_back(k);
    bw.push_back(w[k]);
    bsum.push_back(w[k] * x[k]);
    while (bw.size() >= 2) {
      const std::size_t t = bw.size() - 1;
      if (bsum[t - 1] / bw[t - 1] <= bsum[t] / bw[t]) break;
      bw[t - 1] += bw[t];
      bsum[t - 1] += bsum[t];
      bw.pop_back();
      bsum.pop_back();
      bstart.pop_back();
    }
  }
  for (std::size_t blk = 0; blk < bw.size(); ++blk) {
    const int first = bstart[blk];
    const int last = blk + 1 < bw.size() ? bstart[blk + 1] : n;
    if (last - first < 2) continue;
    if (last - first > max_cluster) {
      std::ostringstream os;
      os << "overlap cluster of " << last - first << " particles at t = "
         << s.time << " (dt = " << dt << " too large?)";
      throw SimulationAbort(os.str());
    }
    const double y = bsum[blk] / bw[blk];
    double impulse = 0.0;
    for (int k = first; k < last; ++k) {
      const double shift = x[k] - s.positions[slot[k]];
      if (k + 1 < last) {
        impulse += w[k] * (x[k] - y);
        da[slot[k]] += std::max(impulse, 0.0);
      }
      s.positions[slot[k]] = y - shift;
    }
  }
  // Rounding across the seam can leave a gap of -1 ulp.
  for (int a = 0; a < n; ++a) {
    const int b = s.next(a);
    while (s.gap(a) < 0.0)
      s.positions[b] = std::nextafter(s.positions[b], 1e300);
  }
}

}  // namespace

ParticleState make_state(std::span<const double> positions,
                         std::span<const Species> types) {
  if (positions.size() != types.size() || positions.empty())
    throw InvalidArgument("make_state needs matching non-empty inputs");
  const int n = static_cast<int>(positions.size());
  std::vector<int> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> wrapped(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    wrapped[i] = TorusPoint::wrap(positions[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return wrapped[a] < wrapped[b]; });
  ParticleState s;
  s.positions.resize(order.size());
  s.types.resize(order.size());
  s.ids.resize(order.size());
  s.slot_of.resize(order.size());
  s.winding.assign(order.size(), 0);
  for (int slot = 0; slot < n; ++slot) {
    const int id = order[slot];
    double x = wrapped[id];
    // Coincident draws: restore strict order by one ulp.
    if (slot > 0 && x <= s.positions[slot - 1])
      x = std::nextafter(s.positions[slot - 1], 2.0);
    s.positions[slot] = x;
    s.types[slot] = types[id];
    s.ids[slot] = id;
    s.slot_of[id] = slot;
  }
  return s;
}

ParticleState init_iid(const DensityFn& rho1, const DensityFn& rho2, int n,
                       std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("need at least one particle");
  const Sampler s1(rho1);
  const Sampler s2(rho2);
  const double total = s1.total + s2.total;
  if (!(total > 0.0))
    throw InvalidArgument("initial densities are both identically zero");
  const int n1 = static_cast<int>(std::llround(n * s1.total / total));
  Rng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n));
  std::vector<Species> ts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool first = i < n1;
    xs[i] = (first ? s1 : s2).draw(rng.uniform_open());
    ts[i] = first ? Species::one : Species::two;
  }
  return make_state(xs, ts);
}

double gap_regulator(double u0, double u1, double var_rate, double dt,
                     double uniform) noexcept {
  const double v = var_rate * dt;
  const double d = u1 - u0;
  const double bridge_min =
      0.5 * (u0 + u1 - std::sqrt(d * d - 2.0 * v * std::log(uniform)));
  return std::max(0.0, -bridge_min);
}

std::array<double, 2> positions_from_uw(double u, double w, double s_i,
                                        double s_j) noexcept {
  const double xi = (w - u / s_j) / (1.0 / s_i + 1.0 / s_j);
  return {xi, xi + u};
}

PairReflection reflect_pair(TorusPoint x_i, TorusPoint x_j, double s_i,
                            double s_j, double dt, const PairNoise& noise) {
  // Work in the frame where x_i is unwrapped and x_j sits ahead of it.
  const double xi0 = x_i.value();
  const double u0 = torus_nu(x_j, x_i);
  const double xj0 = xi0 + u0;
  const double w0 = xi0 / s_i + xj0 / s_j;
  const double u_free = u0 + noise.db_j - noise.db_i;
  const double w1 = w0 + noise.db_i / s_i + noise.db_j / s_j;
  const double k = gap_regulator(u0, u_free, s_i + s_j, dt, noise.uniform);
  const auto [xi1, xj1] = positions_from_uw(u_free + k, w1, s_i, s_j);
  return {TorusPoint(xi1), TorusPoint(xj1), k};
}

PairReflection reflect_pair(TorusPoint x_i, TorusPoint x_j, double s_i,
                            double s_j, double dt, Rng& rng) {
  PairNoise noise;
  noise.db_i = std::sqrt(s_i * dt) * rng.normal();
  noise.db_j = std::sqrt(s_j * dt) * rng.normal();
  noise.uniform = rng.uniform_open();
  return reflect_pair(x_i, x_j, s_i, s_j, dt, noise);
}

int accrue_and_switch(ParticleState& state, LocalTimeLedger& ledger, int slot,
                      double da, const ModelParams& p, Rng& rng,
                      bool same_type) {
  assert(da >= 0.0);
  const int n = state.size();
  if (n < 2 || da <= 0.0) return 0;
  const int a = slot;
  const int b = state.next(slot);
  const Species ca = state.types[a];
  const Species cb = state.types[b];
  const double share = da / n;
  ledger.per_particle[state.ids[a]][index_of(cb)] += share;
  ledger.per_particle[state.ids[b]][index_of(ca)] += share;
  ledger.total += da;
  ledger.pair_accrual[slot] += da;
  if (ca == cb && !same_type) return 0;

  const double rate = switch_rate(ca, cb, p) * n;
  if (rate <= 0.0) return 0;
  ledger.pair_hazard[slot] += da * rate;
  int events = 0;
  while (ledger.pair_hazard[slot] >= ledger.threshold[slot]) {
    ledger.pair_hazard[slot] -= ledger.threshold[slot];
    ledger.threshold[slot] = rng.exponential();
    swap_labels(state, a, b);
    ++events;
  }
  if (events > 0) {
    ledger.pair_accrual[slot] = ledger.pair_hazard[slot] / rate;
    ledger.switches += events;
  }
  return events;
}

void advance(ParticleState& state, LocalTimeLedger& ledger,
             const SimConfig& cfg, const ModelParams& p, Rng& rng) {
  const int n = state.size();
  const double dt = effective_dt(cfg, p);
  thread_local std::vector<double> gap0, step, push, diff;
  gap0.resize(n);
  step.resize(n);
  push.assign(n, 0.0);
  diff.resize(n);

  for (int s = 0; s < n; ++s) {
    diff[s] = p.sigma_sq(state.types[s]);
    gap0[s] = state.gap(s);
  }
  for (int s = 0; s < n; ++s) {
    step[s] = std::sqrt(diff[s] * dt) * rng.normal();
    state.positions[s] += step[s];
  }

  if (n >= 2) {
    // Contacts inside the step, from the bridge between the free endpoints.
    for (int a = 0; a < n; ++a) {
      const int b = state.next(a);
      const double var_rate = diff[a] + diff[b];
      const double u0 = gap0[a];
      const double u1 = u0 + step[b] - step[a];
      // P(bridge touches 0) = exp(-2 u0 u1 / (var dt)); skip when negligible.
      if (u1 > 0.0 && 2.0 * u0 * u1 > 40.0 * var_rate * dt) continue;
      push[a] = gap_regulator(u0, u1, var_rate, dt, rng.uniform_open());
    }
    // push[a] becomes the pair's local time over the step, K / (s_a + s_b).
    for (int a = 0; a < n; ++a) {
      if (push[a] <= 0.0) continue;
      const int b = state.next(a);
      push_pair(state, a, b, push[a], diff[a], diff[b]);
      push[a] /= diff[a] + diff[b];
    }
    // A particle pushed from both sides can still overlap a neighbour.
    bool overlap = false;
    for (int a = 0; a < n && !overlap; ++a) overlap = state.gap(a) < 0.0;
    if (overlap) project_order(state, diff, push, cfg.max_cluster, dt);

    if (cfg.local_time_scheme == LocalTimeScheme::mollified_occupation) {
      const double delta = cfg.occupation_halfwidth > 0.0
                               ? cfg.occupation_halfwidth
                               : 8.0 * std::sqrt(2.0 * std::max(p.sigma1_sq, p.sigma2_sq) * dt);
      for (int a = 0; a < n; ++a)
        push[a] = state.gap(a) <= delta ? dt / (2.0 * delta) : 0.0;
    }
    for (int a = 0; a < n; ++a)
      if (push[a] > 0.0) accrue_and_switch(state, ledger, a, push[a], p, rng,
                          cfg.same_type_switching);
  }

  ++state.step;
  state.time = static_cast<double>(state.step) * dt;
}

void run_trajectory(ParticleState& state, LocalTimeLedger& ledger,
                    const SimConfig& cfg, const ModelParams& p, Rng& rng,
                    const SnapshotFn& on_snapshot, StepRecorder* recorder) {
  const double dt = effective_dt(cfg, p);
  const auto total_steps =
      static_cast<std::int64_t>(std::llround(cfg.t_final / dt));
  std::vector<std::pair<std::int64_t, double>> marks;
  for (double t : cfg.snapshot_times) {
    if (t < -1e-12 || t > cfg.t_final + 1e-12)
      throw InvalidArgument("snapshot time outside [0, t_final]");
    marks.emplace_back(std::llround(t / dt), t);
  }
  std::sort(marks.begin(), marks.end());
  std::size_t next_mark = 0;

  auto emit = [&](double nominal) {
    if (!on_snapshot) return;
    Snapshot snap;
    snap.time = nominal;
    snap.positions.resize(state.positions.size());
    for (std::size_t i = 0; i < state.positions.size(); ++i)
      snap.positions[i] = TorusPoint::wrap(state.positions[i]);
    snap.types = state.types;
    snap.ids = state.ids;
    snap.ledger_total = ledger.total;
    snap.switches = ledger.switches;
    on_snapshot(snap, state, ledger);
  };
  auto flush = [&] {
    while (next_mark < marks.size() && marks[next_mark].first <= state.step) {
      emit(marks[next_mark].second);
      ++next_mark;
    }
  };

  flush();
  while (state.step < total_steps) {
    advance(state, ledger, cfg, p, rng);
    if (recorder) recorder->on_step(state, ledger, dt);
    flush();
  }
}

DensityField empirical_density(const ParticleState& state, double epsilon,
                               std::span<const double> grid) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const int n = state.size();
  std::vector<double> f1(grid.size(), 0.0), f2(grid.size(), 0.0);
  const double height = 1.0 / (2.0 * epsilon * n);
  for (int s = 0; s < n; ++s) {
    const double x = TorusPoint::wrap(state.positions[s]);
    auto& f = state.types[s] == Species::one ? f1 : f2;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double d = TorusPoint::wrap(x - grid[g]);
      if (std::min(d, 1.0 - d) <= epsilon) f[g] += height;
    }
  }
  return DensityField(std::move(f1), std::move(f2), state.time);
}

std::vector<double> z_values(const ParticleState& state, double alpha,
                             const ModelParams& p) {
  const int n = state.size();
  std::vector<double> z(static_cast<std::size_t>(n));
  double w_total = 0.0, moment = 0.0;
  for (int s = 0; s < n; ++s) {
    const double w = 1.0 / p.sigma_sq(state.types[s]);
    w_total += w;
    moment += w * state.positions[s];
  }
  // sum_i w_i nu(x_i - x_s) = moment - w_total * x_s + (weights before s).
  double before = 0.0;
  for (int s = 0; s < n; ++s) {
    const double sum = moment - w_total * state.positions[s] + before;
    const int id = state.ids[s];
    z[id] = state.lifted_position(id) + alpha / n * sum;
    before += 1.0 / p.sigma_sq(state.types[s]);
  }
  return z;
}

double qv_predicted(const LocalTimeLedger& ledger, Species type_k, int k,
                    double t, const ModelParams& p, double alpha) {
  const auto& a = ledger.per_particle[k];
  return p.lambda * alpha * alpha * p.sigma_sq(type_k) *
         (p.lambda * t + a[0] / p.sigma1_sq + a[1] / p.sigma2_sq);
}

void local_densities(const ParticleState& state, double epsilon,
                     std::vector<std::array<double, 2>>& out) {
  const int n = state.size();
  out.assign(static_cast<std::size_t>(n), {0.0, 0.0});
  if (n < 2) return;
  const double height = 1.0 / (2.0 * epsilon * n);
  for (int s = 0; s < n; ++s) {
    auto& acc = out[state.ids[s]];
    int forward = 0;
    double d = 0.0;
    int q = s;
    while (forward < n - 1) {
      d += state.gap(q);
      q = state.next(q);
      if (d > epsilon) break;
      acc[index_of(state.types[q])] += height;
      ++forward;
    }
    d = 0.0;
    q = s;
    for (int backward = 0; backward < n - 1 - forward; ++backward) {
      q = q == 0 ? n - 1 : q - 1;
      d += state.gap(q);
      if (d > epsilon) break;
      acc[index_of(state.types[q])] += height;
    }
  }
}

MartingaleRecorder::MartingaleRecorder(const ParticleState& initial,
                                       double alpha, const ModelParams& p)
    : alpha_(alpha),
      params_(p),
      z0_(z_values(initial, alpha, p)),
      z_(z0_),
      qv_(z0_.size(), 0.0) {}

void MartingaleRecorder::on_step(const ParticleState& state,
                                 const LocalTimeLedger&, double) {
  const std::vector<double> z = z_values(state, alpha_, params_);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double dz = z[k] - z_[k];
    qv_[k] += dz * dz;
  }
  z_ = z;
}

ReplacementRecorder::ReplacementRecorder(int n, double epsilon)
    : epsilon_(epsilon), integral_(static_cast<std::size_t>(n), {0.0, 0.0}) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
}

void ReplacementRecorder::on_step(const ParticleState& state,
                                  const LocalTimeLedger&, double dt) {
  local_densities(state, epsilon_, scratch_);
  for (std::size_t i = 0; i < integral_.size(); ++i) {
    integral_[i][0] += scratch_[i][0] * dt;
    integral_[i][1] += scratch_[i][1] * dt;
  }
}

OccupationRecorder::OccupationRecorder(int n, double halfwidth)
    : delta_(halfwidth), acc_(static_cast<std::size_t>(n), {0.0, 0.0}) {
  if (!(halfwidth > 0.0)) throw InvalidArgument("halfwidth must be positive");
}

void OccupationRecorder::on_step(const ParticleState& state,
                                 const LocalTimeLedger&, double dt) {
  const int n = state.size();
  if (n < 2) return;
  const double da = dt / (2.0 * delta_ * n);
  for (int a = 0; a < n; ++a) {
    if (state.gap(a) > delta_) continue;
    const int b = state.next(a);
    acc_[state.ids[a]][index_of(state.types[b])] += da;
    acc_[state.ids[b]][index_of(state.types[a])] += da;
  }
}

double replacement_statistic(const ParticleState& state,
                             std::span<const std::array<double, 2>> local_time,
                             std::span<const std::array<double, 2>> density_integral,
                             Species c1, Species c2) {
  const int n = state.size();
  double sum = 0.0;
  for (int id = 0; id < n; ++id) {
    if (state.type_of(id) != c1) continue;
    sum += std::abs(local_time[id][index_of(c2)] -
                    density_integral[id][index_of(c2)]);
  }
  return sum / n;
}

}  // namespace libmlab
