#include "libmlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "libmlab/errors.hpp"
#include "libmlab/output.hpp"
#include "libmlab/particles.hpp"
#include "libmlab/rng.hpp"
#include "libmlab/stats.hpp"

namespace libmlab {

namespace fs = std::filesystem;
using nlohmann::json;

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::clamp(threads, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

DensityFn profile(const expr::Expr& e) {
  return [&e](double x) { return e.eval(x); };
}

DensityField initial_field(const ExperimentConfig& cfg) {
  return sample_field(Grid1D{cfg.pde.cells}, profile(cfg.rho1),
                      profile(cfg.rho2));
}

}  // namespace

Ensemble run_ensemble(const ExperimentConfig& cfg, int n, std::uint64_t master,
                      int threads) {
  Ensemble e;
  e.n = n;
  e.epsilon = cfg.epsilon_for(n);
  e.times = cfg.snapshot_times();
  e.grid = Grid1D{cfg.pde.cells}.centers();
  const ModelParams p = cfg.model_for(n);
  const SimConfig sim = cfg.sim_config(n);
  e.replicas.resize(static_cast<std::size_t>(cfg.particles.replicas));
  parallel_for(cfg.particles.replicas, threads, [&](int r) {
    ReplicaRun& out = e.replicas[r];
    out.seed = replica_seed(master, static_cast<std::uint64_t>(r));
    try {
      ParticleState state =
          init_iid(profile(cfg.rho1), profile(cfg.rho2), n, out.seed);
      Rng rng(mix64(out.seed));
      LocalTimeLedger ledger = LocalTimeLedger::fresh(n, rng);
      run_trajectory(state, ledger, sim, p, rng,
                     [&](const Snapshot& snap, const ParticleState& s,
                         const LocalTimeLedger& l) {
                       DensityField f = empirical_density(s, e.epsilon, e.grid);
                       f.time = snap.time;
                       out.fields.push_back(std::move(f));
                       out.ledger_total.push_back(l.total);
                       out.switches.push_back(l.switches);
                     });
    } catch (const SimulationAbort& err) {
      throw SimulationAbort("replica " + std::to_string(r) + ": " + err.what());
    }
  });
  return e;
}

Trajectory run_pde(const ExperimentConfig& cfg) {
  const SolverConfig sc = cfg.solver_config();
  const DensityField rho0 = initial_field(cfg);
  if (cfg.pde.solver == PdeSolver::two_color)
    return two_color_reference_solve(rho0, cfg.model.lambda, sc);
  return solve_trajectory(rho0, sc, cfg.model);
}

namespace {

void mean_fields(const Ensemble& e, std::size_t snap,
                 std::span<const std::size_t> idx, std::vector<double>& m1,
                 std::vector<double>& m2) {
  const std::size_t g = e.grid.size();
  m1.assign(g, 0.0);
  m2.assign(g, 0.0);
  for (std::size_t r : idx) {
    const DensityField& f = e.replicas[r].fields[snap];
    for (std::size_t i = 0; i < g; ++i) {
      m1[i] += f.rho1[i];
      m2[i] += f.rho2[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (std::size_t i = 0; i < g; ++i) {
    m1[i] *= inv;
    m2[i] *= inv;
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

std::vector<CompareRow> compare_ensemble(const Ensemble& e,
                                         const Trajectory& pde,
                                         std::uint64_t boot_seed,
                                         int resamples) {
  if (pde.snapshots.size() != e.times.size())
    throw InvalidArgument("PDE and particle snapshot schedules differ");
  const double dx = 1.0 / static_cast<double>(e.grid.size());
  if (e.epsilon < 2.0 * dx) {
    std::ostringstream os;
    os << "grid mismatch: epsilon = " << e.epsilon << " is below 2 dx = "
       << 2.0 * dx;
    throw InvalidArgument(os.str());
  }
  std::vector<CompareRow> rows;
  const auto everyone = all_indices(e.replicas.size());
  std::vector<double> m1, m2;
  for (std::size_t s = 0; s < e.times.size(); ++s) {
    const DensityField& ref = pde.snapshots[s];
    if (ref.size() != e.grid.size())
      throw InvalidArgument("PDE grid does not match the comparison grid");
    CompareRow row;
    row.t = e.times[s];
    row.n = e.n;
    row.epsilon = e.epsilon;
    mean_fields(e, s, everyone, m1, m2);
    row.l1_rho1 = l1_distance(m1, ref.rho1);
    row.l1_rho2 = l1_distance(m2, ref.rho2);
    row.l2_rho1 = l2_distance(m1, ref.rho1);
    row.l2_rho2 = l2_distance(m2, ref.rho2);
    std::vector<double> b1, b2;
    const auto ci = stats::bootstrap_interval(
        e.replicas.size(), resamples, 0.95, mix64(boot_seed + s),
        [&](std::span<const std::size_t> idx) {
          mean_fields(e, s, idx, b1, b2);
          return l1_distance(b1, ref.rho1) + l1_distance(b2, ref.rho2);
        });
    row.l1_ci_lo = ci.first;
    row.l1_ci_hi = ci.second;
    rows.push_back(row);
  }
  return rows;
}

double MartingaleStats::fraction_mean_ok(double z_max) const {
  int ok = 0;
  for (int k = 0; k < n; ++k)
    if (std::abs(mean_dz[k]) <= z_max * se_dz[k]) ++ok;
  return n > 0 ? static_cast<double>(ok) / n : 0.0;
}

double MartingaleStats::fraction_qv_ok(double lo, double hi) const {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < realized.size(); ++i) {
    const double r = realized[i] / predicted[i];
    if (r >= lo && r <= hi) ++ok;
  }
  return realized.empty() ? 0.0
                          : static_cast<double>(ok) / static_cast<double>(realized.size());
}

MartingaleStats run_martingale(const ExperimentConfig& cfg,
                               std::uint64_t master, int threads) {
  MartingaleStats out;
  const int n = cfg.model.n;
  const int reps = cfg.diagnose.qv_replicas;
  out.n = n;
  out.replicas = reps;
  out.t = cfg.diagnose.qv_t_final;
  const ModelParams p = cfg.model;
  SimConfig sim = cfg.sim_config(n);
  sim.t_final = cfg.diagnose.qv_t_final;
  sim.snapshot_times.clear();
  sim.same_type_switching = true;

  out.realized.assign(static_cast<std::size_t>(reps) * n, 0.0);
  out.predicted.assign(out.realized.size(), 0.0);
  std::vector<double> dz(out.realized.size(), 0.0);
  out.seeds.resize(static_cast<std::size_t>(reps));
  out.type.assign(static_cast<std::size_t>(n), Species::one);
  parallel_for(reps, threads, [&](int r) {
    const std::uint64_t seed = replica_seed(master, static_cast<std::uint64_t>(r));
    out.seeds[r] = seed;
    ParticleState state = init_iid(profile(cfg.rho1), profile(cfg.rho2), n, seed);
    const auto counts = state.counts();
    const double alpha = alpha_const(p, static_cast<double>(counts[0]) / n,
                                     static_cast<double>(counts[1]) / n);
    Rng rng(mix64(seed));
    LocalTimeLedger ledger = LocalTimeLedger::fresh(n, rng);
    MartingaleRecorder rec(state, alpha, p);
    try {
      run_trajectory(state, ledger, sim, p, rng, {}, &rec);
    } catch (const SimulationAbort& err) {
      throw SimulationAbort("replica " + std::to_string(r) + ": " + err.what());
    }
    for (int k = 0; k < n; ++k) {
      const std::size_t at = static_cast<std::size_t>(r) * n + k;
      out.realized[at] = rec.realized_qv()[k];
      out.predicted[at] =
          qv_predicted(ledger, state.type_of(k), k, state.time, p, alpha);
      dz[at] = rec.z()[k] - rec.z0()[k];
    }
    if (r == 0)
      for (int k = 0; k < n; ++k) out.type[k] = state.type_of(k);
  });
  out.mean_dz.resize(static_cast<std::size_t>(n));
  out.se_dz.resize(static_cast<std::size_t>(n));
  std::vector<double> col(static_cast<std::size_t>(reps));
  for (int k = 0; k < n; ++k) {
    for (int r = 0; r < reps; ++r) col[r] = dz[static_cast<std::size_t>(r) * n + k];
    const auto ms = stats::mean_se(col);
    out.mean_dz[k] = ms.mean;
    out.se_dz[k] = ms.se;
  }
  return out;
}

std::vector<ReplacementRow> run_replacement(const ExperimentConfig& cfg,
                                            std::uint64_t master, int threads) {
  const auto& cases = cfg.diagnose.cases;
  const int seeds = cfg.diagnose.seeds;
  const int jobs = static_cast<int>(cases.size()) * seeds;
  constexpr Species both[2] = {Species::one, Species::two};
  std::vector<std::array<double, 4>> stat(static_cast<std::size_t>(jobs));
  parallel_for(jobs, threads, [&](int job) {
    const DiagnoseCase& dc = cases[job / seeds];
    const int s = job % seeds;
    const ModelParams p = cfg.model_for(dc.n);
    SimConfig sim = cfg.sim_config(dc.n);
    sim.t_final = cfg.diagnose.t_final;
    sim.snapshot_times.clear();
    const std::uint64_t seed = replica_seed(master, static_cast<std::uint64_t>(s));
    ParticleState state =
        init_iid(profile(cfg.rho1), profile(cfg.rho2), dc.n, seed);
    Rng rng(mix64(seed));
    LocalTimeLedger ledger = LocalTimeLedger::fresh(dc.n, rng);
    ReplacementRecorder rec(dc.n, dc.epsilon);
    run_trajectory(state, ledger, sim, p, rng, {}, &rec);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        stat[job][2 * a + b] = replacement_statistic(
            state, ledger.per_particle, rec.integrals(), both[a], both[b]);
  });
  std::vector<ReplacementRow> rows;
  std::vector<double> col(static_cast<std::size_t>(seeds));
  for (std::size_t c = 0; c < cases.size(); ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        for (int s = 0; s < seeds; ++s)
          col[s] = stat[c * seeds + s][2 * a + b];
        const auto ms = stats::mean_se(col);
        rows.push_back({cases[c].n, cases[c].epsilon, both[a], both[b],
                        ms.mean, ms.se});
      }
  return rows;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Session {
  ExperimentConfig cfg;
  RunOptions opt;
  fs::path dir;
  std::uint64_t master = 0;
  std::string digest;
  std::ostream* log = nullptr;
  std::map<std::string, double> timings;

  Session(ExperimentConfig c, const RunOptions& o) : cfg(std::move(c)), opt(o) {
    if (opt.seed) cfg.particles.seed = *opt.seed;
    if (opt.plot) cfg.outputs.plot = true;
    // --out-dir is a run location, not part of the experiment, so it stays
    // out of the digest
    dir = opt.out_dir.empty() ? fs::path(cfg.outputs.directory) : opt.out_dir;
    master = cfg.particles.seed;
    log = opt.log ? opt.log : &std::cout;
    const std::string text = canonical_text(cfg);
    digest = sha256_hex(text);
    write_text(dir / "config.canonical.json", text);
  }

  template <typename F>
  auto timed(const std::string& name, F&& f) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[name] += elapsed(t0);
    } else {
      auto r = f();
      timings[name] += elapsed(t0);
      return r;
    }
  }

  static double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }

  void manifest(const std::string& name, const std::vector<std::uint64_t>& seeds) {
    json j;
    j["config_sha256"] = digest;
    j["master_seed"] = master;
    j["replica_seeds"] = seeds;
    j["version"] = version_string;
    json t = json::object();
    if (opt.timings)
      for (const auto& [k, v] : timings) t[k] = std::llround(v);
    j["timings_ms"] = t;
    write_text(dir / (name + "_manifest.json"), j.dump(2) + "\n");
  }
};

std::vector<std::uint64_t> seeds_of(const Ensemble& e) {
  std::vector<std::uint64_t> s;
  for (const auto& r : e.replicas) s.push_back(r.seed);
  return s;
}

std::string field_csv(const Ensemble& e) {
  CsvTable t({"t", "x", "rho1_mean", "rho1_se", "rho2_mean", "rho2_se"});
  const std::size_t reps = e.replicas.size();
  std::vector<double> c1(reps), c2(reps);
  for (std::size_t s = 0; s < e.times.size(); ++s)
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
      for (std::size_t r = 0; r < reps; ++r) {
        c1[r] = e.replicas[r].fields[s].rho1[i];
        c2[r] = e.replicas[r].fields[s].rho2[i];
      }
      const auto a = stats::mean_se(c1);
      const auto b = stats::mean_se(c2);
      t.row({e.times[s], e.grid[i], a.mean, a.se, b.mean, b.se});
    }
  return t.str();
}

std::string pde_csv(const Trajectory& tr, const std::vector<double>& times,
                    const std::vector<double>& grid) {
  CsvTable t({"t", "x", "rho1_mean", "rho1_se", "rho2_mean", "rho2_se"});
  for (std::size_t s = 0; s < tr.snapshots.size(); ++s)
    for (std::size_t i = 0; i < grid.size(); ++i)
      t.row({times[s], grid[i], tr.snapshots[s].rho1[i], 0.0,
             tr.snapshots[s].rho2[i], 0.0});
  return t.str();
}

std::string report_csv(const std::vector<CompareRow>& rows) {
  CsvTable t({"t", "N", "epsilon", "l1_rho1", "l1_rho2", "l2_rho1", "l2_rho2",
              "l1_ci_lo", "l1_ci_hi"});
  for (const auto& r : rows)
    t.row({r.t, static_cast<double>(r.n), r.epsilon, r.l1_rho1, r.l1_rho2,
           r.l2_rho1, r.l2_rho2, r.l1_ci_lo, r.l1_ci_hi});
  return t.str();
}

void summary(std::ostream& os, const CompareRow& r) {
  os << "t=" << format_double(r.t) << " N=" << r.n
     << " eps=" << format_double(r.epsilon)
     << " L1=(" << format_double(r.l1_rho1) << ", " << format_double(r.l1_rho2)
     << ") L2=(" << format_double(r.l2_rho1) << ", " << format_double(r.l2_rho2)
     << ") L1 total 95% CI=[" << format_double(r.l1_ci_lo) << ", "
     << format_double(r.l1_ci_hi) << "]\n";
}

std::string profile_svg(const std::string& title, const std::vector<double>& grid,
                        std::vector<Series> series) {
  for (auto& s : series) s.x = grid;
  return svg_line_chart({title, "x", "density", false, false}, series);
}

std::uint64_t boot_seed(std::uint64_t master, int n) {
  return mix64(master ^ (0xB0075EEDULL + static_cast<std::uint64_t>(n)));
}

}  // namespace

void cmd_simulate(ExperimentConfig cfg, const RunOptions& opt) {
  Session s(std::move(cfg), opt);
  const int n = s.cfg.model.n;
  if (auto w = dt_warning(effective_dt(s.cfg.sim_config(n), s.cfg.model), s.cfg.model))
    *s.log << "warning: " << *w << "\n";
  const Ensemble e =
      s.timed("simulate", [&] { return run_ensemble(s.cfg, n, s.master, opt.threads); });
  write_text(s.dir / "simulate_fields.csv", field_csv(e));
  CsvTable ledger({"replica", "t", "ledger_total", "switches"});
  for (std::size_t r = 0; r < e.replicas.size(); ++r)
    for (std::size_t k = 0; k < e.times.size(); ++k)
      ledger.row({static_cast<double>(r), e.times[k], e.replicas[r].ledger_total[k],
                  static_cast<double>(e.replicas[r].switches[k])});
  write_text(s.dir / "simulate_ledger.csv", ledger.str());
  if (s.cfg.outputs.plot) {
    std::vector<double> m1, m2;
    mean_fields(e, e.times.size() - 1, all_indices(e.replicas.size()), m1, m2);
    write_text(s.dir / "simulate_profiles.svg",
               profile_svg("ensemble mean at t = " + format_double(e.times.back()),
                           e.grid, {{"rho1", {}, m1}, {"rho2", {}, m2}}));
  }
  *s.log << "simulate: " << e.replicas.size() << " replicas, N=" << n << ", "
         << e.times.size() << " snapshots -> " << s.dir.string() << "\n";
  s.manifest("simulate", seeds_of(e));
}

void cmd_solve(ExperimentConfig cfg, const RunOptions& opt) {
  Session s(std::move(cfg), opt);
  const Trajectory tr = s.timed("solve", [&] { return run_pde(s.cfg); });
  const auto times = s.cfg.snapshot_times();
  const auto grid = Grid1D{s.cfg.pde.cells}.centers();
  write_text(s.dir / "solve_fields.csv", pde_csv(tr, times, grid));

  CsvTable modes({"t", "amplitude", "mass1", "mass2", "min_value"});
  std::vector<double> total(grid.size());
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const DensityField& f = tr.snapshots[k];
    double lo = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      total[i] = f.rho1[i] + f.rho2[i];
      lo = std::min({lo, f.rho1[i], f.rho2[i]});
    }
    modes.row({times[k], fourier_amplitude(total, 1), f.mass1(), f.mass2(), lo});
  }
  write_text(s.dir / "solve_modes.csv", modes.str());

  if (s.cfg.outputs.ms_form) {
    const ModelParams& p = s.cfg.model;
    const double d12 = s.cfg.outputs.ms_d12 > 0.0
                           ? s.cfg.outputs.ms_d12
                           : 2.0 * std::max(1.0 / p.sigma1_sq, 1.0 / p.sigma2_sq);
    CsvTable ms({"tau", "x", "u1", "u2", "u3"});
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k)
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto m = ms_from_libm(
            p, d12, {tr.snapshots[k].rho1[i], tr.snapshots[k].rho2[i]},
            MapConvention::pde_consistent);
        ms.row({times[k] * ms_time_factor, grid[i], m.u.rho1, m.u.rho2,
                1.0 - m.u.rho1 - m.u.rho2});
      }
    write_text(s.dir / "solve_ms.csv", ms.str());
  }
  if (s.cfg.outputs.plot) {
    std::vector<Series> ser;
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
      ser.push_back({"rho1 t=" + format_double(times[k]), {}, tr.snapshots[k].rho1});
      ser.push_back({"rho2 t=" + format_double(times[k]), {}, tr.snapshots[k].rho2});
    }
    write_text(s.dir / "solve_profiles.svg", profile_svg("PDE profiles", grid, ser));
  }
  if (tr.min_value < 0.0)
    *s.log << "solve: negative undershoot " << format_double(tr.min_value) << "\n";
  *s.log << "solve: " << tr.steps << " steps, " << tr.snapshots.size()
         << " snapshots -> " << s.dir.string() << "\n";
  s.manifest("solve", {});
}

void cmd_compare(ExperimentConfig cfg, const RunOptions& opt) {
  Session s(std::move(cfg), opt);
  const int n = s.cfg.model.n;
  const Trajectory tr = s.timed("solve", [&] { return run_pde(s.cfg); });
  const Ensemble e =
      s.timed("simulate", [&] { return run_ensemble(s.cfg, n, s.master, opt.threads); });
  const auto rows = s.timed(
      "compare", [&] { return compare_ensemble(e, tr, boot_seed(s.master, n)); });
  write_text(s.dir / "compare_report.csv", report_csv(rows));
  for (const auto& r : rows) summary(*s.log, r);
  if (s.cfg.outputs.plot) {
    std::vector<double> m1, m2;
    mean_fields(e, e.times.size() - 1, all_indices(e.replicas.size()), m1, m2);
    write_text(s.dir / "compare_profiles.svg",
               profile_svg("particles vs PDE at t = " + format_double(e.times.back()),
                           e.grid,
                           {{"rho1 particles", {}, m1},
                            {"rho1 PDE", {}, tr.snapshots.back().rho1},
                            {"rho2 particles", {}, m2},
                            {"rho2 PDE", {}, tr.snapshots.back().rho2}}));
  }
  s.manifest("compare", seeds_of(e));
}

void cmd_diagnose(ExperimentConfig cfg, const RunOptions& opt) {
  Session s(std::move(cfg), opt);
  const MartingaleStats m = s.timed(
      "martingale", [&] { return run_martingale(s.cfg, s.master, opt.threads); });
  CsvTable mt({"id", "type", "mean_dz", "se_dz", "z_score"});
  for (int k = 0; k < m.n; ++k)
    mt.row({static_cast<double>(k), static_cast<double>(index_of(m.type[k]) + 1),
            m.mean_dz[k], m.se_dz[k], m.se_dz[k] > 0.0 ? m.mean_dz[k] / m.se_dz[k] : 0.0});
  write_text(s.dir / "diagnose_martingale.csv", mt.str());
  CsvTable qv({"replica", "id", "type", "realized", "predicted", "ratio"});
  for (int r = 0; r < m.replicas; ++r)
    for (int k = 0; k < m.n; ++k) {
      const std::size_t at = static_cast<std::size_t>(r) * m.n + k;
      qv.row({static_cast<double>(r), static_cast<double>(k),
              static_cast<double>(index_of(m.type[k]) + 1), m.realized[at],
              m.predicted[at], m.realized[at] / m.predicted[at]});
    }
  write_text(s.dir / "diagnose_qv.csv", qv.str());

  const auto rows = s.timed(
      "replacement", [&] { return run_replacement(s.cfg, s.master, opt.threads); });
  CsvTable rt({"N", "epsilon", "c1", "c2", "statistic_mean", "statistic_se"});
  for (const auto& r : rows)
    rt.row({static_cast<double>(r.n), r.epsilon,
            static_cast<double>(index_of(r.c1) + 1),
            static_cast<double>(index_of(r.c2) + 1), r.mean, r.se});
  write_text(s.dir / "diagnose_replacement.csv", rt.str());

  *s.log << "diagnose: z mean within 4 SE for "
         << format_double(m.fraction_mean_ok()) << " of particles; QV ratio in [0.9, 1.1] for "
         << format_double(m.fraction_qv_ok()) << " of (replica, particle) pairs\n";
  for (const auto& r : rows)
    *s.log << "diagnose: replacement N=" << r.n << " eps=" << format_double(r.epsilon)
           << " (" << index_of(r.c1) + 1 << "," << index_of(r.c2) + 1
           << ") = " << format_double(r.mean) << " +- " << format_double(r.se) << "\n";
  s.manifest("diagnose", m.seeds);
}

void cmd_sweep(ExperimentConfig cfg, const RunOptions& opt) {
  Session s(std::move(cfg), opt);
  std::vector<int> ns = s.cfg.sweep_n;
  if (ns.empty()) ns = {s.cfg.model.n};
  const Trajectory tr = s.timed("solve", [&] { return run_pde(s.cfg); });
  CsvTable table({"N", "epsilon", "t", "l1_rho1", "l1_rho2", "l2_rho1",
                  "l2_rho2", "l1_ci_lo", "l1_ci_hi"});
  std::vector<CompareRow> all;
  Series l1a{"L1 rho1", {}, {}}, l1b{"L1 rho2", {}, {}};
  std::vector<std::uint64_t> seeds;
  for (int n : ns) {
    const Ensemble e = s.timed(
        "simulate", [&] { return run_ensemble(s.cfg, n, s.master, opt.threads); });
    if (seeds.empty()) seeds = seeds_of(e);
    const auto rows = s.timed(
        "compare", [&] { return compare_ensemble(e, tr, boot_seed(s.master, n)); });
    const CompareRow& last = rows.back();
    table.row({static_cast<double>(n), last.epsilon, last.t, last.l1_rho1,
               last.l1_rho2, last.l2_rho1, last.l2_rho2, last.l1_ci_lo,
               last.l1_ci_hi});
    l1a.x.push_back(n);
    l1a.y.push_back(last.l1_rho1);
    l1b.x.push_back(n);
    l1b.y.push_back(last.l1_rho2);
    for (const auto& r : rows) summary(*s.log, r);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  write_text(s.dir / "sweep.csv", table.str());
  write_text(s.dir / "sweep_report.csv", report_csv(all));
  write_text(s.dir / "sweep.svg",
             svg_line_chart({"L1 distance to the PDE at t = " +
                                 format_double(s.cfg.snapshot_times().back()),
                             "N", "L1", true, true},
                            {l1a, l1b}));
  s.manifest("sweep", seeds);
}

}  // namespace libmlab
