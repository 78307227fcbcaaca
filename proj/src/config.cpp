#include "libmlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "libmlab/errors.hpp"

namespace libmlab {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!ok.count(item.key()))
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_number(const json& j, const char* key, const std::string& where,
                 double& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number())
    throw ConfigError(where + "." + key + " must be a number");
  out = j.at(key).get<double>();
  if (!std::isfinite(out)) throw ConfigError(where + "." + key + " must be finite");
}

void read_int(const json& j, const char* key, const std::string& where,
              int& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_integer())
    throw ConfigError(where + "." + key + " must be an integer");
  out = j.at(key).get<int>();
}

const char* scheme_name(LocalTimeScheme s) {
  return s == LocalTimeScheme::skorokhod_exact ? "skorokhod-exact"
                                               : "mollified-occupation";
}
const char* scheme_name(Scheme s) {
  return s == Scheme::explicit_rk2 ? "explicit-rk2" : "semi-implicit";
}
const char* solver_name(PdeSolver s) {
  return s == PdeSolver::cross_diffusion ? "cross-diffusion" : "two-color";
}

void check_profile(const expr::Expr& e, const std::string& name) {
  constexpr int samples = 10000;
  for (int i = 0; i < samples; ++i) {
    const double x = (i + 0.5) / samples;
    double v;
    try {
      v = e.eval(x);
    } catch (const EvalError& err) {
      throw ConfigError("initial." + name + ": " + err.what());
    }
    if (v < 0.0) {
      std::ostringstream os;
      os << "initial." << name << " is negative at x = " << x << " (" << v
         << ")";
      throw ConfigError(os.str());
    }
  }
}

// Particles carry total mass 1, so the PDE data must too.
void check_total_mass(const expr::Expr& a, const expr::Expr& b) {
  constexpr int samples = 10000;
  double m = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = (i + 0.5) / samples;
    m += a.eval(x) + b.eval(x);
  }
  m /= samples;
  if (std::abs(m - 1.0) > 1e-3) {
    std::ostringstream os;
    os << "initial rho1 + rho2 must integrate to 1, got " << m;
    throw ConfigError(os.str());
  }
}

}  // namespace

std::vector<double> ExperimentConfig::snapshot_times() const {
  std::vector<double> t = outputs.snapshot_times;
  if (t.empty()) t = {particles.t_final};
  std::sort(t.begin(), t.end());
  return t;
}

double ExperimentConfig::epsilon_for(int n) const {
  if (particles.epsilon > 0.0) return particles.epsilon;
  return std::pow(static_cast<double>(n), -1.0 / 3.0);
}

ModelParams ExperimentConfig::model_for(int n) const {
  ModelParams p = model;
  p.n = n;
  return p;
}

SimConfig ExperimentConfig::sim_config(int n) const {
  SimConfig s;
  s.dt = particles.dt;
  s.t_final = particles.t_final;
  s.seed = particles.seed;
  s.epsilon = epsilon_for(n);
  s.snapshot_times = snapshot_times();
  s.local_time_scheme = particles.local_time_scheme;
  s.occupation_halfwidth = particles.occupation_halfwidth;
  s.same_type_switching = particles.same_type_switching;
  s.max_cluster = particles.max_cluster;
  return s;
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig s;
  s.cells = pde.cells;
  s.dt = pde.dt;
  s.scheme = pde.scheme;
  s.t_final = particles.t_final;
  s.stability_safety = pde.stability_safety;
  s.snapshot_times = snapshot_times();
  return s;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  only_keys(j, "config",
            {"model", "particles", "pde", "initial", "outputs", "sweep",
             "diagnose"});

  if (j.contains("model")) {
    const json& m = j.at("model");
    only_keys(m, "model", {"sigma1_sq", "sigma2_sq", "lambda", "N"});
    read_number(m, "sigma1_sq", "model", c.model.sigma1_sq);
    read_number(m, "sigma2_sq", "model", c.model.sigma2_sq);
    read_number(m, "lambda", "model", c.model.lambda);
    read_int(m, "N", "model", c.model.n);
  }
  try {
    c.model.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }

  if (j.contains("particles")) {
    const json& p = j.at("particles");
    only_keys(p, "particles",
              {"dt", "t_final", "seed", "epsilon", "snapshot_times",
               "local_time_scheme", "occupation_halfwidth",
               "same_type_switching", "max_cluster", "replicas"});
    auto& s = c.particles;
    read_number(p, "dt", "particles", s.dt);
    read_number(p, "t_final", "particles", s.t_final);
    if (p.contains("seed")) {
      const json& v = p.at("seed");
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError("particles.seed must be a non-negative integer");
      s.seed = p.at("seed").get<std::uint64_t>();
    }
    read_number(p, "epsilon", "particles", s.epsilon);
    if (p.contains("local_time_scheme")) {
      std::string name;
      read(p, "local_time_scheme", "particles", name);
      if (name == "skorokhod-exact")
        s.local_time_scheme = LocalTimeScheme::skorokhod_exact;
      else if (name == "mollified-occupation")
        s.local_time_scheme = LocalTimeScheme::mollified_occupation;
      else
        throw ConfigError("particles.local_time_scheme: unknown scheme '" +
                          name + "'");
    }
    read_number(p, "occupation_halfwidth", "particles", s.occupation_halfwidth);
    read(p, "same_type_switching", "particles", s.same_type_switching);
    read_int(p, "max_cluster", "particles", s.max_cluster);
    read_int(p, "replicas", "particles", s.replicas);
    if (p.contains("snapshot_times")) {
      std::vector<double> t;
      read(p, "snapshot_times", "particles", t);
      c.outputs.snapshot_times = t;
    }
  }
  const auto& s = c.particles;
  if (!(s.t_final > 0.0)) throw ConfigError("particles.t_final must be > 0");
  if (s.dt < 0.0) throw ConfigError("particles.dt must be > 0 (or 0 for auto)");
  if (s.epsilon < 0.0 || s.epsilon >= 0.5)
    throw ConfigError("particles.epsilon must lie in (0, 0.5) (or 0 for auto)");
  if (s.replicas < 1) throw ConfigError("particles.replicas must be >= 1");
  if (s.max_cluster < 2) throw ConfigError("particles.max_cluster must be >= 2");

  if (j.contains("pde")) {
    const json& p = j.at("pde");
    only_keys(p, "pde", {"M", "dt", "scheme", "stability_safety", "solver"});
    read_int(p, "M", "pde", c.pde.cells);
    read_number(p, "dt", "pde", c.pde.dt);
    read_number(p, "stability_safety", "pde", c.pde.stability_safety);
    if (p.contains("scheme")) {
      std::string name;
      read(p, "scheme", "pde", name);
      if (name == "explicit-rk2")
        c.pde.scheme = Scheme::explicit_rk2;
      else if (name == "semi-implicit")
        c.pde.scheme = Scheme::semi_implicit;
      else
        throw ConfigError("pde.scheme: unknown scheme '" + name + "'");
    }
    if (p.contains("solver")) {
      std::string name;
      read(p, "solver", "pde", name);
      if (name == "cross-diffusion")
        c.pde.solver = PdeSolver::cross_diffusion;
      else if (name == "two-color")
        c.pde.solver = PdeSolver::two_color;
      else
        throw ConfigError("pde.solver: unknown solver '" + name + "'");
    }
  }
  if (c.pde.cells < 8) throw ConfigError("pde.M must be >= 8");
  if (c.pde.dt < 0.0) throw ConfigError("pde.dt must be > 0 (or 0 for auto)");
  if (!(c.pde.stability_safety > 0.0) || c.pde.stability_safety > 1.0)
    throw ConfigError("pde.stability_safety must lie in (0, 1]");
  if (c.pde.solver == PdeSolver::two_color &&
      (c.model.sigma1_sq != 1.0 || c.model.sigma2_sq != 1.0))
    throw ConfigError("pde.solver two-color needs sigma1_sq = sigma2_sq = 1");

  if (j.contains("initial")) {
    const json& p = j.at("initial");
    only_keys(p, "initial", {"rho1", "rho2"});
    read(p, "rho1", "initial", c.rho1_text);
    read(p, "rho2", "initial", c.rho2_text);
  }
  c.rho1 = expr::parse(c.rho1_text);
  c.rho2 = expr::parse(c.rho2_text);
  check_profile(c.rho1, "rho1");
  check_profile(c.rho2, "rho2");
  check_total_mass(c.rho1, c.rho2);

  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    only_keys(o, "outputs",
              {"directory", "snapshot_times", "plot", "ms_form", "ms_d12"});
    read(o, "directory", "outputs", c.outputs.directory);
    if (o.contains("snapshot_times")) {
      std::vector<double> t;
      read(o, "snapshot_times", "outputs", t);
      if (j.contains("particles") && j.at("particles").contains("snapshot_times") &&
          t != c.outputs.snapshot_times)
        throw ConfigError(
            "particles.snapshot_times and outputs.snapshot_times disagree");
      c.outputs.snapshot_times = t;
    }
    read(o, "plot", "outputs", c.outputs.plot);
    read(o, "ms_form", "outputs", c.outputs.ms_form);
    read_number(o, "ms_d12", "outputs", c.outputs.ms_d12);
  }
  for (double t : c.outputs.snapshot_times)
    if (!(t >= 0.0) || t > s.t_final)
      throw ConfigError("snapshot times must lie in [0, particles.t_final]");
  if (!std::is_sorted(c.outputs.snapshot_times.begin(),
                      c.outputs.snapshot_times.end()))
    throw ConfigError("snapshot times must be sorted");
  if (c.outputs.ms_form && c.outputs.ms_d12 > 0.0 &&
      c.outputs.ms_d12 <= std::max(1.0 / c.model.sigma1_sq, 1.0 / c.model.sigma2_sq))
    throw ConfigError("outputs.ms_d12 must exceed max(1/sigma1_sq, 1/sigma2_sq)");

  if (j.contains("sweep")) {
    const json& w = j.at("sweep");
    only_keys(w, "sweep", {"N"});
    read(w, "N", "sweep", c.sweep_n);
    for (int n : c.sweep_n)
      if (n < 1) throw ConfigError("sweep.N entries must be >= 1");
  }

  if (j.contains("diagnose")) {
    const json& d = j.at("diagnose");
    only_keys(d, "diagnose",
              {"cases", "seeds", "t_final", "qv_replicas", "qv_t_final"});
    if (d.contains("cases")) {
      if (!d.at("cases").is_array())
        throw ConfigError("diagnose.cases must be an array");
      c.diagnose.cases.clear();
      for (const json& e : d.at("cases")) {
        only_keys(e, "diagnose.cases[]", {"N", "epsilon"});
        DiagnoseCase dc;
        read_int(e, "N", "diagnose.cases[]", dc.n);
        read_number(e, "epsilon", "diagnose.cases[]", dc.epsilon);
        if (dc.n < 2 || !(dc.epsilon > 0.0) || dc.epsilon >= 0.5)
          throw ConfigError("diagnose.cases[] needs N >= 2 and 0 < epsilon < 0.5");
        c.diagnose.cases.push_back(dc);
      }
    }
    read_int(d, "seeds", "diagnose", c.diagnose.seeds);
    read_number(d, "t_final", "diagnose", c.diagnose.t_final);
    read_int(d, "qv_replicas", "diagnose", c.diagnose.qv_replicas);
    read_number(d, "qv_t_final", "diagnose", c.diagnose.qv_t_final);
    if (c.diagnose.seeds < 1 || c.diagnose.qv_replicas < 2 ||
        !(c.diagnose.t_final > 0.0) || !(c.diagnose.qv_t_final > 0.0))
      throw ConfigError("diagnose: seeds >= 1, qv_replicas >= 2, horizons > 0");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = {{"sigma1_sq", c.model.sigma1_sq},
                {"sigma2_sq", c.model.sigma2_sq},
                {"lambda", c.model.lambda},
                {"N", c.model.n}};
  const auto& p = c.particles;
  j["particles"] = {{"dt", p.dt},
                    {"t_final", p.t_final},
                    {"seed", p.seed},
                    {"epsilon", p.epsilon},
                    {"local_time_scheme", scheme_name(p.local_time_scheme)},
                    {"occupation_halfwidth", p.occupation_halfwidth},
                    {"same_type_switching", p.same_type_switching},
                    {"max_cluster", p.max_cluster},
                    {"replicas", p.replicas}};
  j["pde"] = {{"M", c.pde.cells},
              {"dt", c.pde.dt},
              {"scheme", scheme_name(c.pde.scheme)},
              {"stability_safety", c.pde.stability_safety},
              {"solver", solver_name(c.pde.solver)}};
  j["initial"] = {{"rho1", c.rho1_text}, {"rho2", c.rho2_text}};
  j["outputs"] = {{"directory", c.outputs.directory},
                  {"snapshot_times", c.snapshot_times()},
                  {"plot", c.outputs.plot},
                  {"ms_form", c.outputs.ms_form},
                  {"ms_d12", c.outputs.ms_d12}};
  j["sweep"] = {{"N", c.sweep_n}};
  json cases = json::array();
  for (const auto& dc : c.diagnose.cases)
    cases.push_back({{"N", dc.n}, {"epsilon", dc.epsilon}});
  j["diagnose"] = {{"cases", cases},
                   {"seeds", c.diagnose.seeds},
                   {"t_final", c.diagnose.t_final},
                   {"qv_replicas", c.diagnose.qv_replicas},
                   {"qv_t_final", c.diagnose.qv_t_final}};
  return j;
}

std::string canonical_text(const ExperimentConfig& c) {
  // nlohmann objects are key-sorted, so dump() is canonical.
  return to_json(c).dump(2) + "\n";
}

}  // namespace libmlab
