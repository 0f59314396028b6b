#include "ifsldp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ifsldp/error.hpp"
#include "ifsldp/ldp.hpp"
#include "ifsldp/output.hpp"
#include "ifsldp/thermo.hpp"
#include "ifsldp/tropical.hpp"

namespace ifsldp {

namespace {

using nlohmann::json;
using Row = OutputWriter::Row;

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

void require_valid_config(const ExperimentConfig& cfg) {
  const ValidationReport rep = validate_config(cfg);
  if (!rep.ok()) fail(ErrorCode::validation, rep.to_string());
}

OutputWriter writer_for(const ExperimentConfig& cfg, const RunOptions& opt) {
  return OutputWriter(opt.out_dir.empty() ? cfg.output_directory : opt.out_dir, cfg.hash(),
                      cfg.wants("csv"), cfg.wants("json"));
}

// Everything the zero-temperature side produces for one config.
struct Tropics {
  Grid grid;
  ZeroTempPack pack;
  MaxPlusMatrix M;
  TropicalClosure S;
  AubrySet aubry;
  bool irreducible = false;
  Density density;
  double path_error_bound = 0.0;
};

Tropics tropics(const ExperimentConfig& cfg) {
  Tropics t{Grid(cfg.n_points), {}, {}, {}, {}, false, {}, 0.0};
  t.pack = zero_temperature(cfg.system, cfg.potential, t.grid, cfg.method, cfg.tol.calibration);
  t.M = build_maxplus_matrix(cfg.system, t.pack.q, t.grid);
  t.S = kleene_star(t.M, cfg.tol.aubry);
  t.aubry = aubry_set(t.S, cfg.tol.aubry);
  t.irreducible = irreducibility_check(t.S, t.aubry, cfg.tol.aubry);
  if (t.irreducible)
    t.density = idempotent_density_irreducible(t.S, t.aubry, cfg.tol.aubry);
  else
    t.density = idempotent_density_general(t.S, t.aubry, std::vector<double>(t.aubry.nodes.size(), 0.0));
  const double lip = std::max(t.pack.lip_q, cfg.potential.lip_bound());
  t.path_error_bound = 2.0 * lip * t.grid.spacing() / (1.0 - cfg.system.gamma);
  return t;
}

std::vector<double> aubry_points(const Tropics& t) {
  std::vector<double> x;
  for (std::size_t i : t.aubry.nodes) x.push_back(t.grid.point(i));
  return x;
}

// q rows as a Potential on [0,1]: constant when every row is flat.
Potential q_potential(const ZeroTempPack& z, bool* flat_out = nullptr) {
  std::vector<std::vector<double>> rows(z.n_maps);
  bool flat = true;
  for (std::size_t j = 0; j < z.n_maps; ++j) {
    rows[j].assign(z.q.begin() + static_cast<std::ptrdiff_t>(j * z.n_points),
                   z.q.begin() + static_cast<std::ptrdiff_t>((j + 1) * z.n_points));
    for (double v : rows[j]) flat = flat && std::abs(v - rows[j][0]) <= 1e-12;
  }
  if (flat_out) *flat_out = flat;
  if (flat) {
    std::vector<double> c;
    for (const auto& r : rows) c.push_back(r[0]);
    return Potential::constant(c);
  }
  return Potential::tabulated(rows, z.lip_q);
}

const char* method_name(CalibrationMethod m) {
  return m == CalibrationMethod::policy ? "policy" : "discounted";
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse:
      return 1;
    case ErrorCode::validation:
      return 2;
    case ErrorCode::solver:
      return 3;
    case ErrorCode::contradiction:
      return 4;
    case ErrorCode::argument:
    case ErrorCode::io:
      return 1;
  }
  return 1;
}

RunResult run_validate(const ExperimentConfig& cfg) {
  RunResult r;
  const ValidationReport rep = validate_config(cfg);
  r.summary = {{"valid", rep.ok()}, {"violations", rep.violations}, {"config_hash", cfg.hash()},
               {"config", cfg.canonical()}};
  if (rep.ok()) {
    r.messages.push_back(cfg.source + ": ok (config_hash " + cfg.hash() + ")");
  } else {
    r.exit_code = 2;
    for (const auto& v : rep.violations) r.messages.push_back(v);
  }
  return r;
}

RunResult run_thermo(const ExperimentConfig& cfg, double beta, const RunOptions& opt) {
  require_valid_config(cfg);
  if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorCode::argument, "--beta must be positive");
  const Grid grid(cfg.n_points);
  const auto& sys = cfg.system;

  const EigenPair ep = eigen_power(sys, cfg.potential, beta, grid, cfg.tol.eigen);
  const NormalizedWeights qw = normalize(sys, cfg.potential, beta, grid, ep);
  const GibbsMeasure rho = gibbs_measure(sys, grid, qw, cfg.tol.gibbs);
  const HolonomicLift lift = holonomic_lift(sys, grid, qw, rho);
  const PressureIdentity pid = pressure_identity(sys, cfg.potential, beta, grid, qw, lift, ep);
  // Independent solver on the same discrete operator, for the record.
  const EigenPair disc = eigen_discounted(sys, cfg.potential, beta, grid,
                                         dyadic_schedule(cfg.discount_kmax), cfg.tol.discounted);

  OutputWriter out = writer_for(cfg, opt);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < grid.size(); ++i)
    rows.push_back({num(i), num(grid.point(i)), num(ep.h[i]), num(ep.log_h[i])});
  out.csv("thermo_eigen.csv", {"i", "x", "h", "log_h"}, rows);

  rows.clear();
  for (std::size_t j = 0; j < sys.size(); ++j)
    for (std::size_t i = 0; i < grid.size(); ++i)
      rows.push_back({num(j), num(i), num(grid.point(i)), num(qw(j, i)), num(qw.log(j, i))});
  out.csv("thermo_weights.csv", {"j", "i", "x", "q", "log_q"}, rows);

  rows.clear();
  for (std::size_t i = 0; i < grid.size(); ++i)
    rows.push_back({num(i), num(grid.point(i)), num(rho.mass[i]), num(rho.log_mass[i])});
  out.csv("thermo_gibbs.csv", {"i", "x", "mass", "log_mass"}, rows);

  const Row summary_cols{"beta",     "lambda",  "log_lambda", "pressure", "energy",
                         "entropy",  "identity_residual", "eigen_residual", "gibbs_residual",
                         "log_space"};
  out.csv("thermo_summary.csv", summary_cols,
          {{num(beta), num(ep.lambda), num(ep.log_lambda), num(pid.pressure), num(pid.energy),
            num(pid.entropy), num(pid.residual), num(ep.residual), num(rho.residual),
            ep.log_space ? "1" : "0"}});

  RunResult r;
  r.summary = {
      {"command", "thermo"},
      {"beta", beta},
      {"n_points", cfg.n_points},
      {"lambda", json_number(ep.lambda)},
      {"log_lambda", json_number(ep.log_lambda)},
      {"pressure", json_number(pid.pressure)},
      {"pressure_over_beta", json_number(pid.pressure / beta)},
      {"energy", json_number(pid.energy)},
      {"entropy", json_number(pid.entropy)},
      {"identity_residual", json_number(pid.residual)},
      {"eigen_residual", json_number(ep.residual)},
      {"eigen_iterations", ep.iterations},
      {"discounted_lambda", json_number(disc.lambda)},
      {"solver_agreement", json_number(std::abs(disc.log_lambda - ep.log_lambda))},
      {"gibbs_residual", json_number(rho.residual)},
      {"gibbs_iterations", rho.iterations},
      {"holonomy_residual", json_number(lift.holonomy_residual)},
      {"raw_normalization_error", json_number(qw.raw_normalization_error)},
      {"log_space", ep.log_space},
      {"j_marginal", json_numbers(lift.j_marginal())},
  };
  out.json("thermo_summary.json", r.summary);
  r.files = out.written();
  r.messages.push_back("pressure " + num(pid.pressure) + ", entropy " + num(pid.entropy));
  r.messages.push_back("pressure identity residual " + num(pid.residual));
  return r;
}

RunResult run_tropical(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_valid_config(cfg);
  const Tropics t = tropics(cfg);
  const auto& g = t.grid;
  const std::size_t n = g.size();
  const InvarianceReport inv = verify_invariance(t.density, t.M, cfg.tol.invariance);
  const double rep_residual = subaction_representation_residual(t.S, t.aubry, t.pack.V);
  const RateFunction I = rate_function(t.density);

  OutputWriter out = writer_for(cfg, opt);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back({num(i), num(g.point(i)), num(t.pack.V[i])});
  out.csv("tropical_subaction.csv", {"i", "x", "V"}, rows);

  rows.clear();
  const EdgeWeights A = tabulate(cfg.potential, g);
  for (std::size_t j = 0; j < t.pack.n_maps; ++j)
    for (std::size_t i = 0; i < n; ++i)
      rows.push_back({num(j), num(i), num(g.point(i)), num(A[j * n + i]), num(t.pack(j, i))});
  out.csv("tropical_weights.csv", {"j", "i", "x", "A", "q"}, rows);

  rows.clear();
  rows.reserve(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) rows.push_back({num(x), num(y), num(t.S(x, y))});
  out.csv("tropical_closure.csv", {"x_index", "y_index", "S"}, rows);

  rows.clear();
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({num(i), num(g.point(i)), num(t.density.lambda[i]), num(I.I[i]),
                    t.aubry.contains(i) ? "1" : "0"});
  out.csv("tropical_density.csv", {"i", "x", "lambda", "I", "aubry"}, rows);

  RunResult r;
  r.summary = {
      {"command", "tropical"},
      {"n_points", n},
      {"mA", json_number(t.pack.mA)},
      {"calibration_method", method_name(cfg.method)},
      {"calibration_residual", json_number(t.pack.calibration_residual)},
      {"lip_q", json_number(t.pack.lip_q)},
      {"aubry", aubry_points(t)},
      {"aubry_nodes", t.aubry.nodes},
      {"irreducible", t.irreducible},
      {"density", t.irreducible ? "irreducible" : "hull with zero restriction"},
      {"density_sup", json_number(t.density.sup())},
      {"invariance_residual", json_number(inv.residual)},
      {"invariance_dual_residual", json_number(inv.dual_residual)},
      {"invariance_functional_residual", json_number(inv.functional_residual)},
      {"invariance_pass", inv.pass},
      {"representation_residual", json_number(rep_residual)},
      {"path_error_bound", json_number(t.path_error_bound)},
      {"max_projection_error", json_number(t.M.max_projection_error)},
      {"edges", t.M.edge_count()},
  };
  out.json("tropical_summary.json", r.summary);
  r.files = out.written();
  r.messages.push_back("m(A) " + num(t.pack.mA) + ", Aubry set of " + num(t.aubry.nodes.size()) +
                       " node(s), " + (t.irreducible ? "irreducible" : "reducible"));
  r.messages.push_back("calibration residual " + num(t.pack.calibration_residual) +
                       ", invariance residual " + num(inv.residual));
  return r;
}

RunResult run_ldp(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_valid_config(cfg);
  const Tropics t = tropics(cfg);
  const RateFunction I = rate_function(t.density);

  SweepOptions so;
  so.threads = std::max<std::size_t>(1, opt.threads);
  so.eigen_tol = cfg.tol.eigen;
  so.gibbs_tol = cfg.tol.gibbs;
  const BetaSweep sw = beta_sweep(cfg.system, cfg.potential, cfg.betas, t.grid, t.pack, so);

  CheckOptions ball_opt;
  ball_opt.tol = cfg.tol.ldp;
  ball_opt.place_dependent = !cfg.potential.constant_per_map();
  CheckOptions fn_opt = ball_opt;
  fn_opt.tol = cfg.tol.varadhan;

  std::vector<CheckResult> checks;
  auto append = [&](std::vector<CheckResult> more) {
    for (auto& c : more) checks.push_back(std::move(c));
  };
  append(ldp_ball_check(sw, t.grid, I, cfg.ball_centers, cfg.ball_radius, ball_opt));
  const auto battery = default_battery();
  append(varadhan_check(sw, t.grid, I, battery, fn_opt));
  append(idempotent_limit_check(sw, t.grid, t.density, battery, fn_opt));

  // Zero-temperature trends: gaps to m(A), V and q must not grow.
  auto trend_check = [&](const char* name, bool ok, auto gap_of) {
    CheckResult c;
    c.name = name;
    c.tol = 0.0;
    for (const auto& rec : sw.records)
      if (rec.ok) c.trend.push_back(gap_of(rec));
    if (!c.trend.empty()) c.gap = c.trend.back();
    if (c.trend.size() < 3) {
      c.verdict = Verdict::inconclusive;
      c.detail = "fewer than three converged betas";
    } else if (ok) {
      c.verdict = Verdict::pass;
      c.detail = "gap non-increasing after burn-in";
    } else {
      c.verdict = ball_opt.place_dependent ? Verdict::inconclusive : Verdict::fail;
      c.detail = "gap grows after burn-in";
    }
    checks.push_back(std::move(c));
  };
  trend_check("trend[mA]", sw.trend_mA, [](const BetaRecord& r) { return r.gap_mA; });
  trend_check("trend[V]", sw.trend_V, [](const BetaRecord& r) { return r.gap_V; });
  trend_check("trend[q]", sw.trend_q, [](const BetaRecord& r) { return r.gap_q; });

  OutputWriter out = writer_for(cfg, opt);
  std::vector<Row> rows;
  for (const auto& rec : sw.records)
    rows.push_back({num(rec.beta), rec.ok ? "1" : "0", num(rec.lambda), num(rec.log_lambda),
                    num(rec.pressure_over_beta), num(rec.gap_mA), num(rec.gap_V), num(rec.gap_q),
                    num(rec.entropy), num(rec.identity_residual), num(rec.eigen_residual),
                    num(rec.gibbs_residual), rec.log_space ? "1" : "0"});
  out.csv("ldp_sweep.csv",
          {"beta", "ok", "lambda", "log_lambda", "pressure_over_beta", "gap_mA", "gap_V", "gap_q",
           "entropy", "identity_residual", "eigen_residual", "gibbs_residual", "log_space"},
          rows);

  rows.clear();
  for (std::size_t i = 0; i < t.grid.size(); ++i)
    rows.push_back({num(i), num(t.grid.point(i)), num(I.I[i]), num(t.density.lambda[i])});
  out.csv("ldp_rate.csv", {"i", "x", "I", "lambda"}, rows);

  std::size_t n_pass = 0, n_fail = 0, n_inconclusive = 0;
  json jchecks = json::array();
  for (const auto& c : checks) {
    (c.verdict == Verdict::pass ? n_pass : c.verdict == Verdict::fail ? n_fail : n_inconclusive)++;
    jchecks.push_back({{"name", c.name},
                       {"verdict", to_string(c.verdict)},
                       {"lhs", json_number(c.lhs)},
                       {"rhs", json_number(c.rhs)},
                       {"gap", json_number(c.gap)},
                       {"tol", json_number(c.tol)},
                       {"detail", c.detail},
                       {"trend", json_numbers(c.trend)}});
  }
  std::vector<std::string> warnings;
  for (const auto& rec : sw.records)
    if (!rec.ok) warnings.push_back("beta " + num(rec.beta) + ": " + rec.error);
  for (const auto& c : checks)
    if (c.verdict == Verdict::inconclusive) warnings.push_back(c.name + " inconclusive: " + c.detail);

  RunResult r;
  r.exit_code = n_fail == 0 ? 0 : 4;
  r.summary = {
      {"command", "ldp"},
      {"n_points", cfg.n_points},
      {"betas", cfg.betas},
      {"mA", json_number(t.pack.mA)},
      {"aubry", aubry_points(t)},
      {"irreducible", t.irreducible},
      {"place_dependent", ball_opt.place_dependent},
      {"failed_betas", sw.failures},
      {"checks", jchecks},
      {"pass", n_pass},
      {"fail", n_fail},
      {"inconclusive", n_inconclusive},
      {"warnings", warnings},
  };
  out.json("ldp_checks.json", r.summary);
  r.files = out.written();
  for (const auto& c : checks)
    r.messages.push_back(std::string(to_string(c.verdict)) + " " + c.name + " gap " + num(c.gap));
  r.messages.push_back(num(checks.size()) + " checks: " + num(n_pass) + " pass, " + num(n_fail) +
                       " fail, " + num(n_inconclusive) + " inconclusive; " +
                       num(warnings.size()) + " warning(s)");
  return r;
}

OracleTarget parse_oracle_target(const std::string& name) {
  if (name == "mane") return OracleTarget::mane;
  if (name == "density") return OracleTarget::density;
  if (name == "rate") return OracleTarget::rate;
  fail(ErrorCode::argument, "oracle target must be mane, density or rate, got '" + name + "'");
}

RunResult run_oracle(const ExperimentConfig& cfg, OracleTarget target, std::size_t depth,
                     const RunOptions& opt) {
  require_valid_config(cfg);
  if (depth == 0) depth = cfg.symbolic_depth;
  // Refuse oversized enumerations before any solver work.
  SymbolicSpace{cfg.system.size(), depth}.cylinder_count();

  const Tropics t = tropics(cfg);
  const auto& g = t.grid;
  const std::size_t n = g.size();
  OutputWriter out = writer_for(cfg, opt);
  RunResult r;
  double max_disc = 0.0;
  std::size_t compared = 0, mismatched_support = 0;

  if (target == OracleTarget::mane) {
    const Potential q = q_potential(t.pack);
    const double eps = g.spacing();
    std::vector<Row> rows;
    for (std::size_t y = 0; y < n; ++y) {
      const auto col = brute_force_mane_column(cfg.system, q, g, g.point(y), depth, eps);
      for (std::size_t x = 0; x < n; ++x) {
        const double grid_v = t.S(x, y);
        const double diff = (col[x] == kBottom || grid_v == kBottom) ? kBottom : grid_v - col[x];
        if (col[x] != kBottom) {
          ++compared;
          if (grid_v == kBottom)
            ++mismatched_support;
          else
            max_disc = std::max(max_disc, std::abs(diff));
        }
        rows.push_back({num(x), num(y), num(g.point(x)), num(g.point(y)), num(grid_v), num(col[x]),
                        diff == kBottom ? "" : num(std::abs(diff))});
      }
    }
    out.csv("oracle_mane.csv", {"x_index", "y_index", "x", "y", "S_grid", "S_oracle", "abs_diff"},
            rows);
  } else {
    bool flat = false;
    q_potential(t.pack, &flat);
    if (!flat)
      fail(ErrorCode::argument, "the symbolic density oracle needs q constant on each map");
    std::vector<double> qc;
    for (std::size_t j = 0; j < t.pack.n_maps; ++j) qc.push_back(t.pack(j, 0));
    const SymbolicDensity sd = nonplace_density_symbolic(
        cfg.system, qc, SymbolicSpace{cfg.system.size(), depth}, &g, SymbolicBackend::interval);
    const bool rate = target == OracleTarget::rate;
    std::vector<Row> rows;
    for (std::size_t i = 0; i < n; ++i) {
      double gv = t.density.lambda[i], ov = sd.values[i];
      if (rate) {
        gv = -gv;
        ov = -ov;
      }
      std::string diff;
      if (sd.values[i] != kBottom) {
        ++compared;
        if (t.density.lambda[i] == kBottom) {
          ++mismatched_support;
        } else {
          max_disc = std::max(max_disc, std::abs(gv - ov));
          diff = num(std::abs(gv - ov));
        }
      }
      rows.push_back({num(i), num(g.point(i)), num(gv), num(ov), diff});
    }
    const char* col = rate ? "I" : "lambda";
    out.csv(rate ? "oracle_rate.csv" : "oracle_density.csv",
            {"i", "x", std::string(col) + "_grid", std::string(col) + "_symbolic", "abs_diff"}, rows);
  }

  const double bound = target == OracleTarget::mane ? t.path_error_bound : 0.0;
  const bool within = mismatched_support == 0 && max_disc <= bound + 1e-12;
  const char* names[] = {"mane", "density", "rate"};
  r.summary = {
      {"command", "oracle"},
      {"target", names[static_cast<int>(target)]},
      {"depth", depth},
      {"n_points", n},
      {"compared", compared},
      {"support_mismatches", mismatched_support},
      {"max_discrepancy", json_number(max_disc)},
      {"bound", json_number(bound)},
      {"within_bound", within},
  };
  out.json("oracle_summary.json", r.summary);
  r.files = out.written();
  std::ostringstream os;
  os << "max discrepancy " << num(max_disc) << " over " << compared << " oracle-finite entries (bound "
     << num(bound) << ", " << (within ? "within" : "outside") << ")";
  r.messages.push_back(os.str());
  return r;
}

}  // namespace ifsldp
