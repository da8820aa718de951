// qrm: build quantum reset models, compute spectra, steady-state series,
// the emergent Markov process, and dynamics diagnostics; emit JSON/CSV.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "qrm/dynamics.hpp"
#include "qrm/markov.hpp"
#include "qrm/model_io.hpp"
#include "qrm/version.hpp"

using namespace qrm;

namespace {

struct RunConfig {
  std::string model_file;
  std::string preset = "three-qubit";
  std::vector<std::string> sets;
  std::vector<std::string> tols;
  double g = std::numeric_limits<double>::quiet_NaN();  // NaN: use model.g
  std::string g_grid, t_grid;
  int order = 6;
  std::uint64_t seed = 12345;
  std::string out_dir;
  std::string format = "json";
  Index dim_cap = 64;
};

std::map<std::string, std::string> parse_pairs(const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& spec, const std::vector<double>& fallback) {
  if (spec.empty()) return fallback;
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4)
    throw std::invalid_argument("grid spec must be a:b:n or a:b:n:log");
  const double a = std::stod(parts[0]), b = std::stod(parts[1]);
  const int n = std::stoi(parts[2]);
  const bool log = parts.size() == 4 && parts[3] == "log";
  auto grid = log ? geometric_grid(a, b, n) : linear_grid(a, b, n);
  if (grid.size() > 1 && grid.front() >= grid.back())
    throw std::invalid_argument("grid must be strictly increasing");
  return grid;
}

Tolerances parse_tolerances(const std::vector<std::string>& tols) {
  Tolerances t;
  for (const auto& [k, v] : parse_pairs(tols)) {
    const double x = std::stod(v);
    if (k == "rank")
      t.rank_cutoff = x;
    else if (k == "herm")
      t.hermiticity = x;
    else if (k == "spectral")
      t.spectral_match = x;
    else if (k == "residual")
      t.eigen_residual = x;
    else
      throw std::invalid_argument("unknown tolerance key: " + k);
  }
  return t;
}

void validate_config(const RunConfig& cfg) {
  parse_grid(cfg.g_grid, {1.0});  // syntax/monotonicity checks
  parse_grid(cfg.t_grid, {1.0});
  if (cfg.order < 0) throw std::invalid_argument("series order must be >= 0");
}

QrmModel resolve_model(const RunConfig& cfg, const Tolerances& tol) {
  validate_config(cfg);
  QrmModel m = cfg.model_file.empty() ? preset_model(cfg.preset, parse_pairs(cfg.sets))
                                      : load_model_file(cfg.model_file);
  m.validate(tol, cfg.dim_cap);
  return m;
}

Json header_block(const RunConfig& cfg, const QrmModel& m, const Tolerances& tol) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(model_hash(m)));
  Json h;
  h["tool"] = "qrm";
  h["version"] = kVersion;
  h["model_hash"] = hash;
  h["seed"] = cfg.seed;
  h["tolerances"] = {{"rank", tol.rank_cutoff},
                     {"herm", tol.hermiticity},
                     {"spectral", tol.spectral_match},
                     {"residual", tol.eigen_residual}};
  return h;
}

void emit(const RunConfig& cfg, const std::string& name, const std::string& payload,
          const std::string& ext) {
  if (cfg.out_dir.empty()) {
    std::cout << payload;
    if (!payload.empty() && payload.back() != '\n') std::cout << '\n';
    return;
  }
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / (name + "." + ext);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << payload;
  if (!payload.empty() && payload.back() != '\n') f << '\n';
  std::cout << "wrote " << path.string() << "\n";
}

std::string csv_header(const RunConfig& cfg, const QrmModel& m, const Tolerances& tol) {
  const Json h = header_block(cfg, m, tol);
  std::string out;
  for (const auto& [k, v] : h.items()) out += "# " + k + "=" + v.dump() + "\n";
  return out;
}

double effective_g(const RunConfig& cfg, const QrmModel& m) {
  return std::isnan(cfg.g) ? m.g : cfg.g;
}

int cmd_spectrum(const RunConfig& cfg) {
  const Tolerances tol = parse_tolerances(cfg.tols);
  const QrmModel m = resolve_model(cfg, tol);
  const double g = effective_g(cfg, m);
  Json out;
  out["header"] = header_block(cfg, m, tol);
  out["g"] = g;
  Json list = Json::array();
  if (g == 0.0) {
    UncoupledOperator l0(m, tol);
    l0.verify_residuals();
    // Cluster per family for multiplicity reporting.
    std::map<std::string, std::vector<const EigenTableEntry*>> by_family;
    for (const auto& e : l0.table()) by_family[e.family].push_back(&e);
    for (auto& [family, entries] : by_family) {
      std::vector<bool> used(entries.size(), false);
      for (size_t i = 0; i < entries.size(); ++i) {
        if (used[i]) continue;
        int mult = 0;
        double residual = 0;
        for (size_t j = i; j < entries.size(); ++j) {
          if (used[j]) continue;
          if (std::abs(entries[j]->eigenvalue - entries[i]->eigenvalue) <= tol.spectral_match) {
            used[j] = true;
            ++mult;
            residual = std::max(residual, entries[j]->residual);
          }
        }
        list.push_back(
            {{"eigenvalue", {entries[i]->eigenvalue.real(), entries[i]->eigenvalue.imag()}},
             {"family", family},
             {"multiplicity", mult},
             {"residual", residual}});
      }
    }
  } else {
    const EigResult r = eig(build_lindbladian(m, g).m);
    std::vector<bool> used(size_t(r.values.size()), false);
    for (Index i = 0; i < r.values.size(); ++i) {
      if (used[size_t(i)]) continue;
      int mult = 0;
      double residual = 0;
      for (Index j = i; j < r.values.size(); ++j) {
        if (used[size_t(j)]) continue;
        if (std::abs(r.values(j) - r.values(i)) <= tol.spectral_match) {
          used[size_t(j)] = true;
          ++mult;
          residual = std::max(residual, r.residuals(j));
        }
      }
      list.push_back({{"eigenvalue", {r.values(i).real(), r.values(i).imag()}},
                      {"family", "numeric"},
                      {"multiplicity", mult},
                      {"residual", residual}});
    }
  }
  out["eigenvalues"] = std::move(list);
  emit(cfg, "spectrum", out.dump(2), "json");
  return 0;
}

int cmd_steady(const RunConfig& cfg) {
  const Tolerances tol = parse_tolerances(cfg.tols);
  const QrmModel m = resolve_model(cfg, tol);
  const double g = effective_g(cfg, m);
  PerturbationContext ctx(m, tol);
  ctx.require_spec();
  SteadyStateSolver solver(ctx);
  solver.require_coup();
  const SteadySeries series = solver.series(cfg.order);
  const ResolventSteadyState r = solver.resolvent(g);
  Json out;
  out["header"] = header_block(cfg, m, tol);
  out["g"] = g;
  out["branch"] = to_string(ctx.branch());
  out["rho"] = matrix_to_json(r.rho);
  out["residual"] = r.residual;
  out["series_orders"] = cfg.order;
  out["g0_estimate"] = r.g0_estimate;
  out["beyond_radius"] = r.beyond_radius;
  Json sn = Json::array();
  for (const auto& rho : series.rho) sn.push_back(rho.norm());
  out["series_coefficient_norms"] = std::move(sn);
  Json hr = Json::array();
  for (double x : series.hierarchy_residual) hr.push_back(x);
  out["hierarchy_residuals"] = std::move(hr);
  emit(cfg, "steady", out.dump(2), "json");
  if (r.residual > 1e-9) {
    std::cerr << "error: NumericError: steady-state residual " << r.residual << " exceeds 1e-9\n";
    return 4;
  }
  return 0;
}

int cmd_coup(const RunConfig& cfg) {
  const Tolerances tol = parse_tolerances(cfg.tols);
  const QrmModel m = resolve_model(cfg, tol);
  PerturbationContext ctx(m, tol);
  const PhiMaps phi = build_phi(ctx);
  const CoupReport rep = check_coup(phi, tol);
  Json out;
  out["header"] = header_block(cfg, m, tol);
  out["branch"] = to_string(ctx.branch());
  out["phi_d"] = matrix_to_json(phi.phi_d.cast<Complex>());
  out["rank"] = rep.rank;
  out["holds"] = rep.holds;
  Json kv = Json::array();
  for (Index i = 0; i < rep.kernel.size(); ++i) kv.push_back(rep.kernel(i));
  out["kernel"] = std::move(kv);
  out["column_sum_max"] = phi.column_sum_max;
  out["offdiag_min"] = phi.offdiag_min;
  if (rep.combinatorial_available)
    out["combinatorial"] = {{"holds", rep.combinatorial_holds}, {"witness_row", rep.witness_row}};
  emit(cfg, "coup", out.dump(2), "json");
  if (!rep.holds) {
    std::cerr << "error: AssumptionError: Coup fails (rank " << rep.rank << ")\n";
    return 3;
  }
  return 0;
}

int cmd_markov(const RunConfig& cfg) {
  const Tolerances tol = parse_tolerances(cfg.tols);
  const QrmModel m = resolve_model(cfg, tol);
  PerturbationContext ctx(m, tol);
  SteadyStateSolver solver(ctx);
  solver.require_coup();
  const RateMatrix rm = rate_matrix_from_phi(solver.phi(), tol);
  const RVec pi = stationary_distribution(rm, tol);
  const auto s_grid = parse_grid(cfg.t_grid, {0.01, 0.1, 1.0, 10.0});
  Json out;
  out["header"] = header_block(cfg, m, tol);
  out["Q"] = matrix_to_json(rm.q.cast<Complex>());
  Json pj = Json::array();
  for (Index i = 0; i < pi.size(); ++i) pj.push_back(pi(i));
  out["pi"] = std::move(pj);
  Json kernels = Json::array();
  std::string csv = csv_header(cfg, m, tol) + "s,i,j,p\n";
  for (double s : s_grid) {
    const TransitionKernel k = transition_probabilities(rm, s);
    kernels.push_back({{"s", s}, {"P", matrix_to_json(k.p.cast<Complex>())}});
    for (Index i = 0; i < k.p.rows(); ++i)
      for (Index j = 0; j < k.p.cols(); ++j) {
        char line[96];
        std::snprintf(line, sizeof line, "%.17g,%lld,%lld,%.17g\n", s, static_cast<long long>(i),
                      static_cast<long long>(j), k.p(i, j));
        csv += line;
      }
  }
  out["kernels"] = std::move(kernels);
  if (cfg.format == "csv") {
    emit(cfg, "markov", csv, "csv");
  } else {
    emit(cfg, "markov", out.dump(2), "json");
    if (!cfg.out_dir.empty()) emit(cfg, "markov", csv, "csv");
  }
  return 0;
}

int cmd_dynamics(const RunConfig& cfg) {
  const Tolerances tol = parse_tolerances(cfg.tols);
  const QrmModel m = resolve_model(cfg, tol);
  PerturbationContext ctx(m, tol);
  SteadyStateSolver solver(ctx);
  solver.require_coup();
  const auto g_grid = parse_grid(cfg.g_grid, {0.04, 0.02, 0.01});
  CMat rho0 = CMat::Zero(m.dims.total(), m.dims.total());
  rho0(0, 0) = 1.0;  // computational ground state

  std::string csv = csv_header(cfg, m, tol) + "t,g,err_exact_vs_reduced,dist_to_steady\n";
  std::vector<double> approach_times;
  for (double g : g_grid) {
    const auto steady = solver.resolvent(g);
    const auto grid = parse_grid(cfg.t_grid, geometric_grid(1.0 / (g * g), 5.0 / (g * g), 16));
    const auto exact = propagate_exact(m, rho0, grid, g);
    const auto reduced = propagate_reduced(ctx, rho0, grid, g);
    for (size_t i = 0; i < grid.size(); ++i) {
      char line[128];
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", grid[i], g,
                    (exact.states[i] - reduced.states[i]).norm(),
                    (exact.states[i] - steady.rho).norm());
      csv += line;
    }
    approach_times.push_back(time_to_reach_steady(m, rho0, g, 1e-3, steady.rho, 1e9));
  }
  const auto sweep = error_scaling_sweep(ctx, rho0, g_grid);
  Json out;
  out["header"] = header_block(cfg, m, tol);
  Json gj = Json::array();
  for (double g : g_grid) gj.push_back(g);
  out["g_grid"] = std::move(gj);
  out["reduced_error_exponent"] = {{"slope", sweep.exponent.slope},
                                   {"stderr", sweep.exponent.slope_stderr}};
  if (g_grid.size() >= 2) {
    const LinearFit af = fit_loglog(g_grid, approach_times);
    out["approach_time_exponent"] = {{"slope", af.slope}, {"stderr", af.slope_stderr}};
  }
  const GapDiagnostics gd = spectral_gap_diagnostics(ctx, g_grid.front());
  out["gamma_gap"] = gd.gamma_gap;
  out["eta"] = gd.eta;
  out["f_phi"] = gd.f_phi;
  if (cfg.format == "csv") {
    emit(cfg, "dynamics", csv, "csv");
  } else {
    emit(cfg, "dynamics", out.dump(2), "json");
    if (!cfg.out_dir.empty()) emit(cfg, "dynamics", csv, "csv");
  }
  return 0;
}

int cmd_example(const RunConfig& cfg) {
  validate_config(cfg);
  const Tolerances tol = parse_tolerances(cfg.tols);
  const auto overrides = parse_pairs(cfg.sets);
  Json out;
  if (cfg.preset == "three-qubit") {
    const ThreeQubitParams p = three_qubit_preset(overrides);
    const QrmModel m = build_three_qubit(p);
    out["header"] = header_block(cfg, m, tol);
    out["model"] = model_to_json(m);
    const auto f = three_qubit_closed_forms(p);
    out["closed_forms"] = {{"phi_plus", f.phi_plus},
                           {"phi_minus", f.phi_minus},
                           {"phi_d", matrix_to_json(f.phi_d.cast<Complex>())},
                           {"phi_d_nonzero_eig", f.phi_d_nonzero_eig},
                           {"rho_c0", matrix_to_json(f.rho_c0)},
                           {"x2", f.x2}};
  } else if (cfg.preset == "qubit-n-qubit") {
    const QubitNQubitParams p = qubit_n_qubit_preset(overrides);
    const QrmModel m = build_qubit_n_qubit(p);
    out["header"] = header_block(cfg, m, tol);
    out["model"] = model_to_json(m);
    out["coup_hypothesis"] = qubit_n_qubit_coup_hypothesis(p);
    const auto kf = closed_form_kernel_xj(p);
    Json xs = Json::array();
    for (Index i = 0; i < kf.x_recursive.size(); ++i) xs.push_back(kf.x_recursive(i));
    out["closed_forms"] = {{"x", xs}, {"Z", kf.z}};
  } else {
    throw std::invalid_argument("unknown preset: " + cfg.preset);
  }
  emit(cfg, "example", out.dump(2), "json");
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const Tolerances tol = parse_tolerances(cfg.tols);
  const QrmModel m = resolve_model(cfg, tol);
  const double g = effective_g(cfg, m);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd;
  const Index n = m.dims.total();
  auto random_op = [&] {
    CMat x(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) x(i, j) = Complex(nd(rng), nd(rng));
    return x;
  };
  int failures = 0;
  auto report = [&](const char* name, double metric, double bound) {
    const bool ok = metric <= bound;
    failures += ok ? 0 : 1;
    std::cout << (ok ? "ok   " : "FAIL ") << name << " (" << metric << " <= " << bound << ")\n";
  };

  {
    const SuperOp d = build_dissipator(m);
    const SuperOp l = build_lindbladian(m, g);
    double worst = 0;
    CMat e = CMat::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        e(i, j) = 1;
        worst = std::max(worst, (d.apply(e) - apply_dissipator(m, e)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (l.apply(e) - apply_lindbladian(m, e, g)).cwiseAbs().maxCoeff());
        e(i, j) = 0;
      }
    report("superop-vs-map", worst, 1e-12);
  }
  {
    const KrausSet ks = build_kraus_set(m);
    report("kraus-vs-reset", (ks.assembled.m - build_dissipator(m).m).cwiseAbs().maxCoeff(), 1e-12);
  }
  {
    const auto p = dissipator_projectors(m);
    const CMat sum = p.q0.m + p.qa.m + p.qb.m + p.qab.m;
    report("projector-completeness", (sum - CMat::Identity(n * n, n * n)).cwiseAbs().maxCoeff(),
           1e-10);
  }
  {
    UncoupledOperator l0(m, tol);
    report("eigentable-residuals", l0.verify_residuals(), tol.eigen_residual);
    double worst = 0;
    for (int it = 0; it < 10; ++it) {
      const CMat x = random_op();
      const CMat y = x - l0.q0(x);
      worst = std::max(worst, (l0.apply(l0.s0(y)) - y).norm() / std::max(1.0, y.norm()));
    }
    report("reduced-resolvent", worst, 1e-9);
    if (!m.has_drive()) {
      double dev = 0;
      for (int it = 0; it < 10; ++it) {
        const CMat x = random_op();
        const CMat rt = x - apply_q0(m, x);
        dev = std::max(dev, (dissipator_inverse(m, rt) - l0.s0(rt)).norm());
      }
      report("dissipator-inverse-vs-s0", dev, 1e-9);
    }
  }
  try {
    PerturbationContext ctx(m, tol);
    ctx.require_spec();
    SteadyStateSolver solver(ctx);
    report("phi-column-sums", solver.phi().column_sum_max, 1e-10);
    if (solver.phi().phi_d_h_route)
      report("phi-two-routes",
             (solver.phi().phi_d - *solver.phi().phi_d_h_route).cwiseAbs().maxCoeff(), 1e-10);
    if (solver.coup().holds) {
      const auto s = solver.series(std::min(cfg.order, 4));
      double worst = 0;
      for (double r : s.hierarchy_residual) worst = std::max(worst, r);
      report("series-hierarchy", worst, 1e-9);
      const auto r = solver.resolvent(g);
      report("steady-residual", r.residual, 1e-9);
      const NullSpace ns = null_space(build_lindbladian(m, g).m, tol.rank_cutoff);
      if (ns.basis.cols() == 1) {
        CMat exact = devectorize(ns.basis.col(0), n);
        exact /= exact.trace();
        report("steady-vs-nullspace", (r.rho - exact).norm(), 1e-8);
      } else {
        std::cout << "FAIL kernel-dimension (" << ns.basis.cols() << " != 1)\n";
        ++failures;
      }
      if (ctx.branch() == DriveBranch::NoDrive) {
        const RateMatrix rm = rate_matrix_from_phi(solver.phi(), tol);
        double worst_markov = 0;
        for (double s2 : {0.01, 0.1, 1.0, 10.0}) {
          const auto k = transition_probabilities(rm, s2);
          worst_markov = std::max(worst_markov, k.max_row_sum_error);
          worst_markov = std::max(worst_markov, std::max(0.0, -k.min_entry_preclamp));
        }
        report("markov-stochasticity", worst_markov, 1e-10);
        report("stationary-vs-kernel",
               (stationary_distribution(rm, tol) - solver.coup().kernel).cwiseAbs().maxCoeff(),
               1e-10);
      }
    } else {
      std::cout << "skip coup-dependent checks (Coup fails)\n";
    }
  } catch (const AssumptionError& e) {
    std::cout << "skip perturbative checks (" << e.what() << ")\n";
  }
  {
    const SuperOp l = build_lindbladian(m, g);
    CMat rho0 = CMat::Zero(n, n);
    rho0(0, 0) = 1.0;
    double worst = 0;
    for (double t : {0.1, 1.0, 10.0}) {
      const CMat rho = devectorize(CVec(expm(CMat(t * l.m)) * vectorize(rho0)), n);
      worst = std::max(worst, std::abs(rho.trace() - Complex(1)));
      const RVec ev = herm_eig(CMat(0.5 * (rho + rho.adjoint()))).values;
      worst = std::max(worst, std::max(0.0, -ev.minCoeff() - 1e-10));
    }
    report("cptp-propagation", worst, 1e-9);
  }
  if (failures > 0) {
    std::cerr << "error: NumericError: " << failures << " verification check(s) failed\n";
    return 4;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tri-partite quantum reset model toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model_file, "model JSON file");
    sub->add_option("--preset", cfg.preset, "named preset (three-qubit, qubit-n-qubit)");
    sub->add_option("--set", cfg.sets, "preset parameter override key=value")->take_all();
    sub->add_option("--tol", cfg.tols, "tolerance override key=value")->take_all();
    sub->add_option("--g", cfg.g, "coupling constant (default: model value)");
    sub->add_option("--g-grid", cfg.g_grid, "coupling grid a:b:n[:log]");
    sub->add_option("--t-grid", cfg.t_grid, "time/rescaled-time grid a:b:n[:log]");
    sub->add_option("-K,--order", cfg.order, "series order");
    sub->add_option("--seed", cfg.seed, "RNG seed for randomized checks");
    sub->add_option("--out", cfg.out_dir, "output directory (default: stdout)");
    sub->add_option("--format", cfg.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--dim-cap", cfg.dim_cap, "total Hilbert dimension cap");
  };

  int (*handler)(const RunConfig&) = nullptr;
  struct Cmd {
    const char* name;
    const char* desc;
    int (*fn)(const RunConfig&);
  };
  for (const Cmd& c :
       {Cmd{"spectrum", "eigenvalues of L_g (analytic table at g=0)", &cmd_spectrum},
        Cmd{"steady", "steady-state series and resolvent state", &cmd_steady},
        Cmd{"coup", "Phi_D matrix, rank and kernel", &cmd_coup},
        Cmd{"markov", "emergent Markov process (Q, pi, kernels)", &cmd_markov},
        Cmd{"dynamics", "exact vs reduced propagation diagnostics", &cmd_dynamics},
        Cmd{"example", "emit a preset model and its closed forms", &cmd_example},
        Cmd{"verify", "run the oracle-equivalence suite", &cmd_verify}}) {
    CLI::App* sub = app.add_subcommand(c.name, c.desc);
    add_common(sub);
    auto fn = c.fn;
    sub->callback([&handler, fn] { handler = fn; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return handler(cfg);
  } catch (const ModelError& e) {
    std::cerr << "error: ModelError: " << e.what() << "\n";
    return 2;
  } catch (const AssumptionError& e) {
    std::cerr << "error: AssumptionError: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: NumericError: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: ConfigError: " << e.what() << "\n";
    return 1;
  }
}
