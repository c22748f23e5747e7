// gsbp: construct, certify and run GSBP time-marching schemes.
//
// Exit status: 0 success, 1 numeric failure (invariant violation, Newton
// divergence), 2 usage or input error. Output files are written only after
// every computation succeeded, via temp file + rename.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsbp/gsbp.hpp"

namespace {

using gsbp::io::json;

struct SchemeArgs {
  std::string scheme;
  std::string family;
  int n = 0;
  int q = -1;
  std::string operator_file;
  std::string tableau_file;

  void add_to(CLI::App* app) {
    app->add_option("--scheme", scheme, "registry name or file:<path>");
    app->add_option("--family", family, "node family (lobatto, gauss, radau-ia, radau-iia, ...)");
    app->add_option("-n", n, "node count for --family")->check(CLI::PositiveNumber);
    app->add_option("--q", q, "derivative order for --family (default: highest)");
    app->add_option("--operator", operator_file, "operator JSON document");
    app->add_option("--tableau", tableau_file, "tableau JSON document");
  }

  gsbp::Scheme<double> resolve() const {
    const int given = !scheme.empty() + !family.empty() + !operator_file.empty() + !tableau_file.empty();
    if (given != 1)
      throw gsbp::InputError("give exactly one of --scheme, --family, --operator, --tableau");
    if (!scheme.empty()) return gsbp::resolve_scheme(scheme);
    if (!operator_file.empty()) {
      const auto doc = gsbp::io::read_json_file(operator_file);
      if (doc.is_object() && doc.contains("A"))
        throw gsbp::InputError("'" + operator_file + "' is a tableau document");
      return gsbp::scheme_from_document(doc, std::filesystem::path(operator_file).stem().string());
    }
    if (!tableau_file.empty()) {
      const auto doc = gsbp::io::read_json_file(tableau_file);
      if (!(doc.is_object() && doc.contains("A")))
        throw gsbp::InputError("'" + tableau_file + "' is not a tableau document");
      return gsbp::scheme_from_document(doc, std::filesystem::path(tableau_file).stem().string());
    }
    if (n < 1) throw gsbp::InputError("--family needs -n");
    gsbp::Scheme<double> s;
    s.op = gsbp::build_family_operator<double>(gsbp::parse_family(family), n, q);
    s.name = family + "-" + std::to_string(n);
    s.op->name = s.name;
    s.tableau = gsbp::to_tableau(*s.op);
    s.tableau.name = s.name;
    return s;
  }
};

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    gsbp::io::write_file_atomic(path, content);
  }
}

json operator_summary(const gsbp::GsbpOperator<double>& op) {
  return {{"q", op.q}, {"tau", op.tau}, {"r", op.proj.r}, {"rho", op.rho},
          {"norm", op.norm_kind == gsbp::NormKind::Diagonal ? "diagonal" : "dense"}};
}

// ----------------------------------------------------------------- verbs

struct MakeOperator {
  std::string family;
  int n = 0;
  int q = -1;
  std::vector<double> interval;
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--family", family, "node family")->required();
    app->add_option("-n", n, "node count")->required()->check(CLI::PositiveNumber);
    app->add_option("--q", q, "derivative order (default: highest)");
    app->add_option("--interval", interval, "interval a b (default 0 1)")->expected(2);
    app->add_option("-o,--output", out, "output file (default stdout)");
  }

  int run() const {
    auto op = gsbp::build_family_operator<double>(gsbp::parse_family(family), n, q);
    op.name = family + "-" + std::to_string(n);
    if (!interval.empty()) op = gsbp::rescale(op, interval[0], interval[1]);
    const auto rep = gsbp::certify_operator(op);
    std::cerr << op.name << ": q=" << op.q << " tau=" << op.tau << " r=" << op.proj.r
              << " rho=" << op.rho << (rep.passes() ? " (all conditions hold)" : " (conditions FAIL)")
              << "\n";
    if (!rep.passes()) throw gsbp::NumericError(op.name + ": operator fails its conditions");
    emit(out, gsbp::io::dump(gsbp::io::operator_to_json(op)));
    return 0;
  }
};

struct Tableau {
  SchemeArgs scheme;
  std::string out;

  void add_to(CLI::App* app) {
    scheme.add_to(app);
    app->add_option("-o,--output", out, "output file (default stdout)");
  }

  int run() const {
    const auto s = scheme.resolve();
    emit(out, gsbp::io::dump(gsbp::io::tableau_to_json(s.tableau)));
    return 0;
  }
};

struct Certify {
  SchemeArgs scheme;
  std::string out;

  void add_to(CLI::App* app) {
    scheme.add_to(app);
    app->add_option("-o,--output", out, "JSON report file (default stdout)");
  }

  int run() const {
    const auto s = scheme.resolve();
    const auto order = gsbp::full_order_conditions(s.tableau);
    const auto stab = gsbp::stability_report(s.tableau, s.op ? &*s.op : nullptr);
    json report;
    report["scheme"] = s.name;
    report["stages"] = s.tableau.stages();
    report["structure"] = std::string(gsbp::to_string(s.tableau.structure));
    report["provenance"] = s.tableau.provenance.label();
    json summary;
    if (s.op) summary = operator_summary(*s.op);
    summary["p_full"] = order.p_full;
    summary["a_stable"] = stab.a_stable;
    summary["l_stable"] = stab.l_stable;
    summary["bn_stable"] = stab.bn_stable;
    report["summary"] = summary;
    if (s.op) report["operator"] = gsbp::conditions_to_json(gsbp::certify_operator(*s.op));
    const json cert = gsbp::certification_to_json(order, stab);
    report["order"] = cert["order"];
    report["stability"] = cert["stability"];

    std::cerr << s.name << ":";
    if (s.op) std::cerr << " q=" << s.op->q << " tau=" << s.op->tau << " rho=" << s.op->rho;
    std::cerr << " p=" << order.p_full << (stab.a_stable ? " A-stable" : " not-A-stable")
              << (stab.l_stable ? " L-stable" : " not-L-stable")
              << (stab.bn_stable ? " BN-stable" : " not-BN-stable") << "\n";
    emit(out, gsbp::io::dump(report));
    return 0;
  }
};

struct ProblemArgs {
  std::string problem = "decay";
  double lambda = -1.0;
  double y0 = 1.0;
  double tf = 1.0;
  int nblocks = 20;
  int nodes = 5;

  void add_to(CLI::App* app) {
    app->add_option("--problem", problem, "decay | cubic | prothero-robinson | convection")
        ->check(CLI::IsMember({"decay", "cubic", "prothero-robinson", "convection"}));
    app->add_option("--lambda", lambda, "rate for decay / prothero-robinson");
    app->add_option("--y0", y0, "initial value (scalar problems)");
    app->add_option("--tf", tf, "final time")->check(CLI::PositiveNumber);
    app->add_option("--nblocks", nblocks, "convection blocks")->check(CLI::Range(2, 100000));
    app->add_option("--nodes", nodes, "convection nodes per block")->check(CLI::Range(2, 64));
  }

  gsbp::IvpSpec<double> build() const {
    if (problem == "decay") return gsbp::decay_problem<double>(lambda, y0, 0.0, tf);
    if (problem == "cubic") return gsbp::cubic_problem<double>(y0, tf);
    if (problem == "prothero-robinson") return gsbp::prothero_robinson<double>(lambda, tf);
    const auto disc = gsbp::assemble_advection(nblocks, nodes);
    return disc.ivp(gsbp::sine_state(disc), tf);
  }
};

struct Solve {
  SchemeArgs scheme;
  ProblemArgs problem;
  double h = 0.0;
  int steps = 0;
  bool sat = false;
  double sigma2 = -1.0;
  double sigma_init = -1.0;
  std::string out;

  void add_to(CLI::App* app) {
    scheme.add_to(app);
    problem.add_to(app);
    auto* ho = app->add_option("--step", h, "step size")->check(CLI::PositiveNumber);
    auto* so = app->add_option("--steps", steps, "number of equal steps")->check(CLI::PositiveNumber);
    ho->excludes(so);
    app->add_flag("--sat", sat, "march the SAT form instead of the Runge-Kutta form");
    app->add_option("--sigma2", sigma2, "SAT interface penalty (sigma1 = sigma2 + 1)");
    app->add_option("--sigma-init", sigma_init, "SAT initial-condition penalty");
    app->add_option("-o,--output", out, "trajectory CSV (default stdout)");
  }

  int run() const {
    const auto s = scheme.resolve();
    const auto ivp = problem.build();
    if ((h > 0.0) == (steps > 0)) throw gsbp::InputError("give exactly one of --step, --steps");
    const int nsteps = steps > 0 ? steps : static_cast<int>(std::ceil((ivp.tf - ivp.t0) / h - 1e-12));
    gsbp::Trajectory<double> traj;
    if (sat) {
      if (!s.op) throw gsbp::InputError("--sat needs a GSBP operator scheme");
      const auto cfg = gsbp::SatConfig::with_interface(sigma2, sigma_init);
      if (steps == 0 && std::abs(nsteps * h - (ivp.tf - ivp.t0)) > 1e-12 * (ivp.tf - ivp.t0))
        throw gsbp::InputError("--sat needs --step to divide the interval; use --steps");
      traj = gsbp::sat_march(*s.op, ivp, nsteps, cfg);
    } else {
      traj = steps > 0 ? gsbp::march_steps(s.tableau, ivp, steps) : gsbp::march(s.tableau, ivp, h);
    }
    std::cerr << s.name << " on " << problem.problem << ": " << traj.steps() << " steps";
    if (ivp.dim() == 1) {
      std::cerr << ", y(tf) = " << gsbp::format_double(traj.final_value()(0));
      if (ivp.exact)
        std::cerr << ", error " << gsbp::format_double(std::abs(traj.final_value()(0) - ivp.exact(ivp.tf)(0)));
    }
    std::cerr << "\n";
    emit(out, gsbp::trajectory_csv(traj));
    return 0;
  }
};

struct Dual {
  SchemeArgs scheme;
  double lambda = -1.0;
  double alpha = 1.0;
  double y0 = 1.0;
  std::string out;

  void add_to(CLI::App* app) {
    scheme.add_to(app);
    app->add_option("--lambda", lambda, "y' = lambda y");
    app->add_option("--alpha", alpha, "weight of the final value in J = int y + alpha y(tf)");
    app->add_option("--y0", y0, "initial value");
    app->add_option("-o,--output", out, "JSON file (default stdout)");
  }

  int run() const {
    const auto s = scheme.resolve();
    if (!s.op) throw gsbp::InputError("dual needs a GSBP operator scheme");
    const auto& op = *s.op;
    const gsbp::VecD k = gsbp::VecD::Ones(op.size());
    const gsbp::VecD g = gsbp::VecD::Zero(op.size());
    const auto y = gsbp::solve_primal<double>(op, lambda, g, y0);
    const auto d = gsbp::solve_dual<double>(op, lambda, k, alpha, g, y0);
    const double primal = gsbp::functional<double>(op, y, k, alpha);
    json doc;
    doc["scheme"] = s.name;
    doc["lambda"] = gsbp::format_double(lambda);
    doc["alpha"] = gsbp::format_double(alpha);
    doc["y0"] = gsbp::format_double(y0);
    doc["y"] = gsbp::io::write_vector(y);
    doc["phi"] = gsbp::io::write_vector(d.phi);
    doc["primal_functional"] = gsbp::format_double(primal);
    doc["dual_functional"] = gsbp::format_double(d.value);
    doc["difference"] = gsbp::format_double(std::abs(primal - d.value));
    std::cerr << s.name << ": primal " << gsbp::format_double(primal) << ", dual "
              << gsbp::format_double(d.value) << "\n";
    emit(out, gsbp::io::dump(doc));
    return 0;
  }
};

void write_study(const gsbp::StudyResult& r, const std::string& out, const std::string& dat,
                 bool timing) {
  const std::string csv = gsbp::study_csv(r, timing);
  const std::string wp = dat.empty() ? std::string() : gsbp::work_precision_dat(r);
  emit(out, csv);
  if (!dat.empty()) gsbp::io::write_file_atomic(dat, wp);
  for (const auto& s : r.slopes)
    std::cerr << s.scheme << ": e_stage slope " << gsbp::format_double(s.stage) << ", e_step slope "
              << gsbp::format_double(s.step) << "\n";
}

struct Bench {
  bool full = false;
  gsbp::StudyConfig cfg;
  std::string out;
  std::string dat;

  Bench() {
    cfg.schemes = {"lobatto-iiic-4", "gauss-gsbp-4", "radau-ia-4", "radau-iia-4",
                   "gauss-collocation-3", "dirk3", "dirk4"};
    cfg.h_values = {2.0 / 64, 2.0 / 91, 2.0 / 128, 2.0 / 181};
  }

  void add_to(CLI::App* app) {
    app->add_flag("--full", full, "100 blocks (the 500x500 system) instead of 20");
    app->add_option("--nblocks", cfg.nblocks, "blocks")->check(CLI::Range(2, 100000));
    app->add_option("--nodes", cfg.nodes_per_block, "nodes per block")->check(CLI::Range(2, 64));
    app->add_option("--T", cfg.T, "final time")->check(CLI::PositiveNumber);
    app->add_option("--schemes", cfg.schemes, "schemes (registry names or file:<path>)");
    app->add_option("--h-values", cfg.h_values, "step sizes");
    app->add_option("--repetitions", cfg.repetitions, "timing repetitions (best is kept)")
        ->check(CLI::PositiveNumber);
    app->add_option("-o,--output", out, "CSV file (default stdout)");
    app->add_option("--dat", dat, "gnuplot work-precision file");
  }

  int run() {
    if (full) cfg.nblocks = 100;
    write_study(gsbp::run_study(cfg), out, dat, true);
    return 0;
  }
};

struct Study {
  std::string config;
  std::string out;
  std::string dat;
  bool no_timing = false;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "study config JSON")->required();
    app->add_option("-o,--output", out, "CSV file (default stdout)");
    app->add_option("--dat", dat, "gnuplot work-precision file");
    app->add_flag("--no-timing", no_timing, "leave the seconds column empty");
  }

  int run() const {
    const auto cfg = gsbp::study_config_from_json(gsbp::io::read_json_file(config));
    write_study(gsbp::run_study(cfg), out, dat, !no_timing);
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GSBP time-marching schemes: construction, certification, integration"};
  app.require_subcommand(1);
  MakeOperator make_operator;
  Tableau tableau;
  Certify certify;
  Solve solve;
  Dual dual;
  Bench bench;
  Study study;
  make_operator.add_to(app.add_subcommand("make-operator", "build a family operator"));
  tableau.add_to(app.add_subcommand("tableau", "Butcher tableau of a scheme"));
  certify.add_to(app.add_subcommand("certify", "order and stability report"));
  solve.add_to(app.add_subcommand("solve", "integrate a model problem"));
  dual.add_to(app.add_subcommand("dual", "primal and dual functionals of one step"));
  bench.add_to(app.add_subcommand("bench", "convection benchmark with default settings"));
  study.add_to(app.add_subcommand("study", "convection study from a config file"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() == 0) return 0;
    std::cerr << "\n" << app.help();
    return 2;
  }

  try {
    const std::string verb = app.get_subcommands().front()->get_name();
    if (verb == "make-operator") return make_operator.run();
    if (verb == "tableau") return tableau.run();
    if (verb == "certify") return certify.run();
    if (verb == "solve") return solve.run();
    if (verb == "dual") return dual.run();
    if (verb == "bench") return bench.run();
    return study.run();
  } catch (const gsbp::InvariantError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gsbp::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
