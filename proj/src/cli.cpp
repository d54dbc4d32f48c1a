#include "linfvar/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "linfvar/energy.hpp"
#include "linfvar/errors.hpp"
#include "linfvar/flow.hpp"
#include "linfvar/lp_approx.hpp"
#include "linfvar/operators.hpp"
#include "linfvar/problem_file.hpp"
#include "linfvar/varcheck.hpp"

namespace linfvar::cli {

using nlohmann::json;
using Eigen::VectorXd;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

namespace {

struct Params {
  std::string command;
  std::string problem;
  std::uint64_t seed = 0;
  double delta = -1.0;
  double tol = -1.0;
  std::string p_schedule = "2,4,8,16,32";
  std::string out;
  std::string points = "grid";
  std::string phi, psi, x0, xi, directions;
  std::string measure = "uniform";
  std::string variant = "reduced";
  double dt = -1.0, t_max = -1.0, amplitude = -1.0, c = 0.5;
  int trials = 50;
  int basis = 50;
};

json to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

VectorXd parse_vector(const std::string& s, int len, const std::string& what) {
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != len)
    throw InputError(what + ": expected " + std::to_string(len) + " comma-separated numbers");
  VectorXd v(len);
  for (int i = 0; i < len; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(parts[static_cast<std::size_t>(i)], &used);
      if (used != parts[static_cast<std::size_t>(i)].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError(what + ": bad number '" + parts[static_cast<std::size_t>(i)] + "'");
    }
  }
  return v;
}

std::vector<VectorXd> parse_vector_list(const std::string& s, int len, const std::string& what) {
  std::vector<VectorXd> out;
  for (const auto& item : split(s, ';'))
    if (!item.empty()) out.push_back(parse_vector(item, len, what));
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

MapField parse_map(const std::string& src, const Problem& p, const std::string& what) {
  if (src.empty()) throw InputError("--" + what + " is required for this command");
  return MapField::parse(split(src, ';'), p.n, p.N);
}

json node_json(const DomainBox& box, NodeIndex node) {
  return json{{"node", node}, {"x", to_json(box.coordinates(node))}};
}

json verdict_json(const Verdict& v) {
  json j{{"pass", v.pass},
         {"worst_violation", v.worst_violation},
         {"tolerance", v.tolerance},
         {"trials", v.trials},
         {"competitors", v.competitors},
         {"vacuous", v.vacuous}};
  if (v.witness) {
    const VariationWitness& w = *v.witness;
    json wj{{"family", variation_kind_name(w.kind)},
            {"trial", w.trial},
            {"scale", w.scale},
            {"phi", w.phi},
            {"base_energy", w.base_energy},
            {"competitor_energy", w.competitor_energy}};
    if (w.direction.size()) wj["direction"] = to_json(w.direction);
    if (w.center.size()) {
      wj["center"] = to_json(w.center);
      wj["radius"] = w.radius;
    }
    j["witness"] = wj;
  } else {
    j["witness"] = nullptr;
  }
  if (v.vacuous) j["admissibility_defect"] = v.admissibility_defect;
  return j;
}

std::vector<EvalSite> sites(const Params& prm, const Problem& p) {
  std::vector<EvalSite> s;
  if (prm.points == "grid") {
    for (NodeIndex node : p.omega.interior()) s.push_back(EvalSite::at_node(p.domain, node));
    return s;
  }
  for (const VectorXd& x : parse_vector_list(prm.points, p.n, "--points")) {
    const long node = p.domain.find_node(x);
    s.push_back(node >= 0 ? EvalSite::at_node(p.domain, static_cast<NodeIndex>(node)) : EvalSite::at(x));
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

bool command_results(const Params& prm, const Problem& p, json& res, json& params) {
  const std::string& cmd = prm.command;
  const Subdomain& omega = p.omega;
  const DomainBox& box = p.domain;

  if (cmd == "parse-check") {
    res = {{"n", p.n},
           {"N", p.N},
           {"H", p.H.describe()},
           {"u", p.u.describe()},
           {"nodes", omega.closure().size()},
           {"interior_nodes", omega.interior().size()},
           {"boundary_nodes", omega.boundary().size()},
           {"declared_singular", p.declared_singular.size()},
           {"detected_singular", p.detected_singular.size()}};
    return true;
  }
  if (cmd == "energy") {
    res = {{"sup_energy", sup_energy(p.u, p.H, omega)}};
    return true;
  }
  if (cmd == "argmax") {
    params["delta"] = prm.delta;
    const ArgmaxSet a = argmax_set(p.u, p.H, omega, prm.delta);
    json nodes = json::array();
    for (std::size_t k = 0; k < a.nodes.size(); ++k) {
      json nj = node_json(box, a.nodes[k]);
      nj["value"] = a.values[k];
      nodes.push_back(nj);
    }
    res = {{"sup_value", a.sup_value}, {"delta", a.delta}, {"count", a.nodes.size()}, {"nodes", nodes}};
    return true;
  }
  if (cmd == "danskin") {
    params["phi"] = prm.phi;
    params["delta"] = prm.delta;
    const DanskinResult d = danskin_both(p.u, p.H, parse_map(prm.phi, p, "phi"), omega, prm.delta);
    res = {{"plus", d.plus},
           {"minus", d.minus},
           {"plus_at", node_json(box, d.plus_node)},
           {"minus_at", node_json(box, d.minus_node)},
           {"argmax_size", d.argmax.nodes.size()}};
    return true;
  }
  if (cmd == "residual") {
    if (prm.variant != "reduced" && prm.variant != "full") throw InputError("--variant must be reduced or full");
    const double tol = prm.tol >= 0.0 ? prm.tol : 1e-8;
    params["variant"] = prm.variant;
    params["points"] = prm.points;
    params["tol"] = tol;
    OperatorOptions ops;
    ops.variant = prm.variant == "full" ? Variant::Full : Variant::Reduced;
    json pts = json::array();
    double worst = 0.0;
    bool flagged = false;
    for (const EvalSite& s : sites(prm, p)) {
      const AronssonResidual r = aronsson_residual(p.u, p.H, s, ops);
      json pj{{"x", to_json(s.x)},
              {"total_norm", r.total_norm},
              {"tangential_norm", r.tangential_norm},
              {"normal_norm", r.normal_norm},
              {"rank", r.rank},
              {"rank_discontinuity", r.rank_discontinuity}};
      if (s.on_grid()) pj["node"] = s.node;
      pts.push_back(pj);
      worst = std::max(worst, r.total_norm);
      flagged = flagged || r.rank_discontinuity;
    }
    res = {{"max_total_norm", worst}, {"rank_discontinuity_seen", flagged}, {"points", pts}};
    return worst <= tol;
  }
  if (cmd == "flow") {
    const VectorXd x0 = parse_vector(prm.x0, p.n, "--x0");
    const VectorXd xi = prm.xi.empty() ? VectorXd::Unit(p.N, 0) : parse_vector(prm.xi, p.N, "--xi");
    FlowOptions fo;
    fo.dt = prm.dt;
    fo.t_max = prm.t_max;
    fo.c0 = prm.c;
    params["x0"] = to_json(x0);
    params["xi"] = to_json(xi);
    params["dt"] = prm.dt;
    params["t_max"] = prm.t_max;
    const Trajectory tr = integrate_flow(p.u, p.H, x0, xi, omega, fo);
    const FlowIdentityReport id = check_flow_identities(tr, p.u, p.H, xi, prm.c);
    const ExitBound b = exit_time_bound(p.u, p.H, xi, omega, prm.c);
    res = {{"steps", tr.times.size() - 1},
           {"exited", tr.exited},
           {"exit_time", tr.exit_time ? json(*tr.exit_time) : json(nullptr)},
           {"exit_point", tr.exit_point ? to_json(*tr.exit_point) : json(nullptr)},
           {"H_start", tr.H_values.front()},
           {"H_end", tr.H_values.back()},
           {"drift_rate", id.drift_rate},
           {"energy_derivative_defect", id.energy_derivative_defect},
           {"monotonicity_margin", id.monotonicity_margin},
           {"exit_bound", b.estimable ? json(b.bound) : json(nullptr)},
           {"c1", b.c1}};
    if (!prm.out.empty()) write_text(std::filesystem::path(prm.out) / "trajectory.csv", trajectory_csv(tr));
    return tr.exited;
  }
  if (cmd == "maxmin") {
    const MaxMinReport r = verify_maxmin(p.u, p.H, omega);
    res = {{"sup_interior", r.sup_interior},  {"max_boundary", r.max_boundary},
           {"inf_interior", r.inf_interior},  {"min_boundary", r.min_boundary},
           {"tol_grid", r.tol_grid},          {"max_principle", r.max_principle},
           {"min_principle", r.min_principle}, {"pass", r.pass}};
    return r.pass;
  }
  VariationOptions vo;
  vo.trials = prm.trials;
  vo.seed = prm.seed;
  vo.amplitude = prm.amplitude;
  vo.tol = prm.tol;
  if (cmd == "verify-absolute" || cmd == "verify-rank-one" || cmd == "verify-normal") {
    params["trials"] = prm.trials;
    params["seed"] = prm.seed;
    params["amplitude"] = prm.amplitude;
    params["tol"] = prm.tol;
    Verdict v;
    if (cmd == "verify-absolute") {
      v = absolute_minimiser_test(p.u, p.H, omega, vo);
    } else if (cmd == "verify-rank-one") {
      std::vector<VectorXd> dirs;
      if (prm.directions.empty())
        for (int a = 0; a < p.N; ++a) dirs.push_back(VectorXd::Unit(p.N, a));
      else
        dirs = parse_vector_list(prm.directions, p.N, "--directions");
      json dj = json::array();
      for (const auto& d : dirs) dj.push_back(to_json(d));
      params["directions"] = dj;
      v = rank_one_test(p.u, p.H, omega, dirs, vo);
    } else {
      v = normal_variation_test(p.u, p.H, omega, vo);
    }
    res = verdict_json(v);
    return v.pass;
  }
  if (cmd == "stationarity") {
    params["delta"] = prm.delta;
    params["tol"] = prm.tol;
    std::vector<MapField> psis;
    if (!prm.psi.empty()) {
      psis.push_back(parse_map(prm.psi, p, "psi"));
      params["psi"] = prm.psi;
    } else {
      psis = sine_test_basis(omega, p.N, prm.basis);
      params["basis"] = prm.basis;
    }
    json per = json::array();
    bool all_ok = true;
    std::size_t k_total = 0;
    for (const MapField& psi : psis) {
      const StationarityReport r = stationarity_scan(p.u, p.H, omega, psi, prm.delta, prm.tol);
      json K = json::array();
      for (NodeIndex node : r.K) K.push_back(node_json(box, node));
      per.push_back({{"psi", psi.describe()},
                     {"max_val", r.max_val},
                     {"min_val", r.min_val},
                     {"statement_II", r.statement_II},
                     {"statement_III", r.statement_III},
                     {"K", K},
                     {"argmax_size", r.argmax_size},
                     {"k_fraction", r.k_fraction}});
      all_ok = all_ok && r.statement_II && r.statement_III;
      k_total += r.K.size();
    }
    res = {{"all_pass", all_ok}, {"per_psi", per}};
    return all_ok;
  }
  if (cmd == "measure") {
    params["measure"] = prm.measure;
    params["basis"] = prm.basis;
    params["delta"] = prm.delta;
    DiscreteMeasure sigma;
    if (prm.measure == "uniform") {
      sigma = DiscreteMeasure::uniform(omega);
    } else if (prm.measure.rfind("dirac:", 0) == 0) {
      const VectorXd x = parse_vector(prm.measure.substr(6), p.n, "--measure dirac");
      const long node = box.find_node(x);
      if (node < 0) throw InputError("--measure dirac point is not a grid node");
      sigma = DiscreteMeasure::dirac(static_cast<NodeIndex>(node));
    } else {
      throw InputError("--measure must be 'uniform' or 'dirac:<x1,..,xn>'");
    }
    std::vector<MapField> psis;
    if (!prm.psi.empty())
      psis.push_back(parse_map(prm.psi, p, "psi"));
    else
      psis = sine_test_basis(omega, p.N, prm.basis);
    const double tol = prm.tol >= 0.0 ? prm.tol : 1e-10;
    const MeasureResidual r = measure_divergence_residual(p.u, p.H, omega, sigma, psis, prm.delta, tol);
    res = {{"worst", r.worst}, {"scale", r.scale}, {"per_psi", r.per_psi}, {"atoms", sigma.atoms.size()}, {"pass", r.pass}};
    return r.pass;
  }
  if (cmd == "lp") {
    std::vector<double> schedule;
    for (const auto& s : split(prm.p_schedule, ',')) {
      try {
        schedule.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw InputError("--p-schedule: bad number '" + s + "'");
      }
    }
    params["p_schedule"] = schedule;
    LpProblem prob;
    prob.H = p.H;
    prob.omega = omega;
    prob.boundary = p.u;
    if (prm.tol > 0.0) prob.opts.tol_opt = prm.tol;
    const auto stages = p_continuation(prob, schedule);
    json st = json::array();
    bool ok = true;
    for (const auto& s : stages) {
      st.push_back({{"p", s.p},
                    {"E_inf", s.E_inf},
                    {"aronsson_residual_norm", s.aronsson_residual_norm},
                    {"p_energy", s.result.p_energy},
                    {"grad_norm", s.result.grad_norm},
                    {"iters", s.result.iters},
                    {"converged", s.result.converged}});
      ok = ok && s.result.converged;
      if (!prm.out.empty()) {
        std::ostringstream name;
        name << "lp_p" << s.p << ".csv";
        write_grid_csv(std::filesystem::path(prm.out) / name.str(), box, *s.result.u.samples());
      }
    }
    res = {{"stages", st}};
    return ok;
  }
  throw InputError("unknown command " + cmd);
}

const char* const kCommands[] = {"parse-check", "energy", "argmax", "danskin", "residual",
                                 "flow", "maxmin", "verify-absolute", "verify-rank-one",
                                 "verify-normal", "stationarity", "measure", "lp"};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Params prm;
  CLI::App app{"Numerical checks for L-infinity variational problems", "linfvar"};
  app.require_subcommand(1, 1);
  app.add_option("--problem", prm.problem, "problem file (JSON)");
  app.add_option("--seed", prm.seed, "random seed");
  app.add_option("--delta", prm.delta, "argmax tolerance (default 1e-7 (1 + sup))");
  app.add_option("--tol", prm.tol, "verdict tolerance (command-specific default)");
  app.add_option("--p-schedule", prm.p_schedule, "comma-separated p values for lp");
  app.add_option("--out", prm.out, "directory for report.json and CSV artifacts");
  app.add_option("--points", prm.points, "'grid' or 'x1,..,xn;x1,..,xn'");
  app.add_option("--phi", prm.phi, "variation components separated by ';'");
  app.add_option("--psi", prm.psi, "test field components separated by ';'");
  app.add_option("--x0", prm.x0, "flow start point");
  app.add_option("--xi", prm.xi, "flow direction (default e1)");
  app.add_option("--dt", prm.dt, "flow step");
  app.add_option("--t-max", prm.t_max, "flow time limit");
  app.add_option("--c", prm.c, "structural constant for flow checks");
  app.add_option("--trials", prm.trials, "random variations per test");
  app.add_option("--amplitude", prm.amplitude, "variation gradient amplitude");
  app.add_option("--directions", prm.directions, "rank-one directions 'a,b;c,d'");
  app.add_option("--measure", prm.measure, "'uniform' or 'dirac:x1,..,xn'");
  app.add_option("--basis", prm.basis, "size of the sine test basis");
  app.add_option("--variant", prm.variant, "residual projection: reduced or full");
  for (const char* name : kCommands) app.add_subcommand(name)->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("linfvar");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  prm.command = app.get_subcommands().front()->get_name();

  const auto start = std::chrono::steady_clock::now();
  json report{{"schema_version", 1}, {"command", prm.command}};
  json params{{"problem", prm.problem}};
  int code = 0;
  try {
    if (prm.problem.empty()) throw InputError("--problem is required");
    if (!prm.out.empty()) std::filesystem::create_directories(prm.out);
    const Problem p = load_problem(prm.problem);
    report["problem_digest"] = sha256_hex(p.canonical);
    json res;
    const bool pass = command_results(prm, p, res, params);
    report["results"] = res;
    report["summary"] = {{"pass", pass}};
    code = pass ? 0 : 1;
  } catch (const ParseError& e) {
    report["error"] = {{"kind", "parse"}, {"message", e.what()}, {"offset", e.offset()}};
    code = 2;
  } catch (const Error& e) {
    report["error"] = {{"kind", "input"}, {"message", e.what()}};
    code = 2;
  } catch (const nlohmann::json::exception& e) {
    report["error"] = {{"kind", "input"}, {"message", e.what()}};
    code = 2;
  } catch (const std::filesystem::filesystem_error& e) {
    report["error"] = {{"kind", "input"}, {"message", e.what()}};
    code = 2;
  }
  report["parameters"] = params;
  report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (code == 2) {
    report["summary"] = {{"pass", false}};
    err << "error: " << report["error"]["message"].get<std::string>() << "\n";
  }
  const std::string text = report.dump(2);
  out << text << "\n";
  if (!prm.out.empty() && code != 2) write_text(std::filesystem::path(prm.out) / "report.json", text + "\n");
  return code;
}

}  // namespace linfvar::cli
