// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "quadcurl/verify.hpp"

namespace quadcurl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kMaxCliSubdivisions = 12;

namespace cli_detail {

/// Write to a sibling temporary and rename over the target.
inline void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move output into place at " + path + ": " + ec.message());
  }
}

/// Flat key=value file; '#' starts a comment. Keys are flag names without dashes.
inline std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("--config", "cannot read " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

/// Splice config entries in as flags unless the command line already sets them.
inline std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string config;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      config = args[++i];
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      config = a.substr(9);
      continue;
    }
    if (a.rfind("--", 0) == 0) {
      const auto eq = a.find('=');
      given.insert(eq == std::string::npos ? a.substr(2) : a.substr(2, eq - 2));
    }
    out.push_back(a);
  }
  if (config.empty()) return out;
  for (const auto& [key, value] : read_config(config)) {
    if (given.count(key)) continue;
    if (value == "true" || value == "on")
      out.push_back("--" + key);
    else if (value != "false" && value != "off")
      out.push_back("--" + key + "=" + value);
  }
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  if (std::isnan(v))
    os << "nan";
  else
    os << v;
  return os.str();
}

inline std::vector<int> parse_ns(const std::string& text) {
  std::vector<int> ns;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--ns", "not an integer: " + item);
    }
    if (pos != item.size()) throw CLI::ValidationError("--ns", "not an integer: " + item);
    if (v < 1 || v > kMaxCliSubdivisions)
      throw CLI::ValidationError("--ns", "subdivisions must lie in [1, " + std::to_string(kMaxCliSubdivisions) + "]");
    if (!ns.empty() && v <= ns.back()) throw CLI::ValidationError("--ns", "subdivisions must strictly increase");
    ns.push_back(v);
  }
  if (ns.empty()) throw CLI::ValidationError("--ns", "empty list");
  return ns;
}

struct Options {
  int n = 2;
  std::string ns;
  int k = 2;
  std::string problem = "a";
  std::string quarto = "standard";
  bool monolithic = false;
  bool check_rates = false;
  std::string out;
  double rel_tol = kDefaultRelTol;
  int threads = 1;
};

struct Bracket {
  std::vector<std::string> columns;
  double lo, hi;
};

/// Rate brackets of the manufactured study, judged on the finest pair.
inline std::vector<Bracket> rate_brackets(Problem p) {
  if (p == Problem::A)
    return {{{"err_r_curl"}, 0.7, 1.5},
            {{"err_phi_h1", "err_p_l2"}, 0.7, 1.5},
            {{"err_phi_l2"}, 1.6, 2.5},
            {{"err_u_curl"}, 1.6, 2.5}};
  return {{{"err_phi_h1", "err_p_l2"}, 0.7, 1.5}, {{"err_phi_l2"}, 1.6, 2.5}, {{"err_u_curl", "err_r_curl"}, 1.6, 2.5}};
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

/// Invariant columns: multipliers of the manufactured case vanish.
inline bool invariants_hold(const RateRow& r, Problem p, std::ostream& out) {
  if (!r.error.empty()) {
    out << "n=" << r.n << ": solve failed: " << r.error << '\n';
    return false;
  }
  bool ok = r.value("norm_m") <= 1e-8 * r.f_norm;
  if (p == Problem::A) ok = ok && r.value("norm_g") <= 1e-8 * r.f_norm;
  if (!ok) out << "n=" << r.n << ": multiplier invariant violated\n";
  return ok;
}

inline int cmd_mesh_info(const Options& o, std::ostream& out) {
  const Mesh mesh = build_box_mesh(o.n);
  const MeshCounts c = count_entities(mesh);
  out << "vertices:" << c.vertices << " edges:" << c.edges << " faces:" << c.faces << " cells:" << c.cells << '\n';
  if (!o.out.empty()) {
    std::ostringstream os;
    write_mesh_text(os, mesh);
    write_atomically(o.out, os.str());
  }
  return kExitOk;
}

inline void print_row(const RateRow& r, std::ostream& out) {
  out << "n: " << r.n << "\nh: " << format_double(r.h) << '\n';
  const auto& cols = rate_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << cols[i] << ": " << format_double(r.values[i]) << '\n';
  out << "f_l2: " << format_double(r.f_norm) << '\n';
}

inline int cmd_solve_a(const Options& o, std::ostream& out) {
  if (o.quarto != "standard" && o.quarto != "symmetric")
    throw CLI::ValidationError("--quarto", "expected standard or symmetric");
  const QuartoA q = o.quarto == "standard" ? QuartoA::standard() : QuartoA::symmetric(o.k);
  if (o.monolithic && !q.is_symmetric()) throw CLI::ValidationError("--monolithic", "requires --quarto symmetric");
  const ManufacturedCase mc = manufactured_solution(Problem::A);
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(o.n));
  SolveOptions so;
  so.rel_tol = o.rel_tol;
  so = manufactured_options(mc, so);
  const SolutionA s = o.monolithic ? solve_problem_A_monolithic(mesh, q, mc.f_exact(), so)
                                   : solve_problem_A(mesh, q, mc.f_exact(), so);
  const RateRow row = manufactured_errors(s, mc, *mesh);
  print_row(row, out);
  for (std::size_t i = 0; i < s.residuals.size(); ++i)
    out << "residual_" << i + 1 << ": " << format_double(s.residuals[i]) << '\n';
  if (!o.out.empty()) {
    std::ostringstream os;
    write_solution(os, s);
    write_atomically(o.out, os.str());
  }
  return invariants_hold(row, Problem::A, out) ? kExitOk : kExitAssertion;
}

inline int cmd_solve_b(const Options& o, std::ostream& out) {
  const ManufacturedCase mc = manufactured_solution(Problem::B);
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(o.n));
  SolveOptions so;
  so.rel_tol = o.rel_tol;
  const SolutionB s = solve_problem_B(mesh, QuartoB::standard(), mc.f_exact(), manufactured_options(mc, so));
  const RateRow row = manufactured_errors(s, mc, *mesh);
  print_row(row, out);
  out << "residual: " << format_double(s.residual) << '\n';
  if (!o.out.empty()) {
    std::ostringstream os;
    write_solution(os, s);
    write_atomically(o.out, os.str());
  }
  return invariants_hold(row, Problem::B, out) ? kExitOk : kExitAssertion;
}

inline int cmd_convergence(const Options& o, std::ostream& out) {
  Problem p;
  if (o.problem == "a" || o.problem == "A")
    p = Problem::A;
  else if (o.problem == "b" || o.problem == "B")
    p = Problem::B;
  else
    throw CLI::ValidationError("--problem", "expected a or b");
  const std::vector<int> ns = parse_ns(o.ns.empty() ? "2,4" : o.ns);
  SolveOptions so;
  so.rel_tol = o.rel_tol;
  const RateTable t = run_convergence_study(p, ns, so);
  std::ostringstream csv;
  write_rate_table_csv(csv, t);
  if (o.out.empty())
    out << csv.str();
  else
    write_atomically(o.out, csv.str());

  bool ok = true;
  for (const auto& r : t.rows) ok = invariants_hold(r, p, out) && ok;
  if (o.check_rates) {
    if (t.rows.size() < 2) throw CLI::ValidationError("--check-rates", "needs at least two subdivisions");
    for (const Bracket& b : rate_brackets(p)) {
      const double rate = t.rates(b.columns).back();
      const bool in = rate >= b.lo && rate <= b.hi;
      out << "rate " << join(b.columns, "+") << ": " << format_double(rate) << " in [" << b.lo << ", " << b.hi
          << "]: " << (in ? "yes" : "no") << '\n';
      ok = ok && in;
    }
  }
  return ok ? kExitOk : kExitAssertion;
}

inline int cmd_infsup(const Options& o, std::ostream& out) {
  const std::vector<int> ns = parse_ns(o.ns.empty() ? "1,2,3,4" : o.ns);
  std::ostringstream csv;
  csv << "n,velocity_degree,infsup\n";
  std::vector<double> betas;
  for (int n : ns) {
    const double b = stokes_infsup(n, o.k);
    betas.push_back(b);
    csv << n << ',' << o.k << ',' << format_double(b) << '\n';
  }
  if (o.out.empty())
    out << csv.str();
  else
    write_atomically(o.out, csv.str());
  if (o.k != 2) return kExitOk;  // equal order is a diagnostic
  const auto [lo, hi] = std::minmax_element(betas.begin(), betas.end());
  const bool floor_ok = *lo >= 0.05;
  const bool spread_ok = *lo > 0.0 && (*hi - *lo) / *lo <= 0.2;
  out << "floor >= 0.05: " << (floor_ok ? "yes" : "no") << "\nspread <= 20%: " << (spread_ok ? "yes" : "no") << '\n';
  return floor_ok && spread_ok ? kExitOk : kExitAssertion;
}

inline int cmd_exact_sequence(const Options& o, std::ostream& out) {
  const std::vector<int> ns = parse_ns(o.ns.empty() ? "1,2,3" : o.ns);
  std::ostringstream csv;
  csv << "n,k,free_nedelec,free_lagrange,nullity,max_curl_grad,poincare,pass\n";
  bool ok = true;
  for (int n : ns) {
    const ExactSequenceReport r = check_exact_sequence(n, o.k);
    const PoincareReport pc = poincare_constant(n, o.k);
    csv << n << ',' << o.k << ',' << r.free_nedelec << ',' << r.free_lagrange << ',' << r.nullity << ','
        << format_double(r.max_curl_grad) << ',' << format_double(pc.constant) << ',' << (r.pass ? 1 : 0) << '\n';
    ok = ok && r.pass;
  }
  if (o.out.empty())
    out << csv.str();
  else
    write_atomically(o.out, csv.str());
  return ok ? kExitOk : kExitAssertion;
}

}  // namespace cli_detail

/// Command-line entry point; `args` excludes the program name.
/// Exit codes: 0 success, 1 failed assertion or solve, 2 usage error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Mixed finite element solver for quad-curl problems on the unit cube", "quadcurl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  Options o;
  std::string config;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output file (written atomically)");
    c->add_option("--config", config, "Flat key=value file; keys mirror flag names, flags win");
    c->add_option("--threads", o.threads, "Worker threads for factorization internals")->check(CLI::Range(1, 256));
  };
  auto n_opt = [&](CLI::App* c) {
    c->add_option("--n", o.n, "Subdivisions per axis")->check(CLI::Range(1, kMaxCliSubdivisions));
  };
  auto tol_opt = [&](CLI::App* c) {
    c->add_option("--rel-tol", o.rel_tol, "Relative residual tolerance of the linear solver")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* mesh = app.add_subcommand("mesh-info", "Entity counts of the Kuhn mesh of the unit cube");
  n_opt(mesh);
  common(mesh);

  CLI::App* sa = app.add_subcommand("solve-a", "Solve (curl)^4 u = f, div u = 0 for the manufactured case");
  n_opt(sa);
  tol_opt(sa);
  common(sa);
  sa->add_option("--quarto", o.quarto, "standard (N2/N1 pairs) or symmetric (both pairs of degree k)");
  sa->add_option("--k", o.k, "Degree of the symmetric quarto")->check(CLI::Range(1, 2));
  sa->add_flag("--monolithic", o.monolithic, "Solve the coupled six-field system in one factorization");

  CLI::App* sb = app.add_subcommand("solve-b", "Solve (curl)^4 u + u = f for the manufactured case");
  n_opt(sb);
  tol_opt(sb);
  common(sb);

  CLI::App* conv = app.add_subcommand("convergence", "Error table and observed orders for the manufactured case");
  conv->add_option("--problem", o.problem, "a or b");
  conv->add_option("--ns", o.ns, "Comma-separated, strictly increasing subdivisions (default 2,4)");
  conv->add_flag("--check-rates", o.check_rates, "Fail unless the finest-pair orders lie in the expected brackets");
  tol_opt(conv);
  common(conv);

  CLI::App* inf = app.add_subcommand("infsup", "Discrete Stokes inf-sup constants");
  inf->add_option("--ns", o.ns, "Subdivisions (default 1,2,3,4)");
  inf->add_option("--k", o.k, "Velocity degree: 2 Taylor-Hood, 1 equal order")->check(CLI::Range(1, 2));
  common(inf);

  CLI::App* ex = app.add_subcommand("exact-sequence", "Discrete exact sequence and Poincare constants");
  ex->add_option("--ns", o.ns, "Subdivisions (default 1,2,3)");
  ex->add_option("--k", o.k, "Element degree")->check(CLI::Range(1, 2));
  common(ex);

  try {
    std::vector<std::string> merged = merge_config(args);
    std::reverse(merged.begin(), merged.end());
    app.parse(merged);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  Eigen::setNbThreads(o.threads);
  try {
    if (*mesh) return cmd_mesh_info(o, out);
    if (*sa) return cmd_solve_a(o, out);
    if (*sb) return cmd_solve_b(o, out);
    if (*conv) return cmd_convergence(o, out);
    if (*inf) return cmd_infsup(o, out);
    if (*ex) return cmd_exact_sequence(o, out);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SolveError& e) {
    err << "solve failed: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitAssertion;
  }
  return kExitUsage;
}

}  // namespace quadcurl
