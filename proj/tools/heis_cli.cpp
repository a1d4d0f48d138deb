// heis: command-line front end for the heis library.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <heis/heis.hpp>

using namespace heis;

namespace {

std::vector<double> parse_list(const std::string& s, std::size_t n, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw invalid_input(std::string(what) + ": cannot parse '" + item + "' as a number");
    }
  }
  if (n && out.size() != n)
    throw invalid_input(std::string(what) + ": expected " + std::to_string(n) + " comma-separated numbers");
  return out;
}

LogDerivState parse_state(const std::string& s) {
  const auto v = parse_list(s, 2, "--state");
  return {v[0], v[1]};
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw invalid_input("grid needs at least one point");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return out;
}

std::vector<double> parse_grid(const std::string& s, const char* what) {
  const auto v = parse_list(s, 3, what);
  if (v[2] < 1 || v[2] != std::floor(v[2])) throw invalid_input(std::string(what) + ": count must be a positive integer");
  return linspace(v[0], v[1], static_cast<int>(v[2]));
}

// Finite window inside a (possibly unbounded) domain for sampling.
Interval sampling_window(const Interval& d) {
  if (std::isfinite(d.lo) && std::isfinite(d.hi)) {
    const double m = 0.05 * (d.hi - d.lo);
    return {d.lo + m, d.hi - m};
  }
  if (std::isfinite(d.lo)) return {d.lo + 0.1, d.lo + 3};
  if (std::isfinite(d.hi)) return {d.hi - 3, d.hi - 0.1};
  return {-2, 2};
}

struct Common {
  std::string format = "csv";
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--out", c.out, "Output path (stdout when omitted)");
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string profile;
  double Lambda = -6;
  int points = 50;
  std::uint64_t seed = 1;
  double step = 0;
  std::string trange;
  Common io;
};

int run_verify(const VerifyArgs& a) {
  const MetricProfile prof = load_profile(a.profile);
  Interval w = a.trange.empty() ? sampling_window(prof.domain()) : [&] {
    const auto v = parse_list(a.trange, 2, "--trange");
    return Interval{v[0], v[1]};
  }();
  if (a.points < 1) throw invalid_input("--points must be positive");
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> ut(w.lo, w.hi), ux(-1, 1);
  Table t;
  t.columns = {"t", "x", "y", "einstein_residual", "fd_max_diff", "fd_precision_warning"};
  double max_res = 0, max_fd = 0;
  bool warned = false;
  for (int i = 0; i < a.points; ++i) {
    const SpacetimePoint p{ut(rng), {ux(rng), ux(rng), ux(rng)}};
    const double res = einstein_residual(prof, a.Lambda, p);
    const FdRicci fd = a.step > 0 ? ricci_fd_oracle(prof, p, a.step) : ricci_fd_oracle(prof, p);
    const double diff = max_abs(fd.components.ricci - ricci_analytic(prof, p).ricci);
    max_res = std::max(max_res, res);
    max_fd = std::max(max_fd, diff);
    warned = warned || fd.precision_warning;
    t.rows.push_back({p.t, p.h.x, p.h.y, res, diff, fd.precision_warning ? 1.0 : 0.0});
  }
  if (!a.io.out.empty()) emit(t, format_from_string(a.io.format), a.io.out, std::cout);
  nlohmann::ordered_json j;
  j["profile"] = a.profile;
  j["Lambda"] = a.Lambda;
  j["points"] = a.points;
  j["max_einstein_residual"] = max_res;
  j["max_fd_diff"] = max_fd;
  j["fd_precision_warning"] = warned;
  print_json(j);
  return 0;
}

// ---------------------------------------------------------------------------

struct FlowArgs {
  double Lambda = -6;
  std::string state;
  std::string tspan = "0,1";
  double tol = 1e-10;
  Common io;
};

int run_flow(const FlowArgs& a) {
  const auto span = parse_list(a.tspan, 2, "--tspan");
  FlowParams p;
  p.Lambda = a.Lambda;
  p.tolerance = a.tol;
  const FlowTrajectory tr = integrate_flow(parse_state(a.state), {span[0], span[1]}, p);
  emit(trajectory_table(tr), format_from_string(a.io.format), a.io.out, std::cout);
  return 0;
}

// ---------------------------------------------------------------------------

struct PortraitArgs {
  double Lambda = -6;
  std::string lambda_grid = "-10,10,21";
  std::string mu_grid = "-10,10,21";
  double duration = 1;
  double tol = 1e-10;
  unsigned threads = 0;
  Common io;
};

// Branch tag from the closed-form tests only (no domain integration).
std::string quick_tag(const LogDerivState& s, double Lambda) {
  if (Lambda > 0) return to_string(Branch::NoEinsteinMetric);
  if (!is_riemannian(s, Lambda)) return to_string(Branch::NonRiemannian);
  return to_string(detail::match_branch(s, Lambda).branch);
}

int run_portrait(const PortraitArgs& a) {
  const auto ls = parse_grid(a.lambda_grid, "--lambda-grid"), ms = parse_grid(a.mu_grid, "--mu-grid");
  if (!(a.duration > 0)) throw invalid_input("--duration must be positive");
  const std::size_t n = ls.size() * ms.size();
  std::vector<std::vector<Cell>> rows(n);
  std::vector<std::string> errors(n);
  auto cell = [&](std::size_t k) {
    const LogDerivState s{ls[k / ms.size()], ms[k % ms.size()]};
    const FlowInvariants inv = invariants(s, a.Lambda);
    std::string tag, term = "none";
    double t_end = 0, l_end = s.lambda, m_end = s.mu;
    try {
      tag = quick_tag(s, a.Lambda);
      if (a.Lambda <= 0 && is_riemannian(s, a.Lambda)) {
        FlowParams p;
        p.Lambda = a.Lambda;
        p.tolerance = a.tol;
        const FlowTrajectory tr = integrate_flow(s, {0.0, a.duration}, p);
        term = to_string(tr.termination);
        t_end = tr.t_stop;
        const LogDerivState e = tr.state_at(tr.t_stop);
        l_end = e.lambda;
        m_end = e.mu;
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
    rows[k] = {s.lambda, s.mu, inv.K ? *inv.K : std::nan(""), inv.sign_quantity, tag, term, t_end, l_end, m_end};
  };
  unsigned nt = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, n));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < n; k += nt) cell(k);
    });
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (!e.empty()) throw numerical_failure("portrait: " + e);
  Table t;
  t.columns = {"lambda", "mu", "K", "sign_quantity", "branch", "termination", "t_end", "lambda_end", "mu_end"};
  t.rows = std::move(rows);
  emit(t, format_from_string(a.io.format), a.io.out, std::cout);
  return 0;
}

// ---------------------------------------------------------------------------

struct FamilyArgs {
  std::string name;
  double mu = 2, C = 1, b1 = 3, t0 = 0, c = 1, rho_ref = 1, t_ref = 0, Lambda = -6;
  int halfline = 1, mu_sign = 1, sign = 1;
  std::string sheet = "lower", variant = "sol4";
  std::string t_list, t_grid;
  std::string profile_out;
  Common io;
};

int run_family(const FamilyArgs& a) {
  std::vector<double> ts;
  if (!a.t_list.empty()) ts = parse_list(a.t_list, 0, "--t");
  if (!a.t_grid.empty()) {
    const auto g = parse_grid(a.t_grid, "--tgrid");
    ts.insert(ts.end(), g.begin(), g.end());
  }
  if (ts.empty()) throw invalid_input("family: give sample points with --t or --tgrid");

  std::optional<MetricProfile> prof;
  double Lambda = -6;
  std::optional<UHMFamily> uhm;
  if (a.name == "stationary") {
    StationaryFamily f(a.mu, a.C);
    prof = stationary_profile(f);
    Lambda = f.Lambda();
  } else if (a.name == "hk") {
    prof = hyperkahler_profile(HyperKahlerFamily(a.b1, a.halfline));
    Lambda = 0;
  } else if (a.name == "ricciflat") {
    const RicciFlatBranch br(a.C, a.t0, detail::sheet_from_string(a.sheet), a.mu_sign);
    const Interval d = ricci_flat_domain(br);
    double ref = ts.front();
    if (!d.contains(ref)) throw invalid_input("family ricciflat: first sample lies outside the domain");
    prof = ricci_flat_profile(br, ref);
    Lambda = 0;
  } else if (a.name == "uhm") {
    uhm = UHMFamily(a.c, a.rho_ref, a.t_ref);
    prof = uhm_profile(*uhm);
    Lambda = UHMFamily::Lambda();
  } else if (a.name == "sigma") {
    const SigmaBranch br(detail::variant_from_string(a.variant), a.t0, a.sign, a.Lambda);
    Interval d{};
    if (br.variant != SigmaVariant::Sol4) d = ts.front() > br.t0 ? Interval{br.t0, inf} : Interval{-inf, br.t0};
    for (double t : ts)
      if (!d.contains(t)) throw invalid_input("family sigma: samples must lie on one side of t0");
    prof = sigma_branch_profile(br, d, ts.front());
    Lambda = br.Lambda;
  } else {
    throw invalid_input("unknown family '" + a.name + "' (expected stationary|hk|ricciflat|uhm|sigma)");
  }
  if (!a.profile_out.empty()) {
    std::ofstream o(a.profile_out);
    if (!o) throw std::runtime_error("cannot write '" + a.profile_out + "'");
    o << prof->descriptor().dump(2) << '\n';
  }
  Table t;
  t.columns = trajectory_columns();
  for (const char* c : {"a", "b", "full_system_residual"}) t.columns.push_back(c);
  if (uhm) t.columns.push_back("rho");
  for (double time : ts) {
    const ProfileJet j = prof->jet(time);
    const LogDerivState s{j.da / j.a, j.db / j.b};
    auto row = trajectory_row(time, s, Lambda);
    row.insert(row.end(), {j.a, j.b, full_system_residual(*prof, Lambda, time)});
    if (uhm) row.push_back(uhm_rho(*uhm, time));
    t.rows.push_back(std::move(row));
  }
  emit(t, format_from_string(a.io.format), a.io.out, std::cout);
  return 0;
}

// ---------------------------------------------------------------------------

struct StateArgs {
  double Lambda = -6;
  std::string state;
  double horizon = 60;
  double tol = 1e-10;
};

int run_domain(const StateArgs& a) {
  const DomainEstimate d = maximal_domain(parse_state(a.state), a.Lambda, {a.horizon, a.tol});
  print_json(domain_estimate_to_json(d));
  return 0;
}

int run_classify(const StateArgs& a) {
  print_json(report_to_json(classify_state(parse_state(a.state), a.Lambda, {a.horizon, a.tol})));
  return 0;
}

// ---------------------------------------------------------------------------

struct SpecfunArgs {
  std::string fn;
  double x = 0, a = -0.75, b = 0.5, p = 0.5, q = 0.5;
};

int run_specfun(const SpecfunArgs& s) {
  using namespace specfun;
  const Hyp2F1Params hp{s.a, s.b};
  double v;
  if (s.fn == "gamma") v = gamma_fn(s.x);
  else if (s.fn == "rgamma") v = rgamma(s.x);
  else if (s.fn == "hyp2f1") v = hyp2f1_shifted(hp, s.x);
  else if (s.fn == "hyp2f1-derivative") v = hyp2f1_derivative(hp, s.x);
  else if (s.fn == "hyp2f1-asymptotic") v = hyp2f1_asymptotic(hp, s.x);
  else if (s.fn == "incbeta") v = incomplete_beta(s.x, s.p, s.q);
  else throw invalid_input("unknown function '" + s.fn + "'");
  nlohmann::ordered_json j;
  j["fn"] = s.fn;
  j["x"] = s.x;
  if (s.fn.rfind("hyp2f1", 0) == 0) {
    j["a"] = s.a;
    j["b"] = s.b;
    j["c"] = hp.c();
  }
  if (s.fn == "incbeta") {
    j["p"] = s.p;
    j["q"] = s.q;
  }
  j["value"] = v;
  print_json(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Einstein metrics with maximal Heisenberg symmetry: verification, flow, families, classification"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Einstein residual and finite-difference Ricci check of a profile");
  verify->add_option("--profile", va.profile, "Profile JSON file")->required();
  verify->add_option("--lambda", va.Lambda, "Einstein constant");
  verify->add_option("--points", va.points, "Number of sample points");
  verify->add_option("--seed", va.seed, "Seed for the sample points");
  verify->add_option("--step", va.step, "Finite-difference step (default 1e-4 max(1,|t|))");
  verify->add_option("--trange", va.trange, "Sampling window lo,hi for t");
  add_common(verify, va.io);

  FlowArgs fa;
  auto* flow = app.add_subcommand("flow", "Integrate the (λ, μ) flow and export the trajectory");
  flow->add_option("--lambda", fa.Lambda, "Einstein constant");
  flow->add_option("--state", fa.state, "Initial state λ,μ")->required();
  flow->add_option("--tspan", fa.tspan, "t0,t1");
  flow->add_option("--tol", fa.tol, "Integrator tolerance (blow-up threshold is 1/tol)");
  add_common(flow, fa.io);

  PortraitArgs pa;
  auto* portrait = app.add_subcommand("portrait", "Grid of short integrations with K and branch tags");
  portrait->add_option("--lambda", pa.Lambda, "Einstein constant");
  portrait->add_option("--lambda-grid", pa.lambda_grid, "lo,hi,n for λ");
  portrait->add_option("--mu-grid", pa.mu_grid, "lo,hi,n for μ");
  portrait->add_option("--duration", pa.duration, "Integration length per cell");
  portrait->add_option("--tol", pa.tol, "Integrator tolerance");
  portrait->add_option("--threads", pa.threads, "Worker threads (0: hardware concurrency)");
  add_common(portrait, pa.io);

  FamilyArgs fm;
  auto* family = app.add_subcommand("family", "Evaluate a closed-form family at sample points");
  family->add_option("name", fm.name, "stationary|hk|ricciflat|uhm|sigma")->required();
  family->add_option("--mu", fm.mu, "stationary: μ");
  family->add_option("--C", fm.C, "stationary: scale C; ricciflat: constant C");
  family->add_option("--b1", fm.b1, "hk: b1 (a1 = b1²/9)");
  family->add_option("--halfline", fm.halfline, "hk: +1 for t > 0, -1 for t < 0");
  family->add_option("--t0", fm.t0, "ricciflat/sigma: t0");
  family->add_option("--branch", fm.sheet, "ricciflat: upper|lower");
  family->add_option("--mu-sign", fm.mu_sign, "ricciflat: sign of μ");
  family->add_option("--c", fm.c, "uhm: c");
  family->add_option("--rho-ref", fm.rho_ref, "uhm: ρ at t_ref");
  family->add_option("--t-ref", fm.t_ref, "uhm: reference time");
  family->add_option("--variant", fm.variant, "sigma: sol1|sol2|sol3|sol4");
  family->add_option("--sign", fm.sign, "sigma: branch sign");
  family->add_option("--lambda", fm.Lambda, "sigma: Einstein constant");
  family->add_option("--t", fm.t_list, "Comma-separated sample times");
  family->add_option("--tgrid", fm.t_grid, "lo,hi,n sample grid");
  family->add_option("--profile-out", fm.profile_out, "Also write the profile JSON descriptor here");
  add_common(family, fm.io);

  StateArgs da;
  auto* domain = app.add_subcommand("domain", "Maximal domain of the solution through a state (state at t = 0)");
  domain->add_option("--lambda", da.Lambda, "Einstein constant");
  domain->add_option("--state", da.state, "State λ,μ")->required();
  domain->add_option("--horizon", da.horizon, "Integration horizon in each direction");
  domain->add_option("--tol", da.tol, "Integrator tolerance");

  StateArgs ca;
  auto* classify = app.add_subcommand("classify", "Classification report for a state");
  classify->add_option("--lambda", ca.Lambda, "Einstein constant");
  classify->add_option("--state", ca.state, "State λ,μ")->required();
  classify->add_option("--horizon", ca.horizon, "Integration horizon in each direction");
  classify->add_option("--tol", ca.tol, "Integrator tolerance");

  SpecfunArgs sa;
  auto* spec = app.add_subcommand("specfun", "Point evaluation of the special functions");
  spec->add_option("fn", sa.fn, "gamma|rgamma|hyp2f1|hyp2f1-derivative|hyp2f1-asymptotic|incbeta")->required();
  spec->add_option("--x", sa.x, "Argument")->required();
  spec->add_option("--a", sa.a, "hyp2f1: a (c = a + 1)");
  spec->add_option("--b", sa.b, "hyp2f1: b");
  spec->add_option("--p", sa.p, "incbeta: p");
  spec->add_option("--q", sa.q, "incbeta: q");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*verify) return run_verify(va);
    if (*flow) return run_flow(fa);
    if (*portrait) return run_portrait(pa);
    if (*family) return run_family(fm);
    if (*domain) return run_domain(da);
    if (*classify) return run_classify(ca);
    if (*spec) return run_specfun(sa);
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const numerical_failure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
