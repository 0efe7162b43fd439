#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fermiflux/fermiflux.hpp"

namespace ff = fermiflux;
using ff::csv::num;
using ff::MatC;

namespace {

struct ModelFlags {
  std::string file;
  int L = 2;
  double theta0 = 1.0, thetaL = 1.0, beta0 = 1.0, betaL = 0.0;
  std::vector<CLI::Option*> chain_opts;
  CLI::Option* file_opt = nullptr;
};

struct Common {
  std::string out;
  double tol = 1e-10;
  unsigned jobs = 1;
};

void add_chain_flags(CLI::App* c, ModelFlags& f, bool with_L) {
  if (with_L) f.chain_opts.push_back(c->add_option("--chain-L", f.L, "Chain length L"));
  f.chain_opts.push_back(c->add_option("--theta0", f.theta0, "Left coupling"));
  f.chain_opts.push_back(c->add_option("--thetaL", f.thetaL, "Right coupling"));
  f.chain_opts.push_back(c->add_option("--beta0", f.beta0, "Left inverse temperature"));
  f.chain_opts.push_back(c->add_option("--betaL", f.betaL, "Right inverse temperature"));
}

void add_model_flags(CLI::App* c, ModelFlags& f) {
  f.file_opt = c->add_option("--model", f.file, "JSON model file");
  add_chain_flags(c, f, true);
}

void add_common(CLI::App* c, Common& k, bool jobs = false) {
  c->add_option("--out", k.out, "Output file (default: stdout)");
  c->add_option("--tol", k.tol, "Validation tolerance")->check(CLI::PositiveNumber);
  if (jobs) c->add_option("--jobs", k.jobs, "Worker threads for independent evaluations")->check(CLI::PositiveNumber);
}

bool chain_given(const ModelFlags& f) {
  for (auto* o : f.chain_opts)
    if (o->count()) return true;
  return false;
}

ff::chain::ChainSpec chain_spec(const ModelFlags& f) { return {f.L, f.theta0, f.thetaL, f.beta0, f.betaL}; }

ff::ThermalModel resolve(const ModelFlags& f) {
  const bool file = f.file_opt && f.file_opt->count();
  const bool chain = chain_given(f);
  if (file && chain) throw ff::UsageError("give either --model or chain flags, not both");
  if (!file && !chain) throw ff::UsageError("no model given: use --model FILE or --chain-L and friends");
  if (file) return ff::model_io::load(f.file);
  return ff::chain::build(chain_spec(f));
}

std::string source_tag(const ModelFlags& f) {
  if (f.file_opt && f.file_opt->count()) return "file " + f.file;
  std::ostringstream os;
  os << "chain L=" << f.L << " theta0=" << num(f.theta0) << " thetaL=" << num(f.thetaL) << " beta0=" << num(f.beta0)
     << " betaL=" << num(f.betaL);
  return os.str();
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(c.out, std::ios::binary);
  if (!out) throw ff::MalformedInput("cannot write " + c.out);
  out << text;
}

ff::Tolerances tolerances(const Common& c) {
  ff::Tolerances t;
  t.invariant = c.tol;
  return t;
}

void header(ff::csv::Writer& w, const std::string& cmd, const std::string& hash, const Common& c,
            const std::string& source) {
  ff::csv::provenance(w, cmd, hash, tolerances(c));
  w.meta("model_source", source);
}

// ---------------------------------------------------------------- validate
int cmd_validate(const ModelFlags& f, const Common& c) {
  const auto m = resolve(f);
  const auto rep = ff::thermal::validate(m, c.tol);
  std::ostringstream os;
  ff::csv::Writer w(os);
  header(w, "validate", ff::csv::model_hash(m), c, source_tag(f));
  w.header({"check", "residual", "ok"});
  for (const auto& it : rep.items) w.row({"\"" + it.name + "\"", num(it.residual), it.ok ? "1" : "0"});
  if (rep.ok()) {
    const auto k = ff::dynamics::kalman(m);
    w.row({"\"kalman rank\"", std::to_string(k.rank) + "/" + std::to_string(m.dim()), k.is_full ? "1" : "0"});
  }
  emit(c, os.str());
  if (!rep.ok()) {
    for (const auto& v : rep.violations()) spdlog::error("violation: {}", v);
    return static_cast<int>(ff::ExitCode::invalid_model);
  }
  return 0;
}

// ---------------------------------------------------------------- flux
int cmd_flux(const ModelFlags& f, const Common& c) {
  const auto m = resolve(f);
  ff::thermal::require_valid(m, c.tol);
  std::ostringstream os;
  ff::csv::Writer w(os);
  header(w, "flux", ff::csv::model_hash(m), c, source_tag(f));
  w.header({"bath", "beta", "J"});
  const auto k = ff::dynamics::kalman(m);
  if (!k.is_full) {
    emit(c, os.str());
    throw ff::NotErgodic("Kalman rank " + std::to_string(k.rank) + " < " + std::to_string(m.dim()) +
                         ": the stationary state is not unique");
  }
  const auto J = ff::thermal::fluxes(m, ff::dynamics::stationary_covariance(m));
  const auto beta = m.betas();
  double sum = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) {
    w.row({std::to_string(i), num(beta[i]), num(J[i])});
    sum += J[i];
  }
  w.row({"sum_J", "", num(sum)});
  w.row({"entropy_production", "", num(ff::thermal::entropy_production(J, beta))});
  emit(c, os.str());
  return 0;
}

// ---------------------------------------------------------------- e-alpha
int cmd_e_alpha(const ModelFlags& f, const Common& c, const std::vector<double>& alpha, bool fock) {
  const auto m = resolve(f);
  ff::thermal::require_valid(m, c.tol);
  const ff::ldp::Context ctx(m, tolerances(c));
  const auto s = ff::ldp::deformed_spectrum(ctx, alpha);
  const auto r = ff::ldp::riccati_max(ctx, alpha);
  std::ostringstream os;
  ff::csv::Writer w(os);
  header(w, "e-alpha", ff::csv::model_hash(m), c, source_tag(f));
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < alpha.size(); ++i) cols.push_back("alpha_" + std::to_string(i));
  for (const char* x : {"e_alpha", "e_riccati", "imag_part", "n_positive", "riccati_residual"}) cols.push_back(x);
  if (fock) cols.push_back("e_fock");
  w.header(cols);
  std::vector<std::string> row;
  for (double a : alpha) row.push_back(num(a));
  row.push_back(num(s.e_alpha));
  row.push_back(num(r.e_trace));
  row.push_back(num(s.raw_e.imag()));
  row.push_back(std::to_string(s.n_positive));
  row.push_back(num(r.relative_residual));
  if (fock) row.push_back(num(ff::fock::dominant(ff::fock::build_deformed(m, alpha)).value.real()));
  w.row(row);
  emit(c, os.str());
  return 0;
}

// ---------------------------------------------------------------- rate
struct RateFlags {
  double zmin = -0.1, zmax = 0.3;
  std::size_t points = 200;
  std::vector<int> sweep;
};

int cmd_rate(const ModelFlags& f, const Common& c, const RateFlags& rf) {
  if (rf.points < 1) throw ff::UsageError("--points must be >= 1");
  const auto zetas = ff::ldp::linspace(rf.zmin, rf.zmax, rf.points);
  ff::ldp::RateOptions opt;
  opt.jobs = c.jobs;
  std::ostringstream os;
  ff::csv::Writer w(os);
  bool all = true;
  if (rf.sweep.empty()) {
    const auto m = resolve(f);
    ff::thermal::require_valid(m, c.tol);
    const ff::ldp::Context ctx(m, tolerances(c));
    const auto curve = ff::ldp::rate_function(ctx, zetas, opt);
    header(w, "rate", ff::csv::model_hash(m), c, source_tag(f));
    w.header({"zeta", "I", "alpha_star", "converged"});
    for (const auto& p : curve.points) {
      w.row({num(p.zeta), num(p.I), num(p.alpha_star), p.converged ? "1" : "0"});
      if (!p.converged) spdlog::warn("zeta = {}: {}", p.zeta, p.note);
    }
    all = curve.all_converged();
  } else {
    if (f.file_opt && f.file_opt->count()) throw ff::UsageError("--sweep-L works with chain flags only");
    std::vector<ff::ldp::RateCurve> curves;
    std::ostringstream hashes;
    for (int L : rf.sweep) {
      auto spec = chain_spec(f);
      spec.L = L;
      const auto m = ff::chain::build(spec);
      const ff::ldp::Context ctx(m, tolerances(c));
      curves.push_back(ff::ldp::rate_function(ctx, zetas, opt));
      hashes << (hashes.tellp() > 0 ? " " : "") << "L" << L << "=" << ff::csv::model_hash(m);
      all = all && curves.back().all_converged();
    }
    header(w, "rate --sweep-L", hashes.str(), c, source_tag(f));
    std::vector<std::string> cols{"zeta"};
    for (int L : rf.sweep) cols.push_back("I_L" + std::to_string(L));
    w.header(cols);
    for (std::size_t k = 0; k < zetas.size(); ++k) {
      std::vector<std::string> row{num(zetas[k])};
      for (const auto& cv : curves) row.push_back(num(cv.points[k].I));
      w.row(row);
    }
  }
  emit(c, os.str());
  if (!all) throw ff::NonConvergence("rate function did not converge at every grid point (output retained)");
  return 0;
}

// ---------------------------------------------------------------- oracle
int cmd_oracle(const ModelFlags& f, const Common& c, const ff::oracle::Options& o) {
  const auto m = resolve(f);
  const auto rep = ff::oracle::run(m, o);
  auto j = rep.to_json();
  j["model_hash"] = ff::csv::model_hash(m);
  j["fermiflux"] = ff::version;
  emit(c, j.dump(2) + "\n");
  if (!rep.ok()) {
    for (const auto& ch : rep.checks)
      if (!ch.pass) spdlog::error("oracle check {} failed: residual {} > {}", ch.name, ch.residual, ch.tolerance);
    return static_cast<int>(ff::ExitCode::oracle_failure);
  }
  return 0;
}

// ---------------------------------------------------------------- mc
struct McFlags {
  long trajectories = 1000;
  double T = 50.0;
  std::uint64_t seed = 1;
  std::vector<double> alpha;
  std::string jump_log;
};

int cmd_mc(const ModelFlags& f, const Common& c, const McFlags& mf) {
  if (mf.trajectories <= 0) throw ff::UsageError("--trajectories must be positive");
  if (!(mf.T > 0)) throw ff::UsageError("--T must be positive");
  const auto m = resolve(f);
  ff::thermal::require_valid(m, c.tol);
  const auto k = ff::dynamics::kalman(m);
  if (!k.is_full) throw ff::NotErgodic("Monte Carlo needs a positivity-improving model");
  const ff::unravel::Unraveler u(m);
  const MatC rho0 = ff::fock::stationary_state(ff::fock::lindbladian(u.realization()));
  spdlog::info("simulating {} trajectories, T = {}, base seed {}", mf.trajectories, mf.T, mf.seed);
  const auto recs = ff::unravel::simulate_batch(u, rho0, mf.T, mf.seed, static_cast<std::size_t>(mf.trajectories),
                                                c.jobs);
  const auto J = ff::thermal::fluxes(m, ff::dynamics::stationary_covariance(m));
  const auto est = ff::unravel::mean_flux(recs);
  const std::size_t nb = m.baths.size();

  std::ostringstream os;
  ff::csv::Writer w(os);
  header(w, "mc", ff::csv::model_hash(m), c, source_tag(f));
  w.meta("rng", ff::rng::generator_name);
  w.meta("base_seed", std::to_string(mf.seed));
  w.meta("initial_state", "stationary");
  std::vector<std::string> cols{"seed", "T", "n_jumps"};
  for (std::size_t i = 0; i < nb; ++i) cols.push_back("N_" + std::to_string(i));
  cols.push_back("final_weight");
  w.header(cols);
  std::size_t warnings = 0;
  for (const auto& r : recs) {
    std::vector<std::string> row{std::to_string(r.seed), num(r.T), std::to_string(r.jumps.size())};
    for (double x : r.N) row.push_back(num(x));
    row.push_back(num(r.final_weight));
    w.row(row);
    warnings += r.warnings;
  }
  os << "# summary: bath,mean_N_over_T,stderr,J_exact,z_score\n";
  for (std::size_t i = 0; i < nb; ++i) {
    const double z = est.stderr_[i] > 0 ? (est.mean[i] - J[i]) / est.stderr_[i] : 0.0;
    os << "# summary: " << i << ',' << num(est.mean[i]) << ',' << num(est.stderr_[i]) << ',' << num(J[i]) << ','
       << num(z) << '\n';
    spdlog::info("bath {}: mean N/T = {} +- {}, J = {}", i, est.mean[i], est.stderr_[i], J[i]);
  }
  if (warnings) os << "# warnings: " << warnings << " trace renormalisations\n";
  if (!mf.alpha.empty()) {
    const auto cg = ff::unravel::empirical_cgf(recs, mf.alpha);
    const double exact = ff::ldp::e_alpha(m, mf.alpha);
    os << "# cgf: estimate=" << num(cg.estimate) << " ci99=[" << num(cg.lo) << "," << num(cg.hi)
       << "] ess=" << num(cg.ess) << " reliable=" << (cg.reliable ? 1 : 0) << " e_alpha=" << num(exact) << '\n';
  }
  emit(c, os.str());
  if (!mf.jump_log.empty()) {
    std::ofstream jl(mf.jump_log, std::ios::binary);
    if (!jl) throw ff::MalformedInput("cannot write " + mf.jump_log);
    ff::csv::Writer jw(jl);
    jw.header({"seed", "t", "bath", "delta"});
    for (const auto& r : recs)
      for (const auto& jp : r.jumps) jw.row({std::to_string(r.seed), num(jp.t), std::to_string(jp.bath), num(jp.delta)});
  }
  return 0;
}

// ---------------------------------------------------------------- machine
struct MachineFlags {
  double E1 = 1.0, E3 = 1.0, g = 1.0, h = 1.0;
  std::vector<double> beta, lambda, J;
  std::size_t points = 50;
  std::uint64_t seed = 1;
};

int cmd_fridge(const Common& c, const MachineFlags& mf) {
  ff::machines::FridgeParams p;
  p.E1 = mf.E1;
  p.E3 = mf.E3;
  p.g = mf.g;
  p.h = mf.h;
  if (!mf.beta.empty()) {
    if (mf.beta.size() != 3) throw ff::UsageError("--beta needs three values");
    std::copy(mf.beta.begin(), mf.beta.end(), p.beta.begin());
  }
  if (!mf.lambda.empty()) {
    if (mf.lambda.size() != 3) throw ff::UsageError("--lambda needs three values");
    std::copy(mf.lambda.begin(), mf.lambda.end(), p.lambda.begin());
  }
  ff::machines::require_valid(ff::machines::fridge(p));
  const auto r = ff::machines::fridge_fluxes(p);
  std::ostringstream os;
  ff::csv::Writer w(os);
  w.meta("fermiflux", ff::version);
  w.meta("command", "machine fridge");
  w.header({"bath", "beta", "E", "J", "alpha_times_signed_E"});
  const double E[3] = {p.E1, -p.E2(), p.E3};
  for (int i = 0; i < 3; ++i) w.row({std::to_string(i), num(p.beta[i]), num(E[i]), num(r.J[i]), num(r.alpha * E[i])});
  os << "# alpha: " << num(r.alpha) << "\n# proportionality_residual: " << num(r.proportionality_residual) << '\n';
  emit(c, os.str());
  return 0;
}

int cmd_fridge_sweep(const Common& c, const MachineFlags& mf) {
  ff::rng::Philox g(mf.seed, 0xF1D6E);
  std::ostringstream os;
  ff::csv::Writer w(os);
  w.meta("fermiflux", ff::version);
  w.meta("command", "machine fridge-sweep");
  w.meta("rng", ff::rng::generator_name);
  w.meta("seed", std::to_string(mf.seed));
  w.header({"E1", "E3", "beta1", "beta2", "beta3", "lambda1", "lambda2", "lambda3", "g", "h", "alpha", "J1", "J2",
            "J3", "residual", "sum_beta_E", "signed_beta_E"});
  double worst = 0.0;
  for (std::size_t k = 0; k < mf.points; ++k) {
    ff::machines::FridgeParams p;
    using ff::random_models::uniform;
    p.E1 = uniform(g, 0.2, 2.0);
    p.E3 = uniform(g, 0.2, 2.0);
    for (auto& b : p.beta) b = uniform(g, 0.0, 3.0);
    for (auto& l : p.lambda) l = uniform(g, 0.2, 2.0);
    p.g = uniform(g, 0.2, 2.0);
    p.h = uniform(g, 0.2, 2.0);
    const auto r = ff::machines::fridge_fluxes(p);
    worst = std::max(worst, r.proportionality_residual);
    w.row({num(p.E1), num(p.E3), num(p.beta[0]), num(p.beta[1]), num(p.beta[2]), num(p.lambda[0]), num(p.lambda[1]),
           num(p.lambda[2]), num(p.g), num(p.h), num(r.alpha), num(r.J[0]), num(r.J[1]), num(r.J[2]),
           num(r.proportionality_residual), num(r.sum_beta_E), num(r.signed_beta_E)});
  }
  os << "# max_proportionality_residual: " << num(worst) << '\n';
  emit(c, os.str());
  return 0;
}

int cmd_synthesize(const Common& c, const MachineFlags& mf) {
  if (mf.J.empty() || mf.beta.empty()) throw ff::UsageError("synthesize needs --J and --beta");
  const auto s = ff::machines::synthesize(mf.J, mf.beta);
  std::ostringstream os;
  ff::csv::Writer w(os);
  w.meta("fermiflux", ff::version);
  w.meta("command", "machine synthesize");
  w.header({"bath", "beta", "target", "achieved", "error"});
  for (std::size_t i = 0; i < mf.J.size(); ++i)
    w.row({std::to_string(i), num(mf.beta[i]), num(mf.J[i]), num(s.achieved[i]), num(s.achieved[i] - mf.J[i])});
  for (const auto& comp : s.components) {
    os << "# component: " << comp.kind << " baths";
    for (auto b : comp.baths) os << ' ' << b;
    os << " dim " << comp.model.dim << '\n';
  }
  os << "# max_error: " << num(s.max_error) << '\n';
  emit(c, os.str());
  if (s.max_error > 1e-6) throw ff::NonConvergence("synthesized fluxes miss the target by " + num(s.max_error));
  return 0;
}

int cmd_two_channel(const Common& c, const MachineFlags& mf) {
  const std::vector<double> beta = mf.beta.empty() ? std::vector<double>{1.0, 0.0} : mf.beta;
  const std::vector<double> lam = mf.lambda.empty() ? std::vector<double>{1.0, 1.0} : mf.lambda;
  if (beta.size() != 2 || lam.size() != 2) throw ff::UsageError("two-channel needs two betas and two rates");
  const auto t = ff::machines::two_channel_flux(ff::machines::qubit_gibbs(1.0, beta[0]),
                                                ff::machines::qubit_gibbs(1.0, beta[1]), lam[0], lam[1],
                                                ff::machines::qubit_number(), beta[0], beta[1]);
  std::ostringstream os;
  ff::csv::Writer w(os);
  w.meta("fermiflux", ff::version);
  w.meta("command", "machine two-channel");
  w.header({"J1_closed", "J1_numeric", "J2_numeric", "state_residual"});
  w.row({num(t.J1_closed), num(t.J_numeric[0]), num(t.J_numeric[1]),
         num(ff::linalg::max_abs(MatC(t.rho_closed - t.rho_numeric)))});
  emit(c, os.str());
  return 0;
}

// ---------------------------------------------------------------- chain-sweep
int cmd_chain_sweep(const ModelFlags& f, const Common& c, int Lmin, int Lmax) {
  if (Lmin < 1 || Lmax < Lmin) throw ff::UsageError("need 1 <= --L-min <= --L-max");
  std::ostringstream os;
  ff::csv::Writer w(os);
  w.meta("fermiflux", ff::version);
  w.meta("command", "chain-sweep");
  w.meta("model_source", source_tag(f));
  w.header({"L", "J_lyapunov", "J_closed", "p0", "pm", "pL", "j", "closed_form_discrepancy"});
  for (int L = Lmin; L <= Lmax; ++L) {
    auto spec = chain_spec(f);
    spec.L = L;
    const auto m = ff::chain::build(spec);
    const auto J = ff::thermal::fluxes(m, ff::dynamics::stationary_covariance(m));
    if (L >= 2) {
      const auto cmp = ff::chain::compare_closed_form(spec);
      w.row({std::to_string(L), num(J[0]), num(cmp.closed.J), num(cmp.closed.p0), num(cmp.closed.pm),
             num(cmp.closed.pL), num(cmp.closed.j), num(cmp.max_discrepancy())});
      if (cmp.max_discrepancy() > 1e-10)
        spdlog::warn("L = {}: closed forms differ from the Lyapunov solve by {}", L, cmp.max_discrepancy());
    } else {
      w.row({std::to_string(L), num(J[0]), "", "", "", "", "", ""});
    }
  }
  emit(c, os.str());
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("fermiflux");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("FERMIFLUX_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Energy fluxes and their large deviations for thermal quasi-free fermionic semigroups"};
  app.set_version_flag("--version", std::string(ff::version));
  app.require_subcommand(1);

  // One flag set per subcommand so that option bookkeeping stays separate.
  ModelFlags mf_validate, mf_flux, mf_ealpha, mf_rate, mf_oracle, mf_mc;
  Common common;

  auto* validate = app.add_subcommand("validate", "Check the thermal-model constraints");
  add_model_flags(validate, mf_validate);
  add_common(validate, common);

  auto* flux = app.add_subcommand("flux", "Stationary energy fluxes");
  add_model_flags(flux, mf_flux);
  add_common(flux, common);

  std::vector<double> alpha;
  bool with_fock = false;
  auto* ealpha = app.add_subcommand("e-alpha", "Cumulant generating function e(alpha)");
  add_model_flags(ealpha, mf_ealpha);
  add_common(ealpha, common);
  ealpha->add_option("--alpha", alpha, "Counting parameters a1,a2,...")->delimiter(',')->required();
  ealpha->add_flag("--fock", with_fock, "Also evaluate the Fock-space deformed generator");

  RateFlags rflags;
  auto* rate = app.add_subcommand("rate", "Rate function I(zeta) of the two-bath flux");
  add_model_flags(rate, mf_rate);
  add_common(rate, common, true);
  rate->add_option("--zeta-min", rflags.zmin, "Grid start");
  rate->add_option("--zeta-max", rflags.zmax, "Grid end");
  rate->add_option("--points", rflags.points, "Grid size");
  rate->add_option("--sweep-L", rflags.sweep, "Chain lengths, one column each")->delimiter(',');

  ff::oracle::Options oopt;
  auto* oracle = app.add_subcommand("oracle", "Phase-space versus Fock-space equivalence suite");
  add_model_flags(oracle, mf_oracle);
  add_common(oracle, common);
  oracle->add_option("--n-alpha", oopt.n_alpha, "Number of random alpha");
  oracle->add_option("--seed", oopt.seed, "Seed for the alpha grid");

  McFlags mcf;
  auto* mc = app.add_subcommand("mc", "Quantum-jump Monte Carlo of the energy counts");
  add_model_flags(mc, mf_mc);
  add_common(mc, common, true);
  mc->add_option("--trajectories", mcf.trajectories, "Number of trajectories");
  mc->add_option("--T", mcf.T, "Time horizon");
  mc->add_option("--seed", mcf.seed, "Base seed; trajectory j uses seed + j");
  mc->add_option("--alpha", mcf.alpha, "Also estimate the empirical CGF at alpha")->delimiter(',');
  mc->add_option("--jump-log", mcf.jump_log, "Write every jump to this CSV file");

  MachineFlags mach;
  auto* machine = app.add_subcommand("machine", "Thermal machines on qubits");
  machine->require_subcommand(1);
  auto* fr = machine->add_subcommand("fridge", "Three-qubit fridge fluxes");
  add_common(fr, common);
  fr->add_option("--E1", mach.E1, "Energy of qubit 1");
  fr->add_option("--E3", mach.E3, "Energy of qubit 3");
  fr->add_option("--beta", mach.beta, "b1,b2,b3")->delimiter(',');
  fr->add_option("--lambda", mach.lambda, "l1,l2,l3")->delimiter(',');
  fr->add_option("--g", mach.g, "Exchange coupling");
  fr->add_option("--h-scale", mach.h, "Energy scale h of H_S = hK + ...");
  auto* sweep = machine->add_subcommand("fridge-sweep", "Random fridge parameters");
  add_common(sweep, common);
  sweep->add_option("--points", mach.points, "Number of parameter sets");
  sweep->add_option("--seed", mach.seed, "Seed");
  auto* syn = machine->add_subcommand("synthesize", "Machine realising a flux vector");
  add_common(syn, common);
  syn->add_option("--J", mach.J, "Target fluxes")->delimiter(',');
  syn->add_option("--beta", mach.beta, "Inverse temperatures")->delimiter(',');
  auto* two = machine->add_subcommand("two-channel", "Two depolarizing channels on a qubit");
  add_common(two, common);
  two->add_option("--beta", mach.beta, "b1,b2")->delimiter(',');
  two->add_option("--lambda", mach.lambda, "l1,l2")->delimiter(',');

  int Lmin = 2, Lmax = 10;
  ModelFlags sweep_flags;
  auto* csweep = app.add_subcommand("chain-sweep", "Chain flux and closed forms over L");
  add_chain_flags(csweep, sweep_flags, false);
  add_common(csweep, common);
  csweep->add_option("--L-min", Lmin, "Smallest L");
  csweep->add_option("--L-max", Lmax, "Largest L");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ff::ExitCode::usage);
  }

  try {
    if (*validate) return cmd_validate(mf_validate, common);
    if (*flux) return cmd_flux(mf_flux, common);
    if (*ealpha) return cmd_e_alpha(mf_ealpha, common, alpha, with_fock);
    if (*rate) return cmd_rate(mf_rate, common, rflags);
    if (*oracle) return cmd_oracle(mf_oracle, common, oopt);
    if (*mc) return cmd_mc(mf_mc, common, mcf);
    if (*fr) return cmd_fridge(common, mach);
    if (*sweep) return cmd_fridge_sweep(common, mach);
    if (*syn) return cmd_synthesize(common, mach);
    if (*two) return cmd_two_channel(common, mach);
    if (*csweep) return cmd_chain_sweep(sweep_flags, common, Lmin, Lmax);
  } catch (const ff::InvalidModel& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.code());
  } catch (const ff::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ff::ExitCode::invalid_model);
  }
  return static_cast<int>(ff::ExitCode::usage);
}
