#include "snlb/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fftw3.h>

#include <CLI11.hpp>

#include "snlb/dynamics.hpp"
#include "snlb/field_io.hpp"
#include "snlb/gibbs.hpp"
#include "snlb/imethod.hpp"
#include "snlb/noise.hpp"
#include "snlb/norms.hpp"
#include "snlb/product.hpp"
#include "snlb/variance.hpp"

namespace snlb {

void to_json(nlohmann::ordered_json& j, const RunConfig& c) {
  j = nlohmann::ordered_json{
      {"schema", kConfigSchema},
      {"subcommand", c.subcommand},
      {"grid", {{"d", c.grid.d}, {"M", c.grid.M}, {"pad_factor", c.grid.pad_factor}}},
      {"model", {{"k", c.model.k}, {"sign", c.model.sign}, {"damped", c.model.damped}, {"N", c.model.N}}},
      {"integrator",
       {{"dt", c.integrator.dt},
        {"T", c.integrator.T},
        {"scheme", c.integrator.scheme},
        {"threshold", c.integrator.threshold},
        {"s_prime", c.integrator.s_prime}}},
      {"stochastic", {{"seed", c.stochastic.seed}, {"ensemble", c.stochastic.ensemble}}},
      {"diagnostics",
       {{"observables", c.diagnostics.observables},
        {"record_every", c.diagnostics.record_every},
        {"snapshots", c.diagnostics.snapshots}}},
      {"params",
       {{"kind", c.params.kind},
        {"n_max", c.params.n_max},
        {"t", c.params.t},
        {"s", c.params.s},
        {"amplitude", c.params.amplitude},
        {"init", c.params.init},
        {"Ns", c.params.Ns},
        {"samples", c.params.samples},
        {"sobolev", c.params.sobolev},
        {"p", c.params.p},
        {"nodes", c.params.nodes},
        {"scale_nodes", c.params.scale_nodes},
        {"space_points", c.params.space_points},
        {"data", c.params.data},
        {"family", c.params.family},
        {"band", c.params.band},
        {"per_shell", c.params.per_shell},
        {"gamma", c.params.gamma},
        {"gamma0", c.params.gamma0},
        {"lebesgue_p", c.params.lebesgue_p},
        {"smooth_i", c.params.smooth_i},
        {"tolerance", c.params.tolerance},
        {"sampler", c.params.sampler},
        {"burn_in", c.params.burn_in},
        {"thinning", c.params.thinning},
        {"pcn_beta", c.params.pcn_beta},
        {"weighted", c.params.weighted},
        {"nonlinear", c.params.nonlinear},
        {"weak_order", c.params.weak_order},
        {"noise", c.params.noise},
        {"box", c.params.box}}},
      {"output", c.output},
      {"threads", c.threads},
      {"deterministic", c.deterministic}};
}

void from_json(const nlohmann::ordered_json& j, RunConfig& c) {
  if (j.value("schema", std::string{}) != kConfigSchema)
    throw std::invalid_argument("config schema must be " + std::string(kConfigSchema));
  c.subcommand = j.at("subcommand").get<std::string>();
  const auto& g = j.at("grid");
  c.grid = {g.at("d").get<int>(), g.at("M").get<int>(), g.at("pad_factor").get<int>()};
  const auto& m = j.at("model");
  c.model = {m.at("k").get<int>(), m.at("sign").get<int>(), m.at("damped").get<bool>(), m.at("N").get<double>()};
  const auto& i = j.at("integrator");
  c.integrator = {i.at("dt").get<double>(), i.at("T").get<double>(), i.at("scheme").get<std::string>(),
                  i.at("threshold").get<double>(), i.at("s_prime").get<double>()};
  const auto& s = j.at("stochastic");
  c.stochastic = {s.at("seed").get<std::uint64_t>(), s.at("ensemble").get<std::size_t>()};
  const auto& d = j.at("diagnostics");
  c.diagnostics = {d.at("observables").get<std::vector<std::string>>(), d.at("record_every").get<int>(),
                   d.at("snapshots").get<bool>()};
  const auto& p = j.at("params");
  auto& q = c.params;
  q.kind = p.at("kind").get<std::string>();
  q.n_max = p.at("n_max").get<int>();
  q.t = p.at("t").get<double>();
  q.s = p.at("s").get<double>();
  q.amplitude = p.at("amplitude").get<double>();
  q.init = p.at("init").get<std::string>();
  q.Ns = p.at("Ns").get<std::vector<double>>();
  q.samples = p.at("samples").get<std::size_t>();
  q.sobolev = p.at("sobolev").get<double>();
  q.p = p.at("p").get<double>();
  q.nodes = p.at("nodes").get<int>();
  q.scale_nodes = p.at("scale_nodes").get<bool>();
  q.space_points = p.at("space_points").get<int>();
  q.data = p.at("data").get<std::string>();
  q.family = p.at("family").get<std::string>();
  q.band = p.at("band").get<int>();
  q.per_shell = p.at("per_shell").get<int>();
  q.gamma = p.at("gamma").get<double>();
  q.gamma0 = p.at("gamma0").get<double>();
  q.lebesgue_p = p.at("lebesgue_p").get<double>();
  q.smooth_i = p.at("smooth_i").get<bool>();
  q.tolerance = p.at("tolerance").get<double>();
  q.sampler = p.at("sampler").get<std::string>();
  q.burn_in = p.at("burn_in").get<long>();
  q.thinning = p.at("thinning").get<long>();
  q.pcn_beta = p.at("pcn_beta").get<double>();
  q.weighted = p.at("weighted").get<bool>();
  q.nonlinear = p.at("nonlinear").get<bool>();
  q.weak_order = p.at("weak_order").get<bool>();
  q.noise = p.at("noise").get<bool>();
  q.box = p.at("box").get<int>();
  c.output = j.at("output").get<std::string>();
  c.threads = j.at("threads").get<int>();
  c.deterministic = j.at("deterministic").get<bool>();
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "sample-noise",   "wick-convergence", "simulate-snlb",      "simulate-sdnlb",   "gibbs-sample",
      "invariance-test", "imethod-audit",   "commutator-scaling", "strichartz-probe", "variance-tables"};
  return names;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(count, threads > 0 ? static_cast<std::size_t>(threads) : hw);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!first) first = std::current_exception();
            failed = true;
          }
        }
      });
  }
  if (first) std::rethrow_exception(first);
}

namespace {

#if defined(__clang__)
constexpr const char* kCompiler = "clang " __clang_version__;
#elif defined(__GNUC__)
constexpr const char* kCompiler = "gcc " __VERSION__;
#else
constexpr const char* kCompiler = "unknown";
#endif

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Output directory plus the list of artifacts written into it.
class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    std::ofstream os(path(name), std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path(name).string());
    return os;
  }
  std::filesystem::path path(const std::string& name) {
    std::lock_guard lock(mu_);
    names_.insert(name);
    return dir_ / name;
  }
  const std::filesystem::path& dir() const { return dir_; }
  std::vector<std::string> names() const { return {names_.begin(), names_.end()}; }

 private:
  std::filesystem::path dir_;
  std::set<std::string> names_;
  std::mutex mu_;
};

void write_json_file(Artifacts& a, const std::string& name, const nlohmann::ordered_json& j) {
  auto os = a.open(name);
  os << j.dump(2) << '\n';
}

template <class Report>
void write_scaling(Artifacts& a, const std::string& stem, const Report& r) {
  {
    auto os = a.open(stem + ".csv");
    r.write_csv(os);
  }
  {
    auto os = a.open(stem + ".json");
    r.write_json(os);
  }
  auto os = a.open(stem + ".gp");
  r.write_plot_script(os, stem + ".csv");
}

std::vector<double> or_default(const std::vector<double>& v, std::vector<double> d) { return v.empty() ? d : v; }
std::size_t or_default(std::size_t v, std::size_t d) { return v == 0 ? d : v; }
std::string or_default(const std::string& v, const std::string& d) { return v.empty() ? d : v; }

void check_choice(const std::string& what, const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return;
  std::string list;
  for (const char* o : options) list += std::string(list.empty() ? "" : "|") + o;
  throw ValidationError(what + " must be one of " + list + ", got '" + v + "'");
}

Grid grid_of(const RunConfig& c) { return Grid(c.grid.d, c.grid.M, c.grid.pad_factor); }

IntegratorConfig integrator_of(const RunConfig& c) {
  IntegratorConfig cfg;
  cfg.dt = c.integrator.dt;
  cfg.scheme = c.integrator.scheme == "lie" ? Scheme::lie : Scheme::strang;
  cfg.blowup_threshold = c.integrator.threshold;
  cfg.s_prime = c.integrator.s_prime;
  return cfg;
}

GibbsSpec gibbs_of(const RunConfig& c) {
  GibbsSpec spec;
  spec.k = c.model.k;
  spec.N = c.model.N;
  spec.sampler = c.params.sampler == "pcn" ? Sampler::pcn : Sampler::independence_mh;
  spec.burn_in = c.params.burn_in;
  spec.thinning = c.params.thinning;
  spec.pcn_beta = c.params.pcn_beta;
  spec.weighted = c.params.weighted;
  return spec;
}

long long step_count(const RunConfig& c) {
  if (c.integrator.T < 0.0) throw ValidationError("T must be >= 0");
  if (!(c.integrator.dt > 0.0)) throw ValidationError("dt must be positive");
  const double r = c.integrator.T / c.integrator.dt;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
    throw ValidationError("T must be a whole number of steps dt");
  return std::llround(r);
}

/// Fills per-subcommand defaults so the resolved config says what actually ran.
void resolve(RunConfig& c) {
  const std::string& s = c.subcommand;
  auto& p = c.params;
  if (c.diagnostics.record_every < 1) throw ValidationError("record-every must be >= 1");
  check_choice("scheme", c.integrator.scheme, {"strang", "lie"});
  check_choice("sampler", p.sampler, {"mh", "pcn"});
  if (c.model.sign != 1 && c.model.sign != -1) throw ValidationError("sign must be +1 or -1");
  if (s == "sample-noise") {
    p.kind = or_default(p.kind, "undamped");
    check_choice("kind", p.kind, {"undamped", "damped"});
    if (c.grid.M == 0) c.grid.M = 8;
  } else if (s == "wick-convergence") {
    p.Ns = or_default(p.Ns, {4, 8, 16});
    p.samples = or_default(p.samples, 200);
    if (c.grid.M == 0) {
      const double top = *std::max_element(p.Ns.begin(), p.Ns.end());
      c.grid.M = fft_friendly(2 * static_cast<int>(std::floor(2.0 * top + 1e-9)) + 2);
    }
  } else if (s == "simulate-snlb") {
    p.init = or_default(p.init, "zero");
    check_choice("init", p.init, {"zero", "hs"});
    if (c.diagnostics.observables.empty()) c.diagnostics.observables = {"h_sprime", "energy"};
    if (c.grid.M == 0) c.grid.M = 8;
  } else if (s == "simulate-sdnlb") {
    c.model.damped = true;
    if (c.model.N < 0.0) c.model.N = 1.0;
    p.init = or_default(p.init, "mu2");
    check_choice("init", p.init, {"zero", "mu2", "gibbs"});
    if (c.diagnostics.observables.empty()) c.diagnostics.observables = {"linear_energy", "h_minus_quarter", "mode0"};
    if (c.grid.M == 0) c.grid.M = 8;
  } else if (s == "gibbs-sample") {
    if (c.model.N < 0.0) c.model.N = 1.0;
    if (c.diagnostics.observables.empty()) c.diagnostics.observables = default_observables();
    if (c.grid.M == 0) c.grid.M = 8;
  } else if (s == "invariance-test") {
    c.model.damped = true;
    if (c.model.N < 0.0) c.model.N = 1.0;
    if (c.diagnostics.observables.empty()) c.diagnostics.observables = default_observables();
    if (c.grid.M == 0) c.grid.M = 4;
  } else if (s == "imethod-audit") {
    if (c.model.N < 0.0) c.model.N = 8.0;
    p.init = or_default(p.init, "hs");
    check_choice("init", p.init, {"zero", "hs"});
    if (c.grid.M == 0) c.grid.M = 8;
  } else if (s == "commutator-scaling") {
    p.kind = or_default(p.kind, "c1");
    check_choice("kind", p.kind, {"c1", "c2", "c3"});
    check_choice("family", p.family, {"sparse", "dense"});
    p.Ns = or_default(p.Ns, {8, 16, 32, 64});
    p.samples = or_default(p.samples, 20);
  } else if (s == "strichartz-probe") {
    check_choice("data", p.data, {"random", "dirichlet"});
    p.Ns = or_default(p.Ns, {4, 8, 16, 32});
    p.samples = or_default(p.samples, 50);
  } else if (s == "variance-tables") {
    p.kind = or_default(p.kind, "alpha");
    check_choice("kind", p.kind, {"alpha", "sigma"});
    if (p.n_max < 0) throw ValidationError("n-max must be >= 0");
  }
}

// subcommand pipelines

void run_sample_noise(const RunConfig& c, Artifacts& a) {
  const Grid g = grid_of(c);
  const auto kind = c.params.kind == "damped" ? ConvolutionKind::damped : ConvolutionKind::undamped;
  const long long steps = step_count(c);
  const std::size_t paths = c.stochastic.ensemble;
  // rows[j] = time, path-mean of the spatial mean of Psi^2, exact variance
  std::vector<std::vector<double>> second(paths, std::vector<double>(static_cast<std::size_t>(steps) + 1, 0.0));
  parallel_for(paths, c.threads, [&](std::size_t i) {
    const NoiseStream stream{c.stochastic.seed, static_cast<std::uint32_t>(i), c.integrator.dt};
    ConvolutionState st = make_convolution(kind, g, c.model.N, stream);
    std::optional<FieldWriter> w;
    if (c.diagnostics.snapshots) w.emplace(a.path("psi_" + std::to_string(i) + ".b4df"), g, 2);
    for (long long j = 0; j <= steps; ++j) {
      if (j > 0) evolve_convolution(st, c.integrator.dt, stream);
      second[i][static_cast<std::size_t>(j)] = sobolev_norm_sq(st.pair.position, 0.0);
      if (w && j % c.diagnostics.record_every == 0) w->write(st.pair);
    }
  });
  auto os = a.open("variance.csv");
  os << "time,mean_square,exact_variance\n" << std::setprecision(17);
  for (long long j = 0; j <= steps; ++j) {
    if (j % c.diagnostics.record_every != 0 && j != steps) continue;
    const double t = static_cast<double>(j) * c.integrator.dt;
    double acc = 0.0;
    for (std::size_t i = 0; i < paths; ++i) acc += second[i][static_cast<std::size_t>(j)];
    os << t << ',' << acc / static_cast<double>(paths) << ',' << convolution_variance(kind, g, c.model.N, t) << '\n';
  }
}

void run_wick_convergence(const RunConfig& c, Artifacts& a) {
  WickCauchyProbe p;
  p.Ns = c.params.Ns;
  p.t = c.params.t;
  p.sobolev = c.params.sobolev;
  p.samples = c.params.samples;
  p.seed = c.stochastic.seed;
  const auto rows = wick_cauchy_probe(grid_of(c), p);
  bool decreasing = true;
  for (std::size_t j = 1; j < rows.size(); ++j) decreasing = decreasing && rows[j].mean_norm < rows[j - 1].mean_norm;
  {
    auto os = a.open("wick_convergence.csv");
    os << "N,mean_norm,se,mean_sq,exact_mean_sq\n" << std::setprecision(17);
    for (const auto& r : rows)
      os << r.N << ',' << r.mean_norm << ',' << r.se << ',' << r.mean_sq << ',' << r.exact_mean_sq << '\n';
  }
  nlohmann::ordered_json j{{"t", p.t}, {"sobolev", p.sobolev}, {"samples", p.samples}, {"strictly_decreasing", decreasing}};
  auto& arr = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    arr.push_back({{"N", r.N}, {"mean_norm", r.mean_norm}, {"se", r.se}, {"mean_sq", r.mean_sq},
                   {"exact_mean_sq", r.exact_mean_sq}});
  write_json_file(a, "wick_convergence.json", j);
  auto os = a.open("wick_convergence.gp");
  os << "set datafile separator ','\nset logscale xy\nset xlabel 'N'\nset ylabel 'E |:Psi_2N^2: - :Psi_N^2:|'\n"
     << "plot 'wick_convergence.csv' every ::1 using 1:2:3 with yerrorlines title 'Monte Carlo', "
        "'' every ::1 using 1:(sqrt($5)) with linespoints title 'sqrt of exact mean square'\n";
}

struct TrajectoryJob {
  ModelSpec model;
  std::vector<std::string> diagnostics;
};

void run_simulate(const RunConfig& c, Artifacts& a, bool damped) {
  const Grid g = grid_of(c);
  const IntegratorConfig cfg = integrator_of(c);
  step_count(c);
  ModelSpec model;
  model.damped = damped;
  model.k = c.model.k;
  model.sign = c.model.sign;
  model.cutoff = c.model.N;
  model.noise = c.params.noise;
  model.nonlinear = c.params.nonlinear;
  const std::size_t paths = c.stochastic.ensemble;
  std::vector<double> stop(paths, 0.0);
  std::vector<char> blew(paths, 0);
  std::optional<GibbsEnsemble> gibbs;
  if (damped && c.params.init == "gibbs")
    gibbs = sample_rhoN(gibbs_of(c), NoiseStream{c.stochastic.seed ^ 0x9E3779B97F4A7C15ull, 0, 0.0}, g, paths);
  parallel_for(paths, c.threads, [&](std::size_t i) {
    const auto path = static_cast<std::uint32_t>(i);
    // the damped Strang step splits the OU flow into half steps
    const double base = damped && cfg.scheme == Scheme::strang ? 0.5 * c.integrator.dt : c.integrator.dt;
    const NoiseStream stream{c.stochastic.seed, path, base};
    PairState init(g);
    if (c.params.init == "hs")
      init = random_initial_data(g, c.params.s, c.params.amplitude, c.stochastic.seed, path);
    else if (c.params.init == "mu2")
      init = sample_initial_mu2(NoiseStream{c.stochastic.seed, path, 0.0}, g);
    else if (c.params.init == "gibbs")
      init = gibbs->states[i];
    const TrajectoryRecord rec = run_trajectory(init, model, cfg, c.integrator.T, stream, c.diagnostics.observables,
                                                c.diagnostics.record_every);
    const std::string stem = paths == 1 ? "trajectory" : "trajectory_" + std::to_string(i);
    {
      auto os = a.open(stem + ".csv");
      rec.write_csv(os);
    }
    if (c.diagnostics.snapshots) {
      FieldWriter w(a.path(stem + ".b4df"), g, 2);
      w.write(init);
      w.write(rec.final_state);
    }
    stop[i] = rec.stop_time;
    blew[i] = rec.blown_up;
  });
  for (std::size_t i = 0; i < paths; ++i)
    if (blew[i])
      throw BlowUp("path " + std::to_string(i) + " left the threshold ball at t=" + std::to_string(stop[i]), stop[i]);
}

void run_gibbs_sample(const RunConfig& c, Artifacts& a) {
  const Grid g = grid_of(c);
  const GibbsEnsemble ens = sample_rhoN(gibbs_of(c), NoiseStream{c.stochastic.seed, 0, 0.0}, g, c.stochastic.ensemble);
  const auto& obs = c.diagnostics.observables;
  {
    auto os = a.open("observables.csv");
    os << "sample";
    for (const auto& o : obs) os << ',' << o;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < ens.states.size(); ++i) {
      os << i;
      for (const auto& o : obs) os << ',' << evaluate_observable(o, ens.states[i], c.model.N, c.model.k);
      os << '\n';
    }
  }
  if (c.diagnostics.snapshots) {
    FieldWriter w(a.path("samples.b4df"), g, 2);
    for (std::size_t i = 0; i < ens.states.size(); ++i) {
      PairState st = ens.states[i];
      st.time = static_cast<double>(i);
      w.write(st);
    }
  }
  write_json_file(a, "gibbs.json",
                  {{"k", c.model.k},
                   {"N", c.model.N},
                   {"sampler", c.params.sampler},
                   {"samples", ens.states.size()},
                   {"acceptance", ens.acceptance},
                   {"warning", ens.warning}});
}

void run_invariance(const RunConfig& c, Artifacts& a) {
  step_count(c);
  InvarianceOptions opt;
  opt.nonlinear = c.params.nonlinear;
  opt.weak_order = c.params.weak_order;
  const InvarianceReport r =
      invariance_test(gibbs_of(c), c.integrator.dt, c.integrator.T, c.stochastic.ensemble,
                      NoiseStream{c.stochastic.seed, 0, 0.0}, grid_of(c), c.diagnostics.observables, opt);
  {
    auto os = a.open("invariance.json");
    r.write_json(os);
  }
  auto os = a.open("invariance.csv");
  r.write_csv(os);
}

void run_imethod_audit(const RunConfig& c, Artifacts& a) {
  const Grid g = grid_of(c);
  step_count(c);
  AuditRunConfig cfg;
  cfg.integrator = integrator_of(c);
  cfg.T = c.integrator.T;
  cfg.noise = c.params.noise;
  cfg.record_every = c.diagnostics.record_every;
  const PairState init = c.params.init == "hs"
                             ? random_initial_data(g, c.params.s, c.params.amplitude, c.stochastic.seed, 0)
                             : PairState(g);
  const IOperator I{c.model.N, c.params.s, c.params.smooth_i};
  const EnergyLedger led = run_energy_audit(init, I, cfg, NoiseStream{c.stochastic.seed, 0, c.integrator.dt});
  {
    auto os = a.open("ledger.csv");
    led.write_csv(os);
  }
  auto os = a.open("ledger.json");
  led.write_json(os);
}

void run_commutator(const RunConfig& c, Artifacts& a) {
  CommutatorProbe p;
  p.kind = c.params.kind == "c2" ? CommutatorKind::c2 : c.params.kind == "c3" ? CommutatorKind::c3 : CommutatorKind::c1;
  p.k = c.model.k;
  p.s = c.params.s;
  p.Ns = c.params.Ns;
  p.samples = c.params.samples;
  p.family = c.params.family == "dense" ? FieldFamily::dense : FieldFamily::sparse;
  p.dim = c.grid.d;
  p.band = c.params.band;
  p.per_shell = c.params.per_shell;
  p.gamma = c.params.gamma;
  p.gamma0 = c.params.gamma0;
  p.p = c.params.lebesgue_p;
  p.smooth_i = c.params.smooth_i;
  p.seed = c.stochastic.seed;
  p.tolerance = c.params.tolerance;
  write_scaling(a, "scaling", commutator_scaling(p));
}

void run_strichartz(const RunConfig& c, Artifacts& a) {
  StrichartzProbe p;
  p.p = c.params.p;
  p.dim = c.grid.d;
  p.Ns = c.params.Ns;
  p.samples = c.params.samples;
  p.data = c.params.data == "dirichlet" ? StrichartzData::dirichlet : StrichartzData::random;
  p.nodes = c.params.nodes;
  p.scale_nodes = c.params.scale_nodes;
  p.space_points = c.params.space_points;
  p.seed = c.stochastic.seed;
  write_scaling(a, "strichartz", strichartz_probe(p));
}

void run_variance_tables(const RunConfig& c, Artifacts& a) {
  const VarianceKind kind = c.params.kind == "alpha" ? VarianceKind::alpha : VarianceKind::undamped;
  std::vector<VarianceEntry> rows;
  for (int N = 0; N <= c.params.n_max; ++N) {
    const double t = kind == VarianceKind::alpha ? 0.0 : c.params.t;
    rows.push_back({kind, static_cast<double>(N), t,
                    VarianceTable::global().get(kind, N, t, c.grid.d, c.params.box)});
  }
  auto os = a.open("variance.csv");
  VarianceTable::write_csv(os, rows);
}

void dispatch(const RunConfig& c, Artifacts& a) {
  const std::string& s = c.subcommand;
  if (s == "sample-noise") return run_sample_noise(c, a);
  if (s == "wick-convergence") return run_wick_convergence(c, a);
  if (s == "simulate-snlb") return run_simulate(c, a, false);
  if (s == "simulate-sdnlb") return run_simulate(c, a, true);
  if (s == "gibbs-sample") return run_gibbs_sample(c, a);
  if (s == "invariance-test") return run_invariance(c, a);
  if (s == "imethod-audit") return run_imethod_audit(c, a);
  if (s == "commutator-scaling") return run_commutator(c, a);
  if (s == "strichartz-probe") return run_strichartz(c, a);
  if (s == "variance-tables") return run_variance_tables(c, a);
  throw ValidationError("unknown subcommand '" + s + "'");
}

void add_options(CLI::App& sub, RunConfig& c) {
  sub.add_option("--d", c.grid.d, "torus dimension");
  sub.add_option("--M", c.grid.M, "grid points per axis (0: subcommand default)");
  sub.add_option("--pad-factor", c.grid.pad_factor, "dealiasing pad factor");
  sub.add_option("--k", c.model.k, "nonlinearity degree");
  sub.add_option("--sign", c.model.sign, "+1 defocusing, -1 focusing");
  sub.add_option("--N", c.model.N, "frequency cutoff (I-operator N for imethod-audit)");
  sub.add_option("--dt", c.integrator.dt, "time step");
  sub.add_option("--T", c.integrator.T, "final time");
  sub.add_option("--scheme", c.integrator.scheme, "strang|lie");
  sub.add_option("--threshold", c.integrator.threshold, "blow-up threshold on the H^s' norm");
  sub.add_option("--s-prime", c.integrator.s_prime, "regularity of the blow-up norm");
  sub.add_option("--seed", c.stochastic.seed, "noise seed");
  sub.add_option("--paths,--ensemble", c.stochastic.ensemble, "ensemble size");
  sub.add_option("--observables", c.diagnostics.observables, "diagnostic names")->delimiter(',');
  sub.add_option("--record-every", c.diagnostics.record_every, "record one node every this many steps");
  sub.add_flag("--snapshots", c.diagnostics.snapshots, "write binary field snapshots");
  auto& p = c.params;
  sub.add_option("--kind", p.kind, "noise: undamped|damped; variance: alpha|sigma; commutator: c1|c2|c3");
  sub.add_option("--n-max", p.n_max, "largest N in variance tables");
  sub.add_option("--t", p.t, "evaluation time");
  sub.add_option("--s", p.s, "Sobolev regularity of data / I-operator exponent");
  sub.add_option("--amplitude", p.amplitude, "initial data scale");
  sub.add_option("--init", p.init, "initial data: zero|hs|mu2|gibbs");
  sub.add_option("--Ns", p.Ns, "comma separated N values")->delimiter(',');
  sub.add_option("--samples", p.samples, "samples per N (0: default)");
  sub.add_option("--sobolev", p.sobolev, "Sobolev index of the Cauchy-trend norm");
  sub.add_option("--p", p.p, "Strichartz exponent");
  sub.add_option("--nodes", p.nodes, "time nodes per unit time");
  sub.add_option("--scale-nodes", p.scale_nodes, "use max(nodes, 2 N^2) time nodes");
  sub.add_option("--space-points", p.space_points, "Monte Carlo spatial points (0: full grid)");
  sub.add_option("--data", p.data, "random|dirichlet");
  sub.add_option("--family", p.family, "sparse|dense");
  sub.add_option("--band", p.band, "test field frequency band");
  sub.add_option("--per-shell", p.per_shell, "sparse family points per dyadic shell");
  sub.add_option("--gamma", p.gamma, "C2 smoothness loss (< 0: k (2 - s))");
  sub.add_option("--gamma0", p.gamma0, "W^{-gamma0,p} index");
  sub.add_option("--lebesgue-p", p.lebesgue_p, "W^{-gamma0,p} exponent");
  sub.add_option("--smooth-i", p.smooth_i, "smooth I-operator symbol");
  sub.add_option("--tolerance", p.tolerance, "one-sided slope tolerance");
  sub.add_option("--sampler", p.sampler, "mh|pcn");
  sub.add_option("--burn-in", p.burn_in, "sampler burn-in");
  sub.add_option("--thinning", p.thinning, "sampler thinning");
  sub.add_option("--pcn-beta", p.pcn_beta, "pCN step");
  sub.add_option("--weighted", p.weighted, "Gibbs weight exp(-R_N) on (false: plain mu2)");
  sub.add_option("--nonlinear", p.nonlinear, "nonlinearity on");
  sub.add_option("--weak-order", p.weak_order, "also run dt/4 for the weak-order ratio");
  sub.add_option("--noise", p.noise, "stochastic forcing on");
  sub.add_option("--box", p.box, "restrict lattice sums to |n_i| <= box (< 0: none)");
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

int fail(std::ostream& err, int code, const char* kind, const std::string& sub, const std::string& why) {
  err << "snlb: status=" << code << " kind=" << kind << " subcommand=" << (sub.empty() ? "none" : sub) << " reason=\""
      << one_line(why) << "\"\n";
  return code;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Pseudospectral simulator and diagnostics for Wick-renormalized stochastic beam equations", "snlb"};
  app.fallthrough();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI config: one [subcommand] section of key = value lines");
  app.add_option("--output", c.output, "output directory (default: $SNLB_OUTPUT_ROOT/<subcommand>)");
  app.add_option("--threads", c.threads, "worker pool size (0: logical cores)");
  app.add_flag("--deterministic", c.deterministic, "byte-identical outputs: omit wall time from the manifest");
  static const std::vector<std::string> about{
      "sample Psi_N paths and compare the ensemble mean square with the exact variance",
      "Cauchy trend of :Psi_N^2: in H^sobolev against the exact lattice oracle",
      "integrate the undamped remainder equation",
      "integrate the damped remainder equation",
      "draw from the truncated Gibbs measure rho_N",
      "transport rho_N by the damped flow and compare observables",
      "energy-increment ledger for the modified energy E(I v)",
      "scaling of the I-operator commutators in N",
      "discrete Strichartz norm of the Schrodinger group against N",
      "Wick variance tables alpha_N or sigma_N(t)"};
  for (std::size_t i = 0; i < subcommands().size(); ++i)
    add_options(*app.add_subcommand(subcommands()[i], about[i]), c);

  // the config file is read before the command line so flags override it
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    std::string path;
    if (a == "--config" && i > 0)
      path = args[i - 1];
    else if (a.rfind("--config=", 0) == 0)
      path = a.substr(9);
    if (path.empty()) continue;
    if (!std::filesystem::exists(path))
      return fail(err, 1, "validation", "", "config file not found: " + std::filesystem::absolute(path).string());
  }

  try {
    app.parse(std::vector<std::string>(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return fail(err, 1, "validation", "", e.what());
  }
  for (const auto& name : subcommands())
    if (app.got_subcommand(name)) c.subcommand = name;

  try {
    resolve(c);
    if (c.output.empty()) {
      const char* root = std::getenv("SNLB_OUTPUT_ROOT");
      c.output = (std::filesystem::path(root && *root ? root : "snlb_out") / c.subcommand).string();
    }
    Artifacts a(c.output);
    nlohmann::ordered_json resolved = c;
    write_json_file(a, "resolved-config.json", resolved);

    const auto t0 = std::chrono::steady_clock::now();
    int status = 0;
    std::string reason;
    try {
      dispatch(c, a);
    } catch (const BlowUp& e) {
      status = 2;
      reason = e.what();
    } catch (const DealiasingError& e) {
      status = 2;
      reason = e.what();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::ordered_json m{{"schema", kManifestSchema},
                             {"program", "snlb"},
                             {"version", kVersion},
                             {"fftw", std::string(fftw_version)},
                             {"compiler", kCompiler},
                             {"subcommand", c.subcommand},
                             {"seed", c.stochastic.seed},
                             {"deterministic", c.deterministic},
                             {"status", status}};
    m["wall_time_seconds"] = c.deterministic ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(wall);
    auto names = a.names();
    names.erase(std::remove(names.begin(), names.end(), "manifest.json"), names.end());
    m["artifacts"] = names;
    a.path("manifest.json");
    write_json_file(a, "manifest.json", m);
    if (status != 0) return fail(err, status, "numerical", c.subcommand, reason);
    out << "snlb: " << c.subcommand << " wrote " << names.size() + 1 << " files to " << c.output << '\n';
    return 0;
  } catch (const BlowUp& e) {
    return fail(err, 2, "numerical", c.subcommand, e.what());
  } catch (const DealiasingError& e) {
    return fail(err, 2, "numerical", c.subcommand, e.what());
  } catch (const std::exception& e) {
    return fail(err, 1, "validation", c.subcommand, e.what());
  }
}

}  // namespace snlb
