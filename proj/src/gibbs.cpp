#include "snlb/gibbs.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "snlb/fft.hpp"
#include "snlb/norms.hpp"
#include "snlb/product.hpp"
#include "snlb/variance.hpp"
#include "snlb/wick.hpp"

namespace snlb {
namespace {

bool in_ball(int n2, double N) { return n2 <= N * N + 1e-9; }

// mu2 draw restricted to |n| <= N, keyed by the chain iteration
SpectralField low_gaussian(const Grid& g, double N, const KeyedNormal& rng, std::uint64_t iter, std::uint32_t path) {
  SpectralField x(g);
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0 || !in_ball(m.norm2, N)) return;
    x[m.index] = rng.complex_normal(m.n, g.dim(), iter, path, Purpose::proposal, 0) / (1.0 + m.norm2);
  });
  return x;
}

struct MeanVar {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double var() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double se() const { return n > 1 ? std::sqrt(var() / n) : 0.0; }
};

}  // namespace

void GibbsSpec::validate() const {
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("Gibbs measure needs odd k");
  if (N < 0.0) throw std::invalid_argument("Gibbs cutoff N must be >= 0");
  if (burn_in < 0 || thinning < 1) throw std::invalid_argument("burn-in must be >= 0 and thinning >= 1");
  if (sampler == Sampler::pcn && !(pcn_beta > 0.0 && pcn_beta <= 1.0))
    throw std::invalid_argument("pCN step must be in (0, 1]");
}

double grid_alpha(const Grid& g, double N) {
  return VarianceTable::global().get(VarianceKind::alpha, N, 0.0, g.dim(), g.max_mode());
}

double compute_RN(const SpectralField& u, double N, int k) {
  const double alpha = grid_alpha(u.grid(), N);
  return integral_of_projected_hermite(u, alpha, k + 1, N) / (k + 1);
}

GibbsEnsemble sample_rhoN(const GibbsSpec& spec, const NoiseStream& stream, const Grid& g, std::size_t count,
                          std::uint32_t first_path) {
  spec.validate();
  GibbsEnsemble out;
  out.states.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.states.push_back(sample_initial_mu2(stream.with_path(first_path + static_cast<std::uint32_t>(i)), g));
  if (!spec.weighted || count == 0) return out;

  const KeyedNormal rng = stream.normal();
  const std::uint32_t chain = stream.path;
  std::uint64_t iter = 0;
  SpectralField x = low_gaussian(g, spec.N, rng, iter++, chain);
  double Rx = compute_RN(x, spec.N, spec.k);
  long accepted = 0, proposed = 0;
  const double rho = std::sqrt(1.0 - spec.pcn_beta * spec.pcn_beta);
  auto advance = [&]() {
    SpectralField y = low_gaussian(g, spec.N, rng, iter, chain);
    if (spec.sampler == Sampler::pcn) {
      y *= spec.pcn_beta;
      y.axpy(rho, x);
    }
    const double Ry = compute_RN(y, spec.N, spec.k);
    const double u = rng.uniform(0, iter, chain, Purpose::accept, 0);
    ++iter;
    ++proposed;
    // both samplers leave mu2 invariant, so the ratio is exp(-R(y) + R(x))
    if (std::log(u) < Rx - Ry) {
      x = std::move(y);
      Rx = Ry;
      ++accepted;
    }
  };
  for (long b = 0; b < spec.burn_in; ++b) advance();
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0)
      for (long t = 0; t < spec.thinning; ++t) advance();
    auto& st = out.states[i];
    for_each_mode(g, [&](const ModeRef& m) {
      if (in_ball(m.norm2, spec.N)) st.position[m.index] = x[m.index];
    });
  }
  out.acceptance = proposed ? static_cast<double>(accepted) / proposed : 1.0;
  if (out.acceptance < 0.01) {
    std::ostringstream os;
    os << "acceptance rate " << out.acceptance << " below 1% for N=" << spec.N << ", k=" << spec.k
       << "; independence proposals are too far from the target";
    out.warning = os.str();
  }
  return out;
}

double potential_variance(const Grid& g, double N, int k) {
  const int band = std::min(static_cast<int>(std::floor(N + 1e-9)), g.max_mode());
  const int q = k + 1;
  const Grid work(g.dim(), work_points(q, std::max(band, 1), 0));
  SpectralField c(work);
  for_each_mode(work, [&](const ModeRef& m) {
    if (m.weight == 0 || !in_ball(m.norm2, N) || !g.representable(m.n)) return;
    c[m.index] = 1.0 / ((1.0 + m.norm2) * (1.0 + m.norm2));
  });
  const PhysicalField C = inverse_transform(c);
  double acc = 0.0;
  for (double v : C.values) acc += std::pow(v, q);
  return std::tgamma(q + 1.0) / (q * q) * acc * work.cell_volume();
}

std::vector<DensityProbeRow> density_convergence_probe(const std::vector<double>& Ns, int k, std::size_t samples,
                                                       const NoiseStream& stream, const Grid& g) {
  if (Ns.empty()) throw std::invalid_argument("density probe needs at least one N");
  for (std::size_t j = 0; j + 1 < Ns.size(); ++j)
    if (!(Ns[j] < Ns[j + 1])) throw std::invalid_argument("density probe N list must be increasing");
  std::vector<MeanVar> R(Ns.size()), W(Ns.size()), D(Ns.size());
  for (std::size_t i = 0; i < samples; ++i) {
    const SpectralField u = sample_initial_mu2(stream.with_path(static_cast<std::uint32_t>(i)), g).position;
    std::vector<double> r(Ns.size());
    for (std::size_t j = 0; j < Ns.size(); ++j) {
      r[j] = compute_RN(u, Ns[j], k);
      R[j].add(r[j]);
      W[j].add(std::exp(-r[j]));
    }
    for (std::size_t j = 0; j + 1 < Ns.size(); ++j) D[j].add(r[j] - r[j + 1]);
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> exact(Ns.size());
  for (std::size_t j = 0; j < Ns.size(); ++j) exact[j] = potential_variance(g, Ns[j], k);
  std::vector<DensityProbeRow> rows;
  for (std::size_t j = 0; j < Ns.size(); ++j) {
    const bool inner = j + 1 < Ns.size();
    rows.push_back({Ns[j], R[j].mean, R[j].var(), W[j].mean, W[j].se(), inner ? D[j].var() : nan, exact[j],
                    inner ? exact[j + 1] - exact[j] : nan});
  }
  return rows;
}

std::vector<std::string> default_observables() {
  return {"u2_shell0", "u2_shell1", "u2_shell2", "ut2_shell0", "ut2_shell1", "ut2_shell2", "R_N", "h_minus_quarter_sq"};
}

double evaluate_observable(const std::string& name, const PairState& st, double N, int k) {
  if (name.rfind("u2_shell", 0) == 0) return shell_power(st.position, std::stoi(name.substr(8)));
  if (name.rfind("ut2_shell", 0) == 0) return shell_power(st.velocity, std::stoi(name.substr(9)));
  if (name == "R_N") return compute_RN(st.position, N, k);
  if (name == "h_minus_quarter_sq") return sobolev_norm_sq(st.position, -0.25);
  throw std::invalid_argument("unknown observable '" + name + "'");
}

InvarianceReport invariance_test(const GibbsSpec& spec, double dt, double T, std::size_t paths,
                                 const NoiseStream& stream, const Grid& g,
                                 const std::vector<std::string>& observables, const InvarianceOptions& opt) {
  spec.validate();
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("invariance_test: need dt > 0 and T >= 0");
  return invariance_test(spec, sample_rhoN(spec, stream, g, paths), dt, T, stream, observables, opt);
}

InvarianceReport invariance_test(const GibbsSpec& spec, const GibbsEnsemble& ens, double dt, double T,
                                 const NoiseStream& stream, const std::vector<std::string>& observables,
                                 const InvarianceOptions& opt) {
  spec.validate();
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("invariance_test: need dt > 0 and T >= 0");
  if (ens.states.empty()) throw std::invalid_argument("invariance_test: empty ensemble");
  const Grid& g = ens.states.front().grid();
  const std::size_t paths = ens.states.size();
  const int levels = opt.weak_order ? 3 : 2;
  const double base = dt / (levels == 3 ? 8.0 : 4.0);
  const std::size_t nobs = observables.size();
  std::vector<MeanVar> before(nobs), after(nobs), diff(nobs), d01(nobs), d12(nobs), weak(nobs);

  for (std::size_t p = 0; p < paths; ++p) {
    const PairState& init = ens.states[p];
    NoiseStream s = stream.with_path(static_cast<std::uint32_t>(p));
    s.base_step = base;
    PairState high;
    std::vector<std::vector<double>> phi(static_cast<std::size_t>(levels), std::vector<double>(nobs));
    for (int l = 0; l < levels; ++l) {
      IntegratorConfig cfg;
      cfg.dt = dt / std::pow(2.0, l);
      DampedStepper stepper(g, spec.k, spec.N, cfg, s, opt.nonlinear);
      // the high band is exact and sees the same base-step noise at every level, so it is evolved once
      stepper.freeze_high_band(l > 0);
      PairState st = init;
      const auto steps = std::llround(T / cfg.dt);
      for (long long j = 0; j < steps; ++j)
        if (!stepper.step(st))
          throw BlowUp("path " + std::to_string(p) + " exceeded the blow-up threshold at t=" + std::to_string(st.time) +
                           " (dt=" + std::to_string(cfg.dt) + ")",
                       st.time);
      if (l == 0)
        high = st;
      else
        for_each_mode(g, [&](const ModeRef& m) {
          if (in_ball(m.norm2, spec.N)) return;
          st.position[m.index] = high.position[m.index];
          st.velocity[m.index] = high.velocity[m.index];
        });
      for (std::size_t o = 0; o < nobs; ++o) phi[l][o] = evaluate_observable(observables[o], st, spec.N, spec.k);
    }
    for (std::size_t o = 0; o < nobs; ++o) {
      const double b = evaluate_observable(observables[o], init, spec.N, spec.k);
      before[o].add(b);
      after[o].add(phi[0][o]);
      diff[o].add(phi[0][o] - b);
      d01[o].add(phi[0][o] - phi[1][o]);
      if (levels == 3) {
        d12[o].add(phi[1][o] - phi[2][o]);
        weak[o].add(phi[0][o] - 5.0 * phi[1][o] + 4.0 * phi[2][o]);
      }
    }
  }

  InvarianceReport rep;
  rep.k = spec.k;
  rep.N = spec.N;
  rep.dt = dt;
  rep.T = T;
  rep.paths = paths;
  rep.acceptance = ens.acceptance;
  rep.nonlinear = opt.nonlinear;
  rep.weak_order_run = levels == 3;
  rep.all_pass = true;
  for (std::size_t o = 0; o < nobs; ++o) {
    ObservableResult r;
    r.name = observables[o];
    r.mean_before = before[o].mean;
    r.mean_after = after[o].mean;
    r.se_diff = diff[o].se();
    r.drift_dt = d01[o].mean;
    r.se_drift_dt = d01[o].se();
    r.drift_half = d12[o].mean;
    r.se_drift_half = d12[o].se();
    r.weak_residual = weak[o].mean;
    r.se_weak_residual = weak[o].se();
    r.allowance = 4.0 / 3.0 * std::abs(r.drift_dt);
    r.pass = std::abs(r.mean_after - r.mean_before) <= 3.0 * r.se_diff + r.allowance;
    rep.all_pass = rep.all_pass && r.pass;
    rep.observables.push_back(r);
  }
  return rep;
}

void InvarianceReport::write_json(std::ostream& os) const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["N"] = N;
  j["dt"] = dt;
  j["T"] = T;
  j["paths"] = paths;
  j["acceptance"] = acceptance;
  j["nonlinear"] = nonlinear;
  j["all_pass"] = all_pass;
  auto& arr = j["observables"] = nlohmann::ordered_json::array();
  for (const auto& r : observables) {
    nlohmann::ordered_json o;
    o["name"] = r.name;
    o["mean_before"] = r.mean_before;
    o["mean_after"] = r.mean_after;
    o["se_diff"] = r.se_diff;
    o["allowance"] = r.allowance;
    o["drift_dt"] = r.drift_dt;
    o["se_drift_dt"] = r.se_drift_dt;
    if (weak_order_run) {
      o["drift_half"] = r.drift_half;
      o["se_drift_half"] = r.se_drift_half;
      o["weak_residual"] = r.weak_residual;
      o["se_weak_residual"] = r.se_weak_residual;
    }
    o["pass"] = r.pass;
    arr.push_back(o);
  }
  os << j.dump(2) << '\n';
}

void InvarianceReport::write_csv(std::ostream& os) const {
  os << "observable,mean_before,mean_after,se_diff,allowance,drift_dt,se_drift_dt,drift_half,se_drift_half,weak_residual,se_weak_residual,pass\n";
  os << std::setprecision(17);
  for (const auto& r : observables)
    os << r.name << ',' << r.mean_before << ',' << r.mean_after << ',' << r.se_diff << ',' << r.allowance << ','
       << r.drift_dt << ',' << r.se_drift_dt << ',' << r.drift_half << ',' << r.se_drift_half << ','
       << r.weak_residual << ',' << r.se_weak_residual << ',' << (r.pass ? 1 : 0) << '\n';
}

}  // namespace snlb
