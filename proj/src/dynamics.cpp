#include "snlb/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <map>

#include "snlb/gibbs.hpp"
#include "snlb/multiplier.hpp"
#include "snlb/norms.hpp"
#include "snlb/product.hpp"
#include "snlb/stats.hpp"
#include "snlb/variance.hpp"
#include "snlb/wick.hpp"

namespace snlb {
namespace {

bool in_ball(int n2, double cutoff) { return cutoff < 0.0 || n2 <= cutoff * cutoff + 1e-9; }

void project(SpectralField& f, double cutoff) {
  if (cutoff < 0.0) return;
  for_each_mode(f.grid(), [&](const ModeRef& m) {
    if (!in_ball(m.norm2, cutoff)) f[m.index] = 0.0;
  });
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(blowup_threshold > 0.0)) throw std::invalid_argument("blowup threshold must be positive");
}

void linear_step_undamped(PairState& st, double dt) {
  auto& a = st.position;
  auto& b = st.velocity;
  const int B = st.grid().max_mode();
  std::vector<std::array<double, 4>> table(static_cast<std::size_t>(st.grid().dim() * B * B + 1));
  table[0] = {1.0, dt, 0.0, 1.0};
  for (std::size_t n2 = 1; n2 < table.size(); ++n2) {
    const double w = static_cast<double>(n2);
    const double c = std::cos(w * dt), s = std::sin(w * dt);
    table[n2] = {c, s / w, -w * s, c};
  }
  for_each_mode(st.grid(), [&](const ModeRef& m) {
    const auto& p = table[static_cast<std::size_t>(m.norm2)];
    const cplx a0 = a[m.index], b0 = b[m.index];
    a[m.index] = p[0] * a0 + p[1] * b0;
    b[m.index] = p[2] * a0 + p[3] * b0;
  });
  st.time += dt;
}

void linear_step_bessel(PairState& st, double dt, double cutoff) {
  auto& a = st.position;
  auto& b = st.velocity;
  for_each_mode(st.grid(), [&](const ModeRef& m) {
    if (!in_ball(m.norm2, cutoff)) return;
    const double w = 1.0 + m.norm2;
    const double c = std::cos(w * dt), s = std::sin(w * dt);
    const cplx a0 = a[m.index], b0 = b[m.index];
    a[m.index] = c * a0 + (s / w) * b0;
    b[m.index] = -w * s * a0 + c * b0;
  });
}

bool exceeds_threshold(const PairState& st, const IntegratorConfig& cfg) {
  const double n = pair_norm(st, cfg.s_prime);
  return !std::isfinite(n) || n > cfg.blowup_threshold;
}

RemainderStepper::RemainderStepper(int k, int sign, double cutoff, IntegratorConfig cfg)
    : k_(k), sign_(sign), cutoff_(cutoff), cfg_(cfg) {
  cfg_.validate();
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 (defocusing) or -1 (focusing)");
}

SpectralField RemainderStepper::force(const SpectralField& v, const WickPowers& xi) const {
  SpectralField f = renormalized_nonlinearity(v, xi, k_);
  project(f, cutoff_);
  if (sign_ < 0) f *= -1.0;
  return f;
}

bool RemainderStepper::step(PairState& st, WickSource& src) {
  const double t = st.time, dt = cfg_.dt;
  if (cfg_.scheme == Scheme::lie) {
    st.velocity.axpy(-dt, force(st.position, src.at(t)));
    linear_step_undamped(st, dt);
  } else {
    const bool reuse = cached_force_ && std::abs(cached_time_ - t) < 1e-12 &&
                       std::equal(cached_v_->coeffs().begin(), cached_v_->coeffs().end(), st.position.coeffs().begin());
    const SpectralField f0 = reuse ? *cached_force_ : force(st.position, src.at(t));
    st.velocity.axpy(-0.5 * dt, f0);
    linear_step_undamped(st, dt);
    st.time = t + dt;
    SpectralField f1 = force(st.position, src.at(t + dt));
    st.velocity.axpy(-0.5 * dt, f1);
    cached_v_ = st.position;
    cached_force_ = std::move(f1);
    cached_time_ = t + dt;
  }
  st.time = t + dt;
  if (exceeds_threshold(st, cfg_)) {
    st.blown_up = true;
    return false;
  }
  return true;
}

bool step_remainder(PairState& st, WickSource& src, int k, int sign, const IntegratorConfig& cfg, double cutoff) {
  RemainderStepper stepper(k, sign, cutoff, cfg);
  return stepper.step(st, src);
}

DampedStepper::DampedStepper(const Grid& g, int k, double N, IntegratorConfig cfg, NoiseStream stream,
                             bool nonlinear)
    : grid_(g), k_(k), N_(N), cfg_(cfg), stream_(stream), nonlinear_(nonlinear) {
  cfg_.validate();
  if (k % 2 == 0 || k < 1) throw std::invalid_argument("damped dynamics needs odd k (defocusing Gibbs setting)");
  if (N < 0.0) throw std::invalid_argument("damped dynamics needs a cutoff N >= 0");
  alpha_ = VarianceTable::global().get(VarianceKind::alpha, N, 0.0, g.dim(), g.max_mode());
  high_.kind = ConvolutionKind::damped;
  high_.inner = N;
  high_.pair = PairState(g, 0.0);
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight != 0 && in_ball(m.norm2, N_)) ou_modes_.push_back(m);
  });
}

SpectralField DampedStepper::force(const SpectralField& u) const {
  return projected_hermite(u, ou_modes_, alpha_, k_, N_);
}

void DampedStepper::kick(PairState& st, double h) {
  if (!nonlinear_) return;
  const bool reuse = cached_force_ && std::equal(cached_u_->coeffs().begin(), cached_u_->coeffs().end(),
                                                 st.position.coeffs().begin());
  if (!reuse) {
    cached_force_ = force(st.position);
    cached_u_ = st.position;
  }
  st.velocity.axpy(-h, *cached_force_);
}

void DampedStepper::ou_flow(PairState& st, double t0, double h) {
  const KeyedNormal rng = stream_.normal();
  const int d = grid_.dim();
  auto apply = [&](double hs, std::uint64_t key) {
    const double decay = std::exp(-hs), amp = std::sqrt(-std::expm1(-2.0 * hs));
    for (const ModeRef& m : ou_modes_) {
      const cplx z = rng.complex_normal(m.n, d, key, stream_.path, Purpose::ou_velocity, 0);
      st.velocity[m.index] = decay * st.velocity[m.index] + amp * z;
    }
  };
  if (stream_.base_step <= 0.0) {
    apply(h, ou_calls_++);
    return;
  }
  const double hb = stream_.base_step;
  const auto r = std::llround(h / hb), j0 = std::llround(t0 / hb);
  if (r < 1 || std::abs(h / hb - r) > 1e-6 || std::abs(t0 / hb - j0) > 1e-6)
    throw std::invalid_argument("OU step " + std::to_string(h) + " at t=" + std::to_string(t0) +
                                " is not aligned to base step " + std::to_string(hb));
  for (long long i = 0; i < r; ++i) apply(hb, static_cast<std::uint64_t>(j0 + i));
}

bool DampedStepper::step(PairState& st) {
  if (st.grid() != grid_) throw std::invalid_argument("DampedStepper: state grid differs from stepper grid");
  const double t = st.time, dt = cfg_.dt;
  if (cfg_.scheme == Scheme::strang) {
    ou_flow(st, t, 0.5 * dt);
    kick(st, 0.5 * dt);
    linear_step_bessel(st, dt, N_);
    kick(st, 0.5 * dt);
    ou_flow(st, t + 0.5 * dt, 0.5 * dt);
  } else {
    kick(st, dt);
    linear_step_bessel(st, dt, N_);
    ou_flow(st, t, dt);
  }
  // high band: exact damped linear flow driven by the same noise stream
  if (!high_frozen_) {
    std::swap(high_.pair, st);
    high_.pair.time = t;
    evolve_convolution(high_, dt, stream_);
    std::swap(high_.pair, st);
  }
  st.time = t + dt;
  if (exceeds_threshold(st, cfg_)) {
    st.blown_up = true;
    return false;
  }
  return true;
}

bool step_damped(PairState& st, DampedStepper& stepper) { return stepper.step(st); }

double beam_linear_energy(const PairState& st) {
  double acc = 0.0;
  for_each_mode(st.grid(), [&](const ModeRef& m) {
    if (m.weight == 0) return;
    const double w = static_cast<double>(m.norm2) * m.norm2;
    acc += m.weight * (w * std::norm(st.position[m.index]) + std::norm(st.velocity[m.index]));
  });
  return 0.5 * acc;
}

double damped_linear_energy(const PairState& st) {
  double acc = 0.0;
  for_each_mode(st.grid(), [&](const ModeRef& m) {
    if (m.weight == 0) return;
    const double w = (1.0 + m.norm2) * (1.0 + m.norm2);
    acc += m.weight * (w * std::norm(st.position[m.index]) + std::norm(st.velocity[m.index]));
  });
  return 0.5 * acc;
}

double beam_energy(const PairState& st, int k) {
  return beam_linear_energy(st) + integral_of_power(st.position, k + 1) / (k + 1);
}

Diagnostic make_diagnostic(const std::string& name, const ModelSpec& model, const IntegratorConfig& cfg) {
  if (name == "h_sprime") return [s = cfg.s_prime](const PairState& st) { return pair_norm(st, s); };
  if (name == "l2") return [](const PairState& st) { return sobolev_norm(st.position, 0.0); };
  if (name == "h_minus_quarter") return [](const PairState& st) { return sobolev_norm_sq(st.position, -0.25); };
  if (name == "mode0") return [](const PairState& st) { return st.position[0].real(); };
  if (name == "linear_energy") {
    if (model.damped) return [](const PairState& st) { return damped_linear_energy(st); };
    return [](const PairState& st) { return beam_linear_energy(st); };
  }
  if (name == "energy") {
    if (model.damped) {
      return [model](const PairState& st) {
        const double N = model.cutoff < 0.0 ? std::sqrt(double(st.grid().dim())) * st.grid().max_mode() + 0.5
                                            : model.cutoff;
        return damped_linear_energy(st) + compute_RN(st.position, N, model.k);
      };
    }
    return [model](const PairState& st) {
      return beam_linear_energy(st) + model.sign * integral_of_power(st.position, model.k + 1) / (model.k + 1);
    };
  }
  throw std::invalid_argument("unknown diagnostic '" + name + "'");
}

TrajectoryRecord run_trajectory(const PairState& initial, const ModelSpec& model, const IntegratorConfig& cfg,
                                double T, const NoiseStream& stream, const std::vector<std::string>& diagnostics,
                                int record_every) {
  cfg.validate();
  if (T < 0.0) throw std::invalid_argument("T must be >= 0");
  TrajectoryRecord rec;
  rec.columns.push_back("time");
  std::vector<Diagnostic> diags;
  for (const auto& n : diagnostics) {
    rec.columns.push_back(n);
    diags.push_back(make_diagnostic(n, model, cfg));
  }
  PairState st = initial;
  auto record = [&]() {
    std::vector<double> row{st.time};
    for (auto& d : diags) row.push_back(d(st));
    rec.rows.push_back(std::move(row));
  };
  record();
  const auto steps = static_cast<long long>(std::llround(T / cfg.dt));
  const Grid& g = initial.grid();
  const int k = model.nonlinear ? model.k : 0;

  std::unique_ptr<WickSource> source;
  std::optional<RemainderStepper> rem;
  std::optional<DampedStepper> damp;
  if (model.damped) {
    const double N = model.cutoff < 0.0 ? std::sqrt(double(g.dim())) * g.max_mode() + 0.5 : model.cutoff;
    NoiseStream s = stream;
    damp.emplace(g, model.k, N, cfg, s, model.nonlinear);
  } else {
    const Grid work = wick_work_grid(g, std::max(model.k, 1), g.max_mode());
    if (model.noise && model.nonlinear)
      source = std::make_unique<ConvolutionWickSource>(ConvolutionKind::undamped, g, model.cutoff, model.k, stream);
    else
      source = std::make_unique<ZeroWickSource>(work, model.k);
    rem.emplace(model.k, model.sign, model.cutoff, cfg);
  }

  for (long long j = 1; j <= steps; ++j) {
    bool ok;
    if (damp) {
      ok = damp->step(st);
    } else if (k == 0) {
      linear_step_undamped(st, cfg.dt);
      ok = !exceeds_threshold(st, cfg);
      st.blown_up = !ok;
    } else {
      ok = rem->step(st, *source);
    }
    if (!ok) {
      rec.blown_up = true;
      rec.stop_time = st.time;
      record();
      rec.final_state = st;
      return rec;
    }
    if (j % record_every == 0 || j == steps) record();
  }
  rec.stop_time = st.time;
  rec.final_state = std::move(st);
  return rec;
}

void TrajectoryRecord::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

}  // namespace snlb

namespace snlb {

PairState random_initial_data(const Grid& g, double s, double amplitude, std::uint64_t seed, std::uint32_t path) {
  const KeyedNormal rng(seed);
  const double decay = s + 1.0 + 0.5 * g.dim();
  PairState init(g);
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    const double b = std::sqrt(1.0 + m.norm2);
    init.position[m.index] =
        amplitude * std::pow(b, -decay) * rng.complex_normal(m.n, g.dim(), 0, path, Purpose::initial_position, 0);
    init.velocity[m.index] =
        amplitude * std::pow(b, 2.0 - decay) * rng.complex_normal(m.n, g.dim(), 0, path, Purpose::initial_velocity, 0);
  });
  return init;
}

std::vector<CutoffGapRow> cutoff_gap_probe(const Grid& g, const CutoffGapProbe& probe, const IntegratorConfig& cfg) {
  cfg.validate();
  if (probe.Ns.empty()) throw std::invalid_argument("cutoff gap probe needs at least one N");
  if (probe.samples < 2) throw std::invalid_argument("cutoff gap probe needs at least 2 samples");
  for (double N : probe.Ns) {
    if (!(N > 0.0)) throw std::invalid_argument("cutoff gap probe needs N > 0");
    if (2.0 * N > g.max_mode())
      throw std::invalid_argument("cutoff 2N = " + std::to_string(2.0 * N) + " does not fit on a grid with max mode " +
                                  std::to_string(g.max_mode()));
  }
  const ModelSpec base{false, probe.k, probe.sign, -1.0, true, true};

  std::vector<RunningStats> stats(probe.Ns.size());
  std::vector<CutoffGapRow> rows(probe.Ns.size());
  for (std::size_t i = 0; i < probe.samples; ++i) {
    const auto path = static_cast<std::uint32_t>(i);
    const PairState init = random_initial_data(g, probe.s, probe.amplitude, probe.seed, path);
    const NoiseStream stream{probe.seed, path, cfg.dt};
    std::map<double, std::optional<PairState>> finals;
    for (double N : probe.Ns)
      for (double c : {N, 2.0 * N}) {
        if (finals.contains(c)) continue;
        ModelSpec model = base;
        model.cutoff = c;
        TrajectoryRecord rec = run_trajectory(init, model, cfg, probe.T, stream, {}, 1 << 30);
        if (rec.blown_up)
          finals[c] = std::nullopt;
        else
          finals[c] = std::move(rec.final_state);
      }
    for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
      const auto& a = finals[probe.Ns[j]];
      const auto& b = finals[2.0 * probe.Ns[j]];
      if (!a || !b) {
        ++rows[j].blown_up;
        continue;
      }
      PairState d(g);
      d.position = a->position - b->position;
      d.velocity = a->velocity - b->velocity;
      const double gap = pair_norm(d, cfg.s_prime);
      stats[j].add(gap);
      rows[j].max_gap = std::max(rows[j].max_gap, gap);
    }
  }
  for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
    rows[j].N = probe.Ns[j];
    rows[j].mean_gap = stats[j].mean;
    rows[j].se = stats[j].se();
  }
  return rows;
}

}  // namespace snlb
