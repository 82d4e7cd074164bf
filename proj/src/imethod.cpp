#include "snlb/imethod.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "snlb/fft.hpp"
#include "snlb/lattice.hpp"
#include "snlb/norms.hpp"
#include "snlb/product.hpp"
#include "snlb/variance.hpp"

namespace snlb {
namespace {

double bracket(int n2) { return std::sqrt(1.0 + n2); }

PhysicalField pointwise(const PhysicalField& a, const PhysicalField& b) {
  PhysicalField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= b.values[i];
  return out;
}

// a*x + b*y pointwise
void add_scaled(PhysicalField& acc, double a, const PhysicalField& x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i] += a * x.values[i];
}

double inner(const SpectralField& a, const SpectralField& b) { return sobolev_inner(a, b, 0.0); }

// packs a wavevector with components in [-2^15, 2^15) into one key
std::uint64_t key_of(const Wavevector& n) {
  std::uint64_t k = 0;
  for (int i = 0; i < kMaxDim; ++i) k = (k << 16) | static_cast<std::uint16_t>(n[i] + 32768);
  return k;
}

Wavevector add(const Wavevector& a, const Wavevector& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }

double i_value(const IOperator& I, int n2) { return I.spec()(n2); }

// one full period of trapezoid weights on [0, 1] with `nodes` intervals
double trapezoid_weight(int j, int nodes) { return (j == 0 || j == nodes ? 0.5 : 1.0) / nodes; }

}  // namespace

double modified_energy(const PairState& st, const IOperator& I) {
  const SpectralField v = I(st.position);
  const SpectralField w = I(st.velocity);
  double quad = 0.0;
  for_each_mode(v.grid(), [&](const ModeRef& m) {
    if (m.weight == 0) return;
    const double n4 = static_cast<double>(m.norm2) * m.norm2;
    quad += m.weight * (n4 * std::norm(v[m.index]) + std::norm(w[m.index]));
  });
  return 0.5 * quad + 0.25 * integral_of_power(v, 4);
}

double i_h2_norm_sq(const SpectralField& f, const IOperator& I) {
  const SpectralField v = I(f);
  double acc = 0.0;
  for_each_mode(v.grid(), [&](const ModeRef& m) {
    if (m.weight == 0) return;
    const double n4 = static_cast<double>(m.norm2) * m.norm2;
    acc += m.weight * (1.0 + n4) * std::norm(v[m.index]);
  });
  return acc;
}

AuditSample audit_sample(const PairState& st, const WickPowers& xi, const IOperator& I) {
  if (xi.order() < 3)
    throw std::invalid_argument("energy audit needs Wick data Psi, :Psi^2:, :Psi^3: at every node (got order " +
                                std::to_string(xi.order()) + ")");
  const SpectralField& v = st.position;
  const Grid& g = v.grid();
  const int bv = std::max(spectral_band(v), 1);
  const int need = 3 * std::max(bv, xi.band) + g.max_mode();
  if (xi.work.points() <= need)
    throw DealiasingError("energy audit: work grid " + std::to_string(xi.work.points()) + " too small, need > " +
                              std::to_string(need),
                          (need + g.points()) / g.points());
  const SpectralField Iv = I(v);
  const SpectralField Ivt = I(st.velocity);
  const PhysicalField vp = to_physical(v, xi.work);
  const PhysicalField ivp = to_physical(Iv, xi.work);

  const PhysicalField v2 = pointwise(vp, vp);
  const PhysicalField v3 = pointwise(v2, vp);
  const PhysicalField iv3 = pointwise(pointwise(ivp, ivp), ivp);
  PhysicalField mixed = pointwise(v2, xi.powers[1]);
  add_scaled(mixed, 1.0, pointwise(vp, xi.powers[2]));

  AuditSample s;
  s.time = st.time;
  s.energy = modified_energy(st, I);
  s.commutator = inner(Ivt, from_physical(iv3, g)) - inner(Ivt, I(from_physical(v3, g)));
  s.cross = -3.0 * inner(Ivt, I(from_physical(mixed, g)));
  s.pure = -inner(Ivt, I(from_physical(xi.powers[3], g)));
  return s;
}

EnergyLedger energy_increment_audit(const std::vector<AuditSample>& samples, const IOperator& I) {
  EnergyLedger led;
  led.I = I;
  led.samples = samples;
  for (std::size_t j = 1; j < samples.size(); ++j) {
    const auto& a = samples[j - 1];
    const auto& b = samples[j];
    const double h = b.time - a.time;
    if (!(h > 0.0)) throw std::invalid_argument("energy audit: node times must increase");
    LedgerInterval iv{a.time, b.time, b.energy - a.energy, 0.5 * h * (a.commutator + b.commutator),
                      0.5 * h * (a.cross + b.cross), 0.5 * h * (a.pure + b.pure), 0.0};
    iv.defect = iv.dE - (iv.commutator + iv.cross + iv.pure);
    led.total_dE += iv.dE;
    led.total_commutator += iv.commutator;
    led.total_cross += iv.cross;
    led.total_pure += iv.pure;
    led.max_abs_defect = std::max(led.max_abs_defect, std::abs(iv.defect));
    led.intervals.push_back(iv);
  }
  led.total_defect = led.total_dE - (led.total_commutator + led.total_cross + led.total_pure);
  return led;
}

EnergyLedger run_energy_audit(const PairState& initial, const IOperator& I, const AuditRunConfig& cfg,
                              const NoiseStream& stream) {
  cfg.integrator.validate();
  if (cfg.T < 0.0) throw std::invalid_argument("energy audit: T must be >= 0");
  if (cfg.record_every < 1) throw std::invalid_argument("energy audit: record_every must be >= 1");
  const Grid& g = initial.grid();
  std::unique_ptr<WickSource> src;
  if (cfg.noise)
    src = std::make_unique<ConvolutionWickSource>(ConvolutionKind::undamped, g, -1.0, 3, stream);
  else
    src = std::make_unique<ZeroWickSource>(wick_work_grid(g, 3, g.max_mode()), 3);
  RemainderStepper stepper(3, 1, -1.0, cfg.integrator);
  PairState st = initial;
  std::vector<AuditSample> samples{audit_sample(st, src->at(st.time), I)};
  const auto steps = std::llround(cfg.T / cfg.integrator.dt);
  for (long long j = 1; j <= steps; ++j) {
    if (!stepper.step(st, *src))
      throw BlowUp("energy audit path left the threshold ball at t=" + std::to_string(st.time), st.time);
    if (j % cfg.record_every == 0 || j == steps) samples.push_back(audit_sample(st, src->at(st.time), I));
  }
  return energy_increment_audit(samples, I);
}

void EnergyLedger::write_csv(std::ostream& os) const {
  os << "t1,t2,dE,commutator,cross,pure,defect\n" << std::setprecision(17);
  for (const auto& r : intervals)
    os << r.t1 << ',' << r.t2 << ',' << r.dE << ',' << r.commutator << ',' << r.cross << ',' << r.pure << ','
       << r.defect << '\n';
}

void EnergyLedger::write_json(std::ostream& os) const {
  nlohmann::ordered_json j;
  j["N"] = I.N;
  j["s"] = I.s;
  j["smooth"] = I.smooth;
  j["nodes"] = samples.size();
  j["total_dE"] = total_dE;
  j["total_commutator"] = total_commutator;
  j["total_cross"] = total_cross;
  j["total_pure"] = total_pure;
  j["total_defect"] = total_defect;
  j["max_abs_defect"] = max_abs_defect;
  auto& e = j["energy"] = nlohmann::ordered_json::array();
  for (const auto& s : samples) e.push_back({s.time, s.energy});
  os << j.dump(2) << '\n';
}

SpectralField random_hs_field(const Grid& g, double s, int band, const NoiseStream& stream, double decay_shift) {
  if (band > 127) throw std::invalid_argument("random_hs_field: keyed draws need band <= 127");
  const KeyedNormal rng = stream.normal();
  SpectralField f(g);
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    for (int i = 0; i < g.dim(); ++i)
      if (std::abs(m.n[i]) > band) return;
    f[m.index] = rng.complex_normal(m.n, g.dim(), 0, stream.path, Purpose::test_field, 0) *
                 std::pow(bracket(m.norm2), -s - decay_shift);
  });
  const double norm = sobolev_norm(f, s);
  if (norm > 0.0) f *= 1.0 / norm;
  return f;
}

SparseField sparse_hs_field(int dim, double s, int band, int per_shell, const NoiseStream& stream) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("sparse field dimension must be in 1..4");
  if (band < 1 || band > 8000) throw std::invalid_argument("sparse field band must be in 1..8000");
  if (per_shell < 1) throw std::invalid_argument("sparse field needs per_shell >= 1");
  const KeyedNormal rng = stream.normal();
  const auto counts = shell_counts(dim, band * band);
  SparseField f;
  f.dim = dim;
  auto push = [&](const Wavevector& n, cplx c) {
    f.modes.push_back(n);
    f.coeffs.push_back(c);
    if (!is_zero(n)) {
      f.modes.push_back(negate(n));
      f.coeffs.push_back(std::conj(c));
    }
  };
  auto coeff = [&](const Wavevector& n, std::uint32_t shell, std::uint64_t draw) {
    const int n2 = norm2(n);
    const auto z = rng.normal_pair(shell, draw, stream.path, Purpose::test_field, 1);
    const double scale = std::pow(bracket(n2), -s - 2.0);
    return is_zero(n) ? cplx{z[0] * scale, 0.0} : cplx{z[0], z[1]} * (scale * 0.5 * std::numbers::sqrt2);
  };
  push({0, 0, 0, 0}, coeff({0, 0, 0, 0}, 0, 0));
  for (std::uint32_t j = 1; (1 << (j - 1)) <= band; ++j) {
    const int lo = 1 << (j - 1);
    const int hi = std::min(1 << j, band + 1);  // radii in [lo, hi)
    const int n2lo = lo * lo, n2hi = hi * hi - 1;
    std::int64_t total = 0;
    for (int m = n2lo; m <= std::min(n2hi, band * band); ++m) total += counts[static_cast<std::size_t>(m)];
    const std::int64_t pairs = total / 2;
    std::set<Wavevector> chosen;
    if (pairs <= per_shell) {
      // small shell: take all of it
      Wavevector n{0, 0, 0, 0};
      const int r = hi - 1;
      std::array<int, kMaxDim> c{};
      auto rec = [&](auto&& self, int axis) -> void {
        if (axis == dim) {
          const int n2 = norm2(n);
          if (n2 >= n2lo && n2 <= n2hi && is_canonical(n, dim)) chosen.insert(n);
          return;
        }
        for (c[axis] = -r; c[axis] <= r; ++c[axis]) {
          n[axis] = c[axis];
          self(self, axis + 1);
        }
        n[axis] = 0;
      };
      rec(rec, 0);
    } else {
      std::uint64_t attempt = 0;
      while (static_cast<int>(chosen.size()) < per_shell) {
        Wavevector n{0, 0, 0, 0};
        for (int i = 0; i < dim; ++i) {
          const double u = rng.uniform(j, attempt, stream.path, Purpose::test_field, 2 + i);
          n[i] = std::min(hi - 1, static_cast<int>(std::floor(u * (2 * hi - 1))) - (hi - 1));
        }
        ++attempt;
        const int n2 = norm2(n);
        if (n2 < n2lo || n2 > n2hi) continue;
        chosen.insert(is_canonical(n, dim) ? n : negate(n));
      }
    }
    const double weight = std::sqrt(static_cast<double>(pairs) / static_cast<double>(chosen.size()));
    std::uint64_t draw = 0;
    for (const auto& n : chosen) push(n, weight * coeff(n, j, draw++));
  }
  double hs = 0.0;
  for (std::size_t i = 0; i < f.modes.size(); ++i) hs += std::pow(bracket(norm2(f.modes[i])), 2 * s) * std::norm(f.coeffs[i]);
  const double scale = 1.0 / std::sqrt(hs);
  for (auto& c : f.coeffs) c *= scale;
  return f;
}

void CommutatorProbe::validate() const {
  if (Ns.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 N values");
  std::set<double> distinct(Ns.begin(), Ns.end());
  if (distinct.size() != Ns.size()) throw std::invalid_argument("scaling fit needs distinct N values");
  for (double N : Ns)
    if (!(N >= 1.0)) throw std::invalid_argument("commutator probe needs N >= 1");
  if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("commutator probe needs 0 < s < 2");
  if (samples < 1) throw std::invalid_argument("commutator probe needs at least one sample");
  if (kind == CommutatorKind::c1 && (k < 1 || k > 3)) throw std::invalid_argument("c1 probe needs k in {1,2,3}");
  if (kind == CommutatorKind::c3 && (k < 1 || k > 2)) throw std::invalid_argument("c3 probe needs k in {1,2}");
  if (kind == CommutatorKind::c2 && k != 1) throw std::invalid_argument("c2 probe is bilinear; use k = 1");
  if (kind != CommutatorKind::c1 && family == FieldFamily::sparse)
    throw std::invalid_argument("c2/c3 probes need the dense family (W^{-gamma0,p} norm of g is a grid norm)");
  if (family == FieldFamily::dense && (dim < 1 || dim > 4)) throw std::invalid_argument("dense family: dim in 1..4");
  if (band < 1) throw std::invalid_argument("commutator probe needs band >= 1");
}

double CommutatorProbe::target() const {
  switch (kind) {
    case CommutatorKind::c1:
      return -2.0 + k * (2.0 - s);
    case CommutatorKind::c2: {
      const double gm = gamma < 0.0 ? k * (2.0 - s) : gamma;
      return -(1.0 - gm) / 2.0;
    }
    case CommutatorKind::c3:
      return -(1.0 - k * (2.0 - s)) / 2.0;
  }
  return 0.0;
}

double commutator_ratio(CommutatorKind kind, int k, const IOperator& I, const SpectralField& f,
                        const SpectralField* g, double gamma, double gamma0, double p) {
  if (kind != CommutatorKind::c1 && g == nullptr) throw std::invalid_argument("c2/c3 ratios need the rough field g");
  const int bf = std::max(spectral_band(f), 1);
  const int bg = g ? std::max(spectral_band(*g), 1) : 0;
  const int degree = kind == CommutatorKind::c2 ? 1 : k;
  const int total = degree * bf + bg;
  const Grid work(f.grid().dim(), fft_friendly(2 * total + 2));
  const MultiplierSpec m = I.spec();
  auto power = [](const PhysicalField& x, int q) {
    PhysicalField out = x;
    for (int i = 1; i < q; ++i) out = pointwise(out, x);
    return out;
  };
  const PhysicalField fw = to_physical(f, work);
  const PhysicalField ifw = to_physical(I(f), work);
  SpectralField lhs(work), rhs(work);
  double denom = 1.0;
  switch (kind) {
    case CommutatorKind::c1:
      lhs = forward_transform(power(ifw, k));
      rhs = apply_multiplier(forward_transform(power(fw, k)), m);
      denom = std::pow(sobolev_norm(I(f), 2.0), k);
      break;
    case CommutatorKind::c2: {
      const PhysicalField gw = to_physical(*g, work);
      const PhysicalField igw = to_physical(I(*g), work);
      lhs = forward_transform(pointwise(ifw, igw));
      rhs = apply_multiplier(forward_transform(pointwise(fw, gw)), m);
      denom = sobolev_norm(f, 2.0 - gamma) * lebesgue_norm(*g, p, -gamma0);
      break;
    }
    case CommutatorKind::c3: {
      const PhysicalField gw = to_physical(*g, work);
      const PhysicalField igw = to_physical(I(*g), work);
      lhs = apply_multiplier(forward_transform(pointwise(power(fw, k), gw)), m);
      rhs = forward_transform(pointwise(power(ifw, k), igw));
      denom = std::pow(sobolev_norm(I(f), 2.0), k) * lebesgue_norm(*g, p, -gamma0);
      break;
    }
  }
  lhs -= rhs;
  return sobolev_norm(lhs, 0.0) / denom;
}

double commutator_ratio_sparse(int k, const IOperator& I, const SparseField& f) {
  if (k < 1 || k > 3) throw std::invalid_argument("sparse commutator supports k in {1,2,3}");
  const std::size_t S = f.modes.size();
  std::vector<double> mv(S);
  double h2 = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    const int n2 = norm2(f.modes[i]);
    mv[i] = i_value(I, n2);
    h2 += std::pow(bracket(n2), 4) * mv[i] * mv[i] * std::norm(f.coeffs[i]);
  }
  if (k == 1) return 0.0;  // (I f) - I(f) vanishes identically
  struct Acc {
    Wavevector n;
    cplx with_m;  // sum of prod m_i c_i
    cplx plain;   // sum of prod c_i
  };
  // partial products of degree k - 1
  std::unordered_map<std::uint64_t, Acc> part;
  part.reserve(S * S);
  if (k == 2) {
    for (std::size_t i = 0; i < S; ++i) part[key_of(f.modes[i])] = {f.modes[i], mv[i] * f.coeffs[i], f.coeffs[i]};
  } else {
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j) {
        const Wavevector n = add(f.modes[i], f.modes[j]);
        auto& a = part[key_of(n)];
        a.n = n;
        const cplx cc = f.coeffs[i] * f.coeffs[j];
        a.with_m += mv[i] * mv[j] * cc;
        a.plain += cc;
      }
  }
  std::unordered_map<std::uint64_t, Acc> out;
  out.reserve(part.size() * 4);
  for (const auto& [key, a] : part)
    for (std::size_t l = 0; l < S; ++l) {
      const Wavevector n = add(a.n, f.modes[l]);
      auto& o = out[key_of(n)];
      o.n = n;
      o.with_m += a.with_m * (mv[l] * f.coeffs[l]);
      o.plain += a.plain * f.coeffs[l];
    }
  double num = 0.0;
  for (const auto& [key, o] : out) num += std::norm(o.with_m - i_value(I, norm2(o.n)) * o.plain);
  return std::sqrt(num) / std::pow(h2, 0.5 * k);
}

ScalingReport commutator_scaling(const CommutatorProbe& probe) {
  probe.validate();
  ScalingReport rep;
  static const char* names[] = {"c1", "c2", "c3"};
  rep.quantity = std::string(names[static_cast<int>(probe.kind)]) + "_k" + std::to_string(probe.k);
  rep.target = probe.target();
  rep.tolerance = probe.tolerance;
  const double gamma = probe.gamma < 0.0 ? probe.k * (2.0 - probe.s) : probe.gamma;
  const NoiseStream base{probe.seed, 0, 0.0};
  const NoiseStream rough{probe.seed ^ 0x5bd1e995ull, 0, 0.0};

  std::vector<RunningStats> stats(probe.Ns.size());
  std::vector<double> mx(probe.Ns.size(), 0.0);
  for (std::size_t i = 0; i < probe.samples; ++i) {
    const auto path = static_cast<std::uint32_t>(i);
    if (probe.family == FieldFamily::sparse) {
      const SparseField f = sparse_hs_field(probe.dim, probe.s, probe.band, probe.per_shell, base.with_path(path));
      for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
        const double r = commutator_ratio_sparse(probe.k, IOperator{probe.Ns[j], probe.s, probe.smooth_i}, f);
        stats[j].add(r);
        mx[j] = std::max(mx[j], r);
      }
    } else {
      const Grid g(probe.dim, 2 * probe.band + 2);
      const double fs = probe.kind == CommutatorKind::c2 ? 2.0 - gamma : probe.s;
      const SpectralField f = random_hs_field(g, fs, probe.band, base.with_path(path));
      std::optional<SpectralField> gr;
      if (probe.kind != CommutatorKind::c1) gr = random_hs_field(g, 0.0, probe.band, rough.with_path(path));
      for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
        const double r = commutator_ratio(probe.kind, probe.k, IOperator{probe.Ns[j], probe.s, probe.smooth_i}, f,
                                          gr ? &*gr : nullptr, gamma, probe.gamma0, probe.p);
        stats[j].add(r);
        mx[j] = std::max(mx[j], r);
      }
    }
  }
  std::vector<double> xs, ys;
  bool all_zero = true;
  for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
    rep.rows.push_back({probe.Ns[j], stats[j].mean, stats[j].se(), mx[j]});
    all_zero = all_zero && mx[j] == 0.0;
    xs.push_back(probe.Ns[j]);
    ys.push_back(stats[j].mean);
  }
  if (all_zero) {
    rep.exact_zero = true;
    rep.pass = true;
    rep.fit.slope = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.fit = log_log_fit(xs, ys);
  rep.pass = std::isfinite(rep.fit.slope) && rep.fit.slope <= rep.target + rep.tolerance;
  return rep;
}

void ScalingReport::write_csv(std::ostream& os) const {
  os << "N,value,se,max\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.N << ',' << r.value << ',' << r.se << ',' << r.max << '\n';
}

void ScalingReport::write_json(std::ostream& os) const {
  nlohmann::ordered_json j;
  j["quantity"] = quantity;
  j["target"] = target;
  j["tolerance"] = tolerance;
  j["exact_zero"] = exact_zero;
  if (exact_zero) {
    j["slope"] = nullptr;
  } else {
    j["slope"] = fit.slope;
    j["slope_ci95"] = {fit.slope_lo, fit.slope_hi};
    j["intercept"] = fit.intercept;
  }
  j["pass"] = pass;
  auto& arr = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) arr.push_back({{"N", r.N}, {"value", r.value}, {"se", r.se}, {"max", r.max}});
  os << j.dump(2) << '\n';
}

void ScalingReport::write_plot_script(std::ostream& os, const std::string& csv_name) const {
  os << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set xlabel 'N'\n"
     << "set ylabel '" << quantity << "'\n"
     << std::setprecision(17);
  if (exact_zero) {
    os << "plot '" << csv_name << "' every ::1 using 1:2 with linespoints title 'measured'\n";
    return;
  }
  os << "f(x) = exp(" << fit.intercept << ") * x**(" << fit.slope << ")\n"
     << "plot '" << csv_name << "' every ::1 using 1:2 with linespoints title 'measured', f(x) title 'fit slope "
     << fit.slope << "'\n";
}

void StrichartzProbe::validate() const {
  if (!(p > 3.0))
    throw std::invalid_argument("Strichartz probe needs p > 3 (the endpoint p = 3 is excluded), got p=" +
                                std::to_string(p));
  if (dim < 1 || dim > 4) throw std::invalid_argument("Strichartz probe dimension must be in 1..4");
  if (Ns.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 N values");
  for (double N : Ns)
    if (!(N >= 1.0) || N > 127) throw std::invalid_argument("Strichartz probe needs 1 <= N <= 127");
  if (samples < 1 || nodes < 1) throw std::invalid_argument("Strichartz probe needs samples >= 1 and nodes >= 1");
  if (space_points < 0) throw std::invalid_argument("Strichartz probe needs space_points >= 0");
}

double schrodinger_space_time_norm(const SpectralField& f, double p, int nodes) {
  if (!(p >= 1.0)) throw std::invalid_argument("space-time norm needs p >= 1");
  if (nodes < 1) throw std::invalid_argument("space-time norm needs nodes >= 1");
  const Grid& g = f.grid();
  const int d = g.dim(), M = g.points();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(M);
  std::vector<cplx> coeff(total, cplx{0.0, 0.0});
  std::vector<int> n2(total, 0);
  auto full_index = [&](const Wavevector& n) {
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * M + static_cast<std::size_t>(((n[i] % M) + M) % M);
    return idx;
  };
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    const auto i = full_index(m.n);
    coeff[i] = f[m.index];
    n2[i] = m.norm2;
    if (m.n[d - 1] > 0) {
      const auto j = full_index(negate(m.n));
      coeff[j] = std::conj(f[m.index]);
      n2[j] = m.norm2;
    }
  });
  const bool inf = std::isinf(p);
  double acc = 0.0;
  std::vector<cplx> data(total);
  for (int j = 0; j <= nodes; ++j) {
    const double t = static_cast<double>(j) / nodes;
    for (std::size_t i = 0; i < total; ++i) data[i] = coeff[i] * std::polar(1.0, -t * n2[i]);
    complex_transform(g, data, +1);
    if (inf) {
      for (const auto& z : data) acc = std::max(acc, std::abs(z));
    } else {
      double sp = 0.0;
      for (const auto& z : data) sp += std::pow(std::abs(z), p);
      acc += trapezoid_weight(j, nodes) * sp / static_cast<double>(total);
    }
  }
  return inf ? acc : std::pow(acc, 1.0 / p);
}

double schrodinger_space_time_norm_at(const SparseField& f, double p, int nodes,
                                      const std::vector<std::array<double, 4>>& points) {
  if (!(p >= 1.0)) throw std::invalid_argument("space-time norm needs p >= 1");
  if (nodes < 1 || points.empty()) throw std::invalid_argument("space-time norm needs nodes >= 1 and points");
  const int d = f.dim;
  int R = 0, w_max = 0;
  double c0 = 0.0;
  std::vector<std::size_t> canon;
  for (std::size_t i = 0; i < f.modes.size(); ++i) {
    const auto& n = f.modes[i];
    if (is_zero(n)) {
      c0 = f.coeffs[i].real();
      continue;
    }
    if (!is_canonical(n, d)) continue;
    canon.push_back(i);
    w_max = std::max(w_max, norm2(n));
    for (int a = 0; a < d; ++a) R = std::max(R, std::abs(n[a]));
  }
  std::vector<int> shells;  // occupied |n|^2 values
  std::vector<int> slot(static_cast<std::size_t>(w_max) + 1, -1);
  for (auto i : canon) {
    const int w = norm2(f.modes[i]);
    if (slot[w] < 0) {
      slot[w] = static_cast<int>(shells.size());
      shells.push_back(w);
    }
  }
  std::vector<cplx> rot(shells.size());
  for (std::size_t j = 0; j < shells.size(); ++j) rot[j] = std::polar(1.0, -static_cast<double>(shells[j]) / nodes);

  const bool inf = std::isinf(p);
  const int span = 2 * R + 1;
  std::vector<cplx> phase(static_cast<std::size_t>(kMaxDim * span));
  std::vector<cplx> A(shells.size());
  double acc = 0.0;
  for (const auto& x : points) {
    for (int a = 0; a < d; ++a)
      for (int m = -R; m <= R; ++m)
        phase[a * span + m + R] = std::polar(1.0, 2.0 * std::numbers::pi * m * x[a]);
    std::fill(A.begin(), A.end(), cplx{0.0, 0.0});
    for (auto i : canon) {
      const auto& n = f.modes[i];
      cplx e = f.coeffs[i];
      for (int a = 0; a < d; ++a) e *= phase[a * span + n[a] + R];
      A[slot[norm2(n)]] += 2.0 * e.real();  // n and -n share the phase e^{-it|n|^2}
    }
    double here = 0.0;
    for (int j = 0; j <= nodes; ++j) {
      cplx u = c0;
      for (std::size_t q = 0; q < A.size(); ++q) {
        u += A[q];
        A[q] *= rot[q];
      }
      if (inf)
        here = std::max(here, std::abs(u));
      else
        here += trapezoid_weight(j, nodes) * std::pow(std::abs(u), p);
    }
    acc = inf ? std::max(acc, here) : acc + here;
  }
  return inf ? acc : std::pow(acc / static_cast<double>(points.size()), 1.0 / p);
}

ScalingReport strichartz_probe(const StrichartzProbe& probe) {
  probe.validate();
  ScalingReport rep;
  rep.quantity = std::string("strichartz_") + (probe.data == StrichartzData::random ? "random" : "dirichlet") + "_p" +
                 std::to_string(static_cast<int>(probe.p));
  rep.target = 0.0;
  rep.tolerance = 0.5;
  const KeyedNormal rng(probe.seed);
  const std::size_t samples = probe.data == StrichartzData::dirichlet ? 1 : probe.samples;
  // q N + 2 points make the grid quadrature of |u|^q exact for even integer q
  const int q = std::isinf(probe.p) ? 2 : std::min(8, static_cast<int>(std::ceil(probe.p)));
  std::vector<double> xs, ys;
  for (double N : probe.Ns) {
    const int nodes = probe.scale_nodes ? std::max(probe.nodes, static_cast<int>(std::ceil(2.0 * N * N))) : probe.nodes;
    const int R = static_cast<int>(std::floor(N + 1e-9));
    const Grid g(probe.dim, fft_friendly(q * R + 2));
    auto coeff = [&](const Wavevector& n, std::size_t i) {
      return probe.data == StrichartzData::dirichlet
                 ? cplx{1.0, 0.0}
                 : rng.complex_normal(n, probe.dim, static_cast<std::uint64_t>(N), static_cast<std::uint32_t>(i),
                                      Purpose::test_field, 0);
    };
    std::vector<std::array<double, 4>> points;
    for (int j = 0; j < probe.space_points; ++j) {
      std::array<double, 4> x{0, 0, 0, 0};
      for (int a = 0; a < probe.dim; ++a)
        x[a] = rng.uniform(static_cast<std::uint32_t>(j), static_cast<std::uint64_t>(N), 0, Purpose::test_field,
                           10 + a);
      points.push_back(x);
    }
    RunningStats st;
    double mx = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      double r = 0.0;
      if (probe.space_points > 0) {
        SparseField f;
        f.dim = probe.dim;
        double l2sq = 0.0;
        Wavevector n{0, 0, 0, 0};
        auto rec = [&](auto&& self, int axis) -> void {
          if (axis == probe.dim) {
            if (norm2(n) > N * N + 1e-9 || !is_canonical(n, probe.dim)) return;
            const cplx c = coeff(n, i);
            f.modes.push_back(n);
            f.coeffs.push_back(c);
            l2sq += (is_zero(n) ? 1.0 : 2.0) * std::norm(c);
            return;
          }
          for (n[axis] = -R; n[axis] <= R; ++n[axis]) self(self, axis + 1);
          n[axis] = 0;
        };
        rec(rec, 0);
        r = schrodinger_space_time_norm_at(f, probe.p, nodes, points) /
            (std::pow(N, probe.exponent()) * std::sqrt(l2sq));
      } else {
        SpectralField f(g);
        for_each_mode(g, [&](const ModeRef& m) {
          if (m.weight == 0 || m.norm2 > N * N + 1e-9) return;
          f[m.index] = coeff(m.n, i);
        });
        r = schrodinger_space_time_norm(f, probe.p, nodes) / (std::pow(N, probe.exponent()) * sobolev_norm(f, 0.0));
      }
      st.add(r);
      mx = std::max(mx, r);
    }
    rep.rows.push_back({N, st.mean, st.se(), mx});
    xs.push_back(N);
    ys.push_back(mx);
  }
  rep.fit = log_log_fit(xs, ys);
  rep.pass = rep.rows.back().max < (1.0 + rep.tolerance) * rep.rows.front().max;
  return rep;
}

IPsiTable ipsi_exponential_moment(const std::vector<double>& Ns, const std::vector<double>& ts, std::size_t samples,
                                  double s, const NoiseStream& stream, int dim, double radius_factor) {
  if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("I Psi moment needs 0 < s < 2");
  if (samples < 2) throw std::invalid_argument("I Psi moment needs at least 2 samples");
  if (!(radius_factor >= 1.0)) throw std::invalid_argument("I Psi moment needs radius_factor >= 1");
  const KeyedNormal rng = stream.normal();
  const boost::math::normal_distribution<double> phi;
  IPsiTable tab;
  std::uint64_t row_id = 0;
  for (double N : Ns) {
    if (!(N >= 1.0)) throw std::invalid_argument("I Psi moment needs N >= 1");
    const int n2max = ball_n2(radius_factor * N);
    const auto counts = shell_counts(dim, n2max);
    const IOperator I{N, s, false};
    for (double t : ts) {
      if (t < 0.0) throw std::invalid_argument("I Psi moment needs t >= 0");
      std::vector<double> sd(static_cast<std::size_t>(n2max) + 1, 0.0);
      double V = 0.0;
      for (int m = 0; m <= n2max; ++m) {
        if (!counts[m]) continue;
        const double mm = i_value(I, m);
        const double v = mm * mm * static_cast<double>(counts[m]) * undamped_mode_variance(m, t);
        sd[m] = std::sqrt(v);
        V += v;
      }
      RunningStats x2, ex;
      for (std::size_t i = 0; i < samples; ++i) {
        double x = 0.0;
        for (int m = 0; m <= n2max; m += 2) {
          const auto z = rng.normal_pair(static_cast<std::uint32_t>(m), row_id, static_cast<std::uint32_t>(i),
                                         Purpose::generic, 0);
          x += sd[m] * z[0] + (m + 1 <= n2max ? sd[m + 1] * z[1] : 0.0);
        }
        x2.add(x * x);
        ex.add(std::exp(std::abs(x)));
      }
      const double exact_moment = 2.0 * std::exp(0.5 * V) * boost::math::cdf(phi, std::sqrt(V));
      tab.rows.push_back({N, t, V, x2.mean, x2.se(), exact_moment, ex.mean, ex.se()});
      if (t > 0.0 && N > 1.0) tab.C0 = std::max(tab.C0, V / (t * std::log(N)));
      ++row_id;
    }
  }
  return tab;
}

void IPsiTable::write_csv(std::ostream& os) const {
  os << "N,t,variance_exact,variance_mc,variance_se,exp_moment_exact,exp_moment_mc,exp_moment_se\n"
     << std::setprecision(17);
  for (const auto& r : rows)
    os << r.N << ',' << r.t << ',' << r.variance_exact << ',' << r.variance_mc << ',' << r.variance_se << ','
       << r.exp_moment_exact << ',' << r.exp_moment_mc << ',' << r.exp_moment_se << '\n';
}

std::vector<C4Sample> c4_probe(const Grid& g, const std::vector<double>& Ns, double s, std::size_t draws,
                               const NoiseStream& stream) {
  if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("C4 probe needs 0 < s < 2");
  const int band = g.max_mode();
  std::vector<C4Sample> out;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto path = static_cast<std::uint32_t>(3 * i);
    PairState st(g);
    st.position = random_hs_field(g, s, band, stream.with_path(path));
    st.velocity = random_hs_field(g, s - 2.0, band, stream.with_path(path + 1));
    const SpectralField w = random_hs_field(g, 0.0, band, stream.with_path(path + 2));
    for (double N : Ns) {
      const IOperator I{N, s, false};
      const double E = modified_energy(st, I);
      const SpectralField Iv = I(st.position), Ivt = I(st.velocity), Iw = I(w);
      for (int k : {0, 1}) {
        const Grid work(g.dim(), work_points(k + 2, std::max(band, 1), 0));
        PhysicalField prod = pointwise(to_physical(Ivt, work), to_physical(Iw, work));
        if (k == 1) prod = pointwise(prod, to_physical(Iv, work));
        double integral = 0.0;
        for (double v : prod.values) integral += v;
        integral *= work.cell_volume();
        for (double lambda : {0.0, 2.0 - s}) {
          const double rhs = std::pow(N, lambda) * (1.0 + std::pow(E, 0.75)) * lebesgue_norm(w, 4.0, -lambda);
          out.push_back({k, lambda, N, std::abs(integral) / rhs});
        }
      }
    }
  }
  return out;
}

double double_exponential_envelope(double t, double initial_norm, double C, double c, double Cw) {
  return C * std::exp(c * std::log(2.0 + initial_norm) * std::exp(Cw * t * t));
}

}  // namespace snlb
