#include "snlb/multiplier.hpp"

#include <cmath>
#include <stdexcept>

namespace snlb {
namespace {

bool is_dyadic(double N) {
  if (N < 1.0) return false;
  const double l = std::log2(N);
  return std::abs(l - std::round(l)) < 1e-12;
}

// e^{-1/x} for x > 0, else 0
double mollifier_edge(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

// quintic smoothstep, C^2 at both ends
double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

}  // namespace

double lp_bump(double r) {
  r = std::abs(r);
  constexpr double lo = 1.25, hi = 1.6;
  if (r <= lo) return 1.0;
  if (r >= hi) return 0.0;
  const double tau = (hi - r) / (hi - lo);
  const double a = mollifier_edge(tau), b = mollifier_edge(1.0 - tau);
  return a / (a + b);
}

double lp_piece(double N, double r) {
  if (N <= 1.0) return lp_bump(r);
  return lp_bump(r / N) - lp_bump(2.0 * r / N);
}

double i_symbol_smooth(double N, double s, double r) {
  if (r <= N) return 1.0;
  if (r >= 2.0 * N) return std::pow(N / r, 2.0 - s);
  // interpolate the exponent of 2 in log2 coordinates: tau = log2(r/N) in (0,1)
  const double tau = std::log2(r / N);
  return std::exp(-(2.0 - s) * smoothstep(tau) * tau * std::log(2.0));
}

void MultiplierSpec::validate() const {
  switch (kind) {
    case MultiplierKind::sharp_projector:
      if (N < 0.0) throw std::invalid_argument("projector cutoff must be >= 0");
      break;
    case MultiplierKind::littlewood_paley:
      if (!is_dyadic(N)) throw std::invalid_argument("Littlewood-Paley N must be dyadic >= 1");
      break;
    case MultiplierKind::i_operator:
    case MultiplierKind::i_operator_smooth:
      if (N < 1.0) throw std::invalid_argument("I-operator cutoff N must be >= 1");
      if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("I-operator needs 0 < s < 2");
      break;
    case MultiplierKind::bessel:
    case MultiplierKind::sine_propagator:
    case MultiplierKind::damped_dispersion:
      if (!std::isfinite(s) || !std::isfinite(t)) throw std::invalid_argument("multiplier parameter not finite");
      break;
  }
}

double MultiplierSpec::operator()(int n2) const {
  const double r = std::sqrt(static_cast<double>(n2));
  switch (kind) {
    case MultiplierKind::sharp_projector: return r <= N ? 1.0 : 0.0;
    case MultiplierKind::littlewood_paley: return lp_piece(N, r);
    case MultiplierKind::i_operator: return i_symbol(N, s, r);
    case MultiplierKind::i_operator_smooth: return i_symbol_smooth(N, s, r);
    case MultiplierKind::bessel: return std::pow(1.0 + n2, 0.5 * s);
    case MultiplierKind::sine_propagator: return n2 == 0 ? t : std::sin(t * n2) / n2;
    case MultiplierKind::damped_dispersion: {
      const double b = 1.0 + n2;
      return std::sqrt(b * b - 0.25);
    }
  }
  return 0.0;
}

std::string MultiplierSpec::describe() const {
  switch (kind) {
    case MultiplierKind::sharp_projector: return "projector(N=" + std::to_string(N) + ")";
    case MultiplierKind::littlewood_paley: return "lp(N=" + std::to_string(N) + ")";
    case MultiplierKind::i_operator: return "i(N=" + std::to_string(N) + ",s=" + std::to_string(s) + ")";
    case MultiplierKind::i_operator_smooth: return "i_smooth(N=" + std::to_string(N) + ",s=" + std::to_string(s) + ")";
    case MultiplierKind::bessel: return "bessel(s=" + std::to_string(s) + ")";
    case MultiplierKind::sine_propagator: return "sine(t=" + std::to_string(t) + ")";
    case MultiplierKind::damped_dispersion: return "damped_dispersion";
  }
  return "?";
}

void apply_multiplier_inplace(SpectralField& f, const MultiplierSpec& m) {
  m.validate();
  // cache by |n|^2; the largest n2 on a 4D grid is small enough for a flat table
  const int B = f.grid().max_mode() + 1;
  std::vector<double> table(static_cast<std::size_t>(f.grid().dim() * B * B + 1), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = m(static_cast<int>(i));
  for_each_mode(f.grid(), [&](const ModeRef& r) {
    f[r.index] = r.weight == 0 ? cplx{0.0, 0.0} : f[r.index] * table[static_cast<std::size_t>(r.norm2)];
  });
}

SpectralField apply_multiplier(const SpectralField& f, const MultiplierSpec& m) {
  SpectralField out = f;
  apply_multiplier_inplace(out, m);
  return out;
}

SpectralField littlewood_paley(const SpectralField& f, int N) { return apply_multiplier(f, MultiplierSpec::lp(N)); }

std::vector<std::pair<int, SpectralField>> littlewood_paley_family(const SpectralField& f) {
  const Grid& g = f.grid();
  const double rmax = std::sqrt(static_cast<double>(g.dim())) * g.max_mode();
  std::vector<std::pair<int, SpectralField>> out;
  for (int N = 1;; N *= 2) {
    out.emplace_back(N, littlewood_paley(f, N));
    if (1.25 * N >= rmax) break;
  }
  return out;
}

}  // namespace snlb
