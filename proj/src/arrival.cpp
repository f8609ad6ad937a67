#include "optomech/arrival.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

void require_non_negative_time(double t) {
  if (!(t >= 0.0)) {
    throw DomainError("time must be non-negative");
  }
}

// Quadrature horizon in units of 1/Gamma_c.
constexpr double horizon_lifetimes = 60.0;

} // namespace

void CavityParams::validate() const {
  if (!(gamma_c > 0.0) || !(omega_m > 0.0)) {
    throw DomainError("gamma_c and omega_m must be positive");
  }
  if (!(kappa >= 0.0)) {
    throw DomainError("kappa must be non-negative");
  }
}

double CavityParams::mechanical_period() const { return phys::two_pi / omega_m; }

double residence_density(const CavityParams &p, double t) {
  p.validate();
  require_non_negative_time(t);
  return p.gamma_c * std::exp(-p.gamma_c * t);
}

double postselect_prob_approx(const CavityParams &p, double t_c) {
  p.validate();
  require_non_negative_time(t_c);
  const double s = std::sin(0.5 * p.omega_m * t_c);
  return p.kappa * p.kappa * s * s;
}

double arrival_density(const CavityParams &p, double t, bool normalized) {
  const double raw = residence_density(p, t) * postselect_prob_approx(p, t);
  if (!normalized) {
    return raw;
  }
  const double total = total_success_probability(p);
  if (total <= 0.0) {
    throw DomainError("normalized arrival density undefined for zero success probability");
  }
  return raw / total;
}

double total_success_probability(const CavityParams &p) {
  p.validate();
  const double w2 = p.omega_m * p.omega_m;
  return 0.5 * p.kappa * p.kappa * w2 / (p.gamma_c * p.gamma_c + w2);
}

QuadratureResult integrate_adaptive(const std::function<double(double)> &f, double a, double b,
                                    double rel_tol) {
  using boost::math::quadrature::gauss_kronrod;
  // Boost 1.74 compares the unscaled panel error against a scaled tolerance,
  // so hand it the interval already mapped onto [-1, 1].
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const auto mapped = [&](double x) { return half * f(mid + half * x); };
  double err = 0.0;
  double l1 = 0.0;
  const double value = gauss_kronrod<double, 61>::integrate(mapped, -1.0, 1.0, 15, rel_tol, &err, &l1);
  return {value, err};
}

QuadratureResult total_success_probability_quadrature(const CavityParams &p) {
  p.validate();
  const double horizon = horizon_lifetimes / p.gamma_c;
  // Integrate period by period so every panel sees a single sin^2 lobe.
  const double period = p.mechanical_period();
  const auto integrand = [&p](double t) {
    const double s = std::sin(0.5 * p.omega_m * t);
    return p.gamma_c * std::exp(-p.gamma_c * t) * s * s;
  };
  QuadratureResult total;
  double lo = 0.0;
  while (lo < horizon) {
    const double hi = std::min(horizon, lo + period);
    const QuadratureResult part = integrate_adaptive(integrand, lo, hi);
    total.value += part.value;
    total.error_estimate += part.error_estimate;
    lo = hi;
  }
  const double k2 = p.kappa * p.kappa;
  total.value *= k2;
  total.error_estimate = total.error_estimate * k2 + k2 * std::exp(-p.gamma_c * horizon);
  return total;
}

std::uint64_t ArrivalHistogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) {
    s += c;
  }
  return s;
}

ArrivalHistogram ArrivalHistogram::rebin(std::size_t factor) const {
  if (factor == 0) {
    throw DomainError("rebin factor must be positive");
  }
  ArrivalHistogram out;
  out.bin_width = bin_width * static_cast<double>(factor);
  out.t0 = t0;
  out.counts.assign((counts.size() + factor - 1) / factor, 0);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.counts[k / factor] += counts[k];
  }
  return out;
}

ArrivalHistogram bin_arrivals(std::span<const double> times, double bin_width, double t0) {
  if (!(bin_width > 0.0)) {
    throw DomainError("bin width must be positive");
  }
  ArrivalHistogram h;
  h.bin_width = bin_width;
  h.t0 = t0;
  if (times.empty()) {
    h.counts.assign(1, 0);
    return h;
  }
  const auto [min_it, max_it] = std::minmax_element(times.begin(), times.end());
  if (*min_it < t0) {
    h.t0 = t0 + std::floor((*min_it - t0) / bin_width) * bin_width;
  }
  const auto index = [&](double t) {
    return static_cast<std::size_t>(std::max(0.0, std::floor((t - h.t0) / bin_width)));
  };
  h.counts.assign(index(*max_it) + 1, 0);
  for (double t : times) {
    h.counts[index(t)] += 1;
  }
  return h;
}

double default_bin_width(const CavityParams &p) { return p.mechanical_period() / 20.0; }

} // namespace optomech
