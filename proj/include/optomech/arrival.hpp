#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace optomech {

/// Cavity release and mechanical parameters entering the arrival-time statistics.
struct CavityParams {
  double gamma_c = 1.0; ///< 1/s, decay constant of the residence density
  double omega_m = 1.0; ///< rad/s
  double kappa = 0.0;

  /// gamma_c and omega_m must be positive, kappa non-negative.
  void validate() const;
  double mechanical_period() const;
};

/// Gamma_c exp(-Gamma_c t).
double residence_density(const CavityParams &p, double t);

/// kappa^2 sin^2(omega_m t_c / 2), i.e. |alpha(t_c)|^2 / 4.
double postselect_prob_approx(const CavityParams &p, double t_c);

/// Residence density times postselection probability; divided by the total
/// success probability when `normalized` is set.
double arrival_density(const CavityParams &p, double t, bool normalized);

/// Closed form 1/2 kappa^2 omega_m^2 / (Gamma_c^2 + omega_m^2).
double total_success_probability(const CavityParams &p);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive Gauss-Kronrod (61-point) on [a, b] with relative tolerance rel_tol.
QuadratureResult integrate_adaptive(const std::function<double(double)> &f, double a, double b,
                                    double rel_tol = 1e-13);

/// The defining integral of the total success probability, evaluated by
/// quadrature over [0, 60/Gamma_c]; the analytic tail bound is folded into
/// error_estimate.
QuadratureResult total_success_probability_quadrature(const CavityParams &p);

/// Histogram of arrival times; bin k covers [t0 + k w, t0 + (k+1) w).
struct ArrivalHistogram {
  double bin_width = 1.0;
  double t0 = 0.0;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
  double bin_center(std::size_t k) const { return t0 + (static_cast<double>(k) + 0.5) * bin_width; }
  /// Merges `factor` adjacent bins. A trailing partial group forms its own bin.
  ArrivalHistogram rebin(std::size_t factor) const;
};

/// Bins `times` starting at t0. When any time lies before t0 the left edge is
/// moved down by whole bins so that no event is dropped.
ArrivalHistogram bin_arrivals(std::span<const double> times, double bin_width, double t0 = 0.0);

/// Twenty bins per mechanical period.
double default_bin_width(const CavityParams &p);

} // namespace optomech
