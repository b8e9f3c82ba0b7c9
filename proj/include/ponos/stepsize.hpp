#pragma once

#include <algorithm>
#include <cmath>

#include "ponos/errors.hpp"

namespace ponos {

// Stationarity guard on squared norms (~1e-12 on norms): below 64-bit noise
// for unit-scale problems.
inline constexpr double kGradTol = 1e-24;

// Pre-cap Polyak step (f - f*) / (c_p * decrement). Kept separate from the
// capped version so the lower bound 1/(2 c_p L_max) can be checked where it
// literally holds.
inline double polyak_raw(double f_val, double f_star, double decrement, double c_p,
                         double tol_g = kGradTol) {
  if (!(decrement > tol_g)) throw DegenerateGradient(decrement);
  return (f_val - f_star) / (c_p * decrement);
}

// Initial step of the method: min{ (f - f*) / (c_p * decrement), eta_max }.
// A zero numerator returns 0; the caller treats that iterate as converged on
// this batch.
inline double polyak_initial(double f_val, double f_star, double decrement, double c_p,
                             double eta_max, double tol_g = kGradTol) {
  return std::min(polyak_raw(f_val, f_star, decrement, c_p, tol_g), eta_max);
}

// Exponential growth with cap: min{ eta_prev * gamma^(b/M), eta_max }.
inline double exp_growth_cap(double eta_prev, double gamma, std::size_t batch_size,
                             std::size_t sample_count, double eta_max) {
  const double growth =
      std::pow(gamma, static_cast<double>(batch_size) / static_cast<double>(sample_count));
  return std::min(eta_prev * growth, eta_max);
}

// Smoothed Polyak step (the SPS baseline's learning rate, no line search):
// three-way min of the raw Polyak value, the exponential growth of the
// previous step, and the cap.
inline double sps_smoothed(double polyak_value, double eta_prev, double gamma,
                           std::size_t batch_size, std::size_t sample_count, double eta_max) {
  return std::min(polyak_value,
                  exp_growth_cap(eta_prev, gamma, batch_size, sample_count, eta_max));
}

// eta_prev * ||g_prev||^2 / ||g_cur||^2; the caller caps at eta_max.
inline double bb_reset3(double eta_prev, double g_prev_sq, double g_cur_sq,
                        double tol_g = kGradTol) {
  if (!(g_cur_sq > tol_g)) throw DegenerateGradient(g_cur_sq);
  return eta_prev * g_prev_sq / g_cur_sq;
}

// 2 (f_{i_{k-1}}(w_{k-1}) - f_{i_{k-1}}(w_k)) / ||grad f_{i_{k-1}}(w_{k-1})||,
// denominator not squared, exactly as printed; may be non-positive, in which
// case the caller falls back to the previous step.
inline double reset4(double f_prev_at_wprev, double f_prev_at_wcur, double g_prev_norm,
                     double tol_norm = 1e-12) {
  if (!(g_prev_norm > tol_norm)) throw DegenerateGradient(g_prev_norm * g_prev_norm);
  return 2.0 * (f_prev_at_wprev - f_prev_at_wcur) / g_prev_norm;
}

// l_bar_k = max(l_bar_{k-1} + l_{k-1} - 1, 0): decaying memory of past
// backtrack counts; the -1 keeps unwinding the scaling toward delta^0.
inline long update_reset_exponent(long l_bar_prev, long l_prev) {
  return std::max(l_bar_prev + l_prev - 1, 0L);
}

// Effective starting step handed to the backtracking engine:
// eta_{k,0} * delta^{l_bar}. The engine multiplies further by delta^{l_k}.
inline double scaled_initial(double eta_k0, long l_bar, double delta) {
  return eta_k0 * std::pow(delta, static_cast<double>(l_bar));
}

// Carry-over between iterations for the resetting techniques.
struct ResetState {
  long reset_exponent = 0;      // l_bar_k
  long last_backtracks = 0;     // l_{k-1}
  double last_eta = 0.0;        // eta_{k-1}
  double last_grad_sq = 0.0;    // ||grad f_{i_{k-1}}(w_{k-1})||^2
  double last_value = 0.0;      // f_{i_{k-1}}(w_{k-1})
  double last_trial_value = 0;  // f_{i_{k-1}}(w_k), from the accepted trial
  bool has_history = false;
};

}  // namespace ponos
