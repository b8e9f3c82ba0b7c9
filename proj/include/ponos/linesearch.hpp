#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ponos/errors.hpp"

namespace ponos {

// ---------------------------------------------------------------------------
// Reference-value policies
// ---------------------------------------------------------------------------

// State of the nonmonotone recursion
//   C~_k = (xi Q_k C_{k-1} + f_k) / (xi Q_k + 1),   C_k = max(C~_k, f_k),
//   Q_{k+1} = xi Q_k + 1,   Q_0 = 0,  C_{-1} = f_0.
// xi = 0 collapses to the monotone reference, xi = 1 to the running average.
struct NonmonotoneState {
  double c_prev = 0.0;  // C_{k-1}
  double q = 0.0;       // Q_k
  long k = 0;
  double xi = 1.0;
};

struct ZhangResult {
  double reference;  // C_k
  NonmonotoneState next;
};

inline ZhangResult zhang_reference(const NonmonotoneState& state, double f_k) {
  if (!std::isfinite(f_k)) throw NonFiniteValue("batch value is not finite");
  const double c_prev = state.k == 0 ? f_k : state.c_prev;
  const double qx = state.xi * state.q;
  const double c_tilde = (qx * c_prev + f_k) / (qx + 1.0);
  const double c_k = std::max(c_tilde, f_k);
  NonmonotoneState next = state;
  next.c_prev = c_k;
  next.q = qx + 1.0;  // Q_{k+1}
  next.k = state.k + 1;
  return {c_k, next};
}

// Cross-batch window: max over the W most recent batch values, the current
// one included. With full_window_only the nonmonotone term is used only once
// W values exist (warm-up stays monotone).
class CrossBatchWindow {
 public:
  explicit CrossBatchWindow(std::size_t window, bool full_window_only = false)
      : window_(window < 1 ? 1 : window), full_window_only_(full_window_only) {}

  double reference(double f_k) {
    values_.push_back(f_k);
    if (values_.size() > window_) values_.pop_front();
    if (full_window_only_ && values_.size() < window_) return f_k;
    double m = f_k;
    for (double v : values_) m = std::max(m, v);
    return m;
  }

  std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  bool full_window_only_;
  std::deque<double> values_;
};

// Single-batch table: per-sample values from up to W previous epochs. Row i,
// slot e%W holds f_i at the weights current when sample i was processed in
// epoch e; the reference is the max over complete stored epochs of the mean
// over the batch, and the current batch value. Epoch 0 has no history and
// falls back to the current value.
class SingleBatchTable {
 public:
  SingleBatchTable(std::size_t samples, std::size_t window)
      : samples_(samples),
        window_(window < 1 ? 1 : window),
        values_(samples_ * window_, 0.0),
        epoch_tag_(samples_ * window_, -1) {}

  double reference(std::span<const std::size_t> idx, double current_batch_value,
                   long epoch) const {
    double best = current_batch_value;
    const long first = epoch > static_cast<long>(window_) ? epoch - static_cast<long>(window_) : 0;
    for (long e = first; e < epoch; ++e) {
      double sum = 0.0;
      bool complete = true;
      for (std::size_t i : idx) {
        const std::size_t cell = i * window_ + static_cast<std::size_t>(e % window_);
        if (epoch_tag_[cell] != e) {
          complete = false;
          break;
        }
        sum += values_[cell];
      }
      if (complete) best = std::max(best, sum / static_cast<double>(idx.size()));
    }
    return best;
  }

  void store(std::span<const std::size_t> idx, std::span<const double> per_sample, long epoch) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const std::size_t cell = idx[j] * window_ + static_cast<std::size_t>(epoch % window_);
      values_[cell] = per_sample[j];
      epoch_tag_[cell] = epoch;
    }
  }

  std::size_t window() const { return window_; }

 private:
  std::size_t samples_;
  std::size_t window_;
  std::vector<double> values_;
  std::vector<long> epoch_tag_;
};

enum class ReferenceKind { monotone, zhang, grippo_cross, grippo_single };

// Single-owner dispatcher used by the optimizer loop: computes the reference
// value for the Armijo right-hand side and advances the variant's state.
class ReferencePolicy {
 public:
  static ReferencePolicy monotone() { return ReferencePolicy(ReferenceKind::monotone); }

  static ReferencePolicy zhang(double xi) {
    ReferencePolicy p(ReferenceKind::zhang);
    p.zhang_.xi = xi;
    return p;
  }

  static ReferencePolicy grippo_cross(std::size_t window, bool full_window_only = false) {
    ReferencePolicy p(ReferenceKind::grippo_cross);
    p.cross_.emplace(window, full_window_only);
    return p;
  }

  static ReferencePolicy grippo_single(std::size_t samples, std::size_t window) {
    ReferencePolicy p(ReferenceKind::grippo_single);
    p.table_.emplace(samples, window);
    return p;
  }

  ReferenceKind kind() const { return kind_; }
  bool needs_per_sample_values() const { return kind_ == ReferenceKind::grippo_single; }
  const NonmonotoneState& nonmonotone_state() const { return zhang_; }

  double reference(double f_k, std::span<const std::size_t> idx, long epoch) {
    if (!std::isfinite(f_k)) throw NonFiniteValue("batch value is not finite");
    switch (kind_) {
      case ReferenceKind::monotone:
        return f_k;
      case ReferenceKind::zhang: {
        const ZhangResult r = zhang_reference(zhang_, f_k);
        zhang_ = r.next;
        return r.reference;
      }
      case ReferenceKind::grippo_cross:
        return cross_->reference(f_k);
      case ReferenceKind::grippo_single:
        return table_->reference(idx, f_k, epoch);
    }
    return f_k;
  }

  // Single-batch Grippo only: remember the per-sample values of this batch's
  // initial evaluation so later epochs can reuse them.
  void record_batch(std::span<const std::size_t> idx, std::span<const double> per_sample,
                    long epoch) {
    if (table_) table_->store(idx, per_sample, epoch);
  }

 private:
  explicit ReferencePolicy(ReferenceKind kind) : kind_(kind) {}

  ReferenceKind kind_;
  NonmonotoneState zhang_;
  std::optional<CrossBatchWindow> cross_;
  std::optional<SingleBatchTable> table_;
};

// ---------------------------------------------------------------------------
// Backtracking
// ---------------------------------------------------------------------------

// Armijo right-hand side: reference - c * eta * decrement, where decrement is
// ||grad||^2 for plain SGD or -<d, grad> for a preconditioned direction.
inline double armijo_rhs(double reference, double c, double eta, double decrement) {
  if (decrement < 0.0) throw NonDescentDirection(decrement);
  return reference - c * eta * decrement;
}

struct LineSearchOutcome {
  double eta = 0.0;        // accepted step
  int backtracks = 0;      // l_k
  double trial_value = 0;  // f_{i_k} at the accepted point
  int evals = 0;           // function evaluations consumed = backtracks + 1
};

// Returns the first eta = eta_start * delta^l, l = 0,1,..., that satisfies
// trial_eval(eta) <= armijo_rhs(reference, c, eta, decrement). Non-finite
// trial values count as failures so an overflowing first trial shrinks the
// step instead of crashing. Throws MaxBacktracksExceeded when even
// l = max_backtracks fails.
inline LineSearchOutcome backtrack(const std::function<double(double)>& trial_eval,
                                   double eta_start, double delta, double c, double reference,
                                   double decrement, int max_backtracks) {
  if (!(eta_start > 0.0)) throw InvalidStep("line-search starting step must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidStep("delta must be in (0,1)");
  if (max_backtracks < 1) throw InvalidStep("max_backtracks must be >= 1");

  double eta = eta_start;
  for (int l = 0; l <= max_backtracks; ++l) {
    const double trial = trial_eval(eta);
    const double rhs = armijo_rhs(reference, c, eta, decrement);
    if (std::isfinite(trial) && trial <= rhs) {
      return {eta, l, trial, l + 1};
    }
    if (l == max_backtracks) throw MaxBacktracksExceeded(l, eta);
    eta *= delta;
  }
  throw MaxBacktracksExceeded(max_backtracks, eta);  // unreachable
}

}  // namespace ponos
