#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ponos/errors.hpp"
#include "ponos/linesearch.hpp"
#include "ponos/problems.hpp"
#include "ponos/stepsize.hpp"
#include "ponos/telemetry.hpp"

namespace ponos {

// ---------------------------------------------------------------------------
// Preconditioned direction (second-moment accumulator without momentum)
// ---------------------------------------------------------------------------

struct PrecondResult {
  Vector direction;  // d = -g / (sqrt(v_hat) + eps)
  Vector v;          // updated accumulator
};

// v = beta2 v_prev + (1-beta2) g^2, v_hat = v / (1 - beta2^k),
// d = -g / (sqrt(v_hat) + eps); k >= 1 for the bias correction.
inline PrecondResult precondition(std::span<const double> g, std::span<const double> v_prev,
                                  double beta2, double eps, long k) {
  PrecondResult out;
  out.v.resize(g.size());
  out.direction.resize(g.size());
  const double correction = 1.0 - std::pow(beta2, static_cast<double>(k));
  for (std::size_t j = 0; j < g.size(); ++j) {
    out.v[j] = beta2 * v_prev[j] + (1.0 - beta2) * g[j] * g[j];
    const double v_hat = out.v[j] / correction;
    out.direction[j] = -g[j] / (std::sqrt(v_hat) + eps);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

enum class LineSearchMode { none, monotone, zhang, grippo_cross, grippo_single };
enum class StepsizeRule { constant, polyak, exp_cap, sps_smoothed, reset3, reset4 };
enum class ResetRule { none, backtrack_memory };

struct OptimizerOptions {
  LineSearchMode linesearch = LineSearchMode::zhang;
  StepsizeRule stepsize = StepsizeRule::polyak;
  ResetRule reset = ResetRule::backtrack_memory;
  bool preconditioned = false;
  bool adam_baseline = false;

  double lr = 0.1;  // constant step / Adam learning rate
  double c = 0.5;
  double c_p = 0.1;
  double delta = 0.5;
  double xi = 1.0;
  double gamma = 2.0;
  double eta_max = 10.0;
  double eta_init = 1.0;  // previous-step seed for exp_cap/sps/reset3/reset4
  double beta2 = 0.9;     // preconditioner accumulator
  double eps = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int max_backtracks = 100;
  int ls_every = 1;              // run the line search only every N iterations
  std::size_t grippo_window = 0;  // 0 = default (M/b cross-batch, 10 single-batch)
  bool grippo_full_window_only = false;
  bool reset4_squared_norm = false;
  double grad_tol = kGradTol;
};

struct RunSettings {
  long epochs = 10;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  SampleOrder order = SampleOrder::shuffled_epoch;
};

// ---------------------------------------------------------------------------
// Per-iteration telemetry
// ---------------------------------------------------------------------------

struct IterationTelemetry {
  long k = 0;
  long epoch = 0;
  std::span<const std::size_t> batch;
  std::span<const double> w_before;
  std::span<const double> grad;       // batch gradient at w_before
  std::span<const double> direction;  // step direction (empty for plain -grad)
  double f_batch = 0.0;               // f_{i_k}(w_k)
  double grad_norm = 0.0;
  double grad_sq = 0.0;
  double decrement = 0.0;  // ||g||^2 or -<d,g>
  double polyak_pre_cap = std::numeric_limits<double>::quiet_NaN();
  double eta_initial = 0.0;  // eta_{k,0} after the eta_max cap
  double eta_start = 0.0;    // eta_{k,0} * delta^{l_bar}
  double eta = 0.0;          // accepted step
  long backtracks = 0;
  long reset_exponent = 0;  // l_bar_k used this iteration
  double reference = std::numeric_limits<double>::quiet_NaN();  // C_k (or policy value)
  double trial_value = std::numeric_limits<double>::quiet_NaN();  // f_{i_k}(w_{k+1})
  bool line_search_ran = false;
  bool reused_step = false;  // ls_every skip
  bool skipped = false;      // stationary batch, no parameter update
};

// Called after the iterate has been updated; w_after is the new iterate.
using IterationCallback =
    std::function<void(const IterationTelemetry&, std::span<const double> w_after)>;

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

// Drives one optimization run: the line-search loop, its baselines, per-epoch
// telemetry and the oracle-call tally. Strictly sequential; independent runs
// share nothing but the (immutable) problem.
class Runner {
 public:
  Runner(std::shared_ptr<const Problem> problem, OptimizerOptions options, RunSettings settings)
      : problem_(std::move(problem)),
        options_(options),
        settings_(settings),
        schedule_(problem_->sample_count(), settings.batch_size, settings.order,
                  derive_seed(settings.seed, kBatchStream)) {
    if (options_.grippo_window == 0) {
      options_.grippo_window = options_.linesearch == LineSearchMode::grippo_cross
                                   ? schedule_.iterations_per_epoch()
                                   : 10;
    }
    reference_ = make_reference_policy();
    Rng init_rng = Rng::substream(settings.seed, kInitStream);
    w_ = problem_->initial_point(init_rng);
    if (options_.preconditioned) v_.assign(problem_->dim(), 0.0);
    if (options_.adam_baseline) {
      adam_m_.assign(problem_->dim(), 0.0);
      adam_v_.assign(problem_->dim(), 0.0);
    }
    eta_prev_ = options_.eta_init;
  }

  void set_iteration_callback(IterationCallback cb) { callback_ = std::move(cb); }

  // Replaces the starting iterate; call before the first step.
  void set_iterate(Vector w) {
    if (w.size() != problem_->dim()) throw DimensionMismatch(w.size(), problem_->dim());
    w_ = std::move(w);
  }

  const Vector& iterate() const { return w_; }
  long iteration() const { return k_; }
  const MiniBatchSchedule& schedule() const { return schedule_; }
  const OptimizerOptions& options() const { return options_; }
  const ResetState& reset_state() const { return reset_; }
  const ReferencePolicy& reference_policy() const { return reference_; }

  std::uint64_t value_evals() const { return value_evals_; }
  std::uint64_t grad_evals() const { return grad_evals_; }
  std::uint64_t telemetry_value_evals() const { return telemetry_value_evals_; }

  // One mini-batch iteration of the configured method.
  IterationTelemetry step() {
    const long k = k_;
    const long epoch = static_cast<long>(static_cast<std::size_t>(k) /
                                         schedule_.iterations_per_epoch());
    batch_ = schedule_.batch(static_cast<std::size_t>(k));

    IterationTelemetry t;
    t.k = k;
    t.epoch = epoch;
    t.batch = batch_;

    std::vector<double>* per_sample =
        reference_.needs_per_sample_values() ? &per_sample_buffer_ : nullptr;
    ++grad_evals_;
    BatchEval eval = problem_->value_grad(w_, batch_, per_sample);
    if (!std::isfinite(eval.value) || !all_finite(eval.grad))
      throw NonFiniteValue("batch oracle returned a non-finite value at iteration " +
                           std::to_string(k));
    w_before_ = w_;
    grad_ = std::move(eval.grad);
    t.w_before = w_before_;
    t.grad = grad_;
    t.f_batch = eval.value;
    t.grad_sq = squared_norm(grad_);
    t.grad_norm = std::sqrt(t.grad_sq);

    if (options_.adam_baseline) {
      adam_step(t);
    } else {
      line_search_family_step(t, epoch);
    }

    if (!all_finite(w_)) throw NonFiniteValue("iterate became non-finite at iteration " +
                                              std::to_string(k));
    ++k_;
    if (callback_) callback_(t, w_);
    return t;
  }

  // Full experiment: epochs * ceil(M/b) iterations with per-epoch telemetry.
  // On a propagated step error the partial record is returned with the error
  // tag set.
  RunRecord run() {
    RunRecord record;
    record.seed = settings_.seed;
    record.epochs.push_back(epoch_row(0, 0, 0.0, 0.0, 0.0, 0, 0.0));
    const std::size_t per_epoch = schedule_.iterations_per_epoch();
    try {
      for (long epoch = 0; epoch < settings_.epochs; ++epoch) {
        double eta_sum = 0.0, eta0_sum = 0.0, gnorm_sum = 0.0;
        long backtracks = 0, counted = 0;
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < per_epoch; ++i) {
          const IterationTelemetry t = step();
          ++record.iterations;
          if (t.skipped) {
            ++record.skipped_iterations;
            continue;
          }
          ++counted;
          eta_sum += t.eta;
          eta0_sum += t.eta_initial;
          gnorm_sum += t.grad_norm;
          backtracks += t.backtracks;
          if (t.line_search_ran) {
            ++record.line_search_iterations;
            record.sum_backtracks_plus_one += static_cast<std::uint64_t>(t.backtracks) + 1;
          }
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double denom = counted > 0 ? static_cast<double>(counted) : 1.0;
        record.epochs.push_back(epoch_row(epoch + 1, counted, eta_sum / denom, eta0_sum / denom,
                                          gnorm_sum / denom, backtracks, seconds));
      }
    } catch (const MaxBacktracksExceeded& e) {
      record.error = e.what();
      record.error_kind = "MaxBacktracksExceeded";
    } catch (const NonFiniteValue& e) {
      record.error = e.what();
      record.error_kind = "NonFiniteValue";
    } catch (const DegenerateGradient& e) {
      record.error = e.what();
      record.error_kind = "DegenerateGradient";
    }
    record.total_value_evals = value_evals_;
    record.total_grad_evals = grad_evals_;
    record.telemetry_value_evals = telemetry_value_evals_;
    return record;
  }

  double full_loss_now() {
    ++telemetry_value_evals_;
    return problem_->full_value(w_);
  }

 private:
  static constexpr std::uint64_t kInitStream = 11;
  static constexpr std::uint64_t kBatchStream = 23;

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return seed * 0x9e3779b97f4a7c15ULL + stream;
  }

  ReferencePolicy make_reference_policy() const {
    switch (options_.linesearch) {
      case LineSearchMode::zhang:
        return ReferencePolicy::zhang(options_.xi);
      case LineSearchMode::grippo_cross:
        return ReferencePolicy::grippo_cross(options_.grippo_window,
                                             options_.grippo_full_window_only);
      case LineSearchMode::grippo_single:
        return ReferencePolicy::grippo_single(problem_->sample_count(), options_.grippo_window);
      case LineSearchMode::monotone:
      case LineSearchMode::none:
        return ReferencePolicy::monotone();
    }
    return ReferencePolicy::monotone();
  }

  void adam_step(IterationTelemetry& t) {
    const double b1 = options_.adam_beta1;
    const double b2 = options_.adam_beta2;
    const long k1 = k_ + 1;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(k1));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(k1));
    for (std::size_t j = 0; j < w_.size(); ++j) {
      adam_m_[j] = b1 * adam_m_[j] + (1.0 - b1) * grad_[j];
      adam_v_[j] = b2 * adam_v_[j] + (1.0 - b2) * grad_[j] * grad_[j];
      const double m_hat = adam_m_[j] / c1;
      const double v_hat = adam_v_[j] / c2;
      w_[j] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
    t.eta = options_.lr;
    t.eta_initial = options_.lr;
    t.eta_start = options_.lr;
  }

  void line_search_family_step(IterationTelemetry& t, long epoch) {
    const bool has_line_search = options_.linesearch != LineSearchMode::none;

    double decrement = t.grad_sq;
    if (options_.preconditioned) {
      PrecondResult pre = precondition(grad_, v_, options_.beta2, options_.eps, k_ + 1);
      v_ = std::move(pre.v);
      direction_ = std::move(pre.direction);
      decrement = -dot(direction_, grad_);
      t.direction = direction_;
    }
    t.decrement = decrement;

    // Reference advances on every iteration (skipped ones included) so the
    // recursion stays aligned with the iteration counter.
    if (has_line_search) {
      t.reference = reference_.reference(t.f_batch, batch_, epoch);
      if (reference_.needs_per_sample_values())
        reference_.record_batch(batch_, per_sample_buffer_, epoch);
    }

    const bool divides_by_decrement = options_.stepsize == StepsizeRule::polyak ||
                                      options_.stepsize == StepsizeRule::sps_smoothed ||
                                      options_.stepsize == StepsizeRule::reset3;
    if (decrement <= options_.grad_tol && (divides_by_decrement || has_line_search)) {
      // Stationary mini-batch: in the interpolation regime this batch is
      // solved. Skip the update but keep k, the recursion and telemetry
      // moving.
      t.skipped = true;
      return;
    }

    t.eta_initial = initial_step(t, decrement);
    t.reset_exponent = reset_.reset_exponent;

    if (!has_line_search) {
      t.eta = t.eta_initial;
      t.eta_start = t.eta_initial;
      apply_step(t.eta);
      eta_prev_ = t.eta;
      remember_history(t);
      return;
    }

    t.eta_start = options_.reset == ResetRule::backtrack_memory
                      ? scaled_initial(t.eta_initial, reset_.reset_exponent, options_.delta)
                      : t.eta_initial;

    if (options_.ls_every > 1 && k_ % options_.ls_every != 0 && reset_.has_history) {
      t.eta = reset_.last_eta;
      t.reused_step = true;
      apply_step(t.eta);
      eta_prev_ = t.eta;
      reset_.last_grad_sq = t.grad_sq;
      reset_.last_value = t.f_batch;
      return;
    }

    if (t.eta_start <= 0.0) {
      // Polyak numerator hit f*: the batch is already optimal.
      t.skipped = true;
      return;
    }

    const auto trial = [&](double eta) {
      trial_w_ = w_;
      if (options_.preconditioned)
        axpy(eta, direction_, trial_w_);
      else
        axpy(-eta, grad_, trial_w_);
      ++value_evals_;
      return problem_->value(trial_w_, batch_);
    };

    const LineSearchOutcome outcome =
        backtrack(trial, t.eta_start, options_.delta, options_.c, t.reference, decrement,
                  options_.max_backtracks);
    t.eta = outcome.eta;
    t.backtracks = outcome.backtracks;
    t.trial_value = outcome.trial_value;
    t.line_search_ran = true;
    apply_step(t.eta);

    if (options_.reset == ResetRule::backtrack_memory)
      reset_.reset_exponent = update_reset_exponent(reset_.reset_exponent, outcome.backtracks);
    reset_.last_backtracks = outcome.backtracks;
    eta_prev_ = t.eta;
    remember_history(t);
  }

  double initial_step(IterationTelemetry& t, double decrement) {
    switch (options_.stepsize) {
      case StepsizeRule::constant:
        return options_.lr;
      case StepsizeRule::polyak: {
        t.polyak_pre_cap =
            polyak_raw(t.f_batch, problem_->f_star(), decrement, options_.c_p, options_.grad_tol);
        return std::min(t.polyak_pre_cap, options_.eta_max);
      }
      case StepsizeRule::exp_cap:
        return exp_growth_cap(eta_prev_, options_.gamma, schedule_.batch_size(),
                              problem_->sample_count(), options_.eta_max);
      case StepsizeRule::sps_smoothed: {
        t.polyak_pre_cap =
            polyak_raw(t.f_batch, problem_->f_star(), decrement, options_.c_p, options_.grad_tol);
        return sps_smoothed(t.polyak_pre_cap, eta_prev_, options_.gamma, schedule_.batch_size(),
                            problem_->sample_count(), options_.eta_max);
      }
      case StepsizeRule::reset3: {
        if (!reset_.has_history) return std::min(options_.eta_init, options_.eta_max);
        return std::min(bb_reset3(reset_.last_eta, reset_.last_grad_sq, t.grad_sq,
                                  options_.grad_tol),
                        options_.eta_max);
      }
      case StepsizeRule::reset4: {
        if (!reset_.has_history) return std::min(options_.eta_init, options_.eta_max);
        const double denom = options_.reset4_squared_norm ? reset_.last_grad_sq
                                                          : std::sqrt(reset_.last_grad_sq);
        double proposal;
        try {
          proposal = options_.reset4_squared_norm
                         ? 2.0 * (reset_.last_value - reset_.last_trial_value) / denom
                         : reset4(reset_.last_value, reset_.last_trial_value, denom);
        } catch (const DegenerateGradient&) {
          proposal = 0.0;
        }
        // Stochastic f-differences can be non-positive; fall back to the
        // previous step rather than erroring.
        if (!(proposal > 0.0)) return std::min(reset_.last_eta, options_.eta_max);
        return std::min(proposal, options_.eta_max);
      }
    }
    return options_.lr;
  }

  void apply_step(double eta) {
    if (options_.preconditioned)
      axpy(eta, direction_, w_);
    else
      axpy(-eta, grad_, w_);
  }

  void remember_history(const IterationTelemetry& t) {
    reset_.last_eta = t.eta;
    reset_.last_grad_sq = t.grad_sq;
    reset_.last_value = t.f_batch;
    if (t.line_search_ran) reset_.last_trial_value = t.trial_value;
    reset_.has_history = true;
  }

  TelemetryRow epoch_row(long epoch, long counted, double avg_eta, double avg_eta0,
                         double avg_gnorm, long backtracks, double seconds) {
    TelemetryRow row;
    row.epoch = epoch;
    row.train_loss = full_loss_now();
    row.test_accuracy = problem_->test_accuracy(w_);
    row.avg_step = counted > 0 ? avg_eta : 0.0;
    row.avg_initial_step = counted > 0 ? avg_eta0 : 0.0;
    row.avg_grad_norm = counted > 0 ? avg_gnorm : 0.0;
    row.backtracks_total = backtracks;
    row.value_evals = value_evals_;
    row.grad_evals = grad_evals_;
    row.epoch_seconds = seconds;
    return row;
  }

  std::shared_ptr<const Problem> problem_;
  OptimizerOptions options_;
  RunSettings settings_;
  MiniBatchSchedule schedule_;
  ReferencePolicy reference_ = ReferencePolicy::monotone();

  Vector w_;
  Vector w_before_;
  Vector grad_;
  Vector direction_;
  Vector trial_w_;
  Vector v_;       // preconditioner accumulator
  Vector adam_m_;  // Adam baseline moments
  Vector adam_v_;
  std::vector<std::size_t> batch_;
  std::vector<double> per_sample_buffer_;
  ResetState reset_;
  double eta_prev_ = 1.0;
  long k_ = 0;

  std::uint64_t value_evals_ = 0;
  std::uint64_t grad_evals_ = 0;
  std::uint64_t telemetry_value_evals_ = 0;

  IterationCallback callback_;
};

}  // namespace ponos
