// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Expected values are computed from independent oracles (closed
// forms, from-scratch recursions, finite differences) inside each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ponos/analysis.hpp"
#include "ponos/data.hpp"
#include "ponos/linesearch.hpp"
#include "ponos/optim.hpp"
#include "ponos/rng.hpp"
#include "ponos/stepsize.hpp"
#include "ponos/verify.hpp"

using namespace ponos;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::vector<RunRecord> g_records;  // every run feeds criterion 14

RunRecord tracked_run(Runner& runner) {
  RunRecord record = runner.run();
  g_records.push_back(record);
  return record;
}

struct BacktrackStats {
  std::vector<long> counts;  // l_k per line-search iteration

  long median(std::size_t lo, std::size_t hi) const {
    std::vector<long> seg(counts.begin() + lo, counts.begin() + hi);
    std::sort(seg.begin(), seg.end());
    return seg[seg.size() / 2];
  }
  long total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
  }
};

// ---------------------------------------------------------------------------

// Criterion 1: Zhang recursion against a from-scratch recomputation of the
// C_k / Q_k recursion using closed-form Q, plus the Lemma-2 bounds.
Check criterion_zhang_oracle() {
  Check check;
  Rng rng(1001);
  for (int draw = 0; draw < 1000; ++draw) {
    const double xi = draw % 5 == 0 ? 1.0 : rng.uniform();
    const std::size_t length = 24 + static_cast<std::size_t>(rng.below(40));
    std::vector<double> values(length);
    for (double& v : values) v = std::exp(rng.normal());

    NonmonotoneState state;
    state.xi = xi;
    for (std::size_t k = 0; k < length; ++k) {
      const ZhangResult r = zhang_reference(state, values[k]);
      // oracle: rebuild the whole chain with closed-form Q_j
      double c_prev = values[0];
      double oracle = values[0];
      for (std::size_t j = 0; j <= k; ++j) {
        const double q_j = xi == 1.0 ? static_cast<double>(j)
                                     : (1.0 - std::pow(xi, static_cast<double>(j))) / (1.0 - xi);
        const double c_tilde = (xi * q_j * c_prev + values[j]) / (xi * q_j + 1.0);
        oracle = std::max(c_tilde, values[j]);
        c_prev = oracle;
      }
      check.expect(std::abs(r.reference - oracle) <= 1e-14 * std::max(1.0, std::abs(oracle)),
                   "recursion deviates from the from-scratch oracle");
      state = r.next;
      if (xi == 1.0) {
        check.expect(state.q == static_cast<double>(k + 1), "Q_{k+1} != k+1 at xi=1");
      } else {
        check.expect(state.q >= 1.0 && state.q <= 1.0 / (1.0 - xi) + 1e-12,
                     "Q_{k+1} outside [1, 1/(1-xi)]");
      }
      if (!check.ok) return check;
    }
  }
  return check;
}

// Criterion 2: xi = 0 vs the monotone policy, bitwise, on all desk problems.
Check criterion_monotone_degeneration() {
  Check check;
  std::vector<std::pair<std::string, std::shared_ptr<Problem>>> problems;
  problems.emplace_back("lsq", make_interpolating_least_squares(0, 50, 20, 100.0, 2.0));
  {
    Dataset blobs = make_binary_blobs(0, 120, 2, 4.0);
    problems.emplace_back("kernel", make_kernel_logistic(blobs.features, blobs.labels, 1.0));
  }
  {
    Dataset blobs = make_multiclass_blobs(0, 60, 4, 3, 4.0);
    problems.emplace_back("mlp",
                          make_mlp_problem(16, blobs.features, labels_as_classes(blobs), 0));
  }
  for (const auto& [name, problem] : problems) {
    OptimizerOptions zhang_opts;
    zhang_opts.xi = 0.0;
    OptimizerOptions mono_opts;
    mono_opts.linesearch = LineSearchMode::monotone;
    const RunSettings settings{8, 10, 7};
    Runner a(problem, zhang_opts, settings);
    Runner b(problem, mono_opts, settings);
    const RunRecord ra = tracked_run(a);
    const RunRecord rb = tracked_run(b);
    check.expect(ra.epochs.size() == rb.epochs.size(), name + ": row count differs");
    for (std::size_t i = 0; i < std::min(ra.epochs.size(), rb.epochs.size()); ++i) {
      check.expect(ra.epochs[i].train_loss == rb.epochs[i].train_loss,
                   name + ": loss series not bitwise identical");
      check.expect(ra.epochs[i].avg_step == rb.epochs[i].avg_step,
                   name + ": step series not bitwise identical");
    }
    if (!check.ok) return check;
  }
  return check;
}

// Criterion 3: closed-form Armijo thresholds on 1-D quadratics f = L w^2 / 2.
Check criterion_backtracking_exactness() {
  Check check;
  const double c = 0.5, delta = 0.5, w = 4.0;
  for (const double curvature : {0.5, 1.0, 4.0}) {
    for (const double eta_start : {0.5, 5.0, 50.0}) {
      const double grad = curvature * w;
      auto trial = [&](double eta) {
        const double next = w - eta * grad;
        return 0.5 * curvature * next * next;
      };
      const double f0 = 0.5 * curvature * w * w;
      const LineSearchOutcome outcome =
          backtrack(trial, eta_start, delta, c, f0, grad * grad, 200);
      // exact threshold eta <= 2 (1-c)/L, all quantities binary-exact
      const double threshold = 2.0 * (1.0 - c) / curvature;
      double eta = eta_start;
      int l = 0;
      while (eta > threshold) {
        eta *= delta;
        ++l;
      }
      check.expect(outcome.backtracks == l, "backtrack count mismatch");
      check.expect(outcome.eta == eta, "accepted step mismatch");
    }
  }
  // the worked example: eta_start 5, L = 1: trials 5, 2.5, 1.25 fail, 0.625 ok
  auto trial = [&](double eta) {
    const double next = w - eta * w;
    return 0.5 * next * next;
  };
  const LineSearchOutcome outcome = backtrack(trial, 5.0, 0.5, 0.5, 8.0, 16.0, 200);
  check.expect(outcome.eta == 0.625 && outcome.backtracks == 3,
               "worked example (0.625, 3) not reproduced");
  return check;
}

struct SuiteObservations {
  long ls_iterations = 0;
  long violations_step_floor = 0;
  long violations_reference = 0;
  long violations_polyak = 0;
  long checked_polyak = 0;
};

// Shared driver for criteria 4, 5, 6: full PoNoS runs over the interpolating
// least-squares suite with the lemma-level floors checked at every iteration.
SuiteObservations run_interpolating_suite() {
  SuiteObservations obs;
  struct Instance {
    std::uint64_t seed;
    double cond, l_max;
    long epochs;
  };
  const std::vector<Instance> instances = {
      {0, 100.0, 2.0, 900}, {1, 100.0, 2.0, 900}, {2, 50.0, 2.0, 900},
      {3, 100.0, 4.0, 900}, {4, 1.0, 0.5, 300},   {5, 30.0, 1.0, 300},
      {6, 200.0, 4.0, 900}, {7, 200.0, 2.0, 900}, {8, 150.0, 3.0, 900},
  };
  for (const Instance& inst : instances) {
    auto problem = make_interpolating_least_squares(inst.seed, 50, 20, inst.cond, inst.l_max);
    const double l_max = *problem->lipschitz_max();
    OptimizerOptions opts;
    Runner runner(problem, opts, RunSettings{inst.epochs, 5, inst.seed + 1});
    runner.set_iteration_callback([&](const IterationTelemetry& t, std::span<const double>) {
      if (t.skipped) return;
      if (std::isfinite(t.reference)) {
        if (!(t.reference >= t.f_batch)) ++obs.violations_reference;
        if (!(t.reference >= 0.0)) ++obs.violations_reference;
      }
      if (t.line_search_ran) {
        ++obs.ls_iterations;
        const double floor = std::min(2.0 * 0.5 * (1.0 - 0.5) / l_max, t.eta_start);
        if (!(t.eta >= floor - 1e-12)) ++obs.violations_step_floor;
      }
      if (std::isfinite(t.polyak_pre_cap)) {
        ++obs.checked_polyak;
        const double bound = (1.0 - 1e-9) / (2.0 * 0.1 * l_max);
        if (!(t.polyak_pre_cap >= bound)) ++obs.violations_polyak;
      }
    });
    tracked_run(runner);
  }
  return obs;
}

SuiteObservations& suite_observations() {
  static SuiteObservations obs = run_interpolating_suite();
  return obs;
}

// Criterion 4: Lemma-1 step floor, zero violations over >= 50,000 iterations.
Check criterion_step_size_floor() {
  Check check;
  const SuiteObservations& obs = suite_observations();
  check.expect(obs.ls_iterations >= 50000,
               "only " + std::to_string(obs.ls_iterations) + " line-search iterations");
  check.expect(obs.violations_step_floor == 0,
               std::to_string(obs.violations_step_floor) + " step-floor violations");
  check.note(std::to_string(obs.ls_iterations) + " line-search iterations");
  return check;
}

// Criterion 5: C_k >= f_ik(w_k) and C_k >= 0 on every interpolating run.
Check criterion_reference_bounds() {
  Check check;
  const SuiteObservations& obs = suite_observations();
  check.expect(obs.violations_reference == 0,
               std::to_string(obs.violations_reference) + " reference-bound violations");
  return check;
}

// Criterion 6: pre-cap Polyak step >= 1/(2 c_p L_max) at every iterate.
Check criterion_polyak_floor() {
  Check check;
  const SuiteObservations& obs = suite_observations();
  check.expect(obs.checked_polyak > 0, "no Polyak steps observed");
  check.expect(obs.violations_polyak == 0,
               std::to_string(obs.violations_polyak) + " Polyak floor violations");
  return check;
}

// Criterion 7: Lemma-4 variance bound, with the smoothness factor pinned by
// the exact quadratic identity ||g||^2 = 2 L (f - f*).
Check criterion_variance_bound() {
  Check check;
  {
    LeastSquaresProblem quadratic(std::vector<double>{1.0}, Vector{0.0}, 1);
    quadratic.set_witness({0.0});
    for (const double w : {2.0, -3.5, 0.125}) {
      const VarianceBoundCheck vb = check_variance_bound(quadratic, Vector{w});
      check.expect(vb.lhs == vb.rhs, "quadratic equality ||g||^2 = 2L(f-f*) not exact");
      check.expect(vb.ok, "quadratic equality case rejected");
    }
  }
  Rng rng(7007);
  for (const std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    auto problem = seed == 2 ? make_interpolating_least_squares(seed, 10, 25)  // convex-only
                             : make_interpolating_least_squares(seed, 50, 20, 50.0, 2.0);
    for (int i = 0; i < 100; ++i) {
      Vector w(problem->dim());
      for (double& x : w) x = 3.0 * rng.normal();
      const VarianceBoundCheck vb = check_variance_bound(*problem, w);
      if (!vb.ok) {
        check.expect(false, "variance bound violated at a random iterate");
        return check;
      }
    }
  }
  // witness: both sides vanish
  auto problem = make_interpolating_least_squares(0, 50, 20, 1.0, 0.5);
  const VarianceBoundCheck vb = check_variance_bound(*problem, problem->witness());
  check.expect(vb.lhs == 0.0 && vb.rhs == 0.0, "witness does not zero both sides");
  return check;
}

// Criterion 8: strongly convex desk-scale convergence: loss < 1e-16 within
// 200 epochs, geometric fit r^2 > 0.9 over [1e-12, 1e-2], and the 20-seed
// Lyapunov ratio against the certificate of a theorem-valid configuration.
Check criterion_linear_convergence() {
  Check check;
  auto problem = make_interpolating_least_squares(0, 50, 20, 1.0, 0.5);

  {
    OptimizerOptions opts;  // published defaults
    Runner runner(problem, opts, RunSettings{200, 5, 1});
    std::vector<double> losses;
    runner.set_iteration_callback([&](const IterationTelemetry&, std::span<const double>) {
      losses.push_back(runner.full_loss_now());
    });
    const RunRecord record = tracked_run(runner);
    check.expect(record.ok(), "run aborted: " + record.error);
    check.expect(record.final_loss() < 1e-16,
                 "final loss " + std::to_string(record.final_loss()) + " >= 1e-16");
    const std::vector<double> window = rate_fit_window(losses, 1e-12, 1e-2);
    check.expect(window.size() >= 10, "fit window too small");
    if (window.size() >= 10) {
      const RateFit fit = estimate_geometric_rate(window);
      check.expect(fit.r_squared > 0.9, "fit r^2 = " + std::to_string(fit.r_squared));
      char buf[64];
      std::snprintf(buf, sizeof buf, "d_hat=%.3f r2=%.3f", fit.d_hat, fit.r_squared);
      check.note(buf);
    }
  }

  // theorem-valid configuration: c = 0.6, xi = 0.001, eta_max = 1
  {
    const double eta_max = 1.0;
    const double l_max = *problem->lipschitz_max();
    const double mu = *problem->strong_convexity();
    const double eta_bar_min = std::min(1.0 / (2.0 * 0.1 * l_max), eta_max);
    const RateCertificate cert =
        certificate_strongly_convex(0.6, 0.001, 0.5, eta_bar_min, eta_max, mu, l_max);
    check.expect(cert.valid, "certificate invalid for the Lyapunov configuration");

    const int seeds = 20;
    std::vector<std::vector<double>> lyapunov(seeds);
    for (int s = 0; s < seeds; ++s) {
      OptimizerOptions opts;
      opts.c = 0.6;
      opts.xi = 0.001;
      opts.eta_max = eta_max;
      Runner runner(problem, opts, RunSettings{40, 5, static_cast<std::uint64_t>(s + 1)});
      bool first = true;
      runner.set_iteration_callback(
          [&](const IterationTelemetry& t, std::span<const double> w_after) {
            if (first) {  // V_0 uses w_0 and C_{-1} = f_{i_0}(w_0)
              lyapunov[s].push_back(lyapunov_strongly_convex(t.w_before, problem->witness(),
                                                             t.f_batch, 0.0, cert.a));
              first = false;
            }
            lyapunov[s].push_back(
                lyapunov_strongly_convex(w_after, problem->witness(), t.reference, 0.0, cert.a));
          });
      tracked_run(runner);
    }
    std::size_t length = lyapunov[0].size();
    for (const auto& series : lyapunov) length = std::min(length, series.size());
    std::vector<double> mean(length, 0.0);
    for (int s = 0; s < seeds; ++s)
      for (std::size_t k = 0; k < length; ++k)
        mean[k] += lyapunov[s][k] / static_cast<double>(seeds);
    double ratio_sum = 0.0;
    long count = 0;
    for (std::size_t k = 0; k + 1 < length && mean[k] > 1e-18 * mean[0]; ++k) {
      ratio_sum += mean[k + 1] / mean[k];
      ++count;
    }
    check.expect(count >= 100, "too few Lyapunov ratios");
    const double ratio = ratio_sum / static_cast<double>(count);
    check.expect(ratio <= cert.d + 0.05, "Lyapunov ratio " + std::to_string(ratio) +
                                             " exceeds d + 0.05 = " +
                                             std::to_string(cert.d + 0.05));
    char buf[64];
    std::snprintf(buf, sizeof buf, "ratio=%.3f d=%.3f", ratio, cert.d);
    check.note(buf);
  }
  return check;
}

BacktrackStats reset_run(std::shared_ptr<Problem> problem, bool with_reset, long epochs,
                         std::size_t batch, double eta_max, double* final_loss) {
  OptimizerOptions opts;
  opts.reset = with_reset ? ResetRule::backtrack_memory : ResetRule::none;
  opts.eta_max = eta_max;
  Runner runner(problem, opts, RunSettings{epochs, batch, 1});
  BacktrackStats stats;
  runner.set_iteration_callback([&](const IterationTelemetry& t, std::span<const double>) {
    if (t.line_search_ran) stats.counts.push_back(t.backtracks);
  });
  const RunRecord record = tracked_run(runner);
  *final_loss = record.final_loss();
  return stats;
}

// Criterion 9: the backtrack-memory reset keeps the median backtracks at
// <= 1 early and 0 late, strictly beats reset0 on totals, and lands within
// one order of magnitude of the same final loss.
Check criterion_resetting() {
  Check check;
  struct Setup {
    std::string name;
    std::shared_ptr<Problem> problem;
    long epochs;
    std::size_t batch;
    double eta_max;
  };
  std::vector<Setup> setups;
  setups.push_back({"lsq", make_interpolating_least_squares(0, 50, 20, 100.0, 2.0), 300, 5,
                    10.0});
  {
    Dataset blobs = make_binary_blobs(0, 200, 2, 3.0);
    setups.push_back(
        {"kernel", make_kernel_logistic(blobs.features, blobs.labels, 1.0), 100, 20, 1e6});
  }
  for (const Setup& setup : setups) {
    double loss_reset = 0.0, loss_plain = 0.0;
    const BacktrackStats with_reset =
        reset_run(setup.problem, true, setup.epochs, setup.batch, setup.eta_max, &loss_reset);
    const BacktrackStats without_reset =
        reset_run(setup.problem, false, setup.epochs, setup.batch, setup.eta_max, &loss_plain);
    const std::size_t n = with_reset.counts.size();
    check.expect(n > 100, setup.name + ": too few line-search iterations");
    if (n <= 100) continue;
    check.expect(with_reset.median(0, n / 10) <= 1, setup.name + ": early median > 1");
    check.expect(with_reset.median(n - n / 5, n) == 0, setup.name + ": late median != 0");
    check.expect(without_reset.total() > with_reset.total(),
                 setup.name + ": reset0 did not record strictly more backtracks (" +
                     std::to_string(without_reset.total()) + " vs " +
                     std::to_string(with_reset.total()) + ")");
    const double a = std::max(loss_reset, 1e-20);
    const double b = std::max(loss_plain, 1e-20);
    check.expect(std::abs(std::log10(a / b)) <= 1.0,
                 setup.name + ": final losses differ by more than one order");
    check.note(setup.name + " totals " + std::to_string(with_reset.total()) + "/" +
               std::to_string(without_reset.total()));
  }
  return check;
}

// Criterion 10: from identical (w_k, batch, history) states, the zhang step
// is never smaller than the monotone one.
Check criterion_nonmonotone_dominance() {
  Check check;
  auto problem = make_interpolating_least_squares(0, 50, 20, 100.0, 2.0);
  OptimizerOptions opts;  // zhang defaults
  Runner runner(problem, opts, RunSettings{200, 5, 3});
  long compared = 0, dominance_failures = 0, replay_failures = 0;
  runner.set_iteration_callback([&](const IterationTelemetry& t, std::span<const double>) {
    if (!t.line_search_ran) return;
    Vector w(t.w_before.begin(), t.w_before.end());
    Vector grad(t.grad.begin(), t.grad.end());
    std::vector<std::size_t> batch(t.batch.begin(), t.batch.end());
    Vector scratch(w.size());
    auto trial = [&](double eta) {
      scratch = w;
      axpy(-eta, grad, scratch);
      return problem->value(scratch, batch);
    };
    // ghost replays: same start, zhang reference vs the monotone one
    const LineSearchOutcome zhang =
        backtrack(trial, t.eta_start, opts.delta, opts.c, t.reference, t.decrement, 200);
    if (zhang.eta != t.eta) ++replay_failures;
    double mono_eta = 0.0;
    try {
      mono_eta =
          backtrack(trial, t.eta_start, opts.delta, opts.c, t.f_batch, t.decrement, 200).eta;
    } catch (const MaxBacktracksExceeded&) {
      mono_eta = 0.0;
    }
    if (!(zhang.eta >= mono_eta)) ++dominance_failures;
    ++compared;
  });
  tracked_run(runner);
  check.expect(compared > 1000, "too few comparisons");
  check.expect(replay_failures == 0, "ghost replay deviated from the recorded step");
  check.expect(dominance_failures == 0,
               std::to_string(dominance_failures) + " dominance violations out of " +
                   std::to_string(compared));
  check.note(std::to_string(compared) + " states compared");
  return check;
}

// Criterion 11: desk analogue of the convex kernel benchmark: PoNoS reaches
// train loss < 1e-3 in fewer iterations than SLS with the exponential reset.
Check criterion_kernel_race() {
  Check check;
  Dataset blobs = make_binary_blobs(0, 200, 2, 4.0);
  auto problem = make_kernel_logistic(blobs.features, blobs.labels, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    long iterations[2] = {-1, -1};
    for (int which = 0; which < 2; ++which) {
      OptimizerOptions opts;
      opts.eta_max = 1e6;  // convex problem: the cap is effectively off
      if (which == 1) {
        opts.linesearch = LineSearchMode::monotone;
        opts.stepsize = StepsizeRule::exp_cap;
        opts.reset = ResetRule::none;
      }
      Runner runner(problem, opts, RunSettings{100, 20, seed});
      long hit = -1;
      runner.set_iteration_callback([&](const IterationTelemetry& t, std::span<const double>) {
        if (hit < 0 && runner.full_loss_now() < 1e-3) hit = t.k + 1;
      });
      const RunRecord record = tracked_run(runner);
      iterations[which] = hit < 0 ? record.iterations + 1 : hit;
    }
    check.expect(iterations[0] < iterations[1],
                 "seed " + std::to_string(seed) + ": ponos " + std::to_string(iterations[0]) +
                     " vs sls " + std::to_string(iterations[1]));
    if (seed == 1)
      check.note("seed 1: " + std::to_string(iterations[0]) + " vs " +
                 std::to_string(iterations[1]) + " iterations");
  }
  return check;
}

// Criterion 12: analytic gradients against central differences.
Check criterion_gradient_correctness() {
  Check check;
  Rng rng(1212);
  auto relative_error = [](const Vector& fd, const Vector& g) {
    const double scale = std::max(max_abs(g), 1e-8);
    double worst = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
      worst = std::max(worst, std::abs(fd[j] - g[j]) / scale);
    return worst;
  };

  {
    LeastSquaresProblem quadratic(std::vector<double>{1.0, 0.0, 0.0, 1.0}, Vector{0.0, 0.0}, 2);
    for (int i = 0; i < 20; ++i) {
      Vector w{3.0 * rng.normal(), 3.0 * rng.normal()};
      const auto idx = quadratic.full_index_set();
      const Vector g = quadratic.gradient(w, idx);
      const Vector fd = finite_diff_gradient(quadratic, w, idx, 1e-6);
      check.expect(relative_error(fd, g) < 1e-6, "quadratic gradient error >= 1e-6");
    }
  }
  {
    auto problem = make_interpolating_least_squares(3, 40, 12, 20.0, 2.0);
    for (int i = 0; i < 20; ++i) {
      Vector w(problem->dim());
      for (double& x : w) x = 2.0 * rng.normal();
      const auto idx = problem->full_index_set();
      const Vector g = problem->gradient(w, idx);
      const Vector fd = finite_diff_gradient(*problem, w, idx, 1e-6);
      check.expect(relative_error(fd, g) < 1e-6, "least-squares gradient error >= 1e-6");
    }
  }
  {
    Dataset blobs = make_binary_blobs(5, 30, 2, 4.0);
    auto problem = make_kernel_logistic(blobs.features, blobs.labels, 1.0);
    for (int i = 0; i < 20; ++i) {
      Vector w(problem->dim());
      for (double& x : w) x = 0.3 * rng.normal();
      const auto idx = problem->full_index_set();
      const Vector g = problem->gradient(w, idx);
      const Vector fd = finite_diff_gradient(*problem, w, idx, 1e-6);
      check.expect(relative_error(fd, g) < 1e-6, "kernel gradient error >= 1e-6");
    }
  }
  {
    Dataset blobs = make_multiclass_blobs(6, 20, 3, 3, 3.0);
    auto problem = make_mlp_problem(8, blobs.features, labels_as_classes(blobs), 6);
    for (int i = 0; i < 20; ++i) {
      Vector w(problem->dim());
      for (double& x : w) x = 0.5 * rng.normal();
      const auto idx = problem->full_index_set();
      const Vector g = problem->gradient(w, idx);
      const Vector fd = finite_diff_gradient(*problem, w, idx, 1e-6);
      check.expect(relative_error(fd, g) < 1e-4, "mlp gradient error >= 1e-4");
    }
  }
  return check;
}

// Criterion 13: certificate validity logic and exact example values.
Check criterion_certificates() {
  Check check;
  check.expect(!certificate_strongly_convex(0.5, 0.001, 0.5, 0.1, 10.0, 0.5, 4.0).valid,
               "c = 0.5 accepted");
  check.expect(!certificate_strongly_convex(0.3, 0.001, 0.5, 0.1, 10.0, 0.5, 4.0).valid,
               "c < 0.5 accepted");
  check.expect(!certificate_strongly_convex(0.6, 1.0 / 501.0, 0.5, 0.1, 10.0, 0.5, 4.0).valid,
               "xi at its bound accepted");
  const RateCertificate sc = certificate_strongly_convex(0.6, 0.001, 0.5, 0.1, 10.0, 0.5, 4.0);
  check.expect(sc.valid, "derived example tuple rejected");
  check.expect(std::abs(sc.d - 0.95) <= 1e-12, "d != 0.95");
  check.expect(std::abs(sc.a - 1.0 / 30.0) <= 1e-12, "a != 1/30");
  check.expect(std::abs(sc.rate_b - 0.501) <= 1e-12, "b != 0.501");
  check.expect(std::abs(sc.eta_min - 0.1) <= 1e-12, "eta_min != 0.1");

  const RateCertificate cx = certificate_convex(0.6, 0.05, 0.2, 0.5, 0.1, 4.0);
  check.expect(cx.valid && std::abs(cx.d1 - 7.5) <= 1e-12, "convex example d1 != 7.5");
  check.expect(!certificate_convex(0.6, 0.1, 0.2, 0.5, 0.1, 4.0).valid, "xi = a1/2 accepted");

  check.expect(!certificate_pl(0.5, 1e-4, 0.5, 0.7, 0.23, 1.0, 2.0).valid,
               "pl: c = L/(4mu) accepted");
  check.expect(!certificate_pl(0.45, 1e-4, 0.5, 0.7, 0.23, 1.0, 2.0).valid,
               "pl: c < L/(4mu) accepted");
  const RateCertificate pl = certificate_pl(0.6, 1e-4, 0.5, 0.7, 0.23, 1.0, 2.0);
  check.expect(pl.valid && pl.nu > 0.0 && pl.nu < 1.0, "pl example tuple rejected");
  const double a2 =
      (4.0 * 0.6 * 0.4 - 2.0) / (4.0 * 0.5 * 0.6 * 0.4) + 1.0 / (2.0 * 0.23);
  check.expect(std::abs(pl.a2 - a2) <= 1e-12, "pl a2 mismatch");
  return check;
}

// Criterion 14: oracle accounting. Every run of this suite, plus dedicated
// ls_every and Grippo runs, satisfies value_evals == sum(l_k + 1) exactly.
Check criterion_oracle_accounting() {
  Check check;
  auto problem = make_interpolating_least_squares(9, 40, 10, 50.0, 2.0);
  for (const char* variant : {"ls_every", "grippo_cross", "grippo_single"}) {
    OptimizerOptions opts;
    if (std::string(variant) == "ls_every") {
      opts.ls_every = 2;
      opts.reset = ResetRule::none;
    } else if (std::string(variant) == "grippo_cross") {
      opts.linesearch = LineSearchMode::grippo_cross;
    } else {
      opts.linesearch = LineSearchMode::grippo_single;
    }
    Runner runner(problem, opts, RunSettings{20, 8, 5});
    tracked_run(runner);
  }
  check.expect(!g_records.empty(), "no runs recorded");
  long checked = 0;
  for (const RunRecord& record : g_records) {
    ++checked;
    if (record.total_value_evals != record.sum_backtracks_plus_one) {
      check.expect(false, "run " + std::to_string(checked) + ": " +
                              std::to_string(record.total_value_evals) + " value evals vs sum " +
                              std::to_string(record.sum_backtracks_plus_one));
      return check;
    }
  }
  check.note(std::to_string(checked) + " runs checked");
  return check;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0: none stated
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "zhang recursion matches the from-scratch oracle", 1.0, criterion_zhang_oracle},
      {2, "xi = 0 is bitwise identical to the monotone line search", 10.0,
       criterion_monotone_degeneration},
      {3, "backtracking matches closed-form Armijo thresholds", 1.0,
       criterion_backtracking_exactness},
      {4, "accepted steps respect the smoothness floor (>= 50k iterations)", 30.0,
       criterion_step_size_floor},
      {5, "nonmonotone reference bounds hold at every iteration", 0.0,
       criterion_reference_bounds},
      {6, "pre-cap Polyak steps respect 1/(2 c_p L_max)", 0.0, criterion_polyak_floor},
      {7, "gradient variance bound with the exact quadratic factor", 0.0,
       criterion_variance_bound},
      {8, "strongly convex linear convergence and Lyapunov contraction", 60.0,
       criterion_linear_convergence},
      {9, "backtrack-memory reset: medians, totals and matching losses", 60.0,
       criterion_resetting},
      {10, "nonmonotone step dominates the monotone step state-by-state", 0.0,
       criterion_nonmonotone_dominance},
      {11, "kernel problem: ponos reaches 1e-3 before sls on every seed", 0.0,
       criterion_kernel_race},
      {12, "analytic gradients match central finite differences", 0.0,
       criterion_gradient_correctness},
      {13, "rate certificates: validity logic and exact constants", 0.0,
       criterion_certificates},
      {14, "oracle accounting: value evals = sum of (l_k + 1), exactly", 0.0,
       criterion_oracle_accounting},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check check;
    try {
      check = criterion.run();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.budget_seconds > 0.0 && seconds >= criterion.budget_seconds) {
      check.ok = false;
      check.detail += (check.detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    std::printf("%s  [%2d] %s (%.2fs%s%s)\n", check.ok ? "PASS" : "FAIL", criterion.id,
                criterion.name, seconds, check.detail.empty() ? "" : ": ",
                check.detail.c_str());
    if (!check.ok) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
