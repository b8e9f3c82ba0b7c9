#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ponos/analysis.hpp"
#include "ponos/config.hpp"
#include "ponos/optim.hpp"
#include "ponos/telemetry.hpp"

namespace ponos {

struct InvariantCheck {
  std::string name;
  long checked = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min slack seen
  std::string detail;

  bool ok() const { return violations == 0; }
};

// Per-iteration certificate checks attached to a run:
//   - armijo: f_{i_k}(w_{k+1}) <= C_k - c eta_k decrement + 1e-12 max(1,|C_k|),
//     re-evaluated from scratch at the new iterate;
//   - step_range: eta_k >= min(2 delta (1-c)/L_max, eta_start) - 1e-12;
//   - reference_bounds: C_k >= f_{i_k}(w_k), and C_k >= 0 when f* = 0;
//   - polyak_bound: pre-cap step >= 1/(2 c_p L_max) (1 - 1e-9) on
//     interpolating problems.
class RunChecker {
 public:
  RunChecker(std::shared_ptr<const Problem> problem, OptimizerOptions options)
      : problem_(std::move(problem)), options_(options) {
    armijo_.name = "armijo_certificate";
    step_range_.name = "step_size_range";
    reference_.name = "reference_bounds";
    polyak_.name = "polyak_lower_bound";
  }

  void observe(const IterationTelemetry& t, std::span<const double> w_after) {
    if (t.skipped) return;
    const bool has_reference = std::isfinite(t.reference);

    if (has_reference) {
      track(reference_, t.reference - t.f_batch, t.k, "C_k < f_ik(w_k)");
      if (problem_->f_star() == 0.0) track(reference_, t.reference, t.k, "C_k < 0");
    }

    if (t.line_search_ran) {
      const double recomputed = problem_->value(w_after, t.batch);
      const double rhs = t.reference - options_.c * t.eta * t.decrement +
                         1e-12 * std::max(1.0, std::abs(t.reference));
      track(armijo_, rhs - recomputed, t.k, "accepted step violates the Armijo certificate");

      if (problem_->lipschitz_max()) {
        const double floor =
            std::min(2.0 * options_.delta * (1.0 - options_.c) / *problem_->lipschitz_max(),
                     t.eta_start);
        track(step_range_, t.eta - (floor - 1e-12), t.k, "accepted step below the Lemma-1 floor");
      }
    }

    if (std::isfinite(t.polyak_pre_cap) && problem_->interpolating() &&
        problem_->lipschitz_max()) {
      const double floor =
          (1.0 - 1e-9) / (2.0 * options_.c_p * *problem_->lipschitz_max());
      track(polyak_, t.polyak_pre_cap - floor, t.k, "pre-cap Polyak step below 1/(2 c_p L_max)");
    }
  }

  IterationCallback callback() {
    return [this](const IterationTelemetry& t, std::span<const double> w_after) {
      observe(t, w_after);
    };
  }

  std::vector<InvariantCheck> results() const {
    std::vector<InvariantCheck> out{armijo_, step_range_, reference_};
    if (polyak_.checked > 0) out.push_back(polyak_);
    return out;
  }

  bool all_ok() const {
    for (const auto& check : results())
      if (!check.ok()) return false;
    return true;
  }

 private:
  void track(InvariantCheck& check, double margin, long k, const char* message) {
    ++check.checked;
    if (margin < check.worst_margin) check.worst_margin = margin;
    if (margin < 0.0) {
      ++check.violations;
      if (check.detail.empty()) {
        std::ostringstream os;
        os << message << " at iteration " << k << " (margin " << margin << ")";
        check.detail = os.str();
      }
    }
  }

  std::shared_ptr<const Problem> problem_;
  OptimizerOptions options_;
  InvariantCheck armijo_;
  InvariantCheck step_range_;
  InvariantCheck reference_;
  InvariantCheck polyak_;
};

// ---------------------------------------------------------------------------
// Post-hoc verification of a recorded run
// ---------------------------------------------------------------------------

struct VerifyReport {
  bool ok = true;
  std::vector<InvariantCheck> invariants;
  bool replay_matches = true;       // re-run reproduces the recorded rows
  bool accounting_ok = true;        // value evals == sum(l_k + 1) exactly
  std::string mismatch_detail;
  bool rate_fitted = false;
  RateFit rate;
};

inline bool rows_equal_modulo_time(const TelemetryRow& a, const TelemetryRow& b) {
  const auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.epoch == b.epoch && same(a.train_loss, b.train_loss) &&
         a.test_accuracy.has_value() == b.test_accuracy.has_value() &&
         (!a.test_accuracy || same(*a.test_accuracy, *b.test_accuracy)) &&
         same(a.avg_step, b.avg_step) && same(a.avg_initial_step, b.avg_initial_step) &&
         same(a.avg_grad_norm, b.avg_grad_norm) && a.backtracks_total == b.backtracks_total &&
         a.value_evals == b.value_evals && a.grad_evals == b.grad_evals;
}

// Re-runs the recorded config deterministically with the invariant checkers
// attached, then cross-checks the regenerated telemetry (minus wall-clock)
// and the oracle accounting identity against the recorded run.
inline VerifyReport verify_record(const RunRecord& recorded) {
  VerifyReport report;
  const RunConfig config = resolve_config(recorded.config);
  auto problem = build_problem(config.problem);
  Runner runner(problem, config.opts, config.settings());
  RunChecker checker(problem, config.opts);
  runner.set_iteration_callback(checker.callback());
  const RunRecord replay = runner.run();

  report.invariants = checker.results();
  for (const auto& check : report.invariants)
    if (!check.ok()) report.ok = false;

  if (replay.epochs.size() != recorded.epochs.size()) {
    report.replay_matches = false;
    report.mismatch_detail = "epoch count differs";
  } else {
    for (std::size_t i = 0; i < replay.epochs.size(); ++i) {
      if (!rows_equal_modulo_time(replay.epochs[i], recorded.epochs[i])) {
        report.replay_matches = false;
        report.mismatch_detail = "telemetry row " + std::to_string(i) + " differs";
        break;
      }
    }
  }
  if (!replay.error.empty() != !recorded.error.empty()) report.replay_matches = false;

  report.accounting_ok = replay.total_value_evals == replay.sum_backtracks_plus_one &&
                         recorded.total_value_evals == recorded.sum_backtracks_plus_one;
  report.ok = report.ok && report.replay_matches && report.accounting_ok;

  // Geometric-rate fit over the default window (loss in [1e-12, 1e-2]).
  std::vector<double> losses;
  for (const auto& row : recorded.epochs) losses.push_back(row.train_loss);
  const std::vector<double> window = rate_fit_window(losses, 1e-12, 1e-2);
  if (window.size() >= 10) {
    report.rate = estimate_geometric_rate(window);
    report.rate_fitted = true;
  }
  return report;
}

inline nlohmann::json to_json(const InvariantCheck& check) {
  nlohmann::json j{{"name", check.name},
                   {"ok", check.ok()},
                   {"checked", check.checked},
                   {"violations", check.violations}};
  if (std::isfinite(check.worst_margin)) j["worst_margin"] = check.worst_margin;
  if (!check.detail.empty()) j["detail"] = check.detail;
  return j;
}

inline nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json j;
  j["ok"] = report.ok;
  j["replay_matches"] = report.replay_matches;
  j["accounting_ok"] = report.accounting_ok;
  if (!report.mismatch_detail.empty()) j["mismatch_detail"] = report.mismatch_detail;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& check : report.invariants) checks.push_back(to_json(check));
  j["invariants"] = checks;
  if (report.rate_fitted) {
    j["rate_fit"] = {{"d_hat", report.rate.d_hat},
                     {"r_squared", report.rate.r_squared},
                     {"points", report.rate.points}};
  }
  return j;
}

inline nlohmann::json to_json(const RateCertificate& cert) {
  nlohmann::json j;
  j["valid"] = cert.valid;
  j["violated"] = cert.violated;
  j["eta_min"] = cert.eta_min;
  switch (cert.regime) {
    case Regime::strongly_convex:
      j["regime"] = "strongly_convex";
      j["d"] = cert.d;
      j["a"] = cert.a;
      j["rate_b"] = cert.rate_b;
      break;
    case Regime::convex:
      j["regime"] = "convex";
      j["d1"] = cert.d1;
      j["a1"] = cert.a1;
      j["b1"] = cert.b1;
      break;
    case Regime::pl:
      j["regime"] = "pl";
      j["a2"] = cert.a2;
      j["nu"] = cert.nu;
      j["b2"] = cert.b2;
      j["d2"] = cert.d2;
      break;
  }
  return j;
}

}  // namespace ponos
