#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ponos/config.hpp"
#include "ponos/telemetry.hpp"
#include "ponos/verify.hpp"

namespace ponos {

// Exit codes: 0 ok, 1 config error, 2 runtime/optimizer error, 3 verification
// failure.
enum ExitCode { kOk = 0, kConfigError = 1, kRuntimeError = 2, kVerifyFailure = 3 };

inline RunRecord run_single(const RunConfig& config) {
  Runner runner = make_runner(config);
  RunRecord record = runner.run();
  record.config = config.resolved;
  record.seed = config.seed;
  return record;
}

namespace clidetail {

inline void apply_overrides(std::map<std::string, std::string>& flat,
                            const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set", "expected section.key=value, got '" + kv + "'");
    flat[cfg::trim(kv.substr(0, eq))] = cfg::trim(kv.substr(eq + 1));
  }
}

inline std::map<std::string, std::string> load_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open '" + path + "'");
  auto flat = cfg::parse_ini(in);
  if (!flat.count("run.name")) {
    std::string stem = std::filesystem::path(path).stem().string();
    if (!stem.empty()) flat["run.name"] = stem;
  }
  return flat;
}

inline void write_outputs(const std::filesystem::path& dir, const RunRecord& record) {
  std::filesystem::create_directories(dir);
  write_telemetry_csv((dir / "telemetry.csv").string(), record.epochs);
  std::ofstream out(dir / "summary.json");
  out << to_json(record).dump(2) << '\n';
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = cfg::trim(tok);
    if (tok.empty()) continue;
    try {
      seeds.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ValidationError("--seeds", "bad seed '" + tok + "'");
    }
  }
  if (seeds.empty()) throw ValidationError("--seeds", "no seeds given");
  return seeds;
}

// Per-epoch mean and (population) stddev across seeds for each metric column.
inline void write_aggregate_csv(const std::filesystem::path& path,
                                const std::vector<RunRecord>& records) {
  std::size_t rows = records.empty() ? 0 : records.front().epochs.size();
  for (const auto& r : records) rows = std::min(rows, r.epochs.size());

  static const char* metrics[] = {"train_loss",       "test_accuracy", "avg_step",
                                  "avg_initial_step", "avg_grad_norm", "backtracks_total",
                                  "value_evals",      "grad_evals",    "epoch_seconds"};
  auto metric_of = [](const TelemetryRow& row, std::size_t m) -> double {
    switch (m) {
      case 0: return row.train_loss;
      case 1: return row.test_accuracy.value_or(std::numeric_limits<double>::quiet_NaN());
      case 2: return row.avg_step;
      case 3: return row.avg_initial_step;
      case 4: return row.avg_grad_norm;
      case 5: return static_cast<double>(row.backtracks_total);
      case 6: return static_cast<double>(row.value_evals);
      case 7: return static_cast<double>(row.grad_evals);
      default: return row.epoch_seconds;
    }
  };

  std::ofstream out(path);
  out << "epoch";
  for (const char* m : metrics) out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    out << records.front().epochs[i].epoch;
    for (std::size_t m = 0; m < 9; ++m) {
      double sum = 0.0, sum_sq = 0.0;
      for (const auto& r : records) {
        const double v = metric_of(r.epochs[i], m);
        sum += v;
        sum_sq += v * v;
      }
      const double n = static_cast<double>(records.size());
      const double mean = sum / n;
      const double var = std::max(sum_sq / n - mean * mean, 0.0);
      out << ',' << detail::format_double(mean) << ',' << detail::format_double(std::sqrt(var));
    }
    out << '\n';
  }
}

}  // namespace clidetail

inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"Nonmonotone stochastic line-search benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string seeds_text;
  std::vector<std::string> overrides;
  long epochs_override = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "INI run configuration")->required();
    cmd->add_option("--out", out_dir, "output directory (default: out)");
    cmd->add_option("--set", overrides, "override a config key: section.key=value");
    cmd->add_option("--epochs", epochs_override, "override run.epochs");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "single run -> telemetry.csv + summary.json");
  add_common(cmd_run);

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "multi-seed runs + mean/stddev aggregate");
  add_common(cmd_sweep);
  cmd_sweep->add_option("--seeds", seeds_text, "comma-separated seed list")->required();

  std::string record_path;
  std::string report_path;
  CLI::App* cmd_verify = app.add_subcommand("verify", "invariant report for a recorded run");
  cmd_verify->add_option("record", record_path, "summary.json of a finished run")->required();
  cmd_verify->add_option("--out", report_path, "where to write the JSON report");

  std::string regime = "sc";
  double cert_c = 0.5, cert_xi = 1.0, cert_delta = 0.5, cert_eta_bar_min = 0.1,
         cert_eta_max = 10.0, cert_mu = 1.0, cert_lmax = 1.0, cert_a1 = 0.2;
  CLI::App* cmd_cert = app.add_subcommand("certificate", "convergence-rate constants");
  cmd_cert->add_option("--regime", regime, "sc | convex | pl")->required();
  cmd_cert->add_option("--c", cert_c)->required();
  cmd_cert->add_option("--xi", cert_xi)->required();
  cmd_cert->add_option("--delta", cert_delta);
  cmd_cert->add_option("--eta-bar-min", cert_eta_bar_min);
  cmd_cert->add_option("--eta-max", cert_eta_max);
  cmd_cert->add_option("--mu", cert_mu);
  cmd_cert->add_option("--lmax", cert_lmax);
  cmd_cert->add_option("--a1", cert_a1);

  std::reverse(args.begin(), args.end());  // CLI11 wants reversed argv-style input
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (cmd_run->parsed() || cmd_sweep->parsed()) {
      auto flat = clidetail::load_flat_config(config_path);
      clidetail::apply_overrides(flat, overrides);
      if (epochs_override >= 0) flat["run.epochs"] = std::to_string(epochs_override);
      const RunConfig base = resolve_config(flat);

      if (cmd_run->parsed()) {
        const RunRecord record = run_single(base);
        const auto dir = std::filesystem::path(out_dir) / base.name;
        clidetail::write_outputs(dir, record);
        if (!record.ok()) {
          std::cerr << "run aborted: " << record.error << '\n';
          return kRuntimeError;
        }
        std::cout << dir.string() << '\n';
        return kOk;
      }

      const auto seeds = clidetail::parse_seed_list(seeds_text);
      std::vector<RunRecord> records;
      bool any_error = false;
      for (const std::uint64_t seed : seeds) {
        auto flat_seed = flat;
        flat_seed["run.seed"] = std::to_string(seed);
        const RunConfig config = resolve_config(flat_seed);
        RunRecord record = run_single(config);
        const auto dir = std::filesystem::path(out_dir) / base.name /
                         ("seed_" + std::to_string(seed));
        clidetail::write_outputs(dir, record);
        if (!record.ok()) {
          std::cerr << "seed " << seed << " aborted: " << record.error << '\n';
          any_error = true;
        }
        records.push_back(std::move(record));
      }
      clidetail::write_aggregate_csv(
          std::filesystem::path(out_dir) / base.name / "aggregate.csv", records);
      return any_error ? kRuntimeError : kOk;
    }

    if (cmd_verify->parsed()) {
      std::ifstream in(record_path);
      if (!in) throw ValidationError("record", "cannot open '" + record_path + "'");
      nlohmann::json j;
      in >> j;
      const RunRecord recorded = run_record_from_json(j);
      const VerifyReport report = verify_record(recorded);
      const nlohmann::json out = to_json(report);
      std::cout << out.dump(2) << '\n';
      if (!report_path.empty()) {
        std::ofstream rep(report_path);
        rep << out.dump(2) << '\n';
      }
      return report.ok ? kOk : kVerifyFailure;
    }

    if (cmd_cert->parsed()) {
      RateCertificate cert;
      if (regime == "sc") {
        cert = certificate_strongly_convex(cert_c, cert_xi, cert_delta, cert_eta_bar_min,
                                           cert_eta_max, cert_mu, cert_lmax);
      } else if (regime == "convex") {
        cert = certificate_convex(cert_c, cert_xi, cert_a1, cert_delta, cert_eta_bar_min,
                                  cert_lmax);
      } else if (regime == "pl") {
        cert = certificate_pl(cert_c, cert_xi, cert_delta, cert_eta_bar_min, cert_eta_max,
                              cert_mu, cert_lmax);
      } else {
        throw ValidationError("--regime", "expected sc, convex or pl");
      }
      std::cout << to_json(cert).dump(2) << '\n';
      return kOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace ponos
