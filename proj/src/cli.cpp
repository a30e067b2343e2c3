#include "lipsafe/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "lipsafe/planning.hpp"
#include "lipsafe/safety.hpp"

namespace lipsafe {

namespace {

constexpr const char* kCsvHeader =
    "action,safe_size_original,safe_size_total,total_uncertainty,state,crashed";

std::string format_state(const Vec& v) {
  char buf[64];
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    std::snprintf(buf, sizeof(buf), "%.6f", v[i]);
    out += buf;
  }
  return out;
}

EnvironmentSpec environment_from_json(const nlohmann::json& j, EnvironmentSpec base) {
  if (j.contains("name")) base = j["name"] == "hilly" ? hilly_spec() : muddy_spec();
  auto grid = [](const nlohmann::json& g, GridSpec base_grid) {
    return GridSpec{g.value("min", base_grid.min), g.value("max", base_grid.max),
                    g.value("step", base_grid.step)};
  };
  base.A = j.value("A", base.A);
  base.B = j.value("B", base.B);
  base.C = j.value("C", base.C);
  if (j.contains("state_grid")) base.state_grid = grid(j["state_grid"], base.state_grid);
  if (j.contains("action_grid")) base.action_grid = grid(j["action_grid"], base.action_grid);
  base.s0 = j.value("s0", base.s0);
  if (j.contains("s0_interval")) {
    base.s0_lo = j["s0_interval"][0];
    base.s0_hi = j["s0_interval"][1];
  }
  double ls = j.value("l_s", base.lipschitz.l_s);
  double la = j.value("l_a", base.lipschitz.l_a);
  base.lipschitz = LipschitzConstants(ls, la);
  return base;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_actions < 1) throw std::invalid_argument("actions must be >= 1");
  if (n_runs < 1) throw std::invalid_argument("runs must be >= 1");
  environment.validate();
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "muddy-fig4") {
    cfg.environment = muddy_spec();
  } else if (name == "hilly-fig6") {
    cfg.environment = hilly_spec();
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  cfg.preset = name;
  cfg.n_actions = 600;
  return cfg;
}

ExperimentConfig load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  ExperimentConfig cfg =
      j.contains("preset") ? preset_config(j["preset"]) : ExperimentConfig{};
  if (j.contains("environment"))
    cfg.environment = environment_from_json(j["environment"], cfg.environment);
  if (j.contains("policy")) cfg.policy = parse_policy(j["policy"]);
  cfg.n_actions = j.value("actions", cfg.n_actions);
  cfg.n_runs = j.value("runs", cfg.n_runs);
  cfg.base_seed = j.value("seed", cfg.base_seed);
  cfg.output_dir = j.value("output", cfg.output_dir);
  cfg.emit_total_safe_size = j.value("emit_total_safe_size", cfg.emit_total_safe_size);
  return cfg;
}

unsigned worker_count() {
  if (const char* env = std::getenv("LIPSAFE_THREADS")) {
    unsigned n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::string trace_to_csv(const RunTrace& trace, bool emit_total_safe_size) {
  std::string out = kCsvHeader;
  out += '\n';
  char buf[160];
  for (const TraceRecord& r : trace.records) {
    std::size_t total = emit_total_safe_size ? r.safe_size_total : r.safe_size_original;
    std::snprintf(buf, sizeof(buf), "%d,%zu,%zu,%zu,", r.action, r.safe_size_original,
                  total, r.total_uncertainty);
    out += buf;
    out += format_state(r.state);
    out += r.crashed ? ",1\n" : ",0\n";
  }
  return out;
}

std::string aggregate_to_csv(const std::vector<RunTrace>& traces,
                             bool emit_total_safe_size) {
  std::string out = kCsvHeader;
  out += '\n';
  std::size_t rows = 0;
  for (const auto& t : traces) rows = std::max(rows, t.records.size());
  char buf[220];
  for (std::size_t i = 0; i < rows; ++i) {
    double safe_orig = 0, safe_total = 0, uncertainty = 0, state = 0, crashed = 0;
    std::size_t n = 0;
    for (const auto& t : traces) {
      if (i >= t.records.size()) continue;
      const TraceRecord& r = t.records[i];
      safe_orig += static_cast<double>(r.safe_size_original);
      safe_total += static_cast<double>(
          emit_total_safe_size ? r.safe_size_total : r.safe_size_original);
      uncertainty += static_cast<double>(r.total_uncertainty);
      state += r.state[0];
      crashed += r.crashed ? 1.0 : 0.0;
      ++n;
    }
    double dn = static_cast<double>(n);
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", i, safe_orig / dn,
                  safe_total / dn, uncertainty / dn, state / dn, crashed / dn);
    out += buf;
  }
  return out;
}

namespace {

int do_run(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  auto oracle = std::make_shared<GroundTruthSafety>(cfg.environment,
                                                    cfg.environment.state_grid.step / 50.0);

  std::vector<RunTrace> traces(static_cast<std::size_t>(cfg.n_runs));
  std::vector<std::string> errors(static_cast<std::size_t>(cfg.n_runs));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next.fetch_add(1); i < cfg.n_runs; i = next.fetch_add(1)) {
      try {
        Policy policy{cfg.policy, cfg.base_seed + static_cast<std::uint64_t>(i)};
        Simulation sim(cfg.environment, policy, oracle);
        traces[static_cast<std::size_t>(i)] = sim.run(cfg.n_actions);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      }
    }
  };
  unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(cfg.n_runs));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (int i = 0; i < cfg.n_runs; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      std::cerr << "run " << i << " failed: " << errors[static_cast<std::size_t>(i)]
                << "\n";
      return 3;
    }
  }

  for (int i = 0; i < cfg.n_runs; ++i) {
    auto path = std::filesystem::path(cfg.output_dir) /
                ("run_" + std::string(policy_name(cfg.policy)) + "_" + std::to_string(i) +
                 ".csv");
    std::ofstream out(path, std::ios::binary);
    out << trace_to_csv(traces[static_cast<std::size_t>(i)], cfg.emit_total_safe_size);
  }
  auto agg_path = std::filesystem::path(cfg.output_dir) /
                  ("mean_" + std::string(policy_name(cfg.policy)) + ".csv");
  {
    std::ofstream out(agg_path, std::ios::binary);
    out << aggregate_to_csv(traces, cfg.emit_total_safe_size);
  }

  std::size_t crashes = 0;
  for (const auto& t : traces)
    if (t.status == RunTrace::Status::crashed) ++crashes;
  const auto& last = traces.front().records.back();
  std::cout << "policy=" << policy_name(cfg.policy) << " runs=" << cfg.n_runs
            << " actions=" << cfg.n_actions << " crashed=" << crashes
            << " final_safe_size_original=" << last.safe_size_original
            << " final_total_uncertainty=" << last.total_uncertainty << "\n";
  return 0;
}

int do_oracle(const ExperimentConfig& cfg, const std::string& out_path,
              double resolution) {
  cfg.environment.validate();
  if (resolution <= 0) resolution = cfg.environment.state_grid.step / 50.0;
  GroundTruthSafety oracle(cfg.environment, resolution);
  StateTable states(cfg.environment.state_grid.sample());

  std::string csv = "state,safe\n";
  std::size_t safe_count = 0;
  double lo = 0, hi = 0;
  char buf[64];
  for (std::size_t i = 0; i < states.size(); ++i) {
    double x = states.coords(static_cast<StateIndex>(i))[0];
    bool safe = oracle.marked(x);
    if (safe) {
      if (!safe_count) lo = x;
      hi = x;
      ++safe_count;
    }
    std::snprintf(buf, sizeof(buf), "%.6f,%d\n", x, safe ? 1 : 0);
    csv += buf;
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    out << csv;
  } else {
    std::cout << csv;
  }
  std::cout << "safe_states=" << safe_count << " interval=[" << lo << "," << hi << "]\n";
  return 0;
}

int do_verify(const ExperimentConfig& cfg, std::size_t samples, std::uint64_t seed) {
  cfg.environment.validate();
  GroundTruthSafety oracle(cfg.environment, cfg.environment.state_grid.step / 50.0);
  const GroundTruthSafety* region =
      cfg.environment.name == "hilly" ? &oracle : nullptr;
  LipschitzReport report = verify_lipschitz(cfg.environment, samples, seed, region);
  std::cout << "max_state_ratio=" << report.max_state_ratio << " (L_s="
            << cfg.environment.lipschitz.l_s << ")\n"
            << "max_action_ratio=" << report.max_action_ratio << " (L_a="
            << cfg.environment.lipschitz.l_a << ")\n"
            << "violations=" << report.state_violations + report.action_violations << "\n";

  StateTable states(cfg.environment.state_grid.sample());
  ActionTable actions(cfg.environment.action_grid.sample());
  try {
    seed_initial_knowledge(cfg.environment, states, actions);
    std::cout << "initial-safe-set connectivity: ok\n";
  } catch (const std::exception& e) {
    std::cerr << "connectivity check failed: " << e.what() << "\n";
    return 1;
  }
  if (!report.ok()) {
    std::cerr << "Lipschitz verification failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Safe exploration of deterministic MDPs with Lipschitz dynamics"};
  app.require_subcommand(1);

  std::string preset, config_path, policy_str, out_path;
  int actions = -1, runs = -1;
  std::int64_t seed = -1;
  double resolution = 0;
  std::size_t samples = 100000;
  bool no_total = false;

  auto add_preset = [&](CLI::App* sub) {
    sub->add_option("--preset", preset, "built-in preset (muddy-fig4, hilly-fig6)");
    sub->add_option("--config", config_path, "JSON config file");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "execute an experiment and write CSVs");
  add_preset(run_cmd);
  run_cmd->add_option("--policy", policy_str, "exploration policy");
  run_cmd->add_option("--actions", actions, "number of actions per run");
  run_cmd->add_option("--runs", runs, "number of seeded runs");
  run_cmd->add_option("--seed", seed, "base seed (per-run seed = base + index)");
  run_cmd->add_option("--out", out_path, "output directory");
  run_cmd->add_flag("--no-total-safe-size", no_total,
                    "do not compute the total safe-set size column");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "emit the ground-truth safe set for an environment");
  add_preset(oracle_cmd);
  oracle_cmd->add_option("--resolution", resolution, "oracle grid resolution");
  oracle_cmd->add_option("--out", out_path, "output CSV file (default stdout)");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "check Lipschitz constants and initial-safe-set connectivity");
  add_preset(verify_cmd);
  verify_cmd->add_option("--samples", samples, "number of random sample pairs");
  verify_cmd->add_option("--seed", seed, "sampling seed");

  CLI::App* presets_cmd = app.add_subcommand("presets", "list built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (presets_cmd->parsed()) {
      std::cout << "muddy-fig4: muddy jumper, 101 states / 121 actions, 600 actions\n"
                << "hilly-fig6: hilly jumper, 139 states / 7 actions, 600 actions\n";
      return 0;
    }

    ExperimentConfig cfg;
    if (!config_path.empty())
      cfg = load_config_json(config_path);
    else if (!preset.empty())
      cfg = preset_config(preset);
    else if (run_cmd->parsed() || oracle_cmd->parsed() || verify_cmd->parsed())
      throw std::invalid_argument("either --preset or --config is required");

    if (!policy_str.empty()) cfg.policy = parse_policy(policy_str);
    if (actions >= 0) cfg.n_actions = actions;
    if (runs >= 0) cfg.n_runs = runs;
    if (seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed);
    if (run_cmd->parsed() && !out_path.empty()) cfg.output_dir = out_path;
    if (no_total) cfg.emit_total_safe_size = false;

    if (run_cmd->parsed()) return do_run(cfg);
    if (oracle_cmd->parsed()) return do_oracle(cfg, out_path, resolution);
    if (verify_cmd->parsed())
      return do_verify(cfg, samples, seed >= 0 ? static_cast<std::uint64_t>(seed) : 0);
  } catch (const GuaranteeViolation& e) {
    std::cerr << "guarantee violation: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lipsafe
