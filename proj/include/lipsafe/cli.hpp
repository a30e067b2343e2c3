#pragma once

#include <optional>
#include <string>

#include "lipsafe/environments.hpp"
#include "lipsafe/explorer.hpp"

namespace lipsafe {

struct ExperimentConfig {
  EnvironmentSpec environment = muddy_spec();
  std::string preset;  // "muddy-fig4" / "hilly-fig6" / ""
  PolicyKind policy = PolicyKind::uncertainty_reduction;
  int n_actions = 600;
  int n_runs = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir = ".";
  bool emit_total_safe_size = true;

  void validate() const;
};

ExperimentConfig preset_config(const std::string& name);
ExperimentConfig load_config_json(const std::string& path);

/// Worker count for batched runs: LIPSAFE_THREADS, 0/unset = hardware.
unsigned worker_count();

/// CSV line schema: action,safe_size_original,safe_size_total,total_uncertainty,state,crashed
std::string trace_to_csv(const RunTrace& trace, bool emit_total_safe_size);
std::string aggregate_to_csv(const std::vector<RunTrace>& traces, bool emit_total_safe_size);

int cli_main(int argc, const char* const* argv);

}  // namespace lipsafe
