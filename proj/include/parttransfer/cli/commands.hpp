#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "parttransfer/cli/run_config.hpp"
#include "parttransfer/synthetic.hpp"

namespace pt::cli {

/// Per-invocation switches that are not part of the persisted run config.
struct CommandOptions {
  // localize
  bool localize_parts = false;
  bool seed_oracle_object = false;
  bool leave_one_out = false;
  bool fail_fast = false;
  std::vector<std::string> only;
  // recognize
  bool oracle_boxes = false;
  // evaluate: "label=path" entries
  std::vector<std::string> sweep;
  std::vector<std::string> accuracy;
  // synth-gen (seed comes from the run config)
  SynthConfig synth;
};

/// Exit codes: 0 success, 1 failure, 3 evaluation checks failed.
int cmd_build_index(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_localize(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_train_regressor(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_refine(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_train_classifier(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_recognize(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_evaluate(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_synth_gen(const RunConfig& config, const CommandOptions& options, std::ostream& out);

/// Sibling model file for a part: "dir/regressor.model" -> "dir/regressor.head.model".
std::string part_model_path(const std::string& object_model, const std::string& part);

}  // namespace pt::cli
